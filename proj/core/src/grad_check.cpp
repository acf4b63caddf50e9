// Copyright 2026 The medfed Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "medfed/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "medfed/errors.hpp"

namespace medfed::ad {

namespace {

double evaluate(const ScalarFunction& f, const std::vector<Tensor>& inputs) {
  Graph graph;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(graph.constant(t));
  const double value = f(graph, vars).value().item();
  if (!std::isfinite(value)) {
    throw NumericError("grad_check: function is not finite at probe point");
  }
  return value;
}

}  // namespace

double grad_check(const ScalarFunction& f, const std::vector<Tensor>& inputs,
                  double eps) {
  std::vector<Tensor> analytic;
  {
    Graph graph;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(graph.variable(t));
    Var out = f(graph, vars);
    graph.backward(out);
    for (Var v : vars) analytic.push_back(graph.grad(v));
  }

  double worst = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    for (std::size_t i = 0; i < probe[k].size(); ++i) {
      const double original = probe[k][i];
      probe[k][i] = original + eps;
      const double up = evaluate(f, probe);
      probe[k][i] = original - eps;
      const double down = evaluate(f, probe);
      probe[k][i] = original;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic[k][i];
      const double rel =
          std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace medfed::ad
