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

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "medfed/autodiff.hpp"
#include "medfed/tensor.hpp"

namespace medfed::ad {

/// Builds a scalar from variables bound to `inputs` on a fresh graph.
using ScalarFunction = std::function<Var(Graph&, std::span<const Var>)>;

/// Largest elementwise relative error between the reverse-mode gradient of
/// `f` and its central finite difference with step `eps`, over every element
/// of every input. Relative error is |a − n| / max(1e-8, |a| + |n|).
/// Throws NumericError if `f` evaluates to a non-finite value.
double grad_check(const ScalarFunction& f, const std::vector<Tensor>& inputs,
                  double eps = 1e-5);

}  // namespace medfed::ad
