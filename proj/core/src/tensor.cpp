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

#include "medfed/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstring>
#include <cmath>
#include <functional>
#include <vector>
#include <numeric>
#include <sstream>

#include "medfed/errors.hpp"

namespace medfed {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                  static_cast<Eigen::Index>(t.dim(1)));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                static_cast<Eigen::Index>(t.dim(1)));
}

void require_rank2(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected matrices, got " +
                         to_string(a.shape()) + " and " + to_string(b.shape()));
  }
}

using ArrayMap = Eigen::Map<const Eigen::ArrayXd>;
using MutArrayMap = Eigen::Map<Eigen::ArrayXd>;

ArrayMap as_array(const Tensor& t) {
  return ArrayMap(t.data().data(), static_cast<Eigen::Index>(t.size()));
}

MutArrayMap as_array(Tensor& t) {
  return MutArrayMap(t.data().data(), static_cast<Eigen::Index>(t.size()));
}

// x - x is 0 for finite x and NaN otherwise, so the sum is exactly 0 iff
// every element is finite.
bool finite_fast(const Tensor& t) {
  return t.empty() || (as_array(t) - as_array(t)).sum() == 0.0;
}

}  // namespace

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), data_(element_count(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + to_string(shape_) + " needs " +
                         std::to_string(element_count(shape_)) +
                         " elements, got " + std::to_string(data_.size()));
  }
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return data_[row * shape_.back() + col];
}

double& Tensor::at(std::size_t row, std::size_t col) {
  return data_[row * shape_.back() + col];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw DimensionError("item() on tensor of shape " + to_string(shape_));
  }
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + to_string(shape_) + " to " +
                         to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const { return finite_fast(*this); }

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.shape_ != b.shape_) return false;
  return std::equal(a.data_.begin(), a.data_.end(), b.data_.begin(),
                    [](double x, double y) {
                      return std::memcmp(&x, &y, sizeof(double)) == 0;
                    });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

void require_finite(const Tensor& t, const char* op) {
  if (finite_fast(t)) return;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw NumericError(std::string(op) + ": non-finite value " +
                         std::to_string(t[i]) + " at element " +
                         std::to_string(i) + " of " + to_string(t.shape()));
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

namespace kernels {

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions differ, " +
                         to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  Tensor out({a.dim(0), b.dim(1)});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_rank2(a, b, "matmul_tn");
  if (a.dim(0) != b.dim(0)) {
    throw DimensionError("matmul_tn: row counts differ, " +
                         to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  Tensor out({a.dim(1), b.dim(1)});
  as_matrix(out).noalias() = as_matrix(a).transpose() * as_matrix(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, b, "matmul_nt");
  if (a.dim(1) != b.dim(1)) {
    throw DimensionError("matmul_nt: column counts differ, " +
                         to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  Tensor out({a.dim(0), b.dim(0)});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b).transpose();
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  as_array(out) = as_array(a) + as_array(b);
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  as_array(out) = as_array(a) - as_array(b);
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  as_array(out) = as_array(a) * as_array(b);
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out(a.shape());
  as_array(out) = as_array(a) * factor;
  return out;
}

Tensor tanh(const Tensor& a) {
  // tanh(x) = sign(x)·(1 − e)/(1 + e) with e = exp(−2|x|) ≤ 1.
  Tensor out(a.shape());
  const auto x = as_array(a);
  const Eigen::ArrayXd e = (-2.0 * x.abs()).exp();
  const Eigen::ArrayXd m = (1.0 - e) / (1.0 + e);
  as_array(out) = (x < 0.0).select(-m, m);
  return out;
}

Tensor sigmoid(const Tensor& a) {
  // With e = exp(−|x|) ≤ 1 neither branch can overflow.
  Tensor out(a.shape());
  const auto x = as_array(a);
  const Eigen::ArrayXd e = (-x.abs()).exp();
  const Eigen::ArrayXd inv = 1.0 / (1.0 + e);
  as_array(out) = (x >= 0.0).select(inv, e * inv);
  return out;
}

Tensor softmax(const Tensor& x, std::span<const std::size_t> valid_lengths) {
  if (x.rank() == 0 || x.shape().back() == 0) {
    throw DimensionError("softmax: empty input " + to_string(x.shape()));
  }
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.size() / cols;
  if (!valid_lengths.empty() && valid_lengths.size() != rows) {
    throw DimensionError("softmax: " + std::to_string(valid_lengths.size()) +
                         " lengths for " + std::to_string(rows) + " rows");
  }
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t n = valid_lengths.empty() ? cols : valid_lengths[r];
    if (n == 0 || n > cols) {
      throw DimensionError("softmax: invalid row length " + std::to_string(n));
    }
    const double* in = x.data().data() + r * cols;
    double* o = out.data().data() + r * cols;
    const double peak = *std::max_element(in, in + n);
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      o[c] = std::exp(in[c] - peak);
      total += o[c];
    }
    for (std::size_t c = 0; c < n; ++c) o[c] /= total;
  }
  return out;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() == 0 ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
    throw DimensionError("concat: leading dimensions differ, " +
                         to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const std::size_t p = a.shape().back();
  const std::size_t q = b.shape().back();
  const std::size_t rows = p + q == 0 ? 0 : (a.size() + b.size()) / (p + q);
  Shape shape = a.shape();
  shape.back() = p + q;
  Tensor out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data().data() + r * p, p, out.data().data() + r * (p + q));
    std::copy_n(b.data().data() + r * q, q,
                out.data().data() + r * (p + q) + p);
  }
  return out;
}

void accumulate(Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "accumulate");
  as_array(a) += as_array(b);
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
  require_same_shape(x, y, "axpy");
  as_array(y) += alpha * as_array(x);
}

}  // namespace kernels

}  // namespace medfed
