// Copyright 2026 The mfrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "mfrl/errors.hpp"
#include "mfrl/rng.hpp"

namespace mfrl {

// Dense row-major matrix of reals. Kept deliberately tiny; state and action
// counts here are small enough that nothing heavier is warranted.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, Real fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<Real> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw DimensionError("Matrix: data size does not match shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Real> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<Real>& data() const { return data_; }
  std::vector<Real>& data() { return data_; }

  Real sum() const {
    Real s = 0.0;
    for (Real v : data_) s += v;
    return s;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<Real> data_;
};

// Euclidean projection of v onto the probability simplex, by the usual
// sort-and-threshold procedure. Ties are handled exactly: entries equal to
// the threshold project to zero together.
inline std::vector<Real> project_to_simplex(std::span<const Real> v) {
  const std::size_t n = v.size();
  if (n == 0) throw DimensionError("project_to_simplex: empty vector");
  std::vector<Real> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<Real>());
  Real css = 0.0;
  Real theta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    css += u[i];
    Real t = (css - 1.0) / static_cast<Real>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  std::vector<Real> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

}  // namespace mfrl
