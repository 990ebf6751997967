// Copyright 2026 The tabens Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TABENS_NUMKERNEL_HPP_
#define TABENS_NUMKERNEL_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabens {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by elementwise_divide when a denominator entry is exactly zero.
class SingularEntryError : public std::domain_error {
 public:
  SingularEntryError(std::size_t row, std::size_t col);
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

// Row-major dense matrix of doubles. Vectors are stored as 1-column
// (or, for bias rows, 1-row) matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix column(std::initializer_list<double> values);
  static Matrix column(std::span<const double> values);
  static Matrix identity(std::size_t n);
  static Matrix ones(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, 1.0); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void fill(double value);
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Standard product. Each output entry is accumulated from 0.0 over the inner
// index in increasing order (i-k-j loop nest), so results are reproducible.
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T and a^T * b, with the same accumulation order as matmul.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix elementwise_divide(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix add_scalar(const Matrix& a, double s);
// u v^T for column vectors u (m x 1) and v (n x 1).
Matrix outer(const Matrix& u, const Matrix& v);

void add_inplace(Matrix& acc, const Matrix& b);
// Adds `row` (1 x cols) to every row of `m`.
void add_row_inplace(Matrix& m, const Matrix& row);
// Column sums as a 1 x cols matrix.
Matrix column_sums(const Matrix& m);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);

// Softmax with max-subtraction. Throws std::domain_error on non-finite input.
std::vector<double> stable_softmax(std::span<const double> logits);
double stable_sigmoid(double x);
// log(1 + exp(x)) without overflow.
double softplus(double x);
double log_sum_exp(std::span<const double> values);

// Numerical rank from Householder QR with column pivoting: the number of
// |R_ii| greater than tol * |R_00|. A zero matrix has rank 0.
std::size_t numerical_rank(const Matrix& m, double tol = 1e-9);

}  // namespace tabens

#endif  // TABENS_NUMKERNEL_HPP_
