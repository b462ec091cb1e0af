#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lguided/error.hpp"

namespace lguided {

// Dense row-major matrix of doubles. The single numeric carrier for
// embeddings, parameters and activations. No implicit broadcasting;
// shape mismatches throw ShapeError at the call site.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

std::string shape_str(const Matrix& m);

// Standard product; requires a.cols == b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

// a (r x c) * x (c) -> (r)
std::vector<double> matvec(const Matrix& a, std::span<const double> x);

// a^T * x, i.e. (c) result from a (r x c) and x (r)
std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x);

// acc (r x c) += d (r) * x^T (c)
void add_outer(Matrix& acc, std::span<const double> d, std::span<const double> x);

// Numerically stable softmax (max subtraction). Entries in (0,1], sum 1.
std::vector<double> softmax(std::span<const double> v);

// Elementwise max(0, x).
Matrix relu(const Matrix& m);

// dot(a,b) / (|a||b|), in [-1,1]. Zero-norm inputs (norm < 1e-12) yield 0 so
// padding rows and dead activations stay neutral instead of erroring.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

// Throws Error if any entry of m is NaN/Inf; `what` names the tensor.
void check_finite(const Matrix& m, const std::string& what);

}  // namespace lguided
