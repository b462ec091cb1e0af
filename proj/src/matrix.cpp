#include "lguided/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lguided {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a) + " and " +
                     shape_str(b));
  }
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + k * b.cols;
      double* orow = out.data.data() + i * out.cols;
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols != x.size()) {
    throw ShapeError("matvec: matrix " + shape_str(a) + " against vector of length " +
                     std::to_string(x.size()));
  }
  std::vector<double> out(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* row = a.data.data() + i * a.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return out;
}

std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x) {
  if (a.rows != x.size()) {
    throw ShapeError("matvec_transposed: matrix " + shape_str(a) +
                     " against vector of length " + std::to_string(x.size()));
  }
  std::vector<double> out(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* row = a.data.data() + i * a.cols;
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols; ++j) out[j] += xi * row[j];
  }
  return out;
}

void add_outer(Matrix& acc, std::span<const double> d, std::span<const double> x) {
  if (acc.rows != d.size() || acc.cols != x.size()) {
    throw ShapeError("add_outer: accumulator " + shape_str(acc) + " against " +
                     std::to_string(d.size()) + " x " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < acc.rows; ++i) {
    double* row = acc.data.data() + i * acc.cols;
    const double di = d[i];
    if (di == 0.0) continue;
    for (std::size_t j = 0; j < acc.cols; ++j) row[j] += di * x[j];
  }
}

std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) throw UsageError("softmax: empty input");
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

Matrix relu(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    out.data[i] = m.data[i] > 0.0 ? m.data[i] : 0.0;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine_similarity: lengths " + std::to_string(a.size()) +
                     " and " + std::to_string(b.size()));
  }
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

void check_finite(const Matrix& m, const std::string& what) {
  for (double x : m.data) {
    if (!std::isfinite(x)) {
      throw Error(what + ": non-finite entry");
    }
  }
}

}  // namespace lguided
