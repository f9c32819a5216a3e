#include "deua/tensor.hpp"

#include <cmath>
#include <string>

namespace deua {

Tensor2::Tensor2(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
  if (data.size() != rows * cols) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " != rows*cols " + std::to_string(rows * cols));
  }
}

Tensor2 Tensor2::from_row(const std::vector<double>& v) {
  return Tensor2(1, v.size(), v);
}

std::vector<double> Tensor2::row(std::size_t r) const {
  return std::vector<double>(row_ptr(r), row_ptr(r) + cols);
}

bool Tensor2::all_finite() const {
  for (double x : data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

namespace {

void check_mul(std::size_t inner_a, std::size_t inner_b, const char* op) {
  if (inner_a != inner_b) {
    throw ShapeError(std::string(op) + ": inner dimensions " +
                     std::to_string(inner_a) + " vs " +
                     std::to_string(inner_b));
  }
}

void check_same(const Tensor2& a, const Tensor2& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape (" + std::to_string(a.rows) +
                     "," + std::to_string(a.cols) + ") vs (" +
                     std::to_string(b.rows) + "," + std::to_string(b.cols) +
                     ")");
  }
}

}  // namespace

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  check_mul(a.cols, b.rows, "matmul");
  Tensor2 c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = ai[k];
      const double* bk = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  check_mul(a.cols, b.cols, "matmul_nt");
  Tensor2 c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* bj = b.row_ptr(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
  return c;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  check_mul(a.rows, b.rows, "matmul_tn");
  Tensor2 c(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* ak = a.row_ptr(k);
    const double* bk = b.row_ptr(k);
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = ak[i];
      double* ci = c.row_ptr(i);
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Tensor2 add(const Tensor2& a, const Tensor2& b) {
  check_same(a, b, "add");
  Tensor2 c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

Tensor2 sub(const Tensor2& a, const Tensor2& b) {
  check_same(a, b, "sub");
  Tensor2 c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

Tensor2 hadamard(const Tensor2& a, const Tensor2& b) {
  check_same(a, b, "hadamard");
  Tensor2 c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= b.data[i];
  return c;
}

Tensor2 scale(const Tensor2& a, double s) {
  Tensor2 c = a;
  for (auto& x : c.data) x *= s;
  return c;
}

void add_in_place(Tensor2& a, const Tensor2& b) {
  check_same(a, b, "add_in_place");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void scale_in_place(Tensor2& a, double s) {
  for (auto& x : a.data) x *= s;
}

void add_row_vector(Tensor2& a, const std::vector<double>& v) {
  if (v.size() != a.cols) {
    throw ShapeError("add_row_vector: vector length " +
                     std::to_string(v.size()) + " != cols " +
                     std::to_string(a.cols));
  }
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* ai = a.row_ptr(i);
    for (std::size_t j = 0; j < a.cols; ++j) ai[j] += v[j];
  }
}

std::vector<double> column_sums(const Tensor2& a) {
  std::vector<double> s(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row_ptr(i);
    for (std::size_t j = 0; j < a.cols; ++j) s[j] += ai[j];
  }
  return s;
}

void require_finite(const Tensor2& t, const char* what) {
  if (!t.all_finite()) {
    throw NumericError(std::string(what) + ": non-finite entries");
  }
}

}  // namespace deua
