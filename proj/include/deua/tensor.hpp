#pragma once

#include <cstddef>
#include <vector>

#include "deua/errors.hpp"

namespace deua {

/// Dense row-major matrix of 64-bit floats. All pipeline math runs on this.
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Tensor2(std::size_t r, std::size_t c, std::vector<double> d);

  static Tensor2 from_row(const std::vector<double>& v);

  double& operator()(std::size_t r, std::size_t c) {
    return data[r * cols + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }

  double* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

  std::vector<double> row(std::size_t r) const;
  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor2& o) const {
    return rows == o.rows && cols == o.cols;
  }
  bool all_finite() const;
};

// c = a * b, (m x k) * (k x n). Accumulation over k is in ascending order so
// results are bit-comparable against naive scalar loops.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
// c = a * b^T, (m x k) * (n x k)^T
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
// c = a^T * b, (k x m)^T * (k x n)
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);

Tensor2 add(const Tensor2& a, const Tensor2& b);
Tensor2 sub(const Tensor2& a, const Tensor2& b);
Tensor2 hadamard(const Tensor2& a, const Tensor2& b);
Tensor2 scale(const Tensor2& a, double s);
void add_in_place(Tensor2& a, const Tensor2& b);
void scale_in_place(Tensor2& a, double s);
// Adds a length-cols vector to every row.
void add_row_vector(Tensor2& a, const std::vector<double>& v);
std::vector<double> column_sums(const Tensor2& a);

void require_finite(const Tensor2& t, const char* what);

}  // namespace deua
