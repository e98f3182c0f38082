#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mhsp::lp {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Immutable coordinate-form matrix. Entries are kept in canonical row-major
// order with duplicates summed and exact zeros dropped, so two matrices with
// the same numeric content compare equal regardless of insertion order.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {}
  SparseMatrix(int rows, int cols, std::vector<Triplet> entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nonzeros() const { return entries_.size(); }
  const std::vector<Triplet>& entries() const { return entries_; }

  // y = M x
  std::vector<double> multiply(std::span<const double> x) const;
  // x = M^T y
  std::vector<double> transpose_multiply(std::span<const double> y) const;

  SparseMatrix transposed() const;
  double at(int row, int col) const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Triplet> entries_;
};

}  // namespace mhsp::lp
