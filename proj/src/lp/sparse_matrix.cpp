#include "mhsp/lp/sparse_matrix.hpp"

#include <algorithm>
#include <string>

#include "mhsp/common/error.hpp"

namespace mhsp::lp {

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<Triplet> entries)
    : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimension");
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw DimensionError("matrix entry (" + std::to_string(t.row) + "," +
                           std::to_string(t.col) + ") outside " +
                           std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Triplet& a, const Triplet& b) {
                     return a.row != b.row ? a.row < b.row : a.col < b.col;
                   });
  entries_.reserve(entries.size());
  for (const Triplet& t : entries) {
    if (!entries_.empty() && entries_.back().row == t.row &&
        entries_.back().col == t.col) {
      entries_.back().value += t.value;
    } else {
      entries_.push_back(t);
    }
  }
  std::erase_if(entries_, [](const Triplet& t) { return t.value == 0.0; });
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != cols_) {
    throw DimensionError("multiply: vector has " + std::to_string(x.size()) +
                         " entries, matrix has " + std::to_string(cols_) +
                         " columns");
  }
  std::vector<double> y(rows_, 0.0);
  for (const Triplet& t : entries_) y[t.row] += t.value * x[t.col];
  return y;
}

std::vector<double> SparseMatrix::transpose_multiply(
    std::span<const double> y) const {
  if (static_cast<int>(y.size()) != rows_) {
    throw DimensionError("transpose_multiply: vector has " +
                         std::to_string(y.size()) + " entries, matrix has " +
                         std::to_string(rows_) + " rows");
  }
  std::vector<double> x(cols_, 0.0);
  for (const Triplet& t : entries_) x[t.col] += t.value * y[t.row];
  return x;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Triplet> swapped;
  swapped.reserve(entries_.size());
  for (const Triplet& t : entries_) swapped.push_back({t.col, t.row, t.value});
  return SparseMatrix(cols_, rows_, std::move(swapped));
}

double SparseMatrix::at(int row, int col) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), Triplet{row, col},
                             [](const Triplet& a, const Triplet& b) {
                               return a.row != b.row ? a.row < b.row
                                                     : a.col < b.col;
                             });
  if (it != entries_.end() && it->row == row && it->col == col) return it->value;
  return 0.0;
}

}  // namespace mhsp::lp
