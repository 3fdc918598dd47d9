#pragma once

#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

namespace signmap {

// Dense row-major cost matrix for bipartite assignment.
class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  CostMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<double>& data() const { return data_; }

  /// Throws std::invalid_argument on a non-finite or negative entry.
  void validate() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

struct Matching {
  // Sorted by row.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  double total_cost(const CostMatrix& m) const;
};

/// Minimum-cost assignment of size min(rows, cols) (Kuhn-Munkres with
/// potentials, O(n^2 m)). Ties resolve deterministically: at every relaxation
/// the lowest column index wins.
Matching solve_assignment(const CostMatrix& m);

/// Solves, then drops every pair whose cost exceeds `threshold`. The optimum
/// is computed on the unmasked matrix.
Matching match_with_cutoff(const CostMatrix& m, double threshold = 0.7);

}  // namespace signmap
