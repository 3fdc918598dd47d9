#include "signmap/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace signmap {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

CostMatrix::CostMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw std::invalid_argument("ragged cost matrix");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

void CostMatrix::validate() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double v = data_[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("cost matrix entry (" + std::to_string(i / cols_) + ", " +
                                  std::to_string(i % cols_) +
                                  ") must be finite and nonnegative, got " + std::to_string(v));
    }
  }
}

double Matching::total_cost(const CostMatrix& m) const {
  double sum = 0.0;
  for (const auto& [r, c] : pairs) sum += m(r, c);
  return sum;
}

namespace {

// Rows n <= columns m. Returns the column assigned to each row.
std::vector<std::size_t> hungarian(std::size_t n, std::size_t m, const auto& cost) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Matching solve_assignment(const CostMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw std::invalid_argument("cost matrix must have at least one row and one column");
  }
  m.validate();

  Matching result;
  if (m.rows() <= m.cols()) {
    const auto assigned =
        hungarian(m.rows(), m.cols(), [&](std::size_t r, std::size_t c) { return m(r, c); });
    for (std::size_t r = 0; r < assigned.size(); ++r) result.pairs.emplace_back(r, assigned[r]);
  } else {
    const auto assigned =
        hungarian(m.cols(), m.rows(), [&](std::size_t r, std::size_t c) { return m(c, r); });
    for (std::size_t c = 0; c < assigned.size(); ++c) result.pairs.emplace_back(assigned[c], c);
    std::sort(result.pairs.begin(), result.pairs.end());
  }
  return result;
}

Matching match_with_cutoff(const CostMatrix& m, double threshold) {
  Matching result = solve_assignment(m);
  std::erase_if(result.pairs, [&](const auto& rc) { return m(rc.first, rc.second) > threshold; });
  return result;
}

}  // namespace signmap
