#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace sdt {

/// Row-major dense matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    bool operator==(const Matrix&) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

inline constexpr int kUnmatched = -1;

/// Minimum-cost assignment of a rectangular matrix (Kuhn-Munkres with
/// potentials, O(n^2 m)). Every row is assigned when rows <= cols and
/// every column otherwise. Returns the column for each row or kUnmatched.
std::vector<int> hungarian_min_cost(const Matrix& cost);

/// Maximum total weight one-to-one matching that uses only pairs with
/// weight >= min_weight. Pairs below the cut are never returned. Returns the
/// column for each row or kUnmatched.
std::vector<int> max_weight_matching(const Matrix& weight, double min_weight);

/// Minimum total cost one-to-one matching restricted to pairs with
/// cost <= max_cost, maximising the number of pairs first.
std::vector<int> min_cost_gated_matching(const Matrix& cost, double max_cost);

/// Greedy matching: repeatedly takes the globally smallest remaining cost,
/// ties broken by (row, col), skipping used rows and columns. Pairs with
/// cost > max_cost are never matched.
std::vector<int> greedy_min_cost(const Matrix& cost, double max_cost = std::numeric_limits<double>::infinity());

}  // namespace sdt
