#include "sdtrack/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "sdtrack/errors.hpp"

namespace sdt {

namespace {

// Kuhn-Munkres for rows <= cols with 1-based potentials.
std::vector<int> hungarian_rows_le_cols(const Matrix& a) {
    using idx = std::size_t;
    const idx n = static_cast<idx>(a.rows());
    const idx m = static_cast<idx>(a.cols());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<idx> p(m + 1, 0), way(m + 1, 0);

    for (idx i = 1; i <= n; ++i) {
        p[0] = i;
        idx j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const idx i0 = p[j0];
            double delta = inf;
            idx j1 = 0;
            for (idx j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a(static_cast<int>(i0 - 1), static_cast<int>(j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (idx j = 0; j <= m; ++j) {
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
            const idx j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(n, kUnmatched);
    for (idx j = 1; j <= m; ++j) {
        if (p[j] != 0) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
    }
    return row_to_col;
}

}  // namespace

std::vector<int> hungarian_min_cost(const Matrix& cost) {
    const int n = cost.rows();
    const int m = cost.cols();
    if (n == 0 || m == 0) return std::vector<int>(static_cast<std::size_t>(n), kUnmatched);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            if (!std::isfinite(cost(i, j))) throw ValidationError("assignment costs must be finite");
    if (n <= m) return hungarian_rows_le_cols(cost);

    Matrix t(m, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) t(j, i) = cost(i, j);
    const std::vector<int> col_to_row = hungarian_rows_le_cols(t);
    std::vector<int> row_to_col(static_cast<std::size_t>(n), kUnmatched);
    for (int j = 0; j < m; ++j) {
        if (col_to_row[static_cast<std::size_t>(j)] != kUnmatched) row_to_col[static_cast<std::size_t>(col_to_row[static_cast<std::size_t>(j)])] = j;
    }
    return row_to_col;
}

std::vector<int> max_weight_matching(const Matrix& weight, double min_weight) {
    const int n = weight.rows();
    const int m = weight.cols();
    Matrix cost(n, m, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const double w = weight(i, j);
            if (w >= min_weight && w > 0.0) cost(i, j) = -w;
        }
    }
    std::vector<int> match = hungarian_min_cost(cost);
    for (int i = 0; i < n; ++i) {
        const int j = match[static_cast<std::size_t>(i)];
        if (j == kUnmatched) continue;
        const double w = weight(i, j);
        if (!(w >= min_weight && w > 0.0)) match[static_cast<std::size_t>(i)] = kUnmatched;
    }
    return match;
}

std::vector<int> min_cost_gated_matching(const Matrix& cost, double max_cost) {
    const int n = cost.rows();
    const int m = cost.cols();
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            if (cost(i, j) <= max_cost) total += std::abs(cost(i, j));
    // Each matched pair is worth more than any achievable cost difference,
    // so the number of pairs is maximised before their total cost.
    const double bonus = 2.0 * total + 1.0;
    Matrix weight(n, m, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            if (cost(i, j) <= max_cost) weight(i, j) = bonus - cost(i, j);
    return max_weight_matching(weight, std::numeric_limits<double>::min());
}

std::vector<int> greedy_min_cost(const Matrix& cost, double max_cost) {
    const int n = cost.rows();
    const int m = cost.cols();
    std::vector<std::tuple<double, int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            if (cost(i, j) <= max_cost) pairs.emplace_back(cost(i, j), i, j);
    std::sort(pairs.begin(), pairs.end());

    std::vector<int> row_to_col(static_cast<std::size_t>(n), kUnmatched);
    std::vector<char> col_used(static_cast<std::size_t>(m), 0);
    for (const auto& [c, i, j] : pairs) {
        if (row_to_col[static_cast<std::size_t>(i)] != kUnmatched || col_used[static_cast<std::size_t>(j)]) continue;
        row_to_col[static_cast<std::size_t>(i)] = j;
        col_used[static_cast<std::size_t>(j)] = 1;
    }
    return row_to_col;
}

}  // namespace sdt
