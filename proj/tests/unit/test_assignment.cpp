#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "sdtrack/assignment.hpp"
#include "sdtrack/rng.hpp"
#include "support/oracles.hpp"

using namespace sdt;

namespace {

Matrix random_matrix(Rng& rng, int n, int m, double lo, double hi) {
    Matrix a(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = rng.uniform(lo, hi);
    return a;
}

oracle::Mat to_mat(const Matrix& a) {
    oracle::Mat m(static_cast<std::size_t>(a.rows()), oracle::Vec(static_cast<std::size_t>(a.cols())));
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) m[i][j] = a(i, j);
    return m;
}

double total(const Matrix& a, const std::vector<int>& col) {
    double s = 0;
    for (int i = 0; i < a.rows(); ++i)
        if (col[i] != kUnmatched) s += a(i, col[i]);
    return s;
}

int count(const std::vector<int>& col) {
    int n = 0;
    for (int c : col) n += c != kUnmatched;
    return n;
}

void expect_one_to_one(const std::vector<int>& col, int cols) {
    std::vector<bool> used(static_cast<std::size_t>(cols), false);
    for (int c : col) {
        if (c == kUnmatched) continue;
        ASSERT_GE(c, 0);
        ASSERT_LT(c, cols);
        EXPECT_FALSE(used[c]);
        used[c] = true;
    }
}

}  // namespace

TEST(Hungarian, SmallHandCase) {
    Matrix c(3, 3);
    const double v[3][3] = {{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c(i, j) = v[i][j];
    const std::vector<int> col = hungarian_min_cost(c);
    EXPECT_DOUBLE_EQ(total(c, col), 5.0);
}

TEST(Hungarian, RectangularMatchesBruteForce) {
    Rng rng(21);
    for (int t = 0; t < 300; ++t) {
        const int n = static_cast<int>(rng.uniform_int(1, 6));
        const int m = static_cast<int>(rng.uniform_int(1, 6));
        const Matrix c = random_matrix(rng, n, m, 0, 10);
        const std::vector<int> col = hungarian_min_cost(c);
        expect_one_to_one(col, m);
        EXPECT_EQ(count(col), std::min(n, m));
        const auto best = oracle::brute_force(to_mat(c), [](int, int) { return true; }, true, true);
        EXPECT_NEAR(total(c, col), best.value, 1e-9);
    }
}

TEST(Hungarian, EmptyMatrix) {
    EXPECT_TRUE(hungarian_min_cost(Matrix(0, 3)).empty());
    EXPECT_EQ(hungarian_min_cost(Matrix(2, 0)), (std::vector<int>{kUnmatched, kUnmatched}));
}

TEST(MaxWeightMatching, MatchesBruteForceWithCut) {
    Rng rng(4);
    for (int t = 0; t < 300; ++t) {
        const int n = static_cast<int>(rng.uniform_int(0, 6));
        const int m = static_cast<int>(rng.uniform_int(0, 6));
        const Matrix w = random_matrix(rng, n, m, 0, 1);
        const double cut = rng.uniform(0.2, 0.8);
        const std::vector<int> col = max_weight_matching(w, cut);
        expect_one_to_one(col, m);
        for (int i = 0; i < n; ++i)
            if (col[i] != kUnmatched) {
                EXPECT_GE(w(i, col[i]), cut);
            }
        const auto best =
            oracle::brute_force(to_mat(w), [&](int i, int j) { return w(i, j) >= cut; }, false, false);
        EXPECT_NEAR(total(w, col), best.value, 1e-9);
    }
}

TEST(MinCostGated, MaximisesCountThenCost) {
    Rng rng(9);
    for (int t = 0; t < 300; ++t) {
        const int n = static_cast<int>(rng.uniform_int(0, 6));
        const int m = static_cast<int>(rng.uniform_int(0, 6));
        const Matrix c = random_matrix(rng, n, m, 0, 10);
        const double gate = rng.uniform(2, 8);
        const std::vector<int> col = min_cost_gated_matching(c, gate);
        expect_one_to_one(col, m);
        const auto best = oracle::brute_force(to_mat(c), [&](int i, int j) { return c(i, j) <= gate; }, true, true);
        EXPECT_EQ(count(col), best.pairs);
        EXPECT_NEAR(total(c, col), best.value, 1e-9);
    }
}

TEST(Greedy, TakesSmallestFirstWithTieBreak) {
    Matrix c(2, 2);
    c(0, 0) = 1;
    c(0, 1) = 1;
    c(1, 0) = 1;
    c(1, 1) = 5;
    // All three ones tie; (0,0) wins by row then column, leaving (1,1).
    EXPECT_EQ(greedy_min_cost(c), (std::vector<int>{0, 1}));
    EXPECT_EQ(greedy_min_cost(c, 2.0), (std::vector<int>{0, kUnmatched}));
}

TEST(Greedy, EqualsOptimalWhenWellSeparated) {
    Rng rng(13);
    for (int t = 0; t < 200; ++t) {
        const int n = static_cast<int>(rng.uniform_int(1, 6));
        // True matches cost < 1, everything else > 2 (each true match is at
        // least twice as close as any alternative).
        Matrix c(n, n);
        std::vector<int> perm(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) perm[i] = i;
        for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) c(i, j) = perm[i] == j ? rng.uniform(0, 1) : rng.uniform(2, 10);
        const auto best = oracle::brute_force(to_mat(c), [](int, int) { return true; }, true, true);
        EXPECT_EQ(greedy_min_cost(c), best.col);
        EXPECT_EQ(hungarian_min_cost(c), best.col);
    }
}
