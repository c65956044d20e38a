#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sdtrack/errors.hpp"
#include "sdtrack/gradcheck.hpp"
#include "sdtrack/losses.hpp"
#include "sdtrack/rng.hpp"
#include "support/oracles.hpp"

using namespace sdt;

namespace {

Grid2D grid_from(const oracle::Vec& v, int w, int h) {
    Grid2D g(w, h);
    g.values() = v;
    return g;
}

oracle::Vec flatten(const std::vector<EmbeddingPair>& pairs) {
    oracle::Vec v;
    for (const auto& p : pairs) {
        v.insert(v.end(), p.left.begin(), p.left.end());
        v.insert(v.end(), p.right.begin(), p.right.end());
    }
    return v;
}

std::vector<EmbeddingPair> unflatten(const oracle::Vec& v, std::size_t k, std::size_t dims) {
    std::vector<EmbeddingPair> pairs(k);
    for (std::size_t i = 0; i < k; ++i) {
        pairs[i].left.assign(v.begin() + 2 * i * dims, v.begin() + (2 * i + 1) * dims);
        pairs[i].right.assign(v.begin() + (2 * i + 1) * dims, v.begin() + (2 * i + 2) * dims);
    }
    return pairs;
}

// Direct double loop over ordered pairs.
double push_oracle(const std::vector<Embedding>& c, double margin) {
    const std::size_t k = c.size();
    if (k < 2) return 0;
    double s = 0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            double d = 0;
            for (std::size_t t = 0; t < c[i].size(); ++t) d += std::abs(c[i][t] - c[j][t]);
            s += std::max(0.0, margin - d);
        }
    return s / static_cast<double>(k * (k - 1));
}

// Smallest distance from any hinge or |x| kink in the push loss.
double push_kink_distance(const std::vector<Embedding>& c, double margin) {
    double best = 1e9;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            double d = 0;
            for (std::size_t t = 0; t < c[i].size(); ++t) {
                d += std::abs(c[i][t] - c[j][t]);
                best = std::min(best, std::abs(c[i][t] - c[j][t]));
            }
            best = std::min(best, std::abs(margin - d));
        }
    return best;
}

}  // namespace

TEST(SegLoss, PerfectAndConstantHalf) {
    const double eps = 1e-7;
    Grid2D gt(4, 4), pred(4, 4);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        gt.values()[i] = i % 3 == 0;
        pred.values()[i] = gt.values()[i] ? 1 - eps : eps;
    }
    EXPECT_NEAR(seg_loss(pred, gt).value, 0.0, 1e-6);
    EXPECT_NEAR(seg_loss(Grid2D(4, 4, 1, 0.5), gt).value, std::log(2.0), 1e-12);
    EXPECT_THROW(seg_loss(Grid2D(4, 4), Grid2D(4, 3)), ValidationError);
}

TEST(SegLoss, GradientMatchesFiniteDifferences) {
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        oracle::Vec x(64), m(64);
        for (auto& v : x) v = rng.uniform(0.05, 0.95);
        for (auto& v : m) v = rng.bernoulli(0.3);
        const Grid2D gt = grid_from(m, 8, 8);
        const auto f = [&](const oracle::Vec& p) { return seg_loss(grid_from(p, 8, 8), gt).value; };
        const oracle::Vec num = oracle::finite_difference(f, x);
        EXPECT_LT(oracle::rel_error(seg_loss(grid_from(x, 8, 8), gt).grad.values(), num), 1e-4);
    }
}

TEST(FocalLoss, PerfectPeakAndNoPositives) {
    Grid2D gt(5, 5), pred(5, 5, 1, 1e-7);
    gt.at(2, 2) = 1;
    pred.at(2, 2) = 1 - 1e-7;
    EXPECT_NEAR(heatmap_focal_loss(pred, gt).value, 0.0, 1e-9);
    const GridLoss empty = heatmap_focal_loss(Grid2D(5, 5, 1, 0.3), Grid2D(5, 5));
    EXPECT_TRUE(std::isfinite(empty.value));
    // 25 negatives at p = 0.3, divided by 1.
    EXPECT_NEAR(empty.value, -25 * 0.09 * std::log(0.7), 1e-12);
}

TEST(FocalLoss, HandComputedMixedPixels) {
    Grid2D gt(3, 1), pred(3, 1);
    gt.values() = {1.0, 0.5, 0.0};
    pred.values() = {0.8, 0.4, 0.1};
    const double pos = -std::pow(0.2, 2) * std::log(0.8);
    const double half = -std::pow(0.5, 4) * std::pow(0.4, 2) * std::log(0.6);
    const double neg = -std::pow(0.1, 2) * std::log(0.9);
    EXPECT_NEAR(heatmap_focal_loss(pred, gt).value, pos + half + neg, 1e-12);
}

TEST(FocalLoss, GradientMatchesFiniteDifferences) {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        oracle::Vec x(128), h(128);
        for (auto& v : x) v = rng.uniform(0.05, 0.95);
        for (auto& v : h) v = rng.bernoulli(0.1) ? 1.0 : rng.uniform(0, 0.99);
        Grid2D gt(8, 8, 2);
        gt.values() = h;
        const auto as_grid = [](const oracle::Vec& p) {
            Grid2D g(8, 8, 2);
            g.values() = p;
            return g;
        };
        const auto f = [&](const oracle::Vec& p) { return heatmap_focal_loss(as_grid(p), gt).value; };
        EXPECT_LT(oracle::rel_error(heatmap_focal_loss(as_grid(x), gt).grad.values(), oracle::finite_difference(f, x)),
                  1e-4);
    }
}

TEST(PullLoss, Examples) {
    EXPECT_EQ(pull_loss({}).value, 0.0);
    EXPECT_EQ(pull_loss({{{1, 2}, {1, 2}}, {{3, 3}, {3, 3}}}).value, 0.0);
    EXPECT_DOUBLE_EQ(pull_loss({{{0}, {2}}}).value, 2.0);
}

TEST(PullLoss, GradientAndTranslationInvariance) {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 5)), dims = 3;
        oracle::Vec x(2 * k * dims);
        for (auto& v : x) v = rng.normal(0, 2);
        const auto f = [&](const oracle::Vec& p) { return pull_loss(unflatten(p, k, dims)).value; };
        const PairLoss l = pull_loss(unflatten(x, k, dims));
        EXPECT_LT(oracle::rel_error(flatten(l.grad), oracle::finite_difference(f, x)), 1e-4);
        oracle::Vec shifted = x;
        for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += 1.5 - 0.25 * static_cast<double>(i % dims);
        EXPECT_NEAR(f(shifted), l.value, 1e-9);
        EXPECT_GE(l.value, 0.0);
    }
}

TEST(PushLoss, Examples) {
    EXPECT_EQ(push_loss({{0.0}, {1.0}}).value, 0.0);
    EXPECT_EQ(push_loss({{0.0}, {3.0}}).value, 0.0);
    EXPECT_DOUBLE_EQ(push_loss({{0.5, 0.5}, {0.5, 0.5}}).value, 1.0);
    EXPECT_EQ(push_loss({{1.0}}).value, 0.0);
    EXPECT_EQ(push_loss({}).value, 0.0);
}

TEST(PushLoss, MatchesDoubleLoopAndGradientAwayFromKinks) {
    Rng rng(4);
    int checked = 0;
    while (checked < 50) {
        std::vector<Embedding> c(5, Embedding(2));
        for (auto& e : c)
            for (auto& v : e) v = rng.uniform(0, 1);
        EXPECT_NEAR(push_loss(c).value, push_oracle(c, 1.0), 1e-12);
        if (push_kink_distance(c, 1.0) < 1e-3) continue;
        ++checked;
        oracle::Vec x;
        for (const auto& e : c) x.insert(x.end(), e.begin(), e.end());
        const auto to_centers = [](const oracle::Vec& p) {
            std::vector<Embedding> out(5);
            for (std::size_t i = 0; i < 5; ++i) out[i] = {p[2 * i], p[2 * i + 1]};
            return out;
        };
        const auto f = [&](const oracle::Vec& p) { return push_oracle(to_centers(p), 1.0); };
        const VectorLoss l = push_loss(c);
        oracle::Vec g;
        for (const auto& e : l.grad) g.insert(g.end(), e.begin(), e.end());
        EXPECT_LT(oracle::rel_error(g, oracle::finite_difference(f, x)), 1e-4);
        oracle::Vec shifted = x;
        for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += i % 2 ? -3.0 : 7.0;
        EXPECT_NEAR(push_loss(to_centers(shifted)).value, l.value, 1e-9);
    }
}

TEST(EmbeddingLoss, GradientOfPullPlusPush) {
    Rng rng(5);
    int checked = 0;
    while (checked < 30) {
        const std::size_t k = 4, dims = 2;
        oracle::Vec x(2 * k * dims);
        for (auto& v : x) v = rng.uniform(0, 1.2);
        const auto pairs = unflatten(x, k, dims);
        std::vector<Embedding> centers;
        for (const auto& p : pairs) centers.push_back({0.5 * (p.left[0] + p.right[0]), 0.5 * (p.left[1] + p.right[1])});
        if (push_kink_distance(centers, 1.0) < 1e-3) continue;
        ++checked;
        const auto f = [&](const oracle::Vec& p) {
            const auto q = unflatten(p, k, dims);
            std::vector<Embedding> cs;
            for (const auto& e : q) cs.push_back({0.5 * (e.left[0] + e.right[0]), 0.5 * (e.left[1] + e.right[1])});
            return pull_loss(q).value + push_oracle(cs, 1.0);
        };
        const PairLoss l = embedding_loss(pairs);
        EXPECT_NEAR(l.value, f(x), 1e-12);
        EXPECT_LT(oracle::rel_error(flatten(l.grad), oracle::finite_difference(f, x)), 1e-4);
    }
}

TEST(OffsetLoss, Examples) {
    const EndpointPair prev{{10, 10}, {20, 10}}, now{{13, 14}, {23, 14}};
    EXPECT_EQ(offset_loss({{{3, 4}, {3, 4}}}, {now}, {prev}).value, 0.0);
    // One endpoint predicted as (0,0) against a (3,4) move, the other exact.
    EXPECT_DOUBLE_EQ(offset_loss({{{0, 0}, {3, 4}}}, {now}, {prev}).value, 7.0);
    EXPECT_DOUBLE_EQ(offset_loss({{{0, 0}, {0, 0}}}, {now}, {prev}).value, 14.0);
    EXPECT_EQ(offset_loss({}, {}, {}).value, 0.0);
    EXPECT_THROW(offset_loss({{}}, {}, {}), ValidationError);
}

TEST(OffsetLoss, GradientAwayFromKinks) {
    Rng rng(6);
    for (EmbeddingNorm norm : {EmbeddingNorm::L1, EmbeddingNorm::L2}) {
        LossConfig cfg;
        cfg.offset_norm = norm;
        int checked = 0;
        while (checked < 30) {
            const std::size_t k = 3;
            std::vector<EndpointPair> now(k), before(k);
            oracle::Vec x(4 * k);
            for (std::size_t i = 0; i < k; ++i) {
                before[i] = {{rng.uniform(0, 50), rng.uniform(0, 50)}, {rng.uniform(50, 99), rng.uniform(0, 50)}};
                const Point2 v{rng.uniform(-5, 5), rng.uniform(-5, 5)};
                now[i] = {before[i].left + v, before[i].right + v};
            }
            for (auto& v : x) v = rng.uniform(-6, 6);
            const auto to_pred = [&](const oracle::Vec& p) {
                std::vector<OffsetPair> out(k);
                for (std::size_t i = 0; i < k; ++i) out[i] = {{p[4 * i], p[4 * i + 1]}, {p[4 * i + 2], p[4 * i + 3]}};
                return out;
            };
            bool near_kink = false;
            for (std::size_t i = 0; i < k; ++i) {
                const Point2 dl = now[i].left - before[i].left, dr = now[i].right - before[i].right;
                near_kink |= std::abs(x[4 * i] - dl.x) < 1e-3 || std::abs(x[4 * i + 1] - dl.y) < 1e-3 ||
                             std::abs(x[4 * i + 2] - dr.x) < 1e-3 || std::abs(x[4 * i + 3] - dr.y) < 1e-3;
            }
            if (near_kink) continue;
            ++checked;
            const auto f = [&](const oracle::Vec& p) { return offset_loss(to_pred(p), now, before, cfg).value; };
            const OffsetLoss l = offset_loss(to_pred(x), now, before, cfg);
            oracle::Vec g;
            for (const auto& o : l.grad) g.insert(g.end(), {o.left.x, o.left.y, o.right.x, o.right.y});
            EXPECT_LT(oracle::rel_error(g, oracle::finite_difference(f, x)), 1e-4);
        }
    }
}

TEST(TotalLoss, WeightsAndLinearity) {
    EXPECT_EQ(total_loss({}), 0.0);
    EXPECT_DOUBLE_EQ(total_loss({1, 0, 0, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(total_loss({0, 1, 0, 0, 0}), 10.0);
    EXPECT_DOUBLE_EQ(total_loss({0, 0, 1, 1, 0}), 2.0);
    EXPECT_DOUBLE_EQ(total_loss({0, 0, 0, 0, 1}), 0.1);
    const LossComponents a{0.3, 0.2, 0.7, 0.1, 2.0};
    const LossComponents b{1.1, 0.5, 0.2, 0.4, 1.0};
    const LossComponents sum{a.seg + 2 * b.seg, a.hm + 2 * b.hm, a.same + 2 * b.same, a.diff + 2 * b.diff,
                             a.off + 2 * b.off};
    EXPECT_NEAR(total_loss(sum), total_loss(a) + 2 * total_loss(b), 1e-12);
}

TEST(LossConfig, Validation) {
    LossConfig c;
    c.hm_weight = -1;
    EXPECT_THROW(c.validate(), ValidationError);
    c.hm_weight = 10;
    c.push_margin = 0;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(GradientSuite, PassesAndDetectsWrongSign) {
    GradCheckOptions opt;
    opt.trials = 20;
    opt.seed = 3;
    const auto ok = run_gradient_checks(opt);
    EXPECT_EQ(ok.size(), 5u);
    for (const auto& o : ok) {
        EXPECT_EQ(o.trials, 20) << o.loss;
        EXPECT_EQ(o.failures, 0) << o.loss;
        EXPECT_LT(o.max_error, 1e-4) << o.loss;
    }
    opt.flip_sign = true;
    for (const auto& o : run_gradient_checks(opt)) EXPECT_EQ(o.failures, 20) << o.loss;
}

TEST(GradientHelpers, RelativeErrorConvention) {
    EXPECT_EQ(gradient_relative_error(std::vector<double>{0, 0}, std::vector<double>{0, 0}), 0.0);
    EXPECT_NEAR(gradient_relative_error(std::vector<double>{1, 0}, std::vector<double>{0, 1}), std::sqrt(2.0), 1e-12);
    const auto g = central_difference([](std::span<const double> x) { return x[0] * x[0] + 3 * x[1]; }, {2.0, 1.0}, 1e-5);
    EXPECT_NEAR(g[0], 4.0, 1e-8);
    EXPECT_NEAR(g[1], 3.0, 1e-8);
}
