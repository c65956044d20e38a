#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sdtrack/decode.hpp"
#include "sdtrack/errors.hpp"
#include "sdtrack/rng.hpp"
#include "support/frames.hpp"
#include "support/oracles.hpp"

using namespace sdt;

namespace {

AnnotatedObject object(double cx, double cy, double l, double angle, double v = 0) {
    DebrisState s;
    s.center = {cx, cy};
    s.length = l;
    s.width = 1;
    s.angle = angle;
    s.speed = v;
    return make_annotated(1, s);
}

int count_value(const Grid2D& g, int c, double v) {
    int n = 0;
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) n += g.at(x, y, c) == v;
    return n;
}

Peak peak_at(int x, int y, double score = 1) { return {{double(x), double(y)}, x, y, score}; }

}  // namespace

TEST(RenderHeatmap, SingleDebrisOneUnitPeakPerChannel) {
    const AnnotatedObject o = object(20, 20, 10, 0.3);
    const Grid2D h = render_gt_heatmap({o}, {}, 48, 48);
    ASSERT_EQ(h.channels(), 2);
    EXPECT_EQ(count_value(h, 0, 1.0), 1);
    EXPECT_EQ(count_value(h, 1, 1.0), 1);
    int px, py;
    endpoint_pixel(o.endpoints.left, 48, 48, px, py);
    EXPECT_EQ(h.at(px, py, 0), 1.0);
    endpoint_pixel(o.endpoints.right, 48, 48, px, py);
    EXPECT_EQ(h.at(px, py, 1), 1.0);
}

TEST(RenderHeatmap, CloseEndpointsCombineByMax) {
    AnnotatedObject a = object(10, 10, 8, 0);
    AnnotatedObject b = object(10, 11, 8, 0);
    const Grid2D h = render_gt_heatmap({a, b}, {}, 32, 32);
    for (double v : h.values()) EXPECT_LE(v, 1.0);
    // Direct evaluation: the value at each pixel is the larger kernel.
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const double da = std::hypot(x - 6.0, y - 10.0), db = std::hypot(x - 6.0, y - 11.0);
            const double expect = std::max(da <= 6 * std::sqrt(2.0) && std::abs(x - 6) <= 6 && std::abs(y - 10) <= 6
                                               ? std::exp(-da * da / 8)
                                               : 0.0,
                                           std::abs(x - 6) <= 6 && std::abs(y - 11) <= 6 ? std::exp(-db * db / 8) : 0.0);
            EXPECT_NEAR(h.at(x, y, 0), expect, 1e-12);
        }
}

TEST(RenderHeatmap, IsolatedKernelSumsToTwoPiSigmaSquared) {
    for (double sigma : {1.0, 2.0, 3.0}) {
        HeatmapSpec spec;
        spec.sigma = sigma;
        const Grid2D h = render_gt_heatmap({object(40, 40, 20, 0)}, spec, 96, 96);
        double sum = 0;
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x) sum += h.at(x, y, 0);
        // Truncation at 3 sigma per axis loses about 0.5% of the mass.
        const double erf3 = std::erf(3.0 / std::sqrt(2.0));
        EXPECT_NEAR(sum, 2 * std::numbers::pi * sigma * sigma, 0.01 * 2 * std::numbers::pi * sigma * sigma);
        EXPECT_GT(sum, 2 * std::numbers::pi * sigma * sigma * erf3 * erf3 * 0.98);
    }
}

TEST(ExtractPeaks, FlatZeroHeatmapHasNoPeaks) {
    const PeakSet p = extract_peaks(Grid2D(16, 16, 2), {});
    EXPECT_TRUE(p.left.empty());
    EXPECT_TRUE(p.right.empty());
}

TEST(ExtractPeaks, ThreeDebrisDecodeToGroundTruth) {
    const std::vector<AnnotatedObject> objs = {object(20, 20, 12, 0.2), object(60, 30, 20, 2.0),
                                               object(35, 70, 16, 4.0)};
    const PeakSet p = extract_peaks(render_gt_heatmap(objs, {}, 96, 96), {});
    ASSERT_EQ(p.left.size(), 3u);
    ASSERT_EQ(p.right.size(), 3u);
    for (const auto& o : objs) {
        bool found_l = false, found_r = false;
        for (const Peak& q : p.left)
            found_l |= std::abs(q.position.x - o.endpoints.left.x) <= 0.5 &&
                       std::abs(q.position.y - o.endpoints.left.y) <= 0.5;
        for (const Peak& q : p.right)
            found_r |= std::abs(q.position.x - o.endpoints.right.x) <= 0.5 &&
                       std::abs(q.position.y - o.endpoints.right.y) <= 0.5;
        EXPECT_TRUE(found_l);
        EXPECT_TRUE(found_r);
    }
}

TEST(ExtractPeaks, GaussiansTwoPixelsApartMergeUnderWindowFive) {
    // Summed kernels evaluated directly: the midpoint is the only maximum.
    Grid2D h(21, 11, 2);
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 21; ++x) {
            const double a = (x - 9.0) * (x - 9.0) + (y - 5.0) * (y - 5.0);
            const double b = (x - 11.0) * (x - 11.0) + (y - 5.0) * (y - 5.0);
            h.at(x, y, 0) = 0.5 * (std::exp(-a / 8) + std::exp(-b / 8));
        }
    HeatmapSpec spec;
    spec.nms_window = 5;
    const auto peaks = extract_channel_peaks(h, 0, spec);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_EQ(peaks[0].px, 10);
    EXPECT_EQ(peaks[0].py, 5);
    EXPECT_NEAR(peaks[0].position.x, 10.0, 1e-12);
}

TEST(ExtractPeaks, StrictMaximumAndThreshold) {
    Grid2D h(9, 9, 2);
    h.at(4, 4, 0) = 0.8;
    h.at(5, 4, 0) = 0.8;  // plateau: neither is a strict maximum
    h.at(1, 1, 1) = 0.29;
    h.at(7, 7, 1) = 0.3;
    const PeakSet p = extract_peaks(h, {});
    EXPECT_TRUE(p.left.empty());
    ASSERT_EQ(p.right.size(), 1u);
    EXPECT_EQ(p.right[0].px, 7);
}

TEST(ExtractPeaks, CountCappedAndMonotoneInThreshold) {
    Rng rng(6);
    for (int t = 0; t < 20; ++t) {
        Grid2D h(32, 32, 2);
        for (double& v : h.values()) v = rng.uniform();
        HeatmapSpec spec;
        spec.max_peaks = 1000;
        std::size_t prev = 1u << 30;
        for (double thr = 0.0; thr <= 1.0; thr += 0.1) {
            spec.peak_threshold = thr;
            const std::size_t n = extract_channel_peaks(h, 0, spec).size();
            EXPECT_LE(n, prev);
            prev = n;
        }
        spec.peak_threshold = 0;
        spec.max_peaks = 5;
        const auto top = extract_channel_peaks(h, 0, spec);
        ASSERT_EQ(top.size(), 5u);
        for (std::size_t i = 1; i < top.size(); ++i) EXPECT_GE(top[i - 1].score, top[i].score);
    }
}

TEST(PairEndpoints, SeparableEmbeddingsRecoverTruePairs) {
    Grid2D el(20, 4, 2), er(20, 4, 2);
    std::vector<Peak> left, right;
    const int perm[4] = {2, 0, 3, 1};
    for (int i = 0; i < 4; ++i) {
        left.push_back(peak_at(i, 0));
        right.push_back(peak_at(10 + perm[i], 1));
        for (int c = 0; c < 2; ++c) {
            el.at(i, 0, c) = 5.0 * i;
            er.at(10 + perm[i], 1, c) = 5.0 * i;
        }
    }
    const auto dets = pair_endpoints(left, right, el, er, {});
    ASSERT_EQ(dets.size(), 4u);
    for (const Detection& d : dets) {
        const int i = static_cast<int>(d.endpoints.left.x);
        EXPECT_EQ(d.endpoints.right.x, 10.0 + perm[i]);
        EXPECT_EQ(d.embedding_left, d.embedding_right);
    }
}

TEST(PairEndpoints, SinglePairWithinAndBeyondGate) {
    Grid2D el(4, 4, 1), er(4, 4, 1);
    er.at(3, 3) = 0.9;
    EXPECT_EQ(pair_endpoints({peak_at(0, 0)}, {peak_at(3, 3)}, el, er, {}).size(), 1u);
    er.at(3, 3) = 1.1;
    EXPECT_TRUE(pair_endpoints({peak_at(0, 0)}, {peak_at(3, 3)}, el, er, {}).empty());
}

TEST(PairEndpoints, OrderedByScoreAndSwappedWhenNeeded) {
    Grid2D el(8, 8, 1), er(8, 8, 1);
    er.at(1, 7) = 10;
    el.at(6, 6) = 10;
    // The second pair has its "left" peak to the right of its partner.
    const auto dets = pair_endpoints({peak_at(0, 0, 0.4), peak_at(6, 6, 0.9)}, {peak_at(2, 0, 0.4), peak_at(1, 7, 0.9)},
                                     el, er, {});
    ASSERT_EQ(dets.size(), 2u);
    EXPECT_DOUBLE_EQ(dets[0].score, 0.9);
    EXPECT_EQ(dets[0].endpoints.left, (Point2{1, 7}));
    EXPECT_EQ(dets[0].endpoints.right, (Point2{6, 6}));
}

TEST(PairEndpoints, DimensionMismatchIsAnError) {
    EXPECT_THROW(pair_endpoints({peak_at(0, 0)}, {peak_at(1, 1)}, Grid2D(4, 4, 2), Grid2D(4, 4, 3), {}),
                 ValidationError);
}

TEST(PairEndpoints, GreedyMatchesBruteForceUnderMargins) {
    Rng rng(17);
    for (int t = 0; t < 200; ++t) {
        // True pair distances < 1, every alternative > 2.
        int perm[4] = {0, 1, 2, 3};
        for (int i = 3; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
        Grid2D el(4, 1, 1), er(4, 1, 1);
        for (int i = 0; i < 4; ++i) {
            el.at(i, 0) = 3.0 * i;
            er.at(perm[i], 0) = 3.0 * i + rng.uniform(-0.45, 0.45);
        }
        std::vector<Peak> left, right;
        for (int i = 0; i < 4; ++i) {
            left.push_back(peak_at(i, 0));
            right.push_back(peak_at(i, 0));
        }
        PairingConfig cfg;
        cfg.gate = 100;
        const Matrix s = embedding_similarity(left, right, el, er, cfg.norm);
        oracle::Mat m(4, oracle::Vec(4));
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m[i][j] = std::abs(el.at(i, 0) - er.at(j, 0));
        const auto best = oracle::brute_force(m, [](int, int) { return true; }, true, true);
        EXPECT_EQ(greedy_min_cost(s, cfg.gate), best.col);
        const auto dets = pair_endpoints(left, right, el, er, cfg);
        ASSERT_EQ(dets.size(), 4u);
        for (const Detection& d : dets) {
            const int i = static_cast<int>(std::lround(d.embedding_left[0] / 3.0));
            EXPECT_NEAR(std::abs(d.embedding_left[0] - d.embedding_right[0]), m[i][best.col[i]], 1e-12);
        }
    }
}

namespace {

bool within_half_pixel(const Point2& a, const Point2& b) {
    return std::abs(a.x - b.x) <= 0.5 && std::abs(a.y - b.y) <= 0.5;
}

}  // namespace

// Near-vertical streaks can have both endpoints round to one pixel column,
// which flips the left/right order, so endpoints are compared as a set.
TEST(DecodeFrame, DecodeOfEncodeRecoversObjectsAndOffsets) {
    Rng rng(23);
    HeatmapSpec spec;
    for (int t = 0; t < 100; ++t) {
        const auto objs = testing_frames::separated_objects(rng, static_cast<int>(rng.uniform_int(1, 5)), 96, 96,
                                                            spec.nms_window);
        const FrameTensors tensors = render_gt_tensors(objs, spec, 96, 96, 4, 2.0);
        const auto dets = decode_frame(tensors, spec, {});
        ASSERT_EQ(dets.size(), objs.size());
        for (const auto& o : objs) {
            int hits = 0;
            for (const Detection& d : dets) {
                const bool same = within_half_pixel(d.endpoints.left, o.endpoints.left) &&
                                  within_half_pixel(d.endpoints.right, o.endpoints.right);
                const bool swapped = within_half_pixel(d.endpoints.left, o.endpoints.right) &&
                                     within_half_pixel(d.endpoints.right, o.endpoints.left);
                if (!same && !swapped) continue;
                ++hits;
                const Point2 motion = o.state.direction() * o.state.speed;
                ASSERT_TRUE(d.has_offsets());
                EXPECT_NEAR(d.offset_left->x, motion.x, 1e-12);
                EXPECT_NEAR(d.offset_right->y, motion.y, 1e-12);
            }
            EXPECT_EQ(hits, 1);
        }
    }
}

TEST(GtEmbedding, ObjectsSeparatedInL1) {
    EXPECT_NEAR(embedding_distance(gt_embedding(1, 4, 2.0), gt_embedding(3, 4, 2.0), EmbeddingNorm::L1), 4.0, 1e-12);
    EXPECT_NEAR(embedding_distance(std::vector<double>{0, 0}, std::vector<double>{3, 4}, EmbeddingNorm::L2), 5.0,
                1e-12);
}

TEST(OracleDetect, ZeroNoiseIsExact) {
    Rng rng(1);
    const std::vector<AnnotatedObject> objs = {object(20, 20, 10, 0.5, 3), object(40, 30, 12, 2.5, 5)};
    const OracleFrame f = oracle_detect(objs, {}, 64, 64, rng);
    ASSERT_EQ(f.detections.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(f.detections[i].endpoints, objs[i].endpoints);
        EXPECT_EQ(f.source_track_ids[i], objs[i].track_id);
        ASSERT_TRUE(f.detections[i].has_offsets());
        const Point2 m = objs[i].state.direction() * objs[i].state.speed;
        EXPECT_EQ(*f.detections[i].offset_left, m);
    }
    EXPECT_TRUE(f.dropped_track_ids.empty());
    EXPECT_EQ(f.false_positives, 0);
}

TEST(OracleDetect, DropAllGivesNothing) {
    Rng rng(2);
    OracleNoise n;
    n.drop_prob = 1;
    const OracleFrame f = oracle_detect({object(20, 20, 10, 0.5)}, n, 64, 64, rng);
    EXPECT_TRUE(f.detections.empty());
    EXPECT_EQ(f.dropped_track_ids, std::vector<int>{1});
}

TEST(OracleDetect, EmpiricalDropRate) {
    Rng rng(3);
    OracleNoise n;
    n.drop_prob = 0.3;
    std::vector<AnnotatedObject> objs(100, object(20, 20, 10, 0.5));
    int dropped = 0;
    for (int t = 0; t < 100; ++t) dropped += static_cast<int>(oracle_detect(objs, n, 64, 64, rng).dropped_track_ids.size());
    EXPECT_NEAR(dropped / 10000.0, 0.30, 0.01);
}

TEST(OracleDetect, FalsePositiveRateAndJitter) {
    Rng rng(4);
    OracleNoise n;
    n.false_positive_rate = 2.0;
    n.endpoint_jitter_std = 1.5;
    const AnnotatedObject o = object(30, 30, 10, 0.5);
    double fps = 0, sq = 0;
    int samples = 0;
    for (int t = 0; t < 5000; ++t) {
        const OracleFrame f = oracle_detect({o}, n, 64, 64, rng);
        fps += f.false_positives;
        ASSERT_EQ(f.detections.size(), 1u + f.false_positives);
        EXPECT_EQ(f.source_track_ids.back() == 0, f.false_positives > 0);
        const Point2 d = f.detections[0].endpoints.left - o.endpoints.left;
        sq += d.x * d.x + d.y * d.y;
        samples += 2;
    }
    EXPECT_NEAR(fps / 5000, 2.0, 0.1);
    EXPECT_NEAR(std::sqrt(sq / samples), 1.5, 0.05);
}

TEST(OracleDetect, RejectsBadNoise) {
    Rng rng(0);
    OracleNoise n;
    n.drop_prob = 1.5;
    EXPECT_THROW(oracle_detect({}, n, 8, 8, rng), ValidationError);
    n.drop_prob = 0;
    n.endpoint_jitter_std = -1;
    EXPECT_THROW(oracle_detect({}, n, 8, 8, rng), ValidationError);
}

TEST(MaskGate, OnesZerosAndDirectLoop) {
    Rng rng(5);
    Grid2D f(7, 5, 3);
    for (double& v : f.values()) v = rng.normal();
    EXPECT_EQ(mask_gate(f, Grid2D(7, 5, 1, 1.0)), f);
    EXPECT_EQ(mask_gate(f, Grid2D(7, 5, 1, 0.0)), Grid2D(7, 5, 3, 0.0));
    Grid2D m(7, 5);
    for (double& v : m.values()) v = rng.uniform();
    const Grid2D out = mask_gate(f, m);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x)
            for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(x, y, c), m.at(x, y) * f.at(x, y, c));
}

TEST(MaskGate, LinearInBothArguments) {
    Rng rng(6);
    Grid2D f(4, 4, 2), g(4, 4, 2), m(4, 4), n(4, 4);
    for (double& v : f.values()) v = rng.normal();
    for (double& v : g.values()) v = rng.normal();
    for (double& v : m.values()) v = rng.normal();
    for (double& v : n.values()) v = rng.normal();
    Grid2D fg = f, mn = m;
    for (std::size_t i = 0; i < fg.size(); ++i) fg.values()[i] = 2 * f.values()[i] + 3 * g.values()[i];
    for (std::size_t i = 0; i < mn.size(); ++i) mn.values()[i] = m.values()[i] - 4 * n.values()[i];
    const Grid2D a = mask_gate(fg, m), b1 = mask_gate(f, m), b2 = mask_gate(g, m);
    const Grid2D c = mask_gate(f, mn), d1 = mask_gate(f, n);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a.values()[i], 2 * b1.values()[i] + 3 * b2.values()[i], 1e-12);
        EXPECT_NEAR(c.values()[i], b1.values()[i] - 4 * d1.values()[i], 1e-12);
    }
}

TEST(MaskGate, ShapeMismatch) {
    EXPECT_THROW(mask_gate(Grid2D(4, 4, 2), Grid2D(4, 5)), ValidationError);
    EXPECT_THROW(mask_gate(Grid2D(4, 4, 2), Grid2D(4, 4, 2)), ValidationError);
}

TEST(HeatmapSpec, Validation) {
    HeatmapSpec s;
    s.nms_window = 4;
    EXPECT_THROW(s.validate(), ValidationError);
    s.nms_window = 3;
    s.sigma = 0;
    EXPECT_THROW(s.validate(), ValidationError);
}
