#include "sdtrack/losses.hpp"

#include <algorithm>
#include <cmath>

#include "sdtrack/errors.hpp"

namespace sdt {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_shapes(const Grid2D& a, const Grid2D& b, const char* what) {
    if (!a.same_shape(b)) throw ValidationError(std::string(what) + ": prediction and target shapes differ");
}

// Distance and its gradient with respect to `a` for the configured norm.
double norm_distance(const Embedding& a, const Embedding& b, EmbeddingNorm norm, Embedding& grad_a) {
    grad_a.assign(a.size(), 0.0);
    if (norm == EmbeddingNorm::L1) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            d += std::abs(a[i] - b[i]);
            grad_a[i] = sign(a[i] - b[i]);
        }
        return d;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    const double d = std::sqrt(sq);
    if (d > 0.0) {
        for (std::size_t i = 0; i < a.size(); ++i) grad_a[i] = (a[i] - b[i]) / d;
    }
    return d;
}

}  // namespace

void LossConfig::validate() const {
    if (seg_weight < 0.0 || hm_weight < 0.0 || emb_weight < 0.0 || off_weight < 0.0) {
        throw ValidationError("loss weights must be non-negative");
    }
    if (!(push_margin > 0.0)) throw ValidationError("loss.push_margin: must be positive");
    if (!(probability_eps > 0.0 && probability_eps < 0.5)) throw ValidationError("loss.probability_eps: must lie in (0, 0.5)");
}

GridLoss seg_loss(const Grid2D& pred, const Grid2D& gt, const LossConfig& cfg) {
    check_shapes(pred, gt, "seg_loss");
    const double eps = cfg.probability_eps;
    const double n = static_cast<double>(pred.size());
    GridLoss out{0.0, Grid2D(pred.width(), pred.height(), pred.channels())};
    if (pred.empty()) return out;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double raw = pred.values()[i];
        const double p = std::clamp(raw, eps, 1.0 - eps);
        const double m = gt.values()[i];
        out.value -= m * std::log(p) + (1.0 - m) * std::log(1.0 - p);
        if (raw == p) out.grad.values()[i] = -(m / p - (1.0 - m) / (1.0 - p)) / n;
    }
    out.value /= n;
    return out;
}

GridLoss heatmap_focal_loss(const Grid2D& pred, const Grid2D& gt, const LossConfig& cfg) {
    check_shapes(pred, gt, "heatmap_focal_loss");
    const double eps = cfg.probability_eps;
    const double a = cfg.focal_alpha;
    const double b = cfg.focal_beta;
    GridLoss out{0.0, Grid2D(pred.width(), pred.height(), pred.channels())};

    std::size_t positives = 0;
    for (double h : gt.values())
        if (h >= 1.0) ++positives;
    const double norm = static_cast<double>(std::max<std::size_t>(positives, 1));

    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double raw = pred.values()[i];
        const double p = std::clamp(raw, eps, 1.0 - eps);
        const double h = gt.values()[i];
        double term = 0.0;
        double dterm = 0.0;
        if (h >= 1.0) {
            term = -std::pow(1.0 - p, a) * std::log(p);
            dterm = a * std::pow(1.0 - p, a - 1.0) * std::log(p) - std::pow(1.0 - p, a) / p;
        } else {
            const double w = std::pow(1.0 - h, b);
            term = -w * std::pow(p, a) * std::log(1.0 - p);
            dterm = -w * (a * std::pow(p, a - 1.0) * std::log(1.0 - p) - std::pow(p, a) / (1.0 - p));
        }
        out.value += term;
        if (raw == p) out.grad.values()[i] = dterm / norm;
    }
    out.value /= norm;
    return out;
}

PairLoss pull_loss(const std::vector<EmbeddingPair>& pairs) {
    PairLoss out;
    const std::size_t k = pairs.size();
    if (k == 0) return out;
    out.grad.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const Embedding& l = pairs[i].left;
        const Embedding& r = pairs[i].right;
        if (l.size() != r.size()) throw ValidationError("pull_loss: embedding dimensions differ");
        out.grad[i].left.assign(l.size(), 0.0);
        out.grad[i].right.assign(r.size(), 0.0);
        for (std::size_t d = 0; d < l.size(); ++d) {
            const double c = 0.5 * (l[d] + r[d]);
            out.value += (l[d] - c) * (l[d] - c) + (r[d] - c) * (r[d] - c);
            // (l - c)^2 + (r - c)^2 = (l - r)^2 / 2
            out.grad[i].left[d] = (l[d] - r[d]) / static_cast<double>(k);
            out.grad[i].right[d] = (r[d] - l[d]) / static_cast<double>(k);
        }
    }
    out.value /= static_cast<double>(k);
    return out;
}

VectorLoss push_loss(const std::vector<Embedding>& centers, const LossConfig& cfg) {
    VectorLoss out;
    const std::size_t k = centers.size();
    out.grad.resize(k);
    for (std::size_t i = 0; i < k; ++i) out.grad[i].assign(centers[i].size(), 0.0);
    if (k < 2) return out;
    const double scale = 1.0 / (static_cast<double>(k) * static_cast<double>(k - 1));

    Embedding g;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            if (centers[i].size() != centers[j].size()) throw ValidationError("push_loss: embedding dimensions differ");
            const double d = norm_distance(centers[i], centers[j], cfg.push_norm, g);
            const double slack = cfg.push_margin - d;
            if (slack <= 0.0) continue;
            out.value += slack;
            // Ordered pair (i, j) moves both ends; (j, i) is counted separately.
            for (std::size_t c = 0; c < g.size(); ++c) {
                out.grad[i][c] -= scale * g[c];
                out.grad[j][c] += scale * g[c];
            }
        }
    }
    out.value *= scale;
    return out;
}

PairLoss embedding_loss(const std::vector<EmbeddingPair>& pairs, const LossConfig& cfg) {
    PairLoss out = pull_loss(pairs);
    std::vector<Embedding> centers;
    centers.reserve(pairs.size());
    for (const EmbeddingPair& p : pairs) {
        Embedding c(p.left.size());
        for (std::size_t d = 0; d < c.size(); ++d) c[d] = 0.5 * (p.left[d] + p.right[d]);
        centers.push_back(std::move(c));
    }
    const VectorLoss push = push_loss(centers, cfg);
    out.value += push.value;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        for (std::size_t d = 0; d < centers[i].size(); ++d) {
            out.grad[i].left[d] += 0.5 * push.grad[i][d];
            out.grad[i].right[d] += 0.5 * push.grad[i][d];
        }
    }
    return out;
}

OffsetLoss offset_loss(const std::vector<OffsetPair>& pred, const std::vector<EndpointPair>& current,
                       const std::vector<EndpointPair>& previous, const LossConfig& cfg) {
    if (pred.size() != current.size() || pred.size() != previous.size()) {
        throw ValidationError("offset_loss: prediction and ground-truth counts differ");
    }
    OffsetLoss out;
    const std::size_t k = pred.size();
    if (k == 0) return out;
    out.grad.resize(k);
    const double inv = 1.0 / static_cast<double>(k);

    auto term = [&](const Point2& o, const Point2& now, const Point2& before, Point2& grad) {
        const Point2 r = o - (now - before);
        if (cfg.offset_norm == EmbeddingNorm::L1) {
            grad = Point2{sign(r.x), sign(r.y)} * inv;
            return std::abs(r.x) + std::abs(r.y);
        }
        const double d = std::hypot(r.x, r.y);
        grad = d > 0.0 ? r * (inv / d) : Point2{};
        return d;
    };
    for (std::size_t i = 0; i < k; ++i) {
        out.value += term(pred[i].left, current[i].left, previous[i].left, out.grad[i].left);
        out.value += term(pred[i].right, current[i].right, previous[i].right, out.grad[i].right);
    }
    out.value *= inv;
    return out;
}

double total_loss(const LossComponents& c, const LossConfig& cfg) {
    return cfg.seg_weight * c.seg + cfg.hm_weight * c.hm + cfg.emb_weight * (c.same + c.diff) +
           cfg.off_weight * c.off;
}

}  // namespace sdt
