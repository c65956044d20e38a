#include "sdtrack/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "sdtrack/losses.hpp"
#include "sdtrack/rng.hpp"

namespace sdt {

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = f(x);
        x[i] = saved - h;
        const double down = f(x);
        x[i] = saved;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double gradient_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    const double denom = std::sqrt(std::max(na, nn));
    return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

namespace {

using Flat = std::vector<double>;

struct Instance {
    Flat x;
    std::function<double(std::span<const double>)> value;
    std::function<Flat(std::span<const double>)> grad;
};

Grid2D to_grid(std::span<const double> x, int w, int h, int c) {
    Grid2D g(w, h, c);
    std::copy(x.begin(), x.end(), g.values().begin());
    return g;
}

std::vector<EmbeddingPair> to_pairs(std::span<const double> x, std::size_t k, std::size_t dims) {
    std::vector<EmbeddingPair> pairs(k);
    for (std::size_t i = 0; i < k; ++i) {
        pairs[i].left.assign(x.begin() + static_cast<std::ptrdiff_t>(2 * i * dims),
                             x.begin() + static_cast<std::ptrdiff_t>((2 * i + 1) * dims));
        pairs[i].right.assign(x.begin() + static_cast<std::ptrdiff_t>((2 * i + 1) * dims),
                              x.begin() + static_cast<std::ptrdiff_t>((2 * i + 2) * dims));
    }
    return pairs;
}

std::vector<Embedding> to_vectors(std::span<const double> x, std::size_t k, std::size_t dims) {
    std::vector<Embedding> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i].assign(x.begin() + static_cast<std::ptrdiff_t>(i * dims),
                      x.begin() + static_cast<std::ptrdiff_t>((i + 1) * dims));
    }
    return out;
}

Instance seg_instance(Rng& rng) {
    const int w = 8, h = 8;
    Grid2D gt(w, h);
    for (double& v : gt.values()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    Flat x(gt.size());
    for (double& v : x) v = rng.uniform(0.05, 0.95);
    return {x, [gt, w, h](std::span<const double> p) { return seg_loss(to_grid(p, w, h, 1), gt).value; },
            [gt, w, h](std::span<const double> p) { return seg_loss(to_grid(p, w, h, 1), gt).grad.values(); }};
}

Instance focal_instance(Rng& rng) {
    const int w = 8, h = 8, c = 2;
    Grid2D gt(w, h, c);
    for (int ch = 0; ch < c; ++ch) {
        const int peaks = static_cast<int>(rng.uniform_int(0, 2));
        for (int k = 0; k < peaks; ++k) {
            const int px = static_cast<int>(rng.uniform_int(0, w - 1));
            const int py = static_cast<int>(rng.uniform_int(0, h - 1));
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
                    gt.at(x, y, ch) = std::max(gt.at(x, y, ch), std::exp(-d2 / 8.0));
                }
        }
    }
    Flat x(gt.size());
    for (double& v : x) v = rng.uniform(0.05, 0.95);
    return {x, [gt](std::span<const double> p) { return heatmap_focal_loss(to_grid(p, 8, 8, 2), gt).value; },
            [gt](std::span<const double> p) { return heatmap_focal_loss(to_grid(p, 8, 8, 2), gt).grad.values(); }};
}

Instance pull_instance(Rng& rng) {
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 5));
    const std::size_t dims = 4;
    Flat x(2 * k * dims);
    for (double& v : x) v = rng.normal();
    return {x, [k](std::span<const double> p) { return pull_loss(to_pairs(p, k, dims)).value; },
            [k](std::span<const double> p) {
                Flat g;
                for (const EmbeddingPair& e : pull_loss(to_pairs(p, k, dims)).grad) {
                    g.insert(g.end(), e.left.begin(), e.left.end());
                    g.insert(g.end(), e.right.begin(), e.right.end());
                }
                return g;
            }};
}

// True when every pairwise L1 distance is away from the margin, every
// coordinate difference is away from zero and at least one pair is inside
// the margin (otherwise the gradient is identically zero).
bool push_away_from_kinks(const std::vector<Embedding>& c, double margin, double kink) {
    bool active = false;
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            double d = 0.0;
            for (std::size_t k = 0; k < c[i].size(); ++k) {
                const double diff = c[i][k] - c[j][k];
                if (std::abs(diff) < kink) return false;
                d += std::abs(diff);
            }
            if (std::abs(margin - d) < kink) return false;
            active = active || d < margin;
        }
    }
    return active;
}

Instance push_instance(Rng& rng, double kink) {
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(2, 6));
    const std::size_t dims = 2;
    Flat x(k * dims);
    do {
        for (double& v : x) v = rng.uniform(-0.6, 0.6);
    } while (!push_away_from_kinks(to_vectors(x, k, dims), 1.0, kink));
    return {x, [k](std::span<const double> p) { return push_loss(to_vectors(p, k, dims)).value; },
            [k](std::span<const double> p) {
                Flat g;
                for (const Embedding& e : push_loss(to_vectors(p, k, dims)).grad) g.insert(g.end(), e.begin(), e.end());
                return g;
            }};
}

Instance offset_instance(Rng& rng, double kink) {
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 5));
    std::vector<EndpointPair> now(k), before(k);
    for (std::size_t i = 0; i < k; ++i) {
        before[i] = {{rng.uniform(0, 100), rng.uniform(0, 100)}, {rng.uniform(0, 100), rng.uniform(0, 100)}};
        const Point2 move{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        now[i] = {before[i].left + move, before[i].right + move};
    }
    Flat x(4 * k);
    for (std::size_t i = 0; i < k; ++i) {
        const Point2 move = now[i].left - before[i].left;
        const double truth[4] = {move.x, move.y, move.x, move.y};
        for (std::size_t d = 0; d < 4; ++d) {
            double r = 0.0;
            do {
                r = rng.uniform(-3.0, 3.0);
            } while (std::abs(r) < kink);
            x[4 * i + d] = truth[d] + r;
        }
    }
    auto unpack = [k](std::span<const double> p) {
        std::vector<OffsetPair> o(k);
        for (std::size_t i = 0; i < k; ++i) o[i] = {{p[4 * i], p[4 * i + 1]}, {p[4 * i + 2], p[4 * i + 3]}};
        return o;
    };
    return {x, [=](std::span<const double> p) { return offset_loss(unpack(p), now, before).value; },
            [=](std::span<const double> p) {
                Flat g;
                for (const OffsetPair& o : offset_loss(unpack(p), now, before).grad) {
                    g.insert(g.end(), {o.left.x, o.left.y, o.right.x, o.right.y});
                }
                return g;
            }};
}

}  // namespace

std::vector<GradCheckOutcome> run_gradient_checks(const GradCheckOptions& options) {
    const char* names[] = {"seg", "focal", "pull", "push", "offset"};
    std::vector<GradCheckOutcome> out;
    for (std::size_t which = 0; which < 5; ++which) {
        GradCheckOutcome o;
        o.loss = names[which];
        Rng rng = Rng::stream(options.seed, which);
        for (int t = 0; t < options.trials; ++t) {
            Instance inst;
            switch (which) {
                case 0: inst = seg_instance(rng); break;
                case 1: inst = focal_instance(rng); break;
                case 2: inst = pull_instance(rng); break;
                case 3: inst = push_instance(rng, options.kink_margin); break;
                default: inst = offset_instance(rng, options.kink_margin); break;
            }
            Flat analytic = inst.grad(inst.x);
            if (options.flip_sign) {
                for (double& v : analytic) v = -v;
            }
            const Flat numeric = central_difference(inst.value, inst.x, options.step);
            const double err = gradient_relative_error(analytic, numeric);
            o.max_error = std::max(o.max_error, err);
            ++o.trials;
            if (!(err < options.tolerance)) ++o.failures;
        }
        out.push_back(o);
    }
    return out;
}

}  // namespace sdt
