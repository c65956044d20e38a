#include "sdtrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sdtrack/errors.hpp"

namespace sdt {

namespace {

constexpr double kEdgeTolerance = 1e-9;

void check_range(const Range& r, const char* name) {
    if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max) {
        throw ValidationError(std::string("sim.") + name + ": range must be finite with min <= max");
    }
}

double wrap_angle(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a, two_pi);
    if (w < 0.0) w += two_pi;
    return w >= two_pi ? 0.0 : w;
}

// Uniform center coordinate keeping [c - half, c + half] and its shifted copy
// [c + shift - half, c + shift + half] inside [0, extent - 1].
double sample_in_view(double half, double shift, int extent, Rng& rng) {
    const double hi_bound = static_cast<double>(extent - 1);
    const double lo = std::max(half, half - shift);
    const double hi = std::min(hi_bound - half, hi_bound - half - shift);
    if (lo > hi) return rng.uniform(0.0, hi_bound);
    return rng.uniform(lo, hi);
}

struct PixelWindow {
    int x0, y0, x1, y1;  // inclusive
    bool empty() const { return x0 > x1 || y0 > y1; }
};

PixelWindow clip_window(const BBox& b, int width, int height) {
    return {std::max(0, static_cast<int>(std::ceil(b.x_min - kEdgeTolerance))),
            std::max(0, static_cast<int>(std::ceil(b.y_min - kEdgeTolerance))),
            std::min(width - 1, static_cast<int>(std::floor(b.x_max + kEdgeTolerance))),
            std::min(height - 1, static_cast<int>(std::floor(b.y_max + kEdgeTolerance)))};
}

}  // namespace

void SimConfig::validate() const {
    if (frames.min < 1 || frames.min > frames.max) throw ValidationError("sim.frames: need 1 <= min <= max");
    if (debris_count.min < 0 || debris_count.min > debris_count.max) {
        throw ValidationError("sim.debris_count: need 0 <= min <= max");
    }
    check_range(length, "length");
    check_range(width, "width");
    check_range(speed, "speed");
    check_range(angle, "angle");
    check_range(fracture_gap, "fracture_gap");
    if (!(length.min > 0.0)) throw ValidationError("sim.length: lengths must be positive");
    if (!(width.min > 0.0)) throw ValidationError("sim.width: widths must be positive");
    if (speed.min < 0.0) throw ValidationError("sim.speed: speeds must be non-negative");
    if (fracture_gap.min < 0.0) throw ValidationError("sim.fracture_gap: gaps must be non-negative");
    if (!(fracture_prob >= 0.0 && fracture_prob <= 1.0)) {
        throw ValidationError("sim.fracture_prob: must lie in [0,1]");
    }
    if (!std::isfinite(brightness_mean)) throw ValidationError("sim.brightness_mean: must be finite");
    if (!(brightness_jitter >= 0.0)) throw ValidationError("sim.brightness_jitter: must be non-negative");
    if (!(psf.scale > 0.0)) throw ValidationError("sim.psf.scale: must be positive");
    if (!(psf.sigma > 0.0)) throw ValidationError("sim.psf.sigma: must be positive");
    if (image_width < 1 || image_height < 1) throw ValidationError("sim.image_size: must be positive");
}

SimConfig debris_preset() {
    SimConfig cfg;
    cfg.debris_count = {1, 2};
    return cfg;
}

SimConfig dense_preset() {
    SimConfig cfg;
    cfg.debris_count = {3, 5};
    return cfg;
}

SimConfig mixed_preset() {
    SimConfig cfg;
    cfg.debris_count = {1, 5};
    return cfg;
}

Grid2D synth_background(const BackgroundConfig& cfg, int width, int height, Rng& rng) {
    Grid2D sky(width, height, 1);
    for (double& v : sky.values()) v = cfg.sky_level + rng.normal(0.0, cfg.noise_std);

    const double expected = cfg.stars_per_10k_pixels * width * height / 10000.0;
    const int stars = rng.poisson(expected);
    const int radius = static_cast<int>(std::ceil(3.0 * cfg.star_sigma));
    const double norm = 1.0 / (2.0 * std::numbers::pi * cfg.star_sigma * cfg.star_sigma);
    for (int i = 0; i < stars; ++i) {
        const double sx = rng.uniform(0.0, width);
        const double sy = rng.uniform(0.0, height);
        const double flux = rng.uniform(cfg.star_flux.min, cfg.star_flux.max);
        const int cx = static_cast<int>(std::floor(sx));
        const int cy = static_cast<int>(std::floor(sy));
        for (int y = cy - radius; y <= cy + radius; ++y) {
            for (int x = cx - radius; x <= cx + radius; ++x) {
                if (!sky.contains(x, y)) continue;
                const double d2 = (x - sx) * (x - sx) + (y - sy) * (y - sy);
                sky.at(x, y) += flux * norm * std::exp(-d2 / (2.0 * cfg.star_sigma * cfg.star_sigma));
            }
        }
    }
    return sky;
}

DebrisState sample_initial_state(const SimConfig& cfg, int frames, Rng& rng) {
    DebrisState s;
    s.length = rng.uniform(cfg.length.min, cfg.length.max);
    s.width = std::min(rng.uniform(cfg.width.min, cfg.width.max), s.length);
    s.angle = wrap_angle(rng.uniform(cfg.angle.min, cfg.angle.max));
    s.speed = rng.uniform(cfg.speed.min, cfg.speed.max);

    if (cfg.keep_in_view) {
        const Point2 dir = s.direction();
        const double travel = s.speed * std::max(0, frames - 1);
        s.center.x = sample_in_view(std::abs(dir.x) * s.length / 2.0, dir.x * travel, cfg.image_width, rng);
        s.center.y = sample_in_view(std::abs(dir.y) * s.length / 2.0, dir.y * travel, cfg.image_height, rng);
    } else {
        s.center.x = rng.uniform(0.0, cfg.image_width - 1);
        s.center.y = rng.uniform(0.0, cfg.image_height - 1);
    }
    return s;
}

DebrisState propagate(const DebrisState& s, double dt) {
    DebrisState out = s;
    out.center.x = s.center.x + s.speed * std::cos(s.angle) * dt;
    out.center.y = s.center.y + s.speed * std::sin(s.angle) * dt;
    return out;
}

std::vector<DebrisState> generate_trajectory(const DebrisState& s1, int frames) {
    if (frames < 1) throw ValidationError("trajectory needs at least one frame");
    std::vector<DebrisState> out;
    out.reserve(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) out.push_back(propagate(s1, t));
    return out;
}

double axial_offset(const DebrisState& s, double x, double y) {
    return (x - s.center.x) * std::cos(s.angle) + (y - s.center.y) * std::sin(s.angle);
}

bool inside_rectangle(const DebrisState& s, double x, double y) {
    const double c = std::cos(s.angle);
    const double sn = std::sin(s.angle);
    const double dx = x - s.center.x;
    const double dy = y - s.center.y;
    const double along = dx * c + dy * sn;
    const double across = -dx * sn + dy * c;
    return std::abs(along) <= s.length / 2.0 + kEdgeTolerance && std::abs(across) <= s.width / 2.0 + kEdgeTolerance;
}

bool intersects_image(const DebrisState& s, int width, int height) {
    const BBox hull = bbox_from_state(s);
    const double w = width - 1;
    const double h = height - 1;
    if (hull.x_max < 0.0 || hull.y_max < 0.0 || hull.x_min > w || hull.y_min > h) return false;

    // Remaining separating axes are the rectangle's own axes.
    const Point2 image_corners[4] = {{0.0, 0.0}, {w, 0.0}, {w, h}, {0.0, h}};
    const Point2 axes[2] = {{std::cos(s.angle), std::sin(s.angle)}, {-std::sin(s.angle), std::cos(s.angle)}};
    const double halves[2] = {s.length / 2.0, s.width / 2.0};
    for (int a = 0; a < 2; ++a) {
        const double center_proj = s.center.x * axes[a].x + s.center.y * axes[a].y;
        double lo = INFINITY;
        double hi = -INFINITY;
        for (const Point2& p : image_corners) {
            const double proj = p.x * axes[a].x + p.y * axes[a].y;
            lo = std::min(lo, proj);
            hi = std::max(hi, proj);
        }
        if (hi < center_proj - halves[a] || lo > center_proj + halves[a]) return false;
    }
    return true;
}

void rasterize_debris(Grid2D& canvas, const DebrisState& s, double brightness, double jitter, Rng& rng) {
    const PixelWindow win = clip_window(bbox_from_state(s), canvas.width(), canvas.height());
    if (win.empty()) return;
    for (int y = win.y0; y <= win.y1; ++y) {
        for (int x = win.x0; x <= win.x1; ++x) {
            if (!inside_rectangle(s, x, y)) continue;
            const double value = brightness + rng.uniform(-jitter, jitter);
            for (int c = 0; c < canvas.channels(); ++c) canvas.at(x, y, c) += value;
        }
    }
}

Grid2D psf_kernel(const PsfParams& psf, bool normalized) {
    if (!(psf.sigma > 0.0) || !(psf.scale > 0.0)) throw ValidationError("psf scale and sigma must be positive");
    const int r = static_cast<int>(std::ceil(3.0 * psf.sigma));
    const int n = 2 * r + 1;
    Grid2D k(n, n, 1);
    const double two_var = 2.0 * psf.sigma * psf.sigma;
    const double peak = psf.scale / (std::numbers::pi * two_var);
    double sum = 0.0;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double dx = x - r;
            const double dy = y - r;
            k.at(x, y) = peak * std::exp(-(dx * dx + dy * dy) / two_var);
            sum += k.at(x, y);
        }
    }
    if (normalized) {
        for (double& v : k.values()) v *= psf.scale / sum;
    }
    return k;
}

Grid2D apply_psf(const Grid2D& canvas, const PsfParams& psf) {
    if (!(psf.sigma > 0.0) || !(psf.scale > 0.0)) throw ValidationError("psf scale and sigma must be positive");
    const int r = static_cast<int>(std::ceil(3.0 * psf.sigma));

    // The 2D Gaussian is separable: weights g(dx) * g(dy) * S with g summing to 1.
    std::vector<double> g(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (int d = -r; d <= r; ++d) {
        g[static_cast<std::size_t>(d + r)] = std::exp(-(d * d) / (2.0 * psf.sigma * psf.sigma));
        sum += g[static_cast<std::size_t>(d + r)];
    }
    for (double& v : g) v /= sum;

    const int w = canvas.width();
    const int h = canvas.height();
    const int ch = canvas.channels();
    Grid2D out(w, h, ch);

    int x0 = w, y0 = h, x1 = -1, y1 = -1;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                if (canvas.at(x, y, c) != 0.0) {
                    x0 = std::min(x0, x);
                    y0 = std::min(y0, y);
                    x1 = std::max(x1, x);
                    y1 = std::max(y1, y);
                }
            }
        }
    }
    if (x1 < 0) return out;

    const int ox0 = std::max(0, x0 - r), ox1 = std::min(w - 1, x1 + r);
    const int oy0 = std::max(0, y0 - r), oy1 = std::min(h - 1, y1 + r);

    // Horizontal pass over the support rows, vertical pass into the output.
    Grid2D tmp(w, h, ch);
    for (int y = y0; y <= y1; ++y) {
        for (int x = ox0; x <= ox1; ++x) {
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int d = -r; d <= r; ++d) {
                    const int sx = x - d;
                    if (sx < x0 || sx > x1) continue;
                    acc += g[static_cast<std::size_t>(d + r)] * canvas.at(sx, y, c);
                }
                tmp.at(x, y, c) = acc;
            }
        }
    }
    for (int y = oy0; y <= oy1; ++y) {
        for (int x = ox0; x <= ox1; ++x) {
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int d = -r; d <= r; ++d) {
                    const int sy = y - d;
                    if (sy < y0 || sy > y1) continue;
                    acc += g[static_cast<std::size_t>(d + r)] * tmp.at(x, sy, c);
                }
                out.at(x, y, c) = psf.scale * acc;
            }
        }
    }
    return out;
}

FractureResult apply_fracture(Grid2D& canvas, const Grid2D& before, const DebrisState& s, const SimConfig& cfg,
                              Rng& rng) {
    if (!canvas.same_shape(before)) throw ValidationError("fracture: canvas and background shapes differ");
    FractureResult result;
    if (!rng.bernoulli(cfg.fracture_prob)) return result;

    result.applied = true;
    result.gap = std::min(rng.uniform(cfg.fracture_gap.min, cfg.fracture_gap.max), s.length / 2.0);
    const double half_room = s.length / 2.0 - result.gap / 2.0;
    result.center = rng.uniform(-half_room, half_room);

    const PixelWindow win = clip_window(bbox_from_state(s), canvas.width(), canvas.height());
    if (win.empty()) return result;
    for (int y = win.y0; y <= win.y1; ++y) {
        for (int x = win.x0; x <= win.x1; ++x) {
            if (!inside_rectangle(s, x, y) || !result.in_gap(axial_offset(s, x, y))) continue;
            for (int c = 0; c < canvas.channels(); ++c) canvas.at(x, y, c) = before.at(x, y, c);
        }
    }
    return result;
}

SimulatedSequence simulate_sequence(const Grid2D& background, const SimConfig& cfg, Rng& rng) {
    cfg.validate();
    if (background.channels() != 1) throw ValidationError("background must be single-channel");
    if (background.width() < cfg.image_width || background.height() < cfg.image_height) {
        throw ValidationError("background " + std::to_string(background.width()) + "x" +
                              std::to_string(background.height()) + " is smaller than the configured image size " +
                              std::to_string(cfg.image_width) + "x" + std::to_string(cfg.image_height));
    }
    const int w = cfg.image_width;
    const int h = cfg.image_height;

    const int frames = static_cast<int>(rng.uniform_int(cfg.frames.min, cfg.frames.max));
    const int off_x = static_cast<int>(rng.uniform_int(0, background.width() - w));
    const int off_y = static_cast<int>(rng.uniform_int(0, background.height() - h));
    Grid2D bg(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) bg.at(x, y) = background.at(x + off_x, y + off_y);

    const int count = static_cast<int>(rng.uniform_int(cfg.debris_count.min, cfg.debris_count.max));
    std::vector<std::vector<DebrisState>> trajectories;
    trajectories.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        trajectories.push_back(generate_trajectory(sample_initial_state(cfg, frames, rng), frames));
    }

    SimulatedSequence seq;
    seq.annotation.width = w;
    seq.annotation.height = h;
    for (int t = 0; t < frames; ++t) {
        Grid2D layer(w, h, 1);
        Grid2D mask(w, h, 1);
        std::vector<AnnotatedObject> objects;
        for (int k = 0; k < count; ++k) {
            const DebrisState& s = trajectories[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
            if (!intersects_image(s, w, h)) continue;
            const Grid2D before = layer;
            rasterize_debris(layer, s, cfg.brightness_mean, cfg.brightness_jitter, rng);
            const FractureResult fracture = apply_fracture(layer, before, s, cfg, rng);

            const PixelWindow win = clip_window(bbox_from_state(s), w, h);
            for (int y = win.y0; y <= win.y1; ++y) {
                for (int x = win.x0; x <= win.x1; ++x) {
                    if (inside_rectangle(s, x, y) && !fracture.in_gap(axial_offset(s, x, y))) mask.at(x, y) = 1.0;
                }
            }
            objects.push_back(make_annotated(k + 1, s));
        }
        if (cfg.psf.enabled) layer = apply_psf(layer, cfg.psf);

        Grid2D frame(w, h, 1);
        for (std::size_t i = 0; i < frame.size(); ++i) {
            frame.values()[i] = std::round(std::clamp(bg.values()[i] + layer.values()[i], 0.0, 255.0));
        }
        seq.frames.push_back(std::move(frame));
        seq.annotation.frames.push_back(std::move(objects));
        seq.annotation.masks.push_back(std::move(mask));
    }
    return seq;
}

double debris_excess_fraction(const Grid2D& frame, const Grid2D& mask, double background_median, double margin) {
    if (!frame.same_extent(mask)) throw ValidationError("frame and mask sizes differ");
    std::size_t total = 0;
    std::size_t bright = 0;
    for (int y = 0; y < frame.height(); ++y) {
        for (int x = 0; x < frame.width(); ++x) {
            if (mask.at(x, y) <= 0.0) continue;
            ++total;
            if (frame.at(x, y) - background_median >= margin) ++bright;
        }
    }
    return total == 0 ? 1.0 : static_cast<double>(bright) / static_cast<double>(total);
}

}  // namespace sdt
