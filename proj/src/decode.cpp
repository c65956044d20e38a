#include "sdtrack/decode.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sdtrack/errors.hpp"

namespace sdt {

void HeatmapSpec::validate() const {
    if (!(sigma > 0.0)) throw ValidationError("heatmap.sigma: must be positive");
    if (!(peak_threshold >= 0.0 && peak_threshold <= 1.0)) {
        throw ValidationError("heatmap.peak_threshold: must lie in [0,1]");
    }
    if (nms_window < 3 || nms_window % 2 == 0) throw ValidationError("heatmap.nms_window: must be odd and >= 3");
    if (max_peaks < 0) throw ValidationError("heatmap.max_peaks: must be non-negative");
}

void OracleNoise::validate() const {
    if (!(endpoint_jitter_std >= 0.0)) throw ValidationError("oracle.endpoint_jitter_std: must be non-negative");
    if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) throw ValidationError("oracle.drop_prob: must lie in [0,1]");
    if (!(false_positive_rate >= 0.0)) throw ValidationError("oracle.false_positive_rate: must be non-negative");
}

void endpoint_pixel(const Point2& p, int width, int height, int& px, int& py) {
    const double x = std::clamp(p.x, 0.0, static_cast<double>(width - 1));
    const double y = std::clamp(p.y, 0.0, static_cast<double>(height - 1));
    px = static_cast<int>(std::floor(x + 0.5));
    py = static_cast<int>(std::floor(y + 0.5));
}

namespace {

void draw_kernel(Grid2D& map, int channel, const Point2& p, double sigma) {
    int cx = 0;
    int cy = 0;
    endpoint_pixel(p, map.width(), map.height(), cx, cy);
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    for (int y = cy - r; y <= cy + r; ++y) {
        for (int x = cx - r; x <= cx + r; ++x) {
            if (!map.contains(x, y)) continue;
            const double d2 = static_cast<double>((x - cx) * (x - cx) + (y - cy) * (y - cy));
            double& v = map.at(x, y, channel);
            v = std::max(v, std::exp(-d2 / (2.0 * sigma * sigma)));
        }
    }
}

// Writes embedding and offset values into a square around p wherever p is
// the closest painted endpoint so far (squared distance tracked in `dist`).
void paint_nearest(Grid2D& emb, Grid2D& offset, Grid2D& dist, const Point2& p, int radius,
                   std::span<const double> emb_values, const Point2& offset_value) {
    int cx = 0;
    int cy = 0;
    endpoint_pixel(p, emb.width(), emb.height(), cx, cy);
    for (int y = cy - radius; y <= cy + radius; ++y) {
        for (int x = cx - radius; x <= cx + radius; ++x) {
            if (!emb.contains(x, y)) continue;
            const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
            if (d2 >= dist.at(x, y)) continue;
            dist.at(x, y) = d2;
            for (int c = 0; c < emb.channels(); ++c) emb.at(x, y, c) = emb_values[static_cast<std::size_t>(c)];
            offset.at(x, y, 0) = offset_value.x;
            offset.at(x, y, 1) = offset_value.y;
        }
    }
}

void check_point(const Peak& p, const Grid2D& grid, const char* side) {
    if (!grid.contains(p.px, p.py)) {
        throw ValidationError(std::string(side) + " point (" + std::to_string(p.px) + "," + std::to_string(p.py) +
                              ") lies outside the embedding map");
    }
}

}  // namespace

Grid2D render_gt_heatmap(const std::vector<AnnotatedObject>& objects, const HeatmapSpec& spec, int width, int height) {
    spec.validate();
    Grid2D map(width, height, 2);
    for (const AnnotatedObject& o : objects) {
        draw_kernel(map, 0, o.endpoints.left, spec.sigma);
        draw_kernel(map, 1, o.endpoints.right, spec.sigma);
    }
    return map;
}

std::vector<Peak> extract_channel_peaks(const Grid2D& heatmap, int channel, const HeatmapSpec& spec) {
    spec.validate();
    if (!heatmap.all_finite()) throw ValidationError("heatmap contains non-finite values");
    const int half = spec.nms_window / 2;
    const int w = heatmap.width();
    const int h = heatmap.height();

    std::vector<Peak> peaks;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = heatmap.at(x, y, channel);
            if (v < spec.peak_threshold) continue;
            bool strict_max = true;
            for (int dy = -half; dy <= half && strict_max; ++dy) {
                for (int dx = -half; dx <= half; ++dx) {
                    if ((dx == 0 && dy == 0) || !heatmap.contains(x + dx, y + dy)) continue;
                    if (heatmap.at(x + dx, y + dy, channel) >= v) {
                        strict_max = false;
                        break;
                    }
                }
            }
            if (strict_max) peaks.push_back({{static_cast<double>(x), static_cast<double>(y)}, x, y, v});
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
    if (peaks.size() > static_cast<std::size_t>(spec.max_peaks)) peaks.resize(static_cast<std::size_t>(spec.max_peaks));

    for (Peak& p : peaks) {
        const bool refine_x = p.px > 0 && p.px < w - 1;
        const bool refine_y = p.py > 0 && p.py < h - 1;
        // Three-pixel centroid along the peak's row (x) and column (y).
        const auto centroid = [&](int dx, int dy) {
            const double a = std::max(0.0, heatmap.at(p.px - dx, p.py - dy, channel));
            const double b = std::max(0.0, heatmap.at(p.px, p.py, channel));
            const double c = std::max(0.0, heatmap.at(p.px + dx, p.py + dy, channel));
            const double sum = a + b + c;
            return sum > 0.0 ? (c - a) / sum : 0.0;
        };
        if (refine_x) p.position.x += centroid(1, 0);
        if (refine_y) p.position.y += centroid(0, 1);
    }
    return peaks;
}

PeakSet extract_peaks(const Grid2D& heatmap, const HeatmapSpec& spec) {
    if (heatmap.channels() != 2) throw ValidationError("endpoint heatmap must have two channels");
    return {extract_channel_peaks(heatmap, 0, spec), extract_channel_peaks(heatmap, 1, spec)};
}

double embedding_distance(std::span<const double> a, std::span<const double> b, EmbeddingNorm norm) {
    if (a.size() != b.size()) throw ValidationError("embedding dimensions differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += norm == EmbeddingNorm::L1 ? std::abs(d) : d * d;
    }
    return norm == EmbeddingNorm::L1 ? acc : std::sqrt(acc);
}

Matrix embedding_similarity(const std::vector<Peak>& left, const std::vector<Peak>& right, const Grid2D& emb_left,
                            const Grid2D& emb_right, EmbeddingNorm norm) {
    if (emb_left.channels() != emb_right.channels()) {
        throw ValidationError("embedding dimension mismatch: " + std::to_string(emb_left.channels()) + " vs " +
                              std::to_string(emb_right.channels()));
    }
    if (!emb_left.same_extent(emb_right)) throw ValidationError("embedding maps differ in size");
    Matrix s(static_cast<int>(left.size()), static_cast<int>(right.size()));
    for (std::size_t i = 0; i < left.size(); ++i) {
        check_point(left[i], emb_left, "left");
        for (std::size_t j = 0; j < right.size(); ++j) {
            check_point(right[j], emb_right, "right");
            s(static_cast<int>(i), static_cast<int>(j)) = embedding_distance(
                emb_left.pixel(left[i].px, left[i].py), emb_right.pixel(right[j].px, right[j].py), norm);
        }
    }
    return s;
}

namespace {

struct Paired {
    Detection det;
    std::size_t left_index = 0;
    bool swapped = false;  // the left peak ended up as the detection's right endpoint
};

std::vector<Paired> pair_peaks(const std::vector<Peak>& left, const std::vector<Peak>& right, const Grid2D& emb_left,
                               const Grid2D& emb_right, const PairingConfig& cfg) {
    const Matrix s = embedding_similarity(left, right, emb_left, emb_right, cfg.norm);
    const std::vector<int> match = cfg.optimal ? min_cost_gated_matching(s, cfg.gate) : greedy_min_cost(s, cfg.gate);

    std::vector<Paired> out;
    for (std::size_t i = 0; i < left.size(); ++i) {
        if (match[i] == kUnmatched) continue;
        const Peak& l = left[i];
        const Peak& r = right[static_cast<std::size_t>(match[i])];
        const auto el = emb_left.pixel(l.px, l.py);
        const auto er = emb_right.pixel(r.px, r.py);
        Paired p;
        p.left_index = i;
        Detection& d = p.det;
        d.score = std::clamp(0.5 * (l.score + r.score), 0.0, 1.0);
        d.embedding_left.assign(el.begin(), el.end());
        d.embedding_right.assign(er.begin(), er.end());
        d.endpoints = {l.position, r.position};
        if (!EndpointPair::is_left_of(l.position, r.position)) {
            std::swap(d.endpoints.left, d.endpoints.right);
            std::swap(d.embedding_left, d.embedding_right);
            p.swapped = true;
        }
        out.push_back(std::move(p));
    }
    std::stable_sort(out.begin(), out.end(), [](const Paired& a, const Paired& b) {
        if (a.det.score != b.det.score) return a.det.score > b.det.score;
        return a.left_index < b.left_index;
    });
    return out;
}

Point2 sample_offset(const Grid2D& map, const Point2& p) {
    int px = 0, py = 0;
    endpoint_pixel(p, map.width(), map.height(), px, py);
    return {map.at(px, py, 0), map.at(px, py, 1)};
}

void check_offset_maps(const Grid2D& offset_left, const Grid2D& offset_right) {
    if (offset_left.channels() != 2 || offset_right.channels() != 2) {
        throw ValidationError("offset maps must have two channels (dx, dy)");
    }
}

}  // namespace

std::vector<Detection> pair_endpoints(const std::vector<Peak>& left, const std::vector<Peak>& right,
                                      const Grid2D& emb_left, const Grid2D& emb_right, const PairingConfig& cfg) {
    std::vector<Detection> dets;
    for (Paired& p : pair_peaks(left, right, emb_left, emb_right, cfg)) dets.push_back(std::move(p.det));
    return dets;
}

void attach_offsets(std::vector<Detection>& detections, const Grid2D& offset_left, const Grid2D& offset_right) {
    check_offset_maps(offset_left, offset_right);
    for (Detection& d : detections) {
        d.offset_left = sample_offset(offset_left, d.endpoints.left);
        d.offset_right = sample_offset(offset_right, d.endpoints.right);
    }
}

std::vector<Detection> decode_frame(const FrameTensors& tensors, const HeatmapSpec& spec, const PairingConfig& pairing) {
    check_offset_maps(tensors.offset_left, tensors.offset_right);
    const PeakSet peaks = extract_peaks(tensors.heatmap, spec);
    std::vector<Detection> dets;
    for (Paired& p : pair_peaks(peaks.left, peaks.right, tensors.emb_left, tensors.emb_right, pairing)) {
        // Each endpoint reads the offset map of the heatmap channel it came from.
        const Grid2D& for_left = p.swapped ? tensors.offset_right : tensors.offset_left;
        const Grid2D& for_right = p.swapped ? tensors.offset_left : tensors.offset_right;
        p.det.offset_left = sample_offset(for_left, p.det.endpoints.left);
        p.det.offset_right = sample_offset(for_right, p.det.endpoints.right);
        dets.push_back(std::move(p.det));
    }
    return dets;
}

std::vector<double> gt_embedding(int k, int dims, double separation) {
    return std::vector<double>(static_cast<std::size_t>(dims), k * separation / dims);
}

FrameTensors render_gt_tensors(const std::vector<AnnotatedObject>& objects, const HeatmapSpec& spec, int width,
                               int height, int embedding_dims, double separation) {
    if (embedding_dims < 1) throw ValidationError("embedding dims must be positive");
    FrameTensors t;
    t.heatmap = render_gt_heatmap(objects, spec, width, height);
    t.emb_left = Grid2D(width, height, embedding_dims);
    t.emb_right = Grid2D(width, height, embedding_dims);
    t.offset_left = Grid2D(width, height, 2);
    t.offset_right = Grid2D(width, height, 2);
    Grid2D dist_left(width, height, 1, INFINITY);
    Grid2D dist_right(width, height, 1, INFINITY);
    const int radius = static_cast<int>(std::ceil(spec.sigma));
    for (std::size_t k = 0; k < objects.size(); ++k) {
        const AnnotatedObject& o = objects[k];
        const std::vector<double> e = gt_embedding(static_cast<int>(k), embedding_dims, separation);
        const Point2 motion = o.state.direction() * o.state.speed;
        paint_nearest(t.emb_left, t.offset_left, dist_left, o.endpoints.left, radius, e, motion);
        paint_nearest(t.emb_right, t.offset_right, dist_right, o.endpoints.right, radius, e, motion);
    }
    return t;
}

OracleFrame oracle_detect(const std::vector<AnnotatedObject>& objects, const OracleNoise& noise, int width, int height,
                          Rng& rng) {
    noise.validate();
    OracleFrame out;
    for (const AnnotatedObject& o : objects) {
        const bool drop = rng.bernoulli(noise.drop_prob);
        Point2 jl{}, jr{};
        if (noise.endpoint_jitter_std > 0.0) {
            jl = {rng.normal(0.0, noise.endpoint_jitter_std), rng.normal(0.0, noise.endpoint_jitter_std)};
            jr = {rng.normal(0.0, noise.endpoint_jitter_std), rng.normal(0.0, noise.endpoint_jitter_std)};
        }
        if (drop) {
            out.dropped_track_ids.push_back(o.track_id);
            continue;
        }
        Detection d;
        d.score = 1.0;
        d.endpoints = noise.endpoint_jitter_std > 0.0
                          ? EndpointPair::ordered(o.endpoints.left + jl, o.endpoints.right + jr)
                          : o.endpoints;
        if (noise.with_offsets) {
            const Point2 motion = o.state.direction() * o.state.speed;
            d.offset_left = motion;
            d.offset_right = motion;
        }
        out.detections.push_back(std::move(d));
        out.source_track_ids.push_back(o.track_id);
    }

    out.false_positives = rng.poisson(noise.false_positive_rate);
    for (int i = 0; i < out.false_positives; ++i) {
        const Point2 c{rng.uniform(0.0, width - 1), rng.uniform(0.0, height - 1)};
        const double len = rng.uniform(5.0, 40.0);
        const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Point2 half = Point2{std::cos(ang), std::sin(ang)} * (len / 2.0);
        Detection d;
        d.score = 0.5;
        d.endpoints = EndpointPair::ordered(c - half, c + half);
        if (noise.with_offsets) {
            d.offset_left = Point2{};
            d.offset_right = Point2{};
        }
        out.detections.push_back(std::move(d));
        out.source_track_ids.push_back(0);
    }
    return out;
}

Grid2D mask_gate(const Grid2D& features, const Grid2D& mask) {
    if (!features.same_extent(mask)) throw ValidationError("mask and feature map sizes differ");
    if (mask.channels() != 1) throw ValidationError("mask must have one channel");
    Grid2D out = features;
    for (int y = 0; y < features.height(); ++y)
        for (int x = 0; x < features.width(); ++x)
            for (int c = 0; c < features.channels(); ++c) out.at(x, y, c) = mask.at(x, y) * features.at(x, y, c);
    return out;
}

}  // namespace sdt
