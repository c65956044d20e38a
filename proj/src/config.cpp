#include "sdtrack/config.hpp"

#include <numbers>
#include <optional>
#include <set>

#include "sdtrack/dataset_io.hpp"
#include "sdtrack/errors.hpp"

namespace sdt {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

// Reads keys of one JSON object, remembering which were consumed so that
// leftovers can be reported as unknown.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ValidationError(name_ + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ValidationError(path(key) + ": wrong type");
        }
    }

    void range(const char* key, Range& r, double scale = 1.0) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw ValidationError(path(key) + ": expected [min, max]");
        }
        r = {v[0].get<double>() * scale, v[1].get<double>() * scale};
    }

    void int_range(const char* key, IntRange& r) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
            throw ValidationError(path(key) + ": expected [min, max] integers");
        }
        r = {v[0].get<int>(), v[1].get<int>()};
    }

    void norm(const char* key, EmbeddingNorm& n) {
        std::string s = n == EmbeddingNorm::L1 ? "l1" : "l2";
        get(key, s);
        if (s == "l1") n = EmbeddingNorm::L1;
        else if (s == "l2") n = EmbeddingNorm::L2;
        else throw ValidationError(path(key) + ": expected \"l1\" or \"l2\"");
    }

    std::optional<Section> child(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        return Section(j_.at(key), path(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ValidationError(path(it.key()) + ": unknown key");
        }
    }

private:
    std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

void read_sim(Section& s, SimConfig& c) {
    s.int_range("frames", c.frames);
    s.int_range("debris_count", c.debris_count);
    s.range("length", c.length);
    s.range("width", c.width);
    s.range("speed", c.speed);
    s.range("angle_deg", c.angle, kDeg);
    s.get("brightness_mean", c.brightness_mean);
    s.get("brightness_jitter", c.brightness_jitter);
    if (auto p = s.child("psf")) {
        p->get("scale", c.psf.scale);
        p->get("sigma", c.psf.sigma);
        p->get("enabled", c.psf.enabled);
        p->finish();
    }
    s.get("fracture_prob", c.fracture_prob);
    s.range("fracture_gap", c.fracture_gap);
    s.get("image_width", c.image_width);
    s.get("image_height", c.image_height);
    s.get("keep_in_view", c.keep_in_view);
    s.get("realism_margin", c.realism_margin);
    s.get("seed", c.rng_seed);
    s.finish();
}

void read_background(Section& s, BackgroundConfig& c) {
    s.get("sky_level", c.sky_level);
    s.get("noise_std", c.noise_std);
    s.get("stars_per_10k_pixels", c.stars_per_10k_pixels);
    s.range("star_flux", c.star_flux);
    s.get("star_sigma", c.star_sigma);
    s.finish();
    if (!(c.noise_std >= 0.0)) throw ValidationError("background.noise_std: must be non-negative");
    if (!(c.stars_per_10k_pixels >= 0.0)) throw ValidationError("background.stars_per_10k_pixels: must be non-negative");
    if (!(c.star_sigma > 0.0)) throw ValidationError("background.star_sigma: must be positive");
    if (c.star_flux.min > c.star_flux.max) throw ValidationError("background.star_flux: min exceeds max");
}

void read_match(Section& s, MatchConfig& c) {
    std::string kind = c.similarity == SimilarityKind::BBoxIoU ? "bbox_iou" : "endpoint_l1";
    s.get("similarity", kind);
    if (kind == "bbox_iou") c.similarity = SimilarityKind::BBoxIoU;
    else if (kind == "endpoint_l1") c.similarity = SimilarityKind::EndpointL1;
    else throw ValidationError("match.similarity: expected \"endpoint_l1\" or \"bbox_iou\"");
    s.get("endpoint_l1_threshold", c.endpoint_l1_threshold);
    s.get("iou_threshold", c.iou_threshold);
    s.get("hota_alphas", c.hota_alphas);
    s.finish();
}

void read_loss(Section& s, LossConfig& c) {
    s.get("seg_weight", c.seg_weight);
    s.get("hm_weight", c.hm_weight);
    s.get("emb_weight", c.emb_weight);
    s.get("off_weight", c.off_weight);
    s.get("focal_alpha", c.focal_alpha);
    s.get("focal_beta", c.focal_beta);
    s.get("push_margin", c.push_margin);
    s.norm("push_norm", c.push_norm);
    s.norm("offset_norm", c.offset_norm);
    s.get("probability_eps", c.probability_eps);
    s.finish();
}

}  // namespace

void AppConfig::validate() const {
    sim.validate();
    tracker.validate();
    match.validate();
    loss.validate();
    heatmap.validate();
    oracle.validate();
    if (!(pairing.gate > 0.0)) throw ValidationError("pairing.gate: must be positive");
    if (tensors.embedding_dims < 1) throw ValidationError("tensors.embedding_dims: must be at least 1");
    if (!(tensors.embedding_separation > 0.0)) throw ValidationError("tensors.embedding_separation: must be positive");
}

AppConfig config_from_json(const json& j, AppConfig c) {
    Section root(j, "");
    if (auto s = root.child("sim")) read_sim(*s, c.sim);
    if (auto s = root.child("background")) read_background(*s, c.background);
    if (auto s = root.child("tracker")) {
        s->get("association_radius", c.tracker.association_radius);
        s->get("max_missed_frames", c.tracker.max_missed_frames);
        s->get("min_track_length", c.tracker.min_track_length);
        s->get("optimal", c.tracker.optimal);
        s->finish();
    }
    if (auto s = root.child("match")) read_match(*s, c.match);
    if (auto s = root.child("loss")) read_loss(*s, c.loss);
    if (auto s = root.child("heatmap")) {
        s->get("sigma", c.heatmap.sigma);
        s->get("peak_threshold", c.heatmap.peak_threshold);
        s->get("nms_window", c.heatmap.nms_window);
        s->get("max_peaks", c.heatmap.max_peaks);
        s->finish();
    }
    if (auto s = root.child("pairing")) {
        s->get("gate", c.pairing.gate);
        s->norm("norm", c.pairing.norm);
        s->get("optimal", c.pairing.optimal);
        s->finish();
    }
    if (auto s = root.child("tensors")) {
        s->get("embedding_dims", c.tensors.embedding_dims);
        s->get("embedding_separation", c.tensors.embedding_separation);
        s->finish();
    }
    if (auto s = root.child("oracle")) {
        s->get("endpoint_jitter_std", c.oracle.endpoint_jitter_std);
        s->get("drop_prob", c.oracle.drop_prob);
        s->get("false_positive_rate", c.oracle.false_positive_rate);
        s->get("with_offsets", c.oracle.with_offsets);
        s->finish();
    }
    root.finish();
    c.validate();
    return c;
}

json sim_config_json(const SimConfig& c) {
    auto r = [](const Range& x, double scale = 1.0) { return json::array({x.min * scale, x.max * scale}); };
    return {{"frames", {c.frames.min, c.frames.max}},
            {"debris_count", {c.debris_count.min, c.debris_count.max}},
            {"length", r(c.length)},
            {"width", r(c.width)},
            {"speed", r(c.speed)},
            {"angle_deg", r(c.angle, 1.0 / kDeg)},
            {"brightness_mean", c.brightness_mean},
            {"brightness_jitter", c.brightness_jitter},
            {"psf", {{"scale", c.psf.scale}, {"sigma", c.psf.sigma}, {"enabled", c.psf.enabled}}},
            {"fracture_prob", c.fracture_prob},
            {"fracture_gap", r(c.fracture_gap)},
            {"image_width", c.image_width},
            {"image_height", c.image_height},
            {"keep_in_view", c.keep_in_view},
            {"realism_margin", c.realism_margin},
            {"seed", c.rng_seed}};
}

json config_to_json(const AppConfig& c) {
    auto norm = [](EmbeddingNorm n) { return n == EmbeddingNorm::L1 ? "l1" : "l2"; };
    json j;
    j["sim"] = sim_config_json(c.sim);
    j["background"] = {{"sky_level", c.background.sky_level},
                       {"noise_std", c.background.noise_std},
                       {"stars_per_10k_pixels", c.background.stars_per_10k_pixels},
                       {"star_flux", {c.background.star_flux.min, c.background.star_flux.max}},
                       {"star_sigma", c.background.star_sigma}};
    j["tracker"] = {{"association_radius", c.tracker.association_radius},
                    {"max_missed_frames", c.tracker.max_missed_frames},
                    {"min_track_length", c.tracker.min_track_length},
                    {"optimal", c.tracker.optimal}};
    j["match"] = {{"similarity", c.match.similarity == SimilarityKind::BBoxIoU ? "bbox_iou" : "endpoint_l1"},
                  {"endpoint_l1_threshold", c.match.endpoint_l1_threshold},
                  {"iou_threshold", c.match.iou_threshold},
                  {"hota_alphas", c.match.hota_alphas}};
    j["loss"] = {{"seg_weight", c.loss.seg_weight},     {"hm_weight", c.loss.hm_weight},
                 {"emb_weight", c.loss.emb_weight},     {"off_weight", c.loss.off_weight},
                 {"focal_alpha", c.loss.focal_alpha},   {"focal_beta", c.loss.focal_beta},
                 {"push_margin", c.loss.push_margin},   {"push_norm", norm(c.loss.push_norm)},
                 {"offset_norm", norm(c.loss.offset_norm)}, {"probability_eps", c.loss.probability_eps}};
    j["heatmap"] = {{"sigma", c.heatmap.sigma},
                    {"peak_threshold", c.heatmap.peak_threshold},
                    {"nms_window", c.heatmap.nms_window},
                    {"max_peaks", c.heatmap.max_peaks}};
    j["pairing"] = {{"gate", c.pairing.gate}, {"norm", norm(c.pairing.norm)}, {"optimal", c.pairing.optimal}};
    j["tensors"] = {{"embedding_dims", c.tensors.embedding_dims},
                    {"embedding_separation", c.tensors.embedding_separation}};
    j["oracle"] = {{"endpoint_jitter_std", c.oracle.endpoint_jitter_std},
                   {"drop_prob", c.oracle.drop_prob},
                   {"false_positive_rate", c.oracle.false_positive_rate},
                   {"with_offsets", c.oracle.with_offsets}};
    return j;
}

AppConfig load_config(const std::filesystem::path& path, AppConfig base) {
    const std::string text = read_text_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
    return config_from_json(j, std::move(base));
}

}  // namespace sdt
