#include "sdtrack/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sdtrack/dataset_io.hpp"
#include "sdtrack/decode.hpp"
#include "sdtrack/errors.hpp"
#include "sdtrack/image_io.hpp"
#include "sdtrack/preprocess.hpp"
#include "sdtrack/tracker.hpp"

namespace fs = std::filesystem;

namespace sdt {

namespace {

const char* const kTensorNames[] = {"heatmap", "emb_left", "emb_right", "offset_left", "offset_right"};

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception
// stops the remaining work and is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    const std::size_t count = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < count; ++i) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// FNV-1a, so split seeds do not depend on the standard library's hash.
std::uint64_t name_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Output directory written under a temporary name and renamed on commit.
// Left-over temporaries are removed on destruction.
class StagedDir {
public:
    StagedDir(fs::path target, bool replace) : target_(std::move(target)) {
        std::error_code ec;
        if (fs::exists(target_, ec) && !replace) {
            throw IoError(target_.string() + " already exists (use --force to replace it)");
        }
        staging_ = target_.parent_path() / ("." + target_.filename().string() + ".partial");
        fs::remove_all(staging_, ec);
        fs::create_directories(staging_, ec);
        if (ec) throw IoError("cannot create " + staging_.string() + ": " + ec.message());
    }
    StagedDir(const StagedDir&) = delete;
    StagedDir& operator=(const StagedDir&) = delete;
    ~StagedDir() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(staging_, ec);
        }
    }

    const fs::path& path() const { return staging_; }

    void commit() {
        std::error_code ec;
        fs::remove_all(target_, ec);
        fs::rename(staging_, target_, ec);
        if (ec) throw IoError("cannot move " + staging_.string() + " to " + target_.string() + ": " + ec.message());
        committed_ = true;
    }

private:
    fs::path target_;
    fs::path staging_;
    bool committed_ = false;
};

std::vector<std::string> list_files_with_extension(const fs::path& dir, const std::string& ext) {
    std::vector<std::string> names;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (e.is_regular_file() && e.path().extension() == ext) names.push_back(e.path().filename().string());
    }
    if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

SimConfig apply_preset(const std::string& preset, const SimConfig& base) {
    SimConfig out = base;
    if (preset == "debris") out.debris_count = debris_preset().debris_count;
    else if (preset == "dense") out.debris_count = dense_preset().debris_count;
    else if (preset == "mixed") out.debris_count = mixed_preset().debris_count;
    else throw ValidationError("unknown preset '" + preset + "' (expected debris, dense or mixed)");
    return out;
}

std::vector<SplitPlan> default_recipe(const SimConfig& base) {
    return {{"train", apply_preset("mixed", base), 16040},
            {"test_debris", apply_preset("debris", base), 1000},
            {"test_dense", apply_preset("dense", base), 1000}};
}

std::string sequence_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "seq%06d", index);
    return buf;
}

std::vector<Grid2D> load_backgrounds(const fs::path& dir) {
    std::vector<Grid2D> out;
    for (const std::string& name : list_files_with_extension(dir, ".png")) out.push_back(read_png_gray(dir / name));
    if (out.empty()) throw IoError("no PNG backgrounds in " + dir.string());
    return out;
}

SimulatedSequence generate_sequence(const SplitPlan& split, int index, const GenerateOptions& options) {
    Rng rng = Rng::stream(mix64(options.seed ^ name_hash(split.name)), static_cast<std::uint64_t>(index));
    Grid2D raw;
    if (options.backgrounds.empty()) {
        raw = synth_background(options.background, split.sim.image_width, split.sim.image_height, rng);
    } else {
        const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(options.backgrounds.size()) - 1);
        raw = options.backgrounds[static_cast<std::size_t>(pick)];
    }
    return simulate_sequence(zscale(raw), split.sim, rng);
}

void generate_dataset(const fs::path& root, const std::vector<SplitPlan>& splits, const GenerateOptions& options) {
    for (const SplitPlan& split : splits) {
        split.sim.validate();
        if (split.count < 0) throw ValidationError(split.name + ": sequence count must be non-negative");
        if (split.name.empty() || split.name.find('/') != std::string::npos || split.name[0] == '.') {
            throw ValidationError("invalid split name '" + split.name + "'");
        }
    }
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());

    for (const SplitPlan& split : splits) {
        StagedDir staged(root / split.name, options.force);
        const nlohmann::json sim_json = sim_config_json(split.sim);
        parallel_for(static_cast<std::size_t>(split.count), options.threads, [&](std::size_t i) {
            const int index = static_cast<int>(i);
            const SimulatedSequence seq = generate_sequence(split, index, options);
            nlohmann::json meta = {{"sequence", sequence_id(index)},
                                   {"split", split.name},
                                   {"index", index},
                                   {"seed", options.seed},
                                   {"frames", seq.frames.size()},
                                   {"width", split.sim.image_width},
                                   {"height", split.sim.image_height},
                                   {"background", options.backgrounds.empty() ? "synthetic" : "images"},
                                   {"sim", sim_json}};
            write_sequence(staged.path() / sequence_id(index), seq.frames, seq.annotation, meta.dump(2) + "\n");
        });
        const nlohmann::json info = {{"split", split.name}, {"sequences", split.count}, {"seed", options.seed},
                                     {"sim", sim_json}};
        write_text_file(staged.path() / "split.json", info.dump(2) + "\n");
        staged.commit();
    }
}

fs::path tensor_path(const fs::path& seq_dir, int frame, const std::string& name) {
    const std::string stem = frame_file_name(frame);
    return seq_dir / (stem.substr(0, stem.size() - 4) + "." + name + ".sdtm");
}

void render_split_tensors(const fs::path& split_dir, const fs::path& out, const AppConfig& cfg, int threads) {
    cfg.validate();
    const std::vector<std::string> seqs = list_sequences(split_dir);
    StagedDir staged(out, true);
    parallel_for(seqs.size(), threads, [&](std::size_t i) {
        const SequenceAnnotation ann = read_annotation(split_dir / seqs[i]);
        const fs::path dir = staged.path() / seqs[i];
        fs::create_directories(dir);
        for (int t = 1; t <= ann.frame_count(); ++t) {
            const FrameTensors ft = render_gt_tensors(ann.frames[static_cast<std::size_t>(t - 1)], cfg.heatmap, ann.width,
                                                      ann.height, cfg.tensors.embedding_dims,
                                                      cfg.tensors.embedding_separation);
            const Grid2D* grids[] = {&ft.heatmap, &ft.emb_left, &ft.emb_right, &ft.offset_left, &ft.offset_right};
            for (int k = 0; k < 5; ++k) write_tensor_map(*grids[k], tensor_path(dir, t, kTensorNames[k]));
        }
    });
    staged.commit();
}

SequenceTracking track_with_oracle(const SequenceAnnotation& ann, const AppConfig& cfg, Rng& rng) {
    SequenceTracking out;
    std::vector<FrameDetections> frames;
    for (int t = 1; t <= ann.frame_count(); ++t) {
        const auto& objects = ann.frames[static_cast<std::size_t>(t - 1)];
        OracleFrame of = oracle_detect(objects, cfg.oracle, ann.width, ann.height, rng);
        out.gt_objects += static_cast<long>(objects.size());
        out.false_positives += of.false_positives;
        for (int id : of.dropped_track_ids) out.drops.push_back({"", t, id});
        frames.push_back({t, std::move(of.detections)});
    }
    out.tracks = run_sequence(frames, cfg.tracker);
    return out;
}

SequenceTracking track_with_tensors(const fs::path& seq_tensor_dir, int frames, const AppConfig& cfg) {
    SequenceTracking out;
    std::vector<FrameDetections> dets;
    for (int t = 1; t <= frames; ++t) {
        Grid2D grids[5];
        for (int k = 0; k < 5; ++k) {
            const fs::path p = tensor_path(seq_tensor_dir, t, kTensorNames[k]);
            if (!fs::exists(p)) {
                throw IoError("frame " + std::to_string(t) + ": missing tensor file " + p.string());
            }
            grids[k] = read_tensor_map(p);
        }
        const FrameTensors ft{grids[0], grids[1], grids[2], grids[3], grids[4]};
        dets.push_back({t, decode_frame(ft, cfg.heatmap, cfg.pairing)});
    }
    out.tracks = run_sequence(dets, cfg.tracker);
    return out;
}

TrackSummary track_split(const fs::path& split_dir, const fs::path& out, const AppConfig& cfg,
                         const TrackOptions& options) {
    cfg.validate();
    const std::vector<std::string> seqs = list_sequences(split_dir);
    std::vector<SequenceTracking> results(seqs.size());
    StagedDir staged(out, true);
    parallel_for(seqs.size(), options.threads, [&](std::size_t i) {
        const fs::path dir = split_dir / seqs[i];
        SequenceTracking r;
        if (options.source == DetectionSource::Oracle) {
            const SequenceAnnotation ann = read_annotation(dir);
            Rng rng = Rng::stream(options.seed, i);
            r = track_with_oracle(ann, cfg, rng);
        } else {
            r = track_with_tensors(options.tensors_dir / seqs[i], count_frames(dir), cfg);
        }
        for (DropRecord& d : r.drops) d.sequence = seqs[i];
        write_tracks_csv(staged.path() / (seqs[i] + ".csv"), r.tracks);
        results[i] = std::move(r);
    });

    TrackSummary summary;
    std::ostringstream drops;
    drops << "sequence,frame,track_id\n";
    for (const SequenceTracking& r : results) {
        ++summary.sequences;
        summary.gt_objects += r.gt_objects;
        summary.false_positives += r.false_positives;
        summary.dropped += static_cast<long>(r.drops.size());
        for (const DropRecord& d : r.drops) drops << d.sequence << ',' << d.frame << ',' << d.track_id << '\n';
    }
    if (options.source == DetectionSource::Oracle) write_text_file(staged.path() / "dropouts.csv", drops.str());
    staged.commit();
    return summary;
}

EvalReport evaluate_dirs(const fs::path& gt_split_dir, const fs::path& pred_dir, const MatchConfig& cfg,
                         int threads) {
    cfg.validate();
    if (!fs::is_directory(gt_split_dir)) throw IoError("not a directory: " + gt_split_dir.string());
    if (!fs::is_directory(pred_dir)) throw IoError("not a directory: " + pred_dir.string());
    const std::vector<std::string> gt = list_sequences(gt_split_dir);
    std::vector<std::string> pred;
    for (const std::string& name : list_files_with_extension(pred_dir, ".csv")) {
        if (name != "dropouts.csv") pred.push_back(name.substr(0, name.size() - 4));
    }
    std::vector<std::string> only_gt, only_pred;
    std::set_difference(gt.begin(), gt.end(), pred.begin(), pred.end(), std::back_inserter(only_gt));
    std::set_difference(pred.begin(), pred.end(), gt.begin(), gt.end(), std::back_inserter(only_pred));
    if (!only_gt.empty() || !only_pred.empty()) {
        std::string msg = "sequence ids differ between ground truth and predictions;";
        auto list = [&](const char* what, const std::vector<std::string>& ids) {
            if (ids.empty()) return;
            msg += std::string(" ") + what + ":";
            for (const std::string& id : ids) msg += " " + id;
            msg += ";";
        };
        list("missing predictions", only_gt);
        list("no ground truth", only_pred);
        msg.pop_back();
        throw ValidationError(msg);
    }

    std::vector<std::pair<std::string, EvalSequence>> seqs(gt.size());
    parallel_for(gt.size(), threads, [&](std::size_t i) {
        const SequenceAnnotation ann = read_annotation(gt_split_dir / gt[i]);
        const std::vector<Track> tracks = read_tracks_csv(pred_dir / (gt[i] + ".csv"));
        seqs[i] = {gt[i], make_eval_sequence(ann, tracks)};
    });
    return evaluate_sequences(std::move(seqs), cfg, threads);
}

void write_report(const fs::path& dir, const EvalReport& report, const MatchConfig& cfg) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_text_file(dir / "metrics.json", report_json(report, cfg));
    write_text_file(dir / "metrics.txt", report_table(report));
}

std::string metrics_bar_svg(const std::string& report_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(report_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("report is not valid JSON: ") + e.what());
    }
    if (!j.contains("aggregate") || !j["aggregate"].is_object()) throw ValidationError("report has no aggregate section");
    const char* keys[] = {"IDF1", "MOTA", "HOTA", "DetA", "AssA"};
    const int bar = 60, gap = 30, top = 40, height = 300, left = 50;
    const int width = left + 5 * (bar + gap) + gap;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height + 80
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">Aggregate metrics (%)</text>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top + height << "\" x2=\"" << width - gap / 2 << "\" y2=\""
        << top + height << "\" stroke=\"black\"/>\n";
    for (int k = 0; k < 5; ++k) {
        const nlohmann::json& v = j["aggregate"].value(keys[k], nlohmann::json());
        const bool known = v.is_number();
        const double value = known ? std::clamp(v.get<double>(), 0.0, 1.0) : 0.0;
        const int x = left + gap + k * (bar + gap);
        const double h = value * height;
        char label[32];
        if (known) std::snprintf(label, sizeof label, "%.1f", 100.0 * v.get<double>());
        else std::snprintf(label, sizeof label, "n/a");
        svg << "<rect x=\"" << x << "\" y=\"" << top + height - h << "\" width=\"" << bar << "\" height=\"" << h
            << "\" fill=\"#4a78b5\"/>\n";
        svg << "<text x=\"" << x + bar / 2 << "\" y=\"" << top + height - h - 5 << "\" text-anchor=\"middle\">"
            << label << "</text>\n";
        svg << "<text x=\"" << x + bar / 2 << "\" y=\"" << top + height + 18 << "\" text-anchor=\"middle\">" << keys[k]
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string intensity_histogram_svg(const std::vector<double>& debris_counts,
                                    const std::vector<double>& background_counts) {
    const int plot_w = 512, plot_h = 240, left = 50, top = 30;
    auto polyline = [&](const std::vector<double>& counts, const char* colour) {
        double total = 0.0, peak = 0.0;
        for (double c : counts) total += c;
        if (total == 0.0) return std::string();
        for (double c : counts) peak = std::max(peak, c / total);
        std::ostringstream s;
        s << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const double x = left + plot_w * static_cast<double>(i) / static_cast<double>(counts.size() - 1);
            const double y = top + plot_h - plot_h * (counts[i] / total) / peak;
            s << x << ',' << y << ' ';
        }
        s << "\"/>\n";
        return s.str();
    };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + plot_w + 20 << "\" height=\""
        << top + plot_h + 50 << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << left << "\" y=\"18\">Pixel intensity (normalised per class): "
        << "<tspan fill=\"#c0392b\">debris</tspan>, <tspan fill=\"#555555\">background</tspan></text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    svg << polyline(background_counts, "#555555") << polyline(debris_counts, "#c0392b");
    for (int v = 0; v <= 255; v += 51) {
        const double x = left + plot_w * v / 255.0;
        svg << "<text x=\"" << x << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">" << v << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

namespace {

void draw_box(RgbImage& img, const BBox& b, std::uint8_t r, std::uint8_t g, std::uint8_t bl) {
    const int x0 = static_cast<int>(std::floor(b.x_min)), x1 = static_cast<int>(std::ceil(b.x_max));
    const int y0 = static_cast<int>(std::floor(b.y_min)), y1 = static_cast<int>(std::ceil(b.y_max));
    auto put = [&](int x, int y) {
        if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, r, g, bl);
    };
    for (int x = x0; x <= x1; ++x) {
        put(x, y0);
        put(x, y1);
    }
    for (int y = y0; y <= y1; ++y) {
        put(x0, y);
        put(x1, y);
    }
}

}  // namespace

PlotSummary plot_dataset(const fs::path& split_dir, const fs::path& pred_dir, const fs::path& out) {
    PlotSummary summary;
    const std::vector<std::string> seqs = list_sequences(split_dir);
    if (seqs.empty()) return summary;
    std::vector<double> debris(256, 0.0), background(256, 0.0);
    for (const std::string& id : seqs) {
        const LoadedSequence seq = read_sequence(split_dir / id);
        std::vector<Track> tracks;
        if (!pred_dir.empty()) tracks = read_tracks_csv(pred_dir / (id + ".csv"));
        const fs::path dir = out / id;
        fs::create_directories(dir);
        for (std::size_t t = 0; t < seq.frames.size(); ++t) {
            const Grid2D& frame = seq.frames[t];
            const Grid2D* mask = t < seq.annotation.masks.size() ? &seq.annotation.masks[t] : nullptr;
            for (int y = 0; y < frame.height(); ++y)
                for (int x = 0; x < frame.width(); ++x) {
                    const auto bin = static_cast<std::size_t>(std::clamp(frame.at(x, y), 0.0, 255.0));
                    ((mask && mask->at(x, y) > 0.0) ? debris : background)[bin] += 1.0;
                }
            RgbImage img = RgbImage::from_gray(frame);
            for (const AnnotatedObject& o : seq.annotation.frames[t]) draw_box(img, o.bbox, 0, 255, 0);
            for (const Track& tr : tracks)
                for (const TrackEntry& e : tr.entries)
                    if (e.frame == static_cast<int>(t) + 1) draw_box(img, bbox_from_endpoints(e.detection.endpoints), 255, 0, 0);
            write_png_rgb(dir / frame_file_name(static_cast<int>(t) + 1), img);
            ++summary.images;
        }
        ++summary.sequences;
    }
    write_text_file(out / "intensity_histogram.svg", intensity_histogram_svg(debris, background));
    return summary;
}

}  // namespace sdt
