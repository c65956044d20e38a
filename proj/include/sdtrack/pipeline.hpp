#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdtrack/config.hpp"
#include "sdtrack/metrics.hpp"
#include "sdtrack/simulator.hpp"

namespace sdt {

/// One split of a generated dataset.
struct SplitPlan {
    std::string name;
    SimConfig sim;
    int count = 0;
};

/// `base` with the object-count range of a named preset (debris, dense or
/// mixed). Throws ValidationError for other names.
SimConfig apply_preset(const std::string& preset, const SimConfig& base);

/// train (mixed, 16,040 sequences), test_debris (debris, 1,000) and
/// test_dense (dense, 1,000); `base` supplies every other setting.
std::vector<SplitPlan> default_recipe(const SimConfig& base);

/// "seq000042" for index 42.
std::string sequence_id(int index);

struct GenerateOptions {
    std::uint64_t seed = 0;
    int threads = 1;
    bool force = false;  // replace existing split directories
    BackgroundConfig background;
    /// Raw survey images to crop from. When empty a synthetic sky is drawn
    /// per sequence.
    std::vector<Grid2D> backgrounds;
};

/// Loads every PNG under `dir` (sorted by name) as a raw background.
std::vector<Grid2D> load_backgrounds(const std::filesystem::path& dir);

/// The index-th sequence of a split. Depends only on (seed, split name,
/// index), never on generation order.
SimulatedSequence generate_sequence(const SplitPlan& split, int index, const GenerateOptions& options);

/// Writes <root>/<split>/<seq_id>/... for every split. Each split is built in
/// a temporary sibling directory and renamed into place when complete.
/// Throws IoError when a split exists and options.force is false.
void generate_dataset(const std::filesystem::path& root, const std::vector<SplitPlan>& splits,
                      const GenerateOptions& options);

/// Per-frame tensor file of a sequence: <dir>/<frame>.<name>.sdtm.
std::filesystem::path tensor_path(const std::filesystem::path& seq_dir, int frame, const std::string& name);

/// Writes ground-truth tensors for every sequence of a split to
/// <out>/<seq_id>/%06d.{heatmap,emb_left,emb_right,offset_left,offset_right}.sdtm.
void render_split_tensors(const std::filesystem::path& split_dir, const std::filesystem::path& out,
                          const AppConfig& cfg, int threads = 1);

enum class DetectionSource { Oracle, Tensors };

struct TrackOptions {
    DetectionSource source = DetectionSource::Oracle;
    std::filesystem::path tensors_dir;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// One ground-truth object left out by the oracle.
struct DropRecord {
    std::string sequence;
    int frame = 0;
    int track_id = 0;
};

struct SequenceTracking {
    std::vector<Track> tracks;
    std::vector<DropRecord> drops;
    long gt_objects = 0;
    long false_positives = 0;
};

/// Oracle detections for every frame of `ann` fed to the tracker. Oracle
/// noise uses the stream (seed, sequence index).
SequenceTracking track_with_oracle(const SequenceAnnotation& ann, const AppConfig& cfg, Rng& rng);

/// Decodes the tensor files of one sequence and tracks them. Throws IoError
/// naming the first missing frame file.
SequenceTracking track_with_tensors(const std::filesystem::path& seq_tensor_dir, int frames, const AppConfig& cfg);

struct TrackSummary {
    int sequences = 0;
    long gt_objects = 0;
    long dropped = 0;
    long false_positives = 0;
};

/// Tracks every sequence of a split and writes <out>/<seq_id>.csv plus
/// <out>/dropouts.csv (sequence,frame,track_id).
TrackSummary track_split(const std::filesystem::path& split_dir, const std::filesystem::path& out,
                         const AppConfig& cfg, const TrackOptions& options);

/// Reads GT sequences and prediction CSVs (<pred>/<seq_id>.csv). Throws
/// ValidationError listing sequence ids present on only one side.
EvalReport evaluate_dirs(const std::filesystem::path& gt_split_dir, const std::filesystem::path& pred_dir,
                         const MatchConfig& cfg, int threads = 1);

/// Writes metrics.json and metrics.txt into `dir`.
void write_report(const std::filesystem::path& dir, const EvalReport& report, const MatchConfig& cfg);

/// Bar chart of the aggregate metrics of a metrics.json report.
std::string metrics_bar_svg(const std::string& report_json);

/// Histogram of debris and background intensities (0..255) as SVG.
std::string intensity_histogram_svg(const std::vector<double>& debris_counts,
                                    const std::vector<double>& background_counts);

struct PlotSummary {
    int sequences = 0;
    int images = 0;
};

/// For each sequence of a split: overlay PNGs (GT boxes green, predicted
/// boxes red when `pred_dir` is non-empty) under <out>/<seq_id>/, plus
/// <out>/intensity_histogram.svg over all masked pixels.
PlotSummary plot_dataset(const std::filesystem::path& split_dir, const std::filesystem::path& pred_dir,
                         const std::filesystem::path& out);

}  // namespace sdt
