#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sdtrack/decode.hpp"
#include "sdtrack/losses.hpp"
#include "sdtrack/metrics.hpp"
#include "sdtrack/simulator.hpp"
#include "sdtrack/tracker.hpp"

namespace sdt {

/// Settings for rendered ground-truth tensors.
struct TensorConfig {
    int embedding_dims = 4;
    double embedding_separation = 2.0;
};

/// Every tunable of the toolkit. On disk this is a JSON object whose
/// sections (sim, background, tracker, match, loss, heatmap, pairing,
/// tensors, oracle) are all optional; missing keys keep their defaults and
/// unknown keys are rejected. Angles are written in degrees.
struct AppConfig {
    SimConfig sim;
    BackgroundConfig background;
    TrackerConfig tracker;
    MatchConfig match;
    LossConfig loss;
    HeatmapSpec heatmap;
    PairingConfig pairing;
    TensorConfig tensors;
    OracleNoise oracle;

    /// Runs every section's validate().
    void validate() const;
};

/// Applies the sections found in `j` on top of `base`. Throws
/// ValidationError naming the offending key.
AppConfig config_from_json(const nlohmann::json& j, AppConfig base = {});
nlohmann::json config_to_json(const AppConfig& cfg);

/// Reads and validates a JSON config file (IoError when unreadable,
/// ValidationError when malformed).
AppConfig load_config(const std::filesystem::path& path, AppConfig base = {});

nlohmann::json sim_config_json(const SimConfig& cfg);

}  // namespace sdt
