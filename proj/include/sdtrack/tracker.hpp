#pragma once

#include <vector>

#include "sdtrack/assignment.hpp"
#include "sdtrack/domain.hpp"

namespace sdt {

struct TrackerConfig {
    double association_radius = 200.0;  // maximum S_obj for a match, pixels
    int max_missed_frames = 1;          // frames a track may coast without a detection
    int min_track_length = 1;           // shorter tracks are dropped from the output
    bool optimal = false;               // min-cost assignment instead of greedy nearest neighbour

    void validate() const;
};

/// Where each endpoint was one frame earlier: c - o, left and right
/// independently. Throws ValidationError when the detection has no offsets.
EndpointPair derive_previous_endpoints(const Detection& det);

/// S_obj[i][j]: L1 distance between the derived previous endpoints of
/// curr[i] and the endpoints of prev[j], summed over left and right.
Matrix object_similarity(const std::vector<Detection>& curr, const std::vector<EndpointPair>& prev);
Matrix object_similarity(const std::vector<Detection>& curr, const std::vector<Detection>& prev);

struct Association {
    int curr = 0;
    int prev = kUnmatched;  // kUnmatched means the detection starts a new track
    bool operator==(const Association&) const = default;
};

/// One entry per current detection, in order. Greedy: ascending S_obj with
/// ties broken by (curr, prev); each previous object is used once; pairs
/// with S_obj > radius become births.
std::vector<Association> associate(const std::vector<Detection>& curr, const std::vector<EndpointPair>& prev,
                                   const TrackerConfig& cfg);
std::vector<Association> associate(const std::vector<Detection>& curr, const std::vector<Detection>& prev,
                                   const TrackerConfig& cfg);

struct ActiveTrack {
    int id = 0;
    int last_frame = 0;
    Detection last;
};

/// Sequential tracker state for one sequence. Ids start at 1 and are never
/// reused.
struct TrackerState {
    std::vector<ActiveTrack> active;  // ordered by id
    std::vector<Track> tracks;        // every track ever started, tracks[id - 1]
    int next_id = 1;
    int last_frame = 0;  // 0 before the first step
};

/// Where an active track is expected one frame before `frame`: its last
/// endpoints moved forward by its last offsets for every skipped frame.
EndpointPair predicted_previous_endpoints(const ActiveTrack& track, int frame);

/// Associates `detections` of `frame` with the active tracks, extends
/// matched tracks, starts new ones and closes tracks unmatched for more
/// than max_missed_frames. Returns the track id of every detection.
/// Throws ValidationError unless frame > state.last_frame.
std::vector<int> step(TrackerState& state, int frame, const std::vector<Detection>& detections,
                      const TrackerConfig& cfg);

struct FrameDetections {
    int frame = 0;
    std::vector<Detection> detections;
};

/// Runs step over all frames and returns tracks (sorted by id) of at least
/// min_track_length entries.
std::vector<Track> run_sequence(const std::vector<FrameDetections>& frames, const TrackerConfig& cfg);

}  // namespace sdt
