#include "sdtrack/tracker.hpp"

#include <algorithm>
#include <string>

#include "sdtrack/errors.hpp"

namespace sdt {

void TrackerConfig::validate() const {
    if (!(association_radius > 0.0)) throw ValidationError("tracker.association_radius: must be positive");
    if (max_missed_frames < 0) throw ValidationError("tracker.max_missed_frames: must be non-negative");
    if (min_track_length < 1) throw ValidationError("tracker.min_track_length: must be at least 1");
}

EndpointPair derive_previous_endpoints(const Detection& det) {
    if (!det.has_offsets()) throw ValidationError("detection has no tracking offsets");
    return {det.endpoints.left - *det.offset_left, det.endpoints.right - *det.offset_right};
}

Matrix object_similarity(const std::vector<Detection>& curr, const std::vector<EndpointPair>& prev) {
    Matrix s(static_cast<int>(curr.size()), static_cast<int>(prev.size()));
    if (prev.empty()) return s;
    for (std::size_t i = 0; i < curr.size(); ++i) {
        const EndpointPair derived = derive_previous_endpoints(curr[i]);
        for (std::size_t j = 0; j < prev.size(); ++j) {
            s(static_cast<int>(i), static_cast<int>(j)) =
                l1_distance(derived.left, prev[j].left) + l1_distance(derived.right, prev[j].right);
        }
    }
    return s;
}

Matrix object_similarity(const std::vector<Detection>& curr, const std::vector<Detection>& prev) {
    std::vector<EndpointPair> ends;
    ends.reserve(prev.size());
    for (const Detection& d : prev) ends.push_back(d.endpoints);
    return object_similarity(curr, ends);
}

std::vector<Association> associate(const std::vector<Detection>& curr, const std::vector<EndpointPair>& prev,
                                   const TrackerConfig& cfg) {
    cfg.validate();
    const Matrix s = object_similarity(curr, prev);
    const std::vector<int> match = cfg.optimal ? min_cost_gated_matching(s, cfg.association_radius)
                                               : greedy_min_cost(s, cfg.association_radius);
    std::vector<Association> out;
    out.reserve(curr.size());
    for (std::size_t i = 0; i < curr.size(); ++i) out.push_back({static_cast<int>(i), match[i]});
    return out;
}

std::vector<Association> associate(const std::vector<Detection>& curr, const std::vector<Detection>& prev,
                                   const TrackerConfig& cfg) {
    std::vector<EndpointPair> ends;
    ends.reserve(prev.size());
    for (const Detection& d : prev) ends.push_back(d.endpoints);
    return associate(curr, ends, cfg);
}

EndpointPair predicted_previous_endpoints(const ActiveTrack& track, int frame) {
    const int skipped = frame - 1 - track.last_frame;
    EndpointPair e = track.last.endpoints;
    if (skipped > 0 && track.last.has_offsets()) {
        e.left = e.left + *track.last.offset_left * skipped;
        e.right = e.right + *track.last.offset_right * skipped;
    }
    return e;
}

std::vector<int> step(TrackerState& state, int frame, const std::vector<Detection>& detections,
                      const TrackerConfig& cfg) {
    cfg.validate();
    if (frame <= state.last_frame) {
        throw ValidationError("frame index " + std::to_string(frame) + " is not after previous frame " +
                              std::to_string(state.last_frame));
    }

    std::vector<std::size_t> eligible;
    std::vector<EndpointPair> prev;
    for (std::size_t k = 0; k < state.active.size(); ++k) {
        if (frame - state.active[k].last_frame - 1 > cfg.max_missed_frames) continue;
        eligible.push_back(k);
        prev.push_back(predicted_previous_endpoints(state.active[k], frame));
    }

    const std::vector<Association> assoc = associate(detections, prev, cfg);
    std::vector<int> ids(detections.size(), 0);
    std::vector<ActiveTrack> born;
    for (const Association& a : assoc) {
        const Detection& det = detections[static_cast<std::size_t>(a.curr)];
        if (a.prev != kUnmatched) {
            ActiveTrack& t = state.active[eligible[static_cast<std::size_t>(a.prev)]];
            t.last_frame = frame;
            t.last = det;
            ids[static_cast<std::size_t>(a.curr)] = t.id;
        } else {
            const int id = state.next_id++;
            born.push_back({id, frame, det});
            state.tracks.push_back({id, {}});
            ids[static_cast<std::size_t>(a.curr)] = id;
        }
        state.tracks[static_cast<std::size_t>(ids[static_cast<std::size_t>(a.curr)] - 1)].entries.push_back({frame, det});
    }

    state.active.insert(state.active.end(), born.begin(), born.end());
    std::erase_if(state.active,
                  [&](const ActiveTrack& t) { return frame - t.last_frame > cfg.max_missed_frames; });
    state.last_frame = frame;
    return ids;
}

std::vector<Track> run_sequence(const std::vector<FrameDetections>& frames, const TrackerConfig& cfg) {
    TrackerState state;
    for (const FrameDetections& f : frames) step(state, f.frame, f.detections, cfg);
    std::vector<Track> out;
    for (Track& t : state.tracks) {
        if (static_cast<int>(t.entries.size()) >= cfg.min_track_length) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace sdt
