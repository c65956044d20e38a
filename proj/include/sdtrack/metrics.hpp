#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sdtrack/assignment.hpp"
#include "sdtrack/domain.hpp"

namespace sdt {

enum class SimilarityKind { EndpointL1, BBoxIoU };

/// Similarity between a ground-truth and a predicted object lies in [0, 1].
/// EndpointL1: max(0, 1 - d / (2 * endpoint_l1_threshold)) with d the L1
/// distance summed over both endpoints, so d <= threshold is similarity
/// >= 0.5. BBoxIoU: plain IoU. CLEAR-MOT and IDF1 count a match when the
/// similarity reaches match_cutoff(); HOTA sweeps hota_alphas instead.
struct MatchConfig {
    SimilarityKind similarity = SimilarityKind::EndpointL1;
    double endpoint_l1_threshold = 10.0;
    double iou_threshold = 0.5;
    std::vector<double> hota_alphas = default_alphas();

    static std::vector<double> default_alphas();  // 0.05, 0.10, ..., 0.95
    double match_cutoff() const;
    void validate() const;
};

struct EvalObject {
    int id = 0;
    EndpointPair endpoints;
    BBox box;
};

using FrameObjects = std::vector<EvalObject>;

/// Ground truth and predictions of one sequence, frame by frame (both
/// vectors have the same length).
struct EvalSequence {
    std::vector<FrameObjects> gt;
    std::vector<FrameObjects> pred;
};

/// Builds an EvalSequence; predicted boxes are endpoint hulls. The frame
/// count is the larger of the annotation length and the last predicted
/// frame.
EvalSequence make_eval_sequence(const SequenceAnnotation& gt, const std::vector<Track>& pred);

double similarity(const EvalObject& gt, const EvalObject& pred, const MatchConfig& cfg);
Matrix similarity_matrix(const FrameObjects& gt, const FrameObjects& pred, const MatchConfig& cfg);

struct FrameMatch {
    std::vector<std::pair<int, int>> pairs;  // (gt index, pred index)
    int false_positives = 0;
    int false_negatives = 0;
};

/// Optimal one-to-one assignment maximising total similarity over pairs at
/// or above the match cutoff.
FrameMatch frame_match(const FrameObjects& gt, const FrameObjects& pred, const MatchConfig& cfg);

struct ClearCounts {
    long gt = 0;
    long matches = 0;
    long false_positives = 0;
    long false_negatives = 0;
    long id_switches = 0;
    ClearCounts& operator+=(const ClearCounts& o);
};

/// CLEAR-MOT counting. A ground-truth object keeps its last matched
/// prediction when both are present and still similar enough; the rest of
/// each frame is solved by frame_match. A switch is a match whose
/// prediction id differs from the ground truth's last matched id.
ClearCounts clear_mot_counts(const EvalSequence& seq, const MatchConfig& cfg);

/// 1 - (FN + FP + IDSW) / GT; NaN when GT is zero.
double mota(const ClearCounts& c);

struct IdCounts {
    long idtp = 0;
    long gt_detections = 0;
    long pred_detections = 0;
    long idfn() const { return gt_detections - idtp; }
    long idfp() const { return pred_detections - idtp; }
    IdCounts& operator+=(const IdCounts& o);
};

/// Global one-to-one assignment between ground-truth and predicted ids
/// maximising the number of co-located (matched) detections.
IdCounts identity_counts(const EvalSequence& seq, const MatchConfig& cfg);

/// 2 IDTP / (2 IDTP + IDFP + IDFN); NaN when there are no detections at all.
double idf1(const IdCounts& c);

/// Per-alpha HOTA accumulators. ass_sum is the sum over true positives of
/// their association score TPA / (TPA + FNA + FPA).
struct HotaCounts {
    std::vector<double> alphas;
    std::vector<double> tp, fn, fp, ass_sum;
    HotaCounts& operator+=(const HotaCounts& o);
};

HotaCounts hota_counts(const EvalSequence& seq, const MatchConfig& cfg);

struct HotaScores {
    std::vector<double> hota, deta, assa;  // per alpha
    double mean_hota = 0.0;
    double mean_deta = 0.0;
    double mean_assa = 0.0;
};

HotaScores hota_scores(const HotaCounts& c);

struct SequenceCounts {
    ClearCounts clear;
    IdCounts id;
    HotaCounts hota;
    SequenceCounts& operator+=(const SequenceCounts& o);
};

SequenceCounts count_sequence(const EvalSequence& seq, const MatchConfig& cfg);

struct MetricSummary {
    double mota = 0.0;
    double idf1 = 0.0;
    long ids = 0;
    double hota = 0.0;
    double deta = 0.0;
    double assa = 0.0;
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long gt = 0;
};

MetricSummary summarize(const SequenceCounts& c);

struct EvalReport {
    std::vector<std::pair<std::string, MetricSummary>> sequences;  // sorted by id
    MetricSummary aggregate;  // pooled counts over all sequences
    std::vector<std::string> warnings;
};

/// Per-sequence metrics plus the micro-averaged aggregate. Input order does
/// not matter; sequences are reported sorted by name.
EvalReport evaluate_sequences(std::vector<std::pair<std::string, EvalSequence>> sequences, const MatchConfig& cfg,
                              int threads = 1);

std::string report_json(const EvalReport& report, const MatchConfig& cfg);
/// Plain-text table with columns IDF1 MOTA IDS HOTA DetA AssA.
std::string report_table(const EvalReport& report);

}  // namespace sdt
