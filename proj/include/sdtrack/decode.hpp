#pragma once

#include <span>
#include <vector>

#include "sdtrack/assignment.hpp"
#include "sdtrack/domain.hpp"
#include "sdtrack/grid.hpp"
#include "sdtrack/rng.hpp"

namespace sdt {

struct HeatmapSpec {
    double sigma = 2.0;  // Gaussian std of ground-truth kernels, pixels
    double peak_threshold = 0.3;
    int nms_window = 3;  // odd, >= 3
    int max_peaks = 64;  // per channel

    void validate() const;
};

enum class EmbeddingNorm { L1, L2 };

struct PairingConfig {
    double gate = 1.0;  // pairs with embedding distance above the gate are rejected
    EmbeddingNorm norm = EmbeddingNorm::L1;
    bool optimal = false;  // min-cost assignment instead of greedy nearest neighbour
};

struct Peak {
    Point2 position;  // sub-pixel refined
    int px = 0;       // integer pixel of the local maximum
    int py = 0;
    double score = 0.0;
};

struct PeakSet {
    std::vector<Peak> left;
    std::vector<Peak> right;
};

/// Endpoint pixel used for kernels and tensor sampling: the point clipped to
/// the image and rounded half up.
void endpoint_pixel(const Point2& p, int width, int height, int& px, int& py);

/// Two-channel heatmap (0 = left endpoints, 1 = right endpoints). Each
/// endpoint contributes exp(-d^2 / (2 sigma^2)) around its pixel within a
/// square of radius ceil(3 sigma); overlapping kernels combine by max.
Grid2D render_gt_heatmap(const std::vector<AnnotatedObject>& objects, const HeatmapSpec& spec, int width,
                         int height);

/// Local maxima of one channel: strict maximum of its nms_window
/// neighbourhood and >= peak_threshold, best max_peaks by score (ties by
/// row then column). Positions are refined by the three-pixel intensity
/// centroid along the peak's row (x) and column (y), for each axis that has
/// both neighbours inside the image. Diagonal pixels are left out so a
/// nearby max-combined kernel cannot pull the estimate.
std::vector<Peak> extract_channel_peaks(const Grid2D& heatmap, int channel, const HeatmapSpec& spec);

PeakSet extract_peaks(const Grid2D& heatmap, const HeatmapSpec& spec);

/// Embedding distance between a left and a right point.
double embedding_distance(std::span<const double> a, std::span<const double> b, EmbeddingNorm norm);

/// N x M matrix of embedding distances sampled at the peak pixels.
Matrix embedding_similarity(const std::vector<Peak>& left, const std::vector<Peak>& right, const Grid2D& emb_left,
                            const Grid2D& emb_right, EmbeddingNorm norm);

/// Pairs left and right peaks into detections by ascending embedding
/// distance, each point used once, rejecting pairs above the gate. The
/// score is the mean of both peak scores; output is sorted by score
/// (descending) then by left peak index.
std::vector<Detection> pair_endpoints(const std::vector<Peak>& left, const std::vector<Peak>& right,
                                      const Grid2D& emb_left, const Grid2D& emb_right, const PairingConfig& cfg);

/// Samples two-channel (dx, dy) offset maps at each endpoint pixel.
void attach_offsets(std::vector<Detection>& detections, const Grid2D& offset_left, const Grid2D& offset_right);

/// Model output maps for one frame.
struct FrameTensors {
    Grid2D heatmap;       // C = 2
    Grid2D emb_left;      // C = embedding dims
    Grid2D emb_right;     // C = embedding dims
    Grid2D offset_left;   // C = 2
    Grid2D offset_right;  // C = 2
};

/// Peaks, pairing and offsets. When pairing swaps a pair into left/right
/// order, each endpoint still reads the offset map of its own channel.
std::vector<Detection> decode_frame(const FrameTensors& tensors, const HeatmapSpec& spec, const PairingConfig& pairing);

/// Embedding assigned to the k-th object of a frame in rendered ground
/// truth: every component equals k * separation / dims, so objects are
/// `separation` apart in L1.
std::vector<double> gt_embedding(int k, int dims, double separation);

/// Ground-truth tensors for one frame: heatmap, embeddings and the true
/// per-frame displacement of every endpoint. Embedding and offset values
/// are painted in a square of radius ceil(sigma) around each endpoint
/// pixel, the nearest endpoint winning.
FrameTensors render_gt_tensors(const std::vector<AnnotatedObject>& objects, const HeatmapSpec& spec, int width,
                               int height, int embedding_dims, double separation);

struct OracleNoise {
    double endpoint_jitter_std = 0.0;
    double drop_prob = 0.0;
    double false_positive_rate = 0.0;  // expected spurious detections per frame
    bool with_offsets = true;

    void validate() const;
};

struct OracleFrame {
    std::vector<Detection> detections;
    std::vector<int> source_track_ids;  // per detection; 0 for false positives
    std::vector<int> dropped_track_ids;
    int false_positives = 0;
};

/// Ground-truth detections with controlled corruption. Every object draws
/// its drop decision and its jitter whether or not it is dropped, so the
/// random stream does not depend on the outcome. True offsets are the
/// per-frame displacement v * (cos theta, sin theta).
OracleFrame oracle_detect(const std::vector<AnnotatedObject>& objects, const OracleNoise& noise, int width, int height,
                          Rng& rng);

/// out(x, y, c) = mask(x, y) * features(x, y, c).
Grid2D mask_gate(const Grid2D& features, const Grid2D& mask);

}  // namespace sdt
