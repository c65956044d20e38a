#pragma once

#include <vector>

#include "sdtrack/decode.hpp"
#include "sdtrack/domain.hpp"
#include "sdtrack/grid.hpp"

namespace sdt {

/// Weights of the total objective and hyper-parameters of its terms.
struct LossConfig {
    double seg_weight = 1.0;
    double hm_weight = 10.0;
    double emb_weight = 1.0;
    double off_weight = 0.1;
    double focal_alpha = 2.0;
    double focal_beta = 4.0;
    double push_margin = 1.0;  // minimum distance between object embeddings
    EmbeddingNorm push_norm = EmbeddingNorm::L1;
    EmbeddingNorm offset_norm = EmbeddingNorm::L1;
    double probability_eps = 1e-7;  // predictions are clamped to [eps, 1 - eps]

    void validate() const;
};

/// Scalar loss with its gradient over a grid input.
struct GridLoss {
    double value = 0.0;
    Grid2D grad;
};

/// Mean binary cross-entropy between a predicted mask in (0,1) and a
/// binary target. Gradient is zero where the prediction is clamped.
GridLoss seg_loss(const Grid2D& pred, const Grid2D& gt, const LossConfig& cfg = {});

/// Penalty-reduced focal loss summed over all pixels and channels and
/// divided by the number of gt == 1 pixels (at least 1):
///   gt == 1:  -(1 - p)^alpha log p
///   else:     -(1 - gt)^beta p^alpha log(1 - p)
GridLoss heatmap_focal_loss(const Grid2D& pred, const Grid2D& gt, const LossConfig& cfg = {});

using Embedding = std::vector<double>;

struct EmbeddingPair {
    Embedding left;
    Embedding right;
};

struct PairLoss {
    double value = 0.0;
    std::vector<EmbeddingPair> grad;
};

struct VectorLoss {
    double value = 0.0;
    std::vector<Embedding> grad;
};

/// Pulls the two embeddings of each object towards their mean:
/// (1/K) sum_k |e_l - e_c|^2 + |e_r - e_c|^2. Zero for K = 0.
PairLoss pull_loss(const std::vector<EmbeddingPair>& pairs);

/// Hinge pushing object embeddings apart:
/// 1/(K(K-1)) sum_{k != j} max(0, margin - |e_k - e_j|). Zero for K < 2.
/// Uses the subgradient 0 at |x| = 0 and at the hinge.
VectorLoss push_loss(const std::vector<Embedding>& centers, const LossConfig& cfg = {});

/// Pull plus push on the pair means, with gradients taken back to the
/// left and right embeddings.
PairLoss embedding_loss(const std::vector<EmbeddingPair>& pairs, const LossConfig& cfg = {});

struct OffsetPair {
    Point2 left;
    Point2 right;
};

struct OffsetLoss {
    double value = 0.0;
    std::vector<OffsetPair> grad;
};

/// (1/K) sum_i |o_i - (c_i^t - c_i^{t-1})| over left and right endpoints.
/// Zero for K = 0; throws ValidationError on mismatched lengths.
OffsetLoss offset_loss(const std::vector<OffsetPair>& pred, const std::vector<EndpointPair>& current,
                       const std::vector<EndpointPair>& previous, const LossConfig& cfg = {});

struct LossComponents {
    double seg = 0.0;
    double hm = 0.0;
    double same = 0.0;
    double diff = 0.0;
    double off = 0.0;
};

/// seg_weight * seg + hm_weight * hm + emb_weight * (same + diff) + off_weight * off.
double total_loss(const LossComponents& c, const LossConfig& cfg = {});

}  // namespace sdt
