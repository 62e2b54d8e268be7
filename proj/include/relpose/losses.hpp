#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relpose/pose.hpp"
#include "relpose/tensor.hpp"

namespace relpose::loss {

using diff::Tensor;

// Learnable balance scalars for the position/orientation loss split, plus the
// fixed-margin knobs. s_x and s_q are shared graph leaves (typically the
// model's own scalars).
struct LossWeights {
    Tensor s_x;
    Tensor s_q;
    std::optional<double> beta;  // fixed-beta weighting only
    double alpha = 10.0;         // metric-distance position/orientation balance
};

enum class WeightingMode { FixedBeta, Learnable };

// One training pair's forward results plus ground truth.
struct PairForward {
    Tensor x_hat, q_hat_raw;          // GPRU on the current frame
    Tensor x_hat_ref, q_hat_ref_raw;  // GPRU on the reference frame
    Tensor f, f_ref;                  // encoder features
    Tensor x_rel_pred, q_rel_pred_raw;  // RPRU outputs; may be undefined
    Tensor f_neg;                     // triplet negative feature; may be undefined
    Pose gt, gt_ref;
    RelativePose gt_rel;
};

struct TripletSample {
    Tensor f_anchor, f_positive, f_negative;
};

// differentiable quaternion helpers over rank-1 length-4 tensors
Tensor quat_normalize_t(const Tensor& q);
Tensor quat_conjugate_t(const Tensor& q);
Tensor quat_multiply_t(const Tensor& a, const Tensor& b);

// (L_Gx, L_Gq): Euclidean position error and Euclidean distance to the
// normalized predicted quaternion.
std::pair<Tensor, Tensor> global_loss(const Tensor& x_hat, const Tensor& q_hat_raw,
                                      const Pose& gt);

Tensor weighted_global(const Tensor& l_x, const Tensor& l_q, const LossWeights& w,
                       WeightingMode mode);

// (L_Cx, L_Cq): relative pose derived from the two predicted global poses
// (quaternions normalized first) against the ground-truth relative pose.
std::pair<Tensor, Tensor> rel_consistency_loss(const Tensor& x_hat, const Tensor& q_hat_raw,
                                               const Tensor& x_hat_ref,
                                               const Tensor& q_hat_ref_raw,
                                               const RelativePose& gt_rel);

// (L_Rx, L_Rq): directly regressed relative pose against ground truth.
std::pair<Tensor, Tensor> rel_regression_loss(const Tensor& x_rel_pred,
                                              const Tensor& q_rel_pred_raw,
                                              const RelativePose& gt_rel);

// (1/2N) sum max(d_x + alpha*d_q - d, 0)^2 with d the feature distance and
// d_x, d_q ground-truth pose distances (d_q on canonicalized quaternions).
// Gradient flows only through the features.
Tensor metric_distance_loss(const std::vector<PairForward>& batch, double alpha);

// (1/2N) sum max(m - d, 0)^2; the attractive term vanishes since paired
// frames are never co-located (y = 1).
Tensor siamese_loss(const std::vector<PairForward>& batch, double margin);

// sum [ |fa-fp|^2 - |fa-fn|^2 + m ]_+
Tensor triplet_loss(const std::vector<TripletSample>& batch, double margin);

enum class Combination { G, GC, GCR, GM, GR, Full, SiameseVariant, TripletVariant };

Combination combination_from_string(const std::string& s);
std::string to_string(Combination c);
bool needs_rpru(Combination c);

struct ComprehensiveOptions {
    Combination combination = Combination::Full;
    // GlobalLoss applied to both frames of each pair and averaged; switch off
    // to use the current frame only.
    bool global_both_frames = true;
    double siamese_margin = 0.001;
    double triplet_margin = 0.001;
};

// Batch-mean position and orientation terms assembled per the selected
// combination, weighted by exp(-s_x)/exp(-s_q) with their offsets, metric
// term added unweighted.
Tensor comprehensive_loss(const std::vector<PairForward>& batch, const LossWeights& w,
                          const ComprehensiveOptions& opts);

}  // namespace relpose::loss
