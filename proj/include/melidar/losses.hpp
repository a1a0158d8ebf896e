#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "melidar/box_codec.hpp"
#include "melidar/core_model.hpp"

namespace melidar {

struct DomainError : Error {
    using Error::Error;
};

/// Scalar loss with its derivative with respect to the single input.
struct ScalarLoss {
    double loss = 0.0;
    double grad = 0.0;
};

/// Focal loss on a foreground probability. Derivative is dL/dp.
ScalarLoss focal_loss(double p, int y, double alpha = 0.25, double gamma = 2.0);

/// Huber-style smooth L1. Derivative is dL/dx.
ScalarLoss smooth_l1(double x, double beta = 1.0);

/// Binary cross-entropy on a probability. Derivative is dL/dp.
ScalarLoss binary_cross_entropy(double p, int y);

struct VectorLoss {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Cross-entropy of softmax(logits) against a class index, derivative per logit.
VectorLoss softmax_cross_entropy(std::span<const double> logits, int target);

/// Network output for one box: bin logits for the binned axes, one residual
/// per axis.
struct BoxPrediction {
    std::vector<double> logits_x;
    std::vector<double> logits_y;
    std::vector<double> logits_yaw;
    double res_x = 0.0;
    double res_y = 0.0;
    double res_yaw = 0.0;
    double res_z = 0.0;
    double res_h = 0.0;
    double res_w = 0.0;
    double res_l = 0.0;

    /// Same shape, all zero.
    [[nodiscard]] BoxPrediction zeros_like() const;
};

struct LossParams {
    double focal_alpha = 0.25;
    double focal_gamma = 2.0;
    double beta = 1.0;  ///< smooth L1 transition point
};

/// Bin loss (cross-entropy on the x, y, yaw bins plus smooth L1 on their
/// residuals) plus residual loss (smooth L1 on z, h, w, l) for one box.
/// Accumulates `scale` times the gradient into `grad` when given.
double box_regression_loss(const BoxPrediction& pred, const BoxTargets& target, double beta,
                           BoxPrediction* grad = nullptr, double scale = 1.0);

struct ProposalLoss {
    double reg = 0.0;    ///< mean over foreground points, 0 without any
    double focal = 0.0;  ///< mean over all points
    double total = 0.0;  ///< reg + focal
    std::vector<BoxPrediction> grad_boxes;
    std::vector<double> grad_foreground;
};

/// Stage-one loss. `targets` is read only where `foreground` is set.
ProposalLoss proposal_loss(std::span<const BoxPrediction> boxes, std::span<const double> foreground_prob,
                           std::span<const BoxTargets> targets, std::span<const std::uint8_t> foreground,
                           const LossParams& params = {});

struct RefineLoss {
    double cls = 0.0;    ///< BCE averaged over all proposals
    double reg = 0.0;    ///< regression averaged over positives, 0 without any
    double total = 0.0;  ///< cls + reg
    std::vector<double> grad_confidence;
    std::vector<BoxPrediction> grad_boxes;
};

/// Refinement loss. `boxes` and `targets` hold the positive proposals only,
/// expressed in canonical coordinates.
RefineLoss refine_loss(std::span<const double> confidence, std::span<const std::uint8_t> labels,
                       std::span<const BoxPrediction> boxes, std::span<const BoxTargets> targets,
                       const LossParams& params = {});

inline double overall_loss(double proposal_total, double refine_total) { return proposal_total + refine_total; }

}  // namespace melidar
