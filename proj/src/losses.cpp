#include "melidar/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace melidar {

namespace {

void check_probability(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError(std::string(what) + " must lie in (0, 1), got " + std::to_string(p));
}

void check_label(int y) {
    if (y != 0 && y != 1) throw DomainError("binary label must be 0 or 1");
}

}  // namespace

ScalarLoss focal_loss(double p, int y, double alpha, double gamma) {
    check_probability(p, "probability");
    check_label(y);
    const double pt = y == 1 ? p : 1.0 - p;
    const double at = y == 1 ? alpha : 1.0 - alpha;
    const double q = 1.0 - pt;
    const double mod = std::pow(q, gamma);
    const double logp = std::log(pt);
    ScalarLoss out;
    out.loss = -at * mod * logp;
    const double dmod = gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0);
    const double dpt = at * (dmod * logp - mod / pt);
    out.grad = y == 1 ? dpt : -dpt;
    return out;
}

ScalarLoss smooth_l1(double x, double beta) {
    if (!(beta > 0.0)) throw DomainError("smooth L1 transition must be positive");
    const double ax = std::abs(x);
    if (ax < beta) return {0.5 * x * x / beta, x / beta};
    return {ax - 0.5 * beta, x > 0.0 ? 1.0 : -1.0};
}

ScalarLoss binary_cross_entropy(double p, int y) {
    check_probability(p, "confidence");
    check_label(y);
    if (y == 1) return {-std::log(p), -1.0 / p};
    return {-std::log(1.0 - p), 1.0 / (1.0 - p)};
}

VectorLoss softmax_cross_entropy(std::span<const double> logits, int target) {
    if (logits.empty()) throw DomainError("empty logits");
    if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) throw DomainError("target bin out of range");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - mx);
    const double lse = mx + std::log(denom);
    VectorLoss out;
    out.loss = lse - logits[static_cast<std::size_t>(target)];
    out.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out.grad[i] = std::exp(logits[i] - lse);
    out.grad[static_cast<std::size_t>(target)] -= 1.0;
    return out;
}

BoxPrediction BoxPrediction::zeros_like() const {
    BoxPrediction z;
    z.logits_x.assign(logits_x.size(), 0.0);
    z.logits_y.assign(logits_y.size(), 0.0);
    z.logits_yaw.assign(logits_yaw.size(), 0.0);
    return z;
}

double box_regression_loss(const BoxPrediction& pred, const BoxTargets& target, double beta, BoxPrediction* grad,
                           double scale) {
    double total = 0.0;
    auto bin_term = [&](const std::vector<double>& logits, int bin, std::vector<double>* g) {
        const auto ce = softmax_cross_entropy(logits, bin);
        total += ce.loss;
        if (g) {
            for (std::size_t i = 0; i < ce.grad.size(); ++i) (*g)[i] += scale * ce.grad[i];
        }
    };
    auto res_term = [&](double predicted, double wanted, double* g) {
        const auto s = smooth_l1(predicted - wanted, beta);
        total += s.loss;
        if (g) *g += scale * s.grad;
    };
    bin_term(pred.logits_x, target.bin_x, grad ? &grad->logits_x : nullptr);
    bin_term(pred.logits_y, target.bin_y, grad ? &grad->logits_y : nullptr);
    bin_term(pred.logits_yaw, target.bin_yaw, grad ? &grad->logits_yaw : nullptr);
    res_term(pred.res_x, target.res_x, grad ? &grad->res_x : nullptr);
    res_term(pred.res_y, target.res_y, grad ? &grad->res_y : nullptr);
    res_term(pred.res_yaw, target.res_yaw, grad ? &grad->res_yaw : nullptr);
    res_term(pred.res_z, target.res_z, grad ? &grad->res_z : nullptr);
    res_term(pred.res_h, target.res_h, grad ? &grad->res_h : nullptr);
    res_term(pred.res_w, target.res_w, grad ? &grad->res_w : nullptr);
    res_term(pred.res_l, target.res_l, grad ? &grad->res_l : nullptr);
    return total;
}

ProposalLoss proposal_loss(std::span<const BoxPrediction> boxes, std::span<const double> foreground_prob,
                           std::span<const BoxTargets> targets, std::span<const std::uint8_t> foreground,
                           const LossParams& params) {
    const std::size_t n = boxes.size();
    if (foreground_prob.size() != n || targets.size() != n || foreground.size() != n) {
        throw DomainError("proposal loss inputs differ in length");
    }
    ProposalLoss out;
    out.grad_boxes.reserve(n);
    for (const auto& b : boxes) out.grad_boxes.push_back(b.zeros_like());
    out.grad_foreground.assign(n, 0.0);
    if (n == 0) return out;

    std::size_t n_pos = 0;
    for (auto f : foreground) n_pos += f ? 1 : 0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto fl = focal_loss(foreground_prob[i], foreground[i] ? 1 : 0, params.focal_alpha, params.focal_gamma);
        out.focal += fl.loss;
        out.grad_foreground[i] = fl.grad * inv_n;
    }
    out.focal *= inv_n;
    if (n_pos > 0) {
        const double inv_pos = 1.0 / static_cast<double>(n_pos);
        for (std::size_t i = 0; i < n; ++i) {
            if (!foreground[i]) continue;
            out.reg += box_regression_loss(boxes[i], targets[i], params.beta, &out.grad_boxes[i], inv_pos);
        }
        out.reg *= inv_pos;
    }
    out.total = out.reg + out.focal;
    return out;
}

RefineLoss refine_loss(std::span<const double> confidence, std::span<const std::uint8_t> labels,
                       std::span<const BoxPrediction> boxes, std::span<const BoxTargets> targets,
                       const LossParams& params) {
    if (confidence.empty()) throw DomainError("refinement needs at least one proposal");
    if (labels.size() != confidence.size()) throw DomainError("confidence and label counts differ");
    if (boxes.size() != targets.size()) throw DomainError("positive predictions and targets differ in length");
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l ? 1 : 0;
    if (boxes.size() != n_pos) throw DomainError("one prediction is needed per positive proposal");
    RefineLoss out;
    const double inv_a = 1.0 / static_cast<double>(confidence.size());
    out.grad_confidence.resize(confidence.size());
    for (std::size_t i = 0; i < confidence.size(); ++i) {
        const auto b = binary_cross_entropy(confidence[i], labels[i] ? 1 : 0);
        out.cls += b.loss;
        out.grad_confidence[i] = b.grad * inv_a;
    }
    out.cls *= inv_a;
    out.grad_boxes.reserve(boxes.size());
    for (const auto& b : boxes) out.grad_boxes.push_back(b.zeros_like());
    if (!boxes.empty()) {
        const double inv_p = 1.0 / static_cast<double>(boxes.size());
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            out.reg += box_regression_loss(boxes[i], targets[i], params.beta, &out.grad_boxes[i], inv_p);
        }
        out.reg *= inv_p;
    }
    out.total = out.cls + out.reg;
    return out;
}

}  // namespace melidar
