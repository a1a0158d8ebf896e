#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "melidar/losses.hpp"

using namespace melidar;

namespace {

constexpr double kStep = 1e-5;

double central_diff(const std::function<double(double)>& f, double x) {
    return (f(x + kStep) - f(x - kStep)) / (2 * kStep);
}

// relative error with a floor so that near-zero derivatives do not blow up
bool grad_close(double analytic, double numeric) {
    return std::abs(analytic - numeric) <= 1e-4 * std::max(1.0, std::abs(numeric));
}

BoxPrediction random_prediction(std::mt19937_64& rng, const BinCodecConfig& cfg) {
    std::normal_distribution<double> n(0.0, 1.0);
    BoxPrediction p;
    p.logits_x.resize(static_cast<std::size_t>(cfg.location_bins()));
    p.logits_y.resize(static_cast<std::size_t>(cfg.location_bins()));
    p.logits_yaw.resize(static_cast<std::size_t>(cfg.yaw_bins));
    for (auto* v : {&p.logits_x, &p.logits_y, &p.logits_yaw}) {
        for (auto& x : *v) x = n(rng);
    }
    for (double* r : {&p.res_x, &p.res_y, &p.res_yaw, &p.res_z, &p.res_h, &p.res_w, &p.res_l}) *r = 1.5 * n(rng);
    return p;
}

BoxTargets random_target(std::mt19937_64& rng, const BinCodecConfig& cfg) {
    std::uniform_int_distribution<int> loc(0, cfg.location_bins() - 1), yaw(0, cfg.yaw_bins - 1);
    std::uniform_real_distribution<double> u(-0.5, 0.5), z(-2, 2);
    BoxTargets t;
    t.bin_x = loc(rng);
    t.bin_y = loc(rng);
    t.bin_yaw = yaw(rng);
    t.res_x = u(rng);
    t.res_y = u(rng);
    t.res_yaw = u(rng);
    t.res_z = z(rng);
    t.res_h = u(rng);
    t.res_w = u(rng);
    t.res_l = u(rng);
    return t;
}

// Every scalar slot of a prediction, for finite differences.
std::vector<double*> slots(BoxPrediction& p) {
    std::vector<double*> s;
    for (auto* v : {&p.logits_x, &p.logits_y, &p.logits_yaw}) {
        for (auto& x : *v) s.push_back(&x);
    }
    for (double* r : {&p.res_x, &p.res_y, &p.res_yaw, &p.res_z, &p.res_h, &p.res_w, &p.res_l}) s.push_back(r);
    return s;
}

BoxPrediction perfect_prediction(const BoxTargets& t, const BinCodecConfig& cfg) {
    BoxPrediction p;
    p.logits_x.assign(static_cast<std::size_t>(cfg.location_bins()), -1e3);
    p.logits_y.assign(static_cast<std::size_t>(cfg.location_bins()), -1e3);
    p.logits_yaw.assign(static_cast<std::size_t>(cfg.yaw_bins), -1e3);
    p.logits_x[static_cast<std::size_t>(t.bin_x)] = 1e3;
    p.logits_y[static_cast<std::size_t>(t.bin_y)] = 1e3;
    p.logits_yaw[static_cast<std::size_t>(t.bin_yaw)] = 1e3;
    p.res_x = t.res_x;
    p.res_y = t.res_y;
    p.res_yaw = t.res_yaw;
    p.res_z = t.res_z;
    p.res_h = t.res_h;
    p.res_w = t.res_w;
    p.res_l = t.res_l;
    return p;
}

}  // namespace

TEST(Focal, HalfProbabilityExample) {
    const auto f = focal_loss(0.5, 1);
    EXPECT_NEAR(f.loss, 0.25 * 0.25 * std::log(2.0), 1e-12);
    EXPECT_NEAR(f.loss, 0.043322, 1e-6);
}

TEST(Focal, ReducesToCrossEntropy) {
    for (double p : {0.05, 0.3, 0.5, 0.9}) {
        EXPECT_NEAR(focal_loss(p, 1, 1.0, 0.0).loss, -std::log(p), 1e-14);
        EXPECT_NEAR(focal_loss(p, 0, 0.0, 0.0).loss, -std::log(1 - p), 1e-14);
    }
}

TEST(Focal, EasyExamplesWeighLess) {
    EXPECT_LT(focal_loss(0.95, 1).loss, focal_loss(0.6, 1).loss);
    EXPECT_LT(focal_loss(0.05, 0).loss, focal_loss(0.4, 0).loss);
    EXPECT_LT(focal_loss(0.9, 1).loss, binary_cross_entropy(0.9, 1).loss);
}

TEST(Focal, DomainErrors) {
    EXPECT_THROW(focal_loss(0.0, 1), DomainError);
    EXPECT_THROW(focal_loss(1.0, 0), DomainError);
    EXPECT_THROW(focal_loss(0.5, 2), DomainError);
    EXPECT_THROW(focal_loss(std::nan(""), 1), DomainError);
    EXPECT_THROW(binary_cross_entropy(1.5, 1), DomainError);
}

TEST(SmoothL1, Examples) {
    EXPECT_DOUBLE_EQ(smooth_l1(0.5).loss, 0.125);
    EXPECT_DOUBLE_EQ(smooth_l1(2.0).loss, 1.5);
    EXPECT_DOUBLE_EQ(smooth_l1(-2.0).loss, 1.5);
    EXPECT_DOUBLE_EQ(smooth_l1(0.0).loss, 0.0);
    EXPECT_DOUBLE_EQ(smooth_l1(1.0).loss, 0.5);
    EXPECT_DOUBLE_EQ(smooth_l1(-3.0).grad, -1.0);
    EXPECT_THROW(smooth_l1(1.0, 0.0), DomainError);
}

TEST(SoftmaxCe, UniformLogits) {
    const double logits[] = {0.3, 0.3, 0.3, 0.3};
    const auto ce = softmax_cross_entropy(logits, 2);
    EXPECT_NEAR(ce.loss, std::log(4.0), 1e-14);
    EXPECT_NEAR(ce.grad[2], -0.75, 1e-14);
    EXPECT_NEAR(ce.grad[0], 0.25, 1e-14);
    EXPECT_THROW(softmax_cross_entropy(logits, 4), DomainError);
}

TEST(SoftmaxCe, StableForLargeLogits) {
    const double logits[] = {1000.0, 0.0};
    EXPECT_NEAR(softmax_cross_entropy(logits, 0).loss, 0.0, 1e-12);
    EXPECT_NEAR(softmax_cross_entropy(logits, 1).loss, 1000.0, 1e-9);
}

TEST(Gradients, ScalarLossesMatchFiniteDifferences) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> p(0.02, 0.98), x(-4, 4), a(0.1, 0.9), g(0.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double pi = p(rng), alpha = a(rng), gamma = g(rng);
        const int y = i % 2;
        EXPECT_TRUE(grad_close(focal_loss(pi, y, alpha, gamma).grad,
                               central_diff([&](double v) { return focal_loss(v, y, alpha, gamma).loss; }, pi)));
        EXPECT_TRUE(grad_close(binary_cross_entropy(pi, y).grad,
                               central_diff([&](double v) { return binary_cross_entropy(v, y).loss; }, pi)));
        double xi = x(rng);
        if (std::abs(std::abs(xi) - 1.0) < 1e-3) xi += 0.01;  // skip the kink's neighborhood
        EXPECT_TRUE(grad_close(smooth_l1(xi).grad, central_diff([](double v) { return smooth_l1(v).loss; }, xi)));
    }
}

TEST(Gradients, SoftmaxMatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0, 2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> logits(7);
        for (auto& v : logits) v = n(rng);
        const int target = trial % 7;
        const auto ce = softmax_cross_entropy(logits, target);
        for (std::size_t k = 0; k < logits.size(); ++k) {
            auto probe = logits;
            const double num = central_diff(
                [&](double v) {
                    probe[k] = v;
                    return softmax_cross_entropy(probe, target).loss;
                },
                logits[k]);
            EXPECT_TRUE(grad_close(ce.grad[k], num));
        }
    }
}

TEST(Gradients, OverallLossMatchesFiniteDifferences) {
    std::mt19937_64 rng(21);
    const BinCodecConfig cfg;
    std::uniform_real_distribution<double> prob(0.05, 0.95);
    const std::size_t points = 6, proposals = 4;
    std::vector<BoxPrediction> stage1(points), stage2;
    std::vector<BoxTargets> t1(points), t2;
    std::vector<double> fg_prob(points), conf(proposals);
    std::vector<std::uint8_t> fg(points), labels(proposals);
    for (std::size_t i = 0; i < points; ++i) {
        stage1[i] = random_prediction(rng, cfg);
        t1[i] = random_target(rng, cfg);
        fg_prob[i] = prob(rng);
        fg[i] = i % 3 != 0;
    }
    for (std::size_t i = 0; i < proposals; ++i) {
        conf[i] = prob(rng);
        labels[i] = i % 2;
        if (labels[i]) {
            stage2.push_back(random_prediction(rng, cfg));
            t2.push_back(random_target(rng, cfg));
        }
    }
    auto total = [&] {
        return overall_loss(proposal_loss(stage1, fg_prob, t1, fg).total, refine_loss(conf, labels, stage2, t2).total);
    };
    const auto pl = proposal_loss(stage1, fg_prob, t1, fg);
    const auto rl = refine_loss(conf, labels, stage2, t2);
    EXPECT_DOUBLE_EQ(total(), pl.total + rl.total);

    auto check = [&](double& slot, double analytic) {
        const double saved = slot;
        slot = saved + kStep;
        const double up = total();
        slot = saved - kStep;
        const double down = total();
        slot = saved;
        EXPECT_TRUE(grad_close(analytic, (up - down) / (2 * kStep))) << analytic << " vs " << (up - down) / (2 * kStep);
    };
    for (std::size_t i = 0; i < points; ++i) {
        check(fg_prob[i], pl.grad_foreground[i]);
        auto g = pl.grad_boxes[i];
        auto gs = slots(g);
        auto ps = slots(stage1[i]);
        for (std::size_t k = 0; k < ps.size(); ++k) check(*ps[k], *gs[k]);
    }
    for (std::size_t i = 0; i < proposals; ++i) check(conf[i], rl.grad_confidence[i]);
    for (std::size_t i = 0; i < stage2.size(); ++i) {
        auto g = rl.grad_boxes[i];
        auto gs = slots(g);
        auto ps = slots(stage2[i]);
        for (std::size_t k = 0; k < ps.size(); ++k) check(*ps[k], *gs[k]);
    }
}

TEST(BoxRegression, HandSummation) {
    const BinCodecConfig cfg;
    std::mt19937_64 rng(3);
    const auto p = random_prediction(rng, cfg);
    const auto t = random_target(rng, cfg);
    double want = softmax_cross_entropy(p.logits_x, t.bin_x).loss + softmax_cross_entropy(p.logits_y, t.bin_y).loss +
                  softmax_cross_entropy(p.logits_yaw, t.bin_yaw).loss;
    want += smooth_l1(p.res_x - t.res_x).loss + smooth_l1(p.res_y - t.res_y).loss +
            smooth_l1(p.res_yaw - t.res_yaw).loss;
    want += smooth_l1(p.res_z - t.res_z).loss + smooth_l1(p.res_h - t.res_h).loss + smooth_l1(p.res_w - t.res_w).loss +
            smooth_l1(p.res_l - t.res_l).loss;
    EXPECT_NEAR(box_regression_loss(p, t, 1.0), want, 1e-9);
}

TEST(BoxRegression, ZeroAtPerfectPrediction) {
    const BinCodecConfig cfg;
    std::mt19937_64 rng(4);
    const auto t = random_target(rng, cfg);
    EXPECT_NEAR(box_regression_loss(perfect_prediction(t, cfg), t, 1.0), 0.0, 1e-12);
    const BoxPrediction boxes[] = {perfect_prediction(t, cfg)};
    const BoxTargets targets[] = {t};
    const double probs[] = {1.0 - 1e-12};
    const std::uint8_t fg[] = {1};
    EXPECT_NEAR(proposal_loss(boxes, probs, targets, fg).total, 0.0, 1e-9);
}

TEST(ProposalLossTest, MeansAndEmptyForeground) {
    const BinCodecConfig cfg;
    std::mt19937_64 rng(12);
    std::vector<BoxPrediction> boxes;
    std::vector<BoxTargets> targets;
    for (int i = 0; i < 5; ++i) {
        boxes.push_back(random_prediction(rng, cfg));
        targets.push_back(random_target(rng, cfg));
    }
    const std::vector<double> probs{0.2, 0.7, 0.4, 0.9, 0.5};
    const std::vector<std::uint8_t> fg{1, 0, 1, 0, 0};
    const auto l = proposal_loss(boxes, probs, targets, fg);
    double focal = 0;
    for (std::size_t i = 0; i < 5; ++i) focal += focal_loss(probs[i], fg[i]).loss;
    EXPECT_NEAR(l.focal, focal / 5, 1e-12);
    const double reg = (box_regression_loss(boxes[0], targets[0], 1.0) + box_regression_loss(boxes[2], targets[2], 1.0)) / 2;
    EXPECT_NEAR(l.reg, reg, 1e-12);
    EXPECT_DOUBLE_EQ(l.total, l.reg + l.focal);

    const std::vector<std::uint8_t> none(5, 0);
    const auto z = proposal_loss(boxes, probs, targets, none);
    EXPECT_EQ(z.reg, 0.0);
    for (const auto& g : z.grad_boxes) EXPECT_EQ(g.res_x, 0.0);
}

TEST(ProposalLossTest, PermutationInvariant) {
    const BinCodecConfig cfg;
    std::mt19937_64 rng(13);
    std::vector<BoxPrediction> boxes;
    std::vector<BoxTargets> targets;
    std::vector<double> probs;
    std::vector<std::uint8_t> fg;
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int i = 0; i < 8; ++i) {
        boxes.push_back(random_prediction(rng, cfg));
        targets.push_back(random_target(rng, cfg));
        probs.push_back(u(rng));
        fg.push_back(i % 3 == 0);
    }
    const double a = proposal_loss(boxes, probs, targets, fg).total;
    std::vector<std::size_t> order{3, 7, 0, 5, 1, 6, 2, 4};
    std::vector<BoxPrediction> b2;
    std::vector<BoxTargets> t2;
    std::vector<double> p2;
    std::vector<std::uint8_t> f2;
    for (auto i : order) {
        b2.push_back(boxes[i]);
        t2.push_back(targets[i]);
        p2.push_back(probs[i]);
        f2.push_back(fg[i]);
    }
    EXPECT_NEAR(proposal_loss(b2, p2, t2, f2).total, a, 1e-12);
}

TEST(RefineLossTest, MeansAndErrors) {
    const BinCodecConfig cfg;
    std::mt19937_64 rng(14);
    const std::vector<double> conf{0.3, 0.8, 0.6};
    const std::vector<std::uint8_t> labels{0, 1, 1};
    std::vector<BoxPrediction> boxes{random_prediction(rng, cfg), random_prediction(rng, cfg)};
    std::vector<BoxTargets> targets{random_target(rng, cfg), random_target(rng, cfg)};
    const auto l = refine_loss(conf, labels, boxes, targets);
    double cls = 0;
    for (std::size_t i = 0; i < 3; ++i) cls += binary_cross_entropy(conf[i], labels[i]).loss;
    EXPECT_NEAR(l.cls, cls / 3, 1e-12);
    EXPECT_NEAR(l.reg, (box_regression_loss(boxes[0], targets[0], 1.0) + box_regression_loss(boxes[1], targets[1], 1.0)) / 2,
                1e-12);
    const std::vector<std::uint8_t> negatives{0, 0, 0};
    const auto n = refine_loss(conf, negatives, {}, {});
    EXPECT_EQ(n.reg, 0.0);
    EXPECT_THROW(refine_loss({}, {}, {}, {}), DomainError);
    EXPECT_THROW(refine_loss(conf, labels, {}, {}), DomainError);
}
