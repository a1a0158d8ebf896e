#include <gtest/gtest.h>

#include <cmath>

#include "melidar/photon_sim.hpp"

using namespace melidar;

namespace {

Raster row_raster(std::vector<double> values) {
    Raster r(1, values.size(), 1);
    r.data = values;
    std::fill(r.valid.begin(), r.valid.end(), 1);
    return r;
}

// Independent tail oracle: sum_{k>=t} e^-l l^k / k!, summed directly so that
// tiny tails keep their relative precision.
double tail_by_summation(double lambda, unsigned t) {
    double term = std::exp(-lambda);
    for (unsigned k = 0; k < t; ++k) term *= lambda / (k + 1);
    double sum = 0.0;
    for (unsigned k = t; k < t + 400; ++k) {
        sum += term;
        term *= lambda / (k + 1);
    }
    return sum;
}

struct Moments {
    double mean;
    double var;
};

Moments draw_moments(double lambda, std::size_t n, std::uint64_t seed) {
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const PixelKey key{seed, 0, static_cast<std::uint32_t>(i / 1000), static_cast<std::uint32_t>(i % 1000)};
        const double x = sample_poisson(key, static_cast<std::uint32_t>(i % 7), lambda);
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    return {mean, (s2 - n * mean * mean) / (n - 1)};
}

}  // namespace

TEST(SignalRate, UniformSceneGivesSbr) {
    RateField f(1, 4);
    const auto one = row_raster({1, 1, 1, 1});
    compute_signal_rate(f, one, one, one, 1.0, 0.1, 100);
    for (double v : f.signal_rate) EXPECT_DOUBLE_EQ(v, 1.0);
    EXPECT_EQ(f.signal_bin[0], 10u);
}

TEST(SignalRate, NormalizedBeforeScaling) {
    RateField f(1, 2);
    const auto red = row_raster({1, 3});
    const auto one = row_raster({1, 1});
    compute_signal_rate(f, red, one, one, 1.0, 0.1, 100);
    EXPECT_DOUBLE_EQ(f.signal_rate[0], 0.5);
    EXPECT_DOUBLE_EQ(f.signal_rate[1], 1.5);
    compute_signal_rate(f, red, one, one, 4.0, 0.1, 100);
    EXPECT_DOUBLE_EQ(f.signal_rate[0], 2.0);
    EXPECT_DOUBLE_EQ(f.signal_rate[1], 6.0);
}

TEST(SignalRate, InverseSquareAndCosine) {
    RateField f(1, 2);
    const auto red = row_raster({1, 1});
    const auto cosv = row_raster({1, 0.5});
    const auto range = row_raster({2, 1});
    compute_signal_rate(f, red, cosv, range, 1.0, 0.5, 100);
    // raw f = {1/4, 1/2}, mean 3/8
    EXPECT_DOUBLE_EQ(f.signal_rate[0], (0.25) / 0.375);
    EXPECT_DOUBLE_EQ(f.signal_rate[1], (0.5) / 0.375);
    EXPECT_EQ(f.signal_bin[0], 4u);
    EXPECT_EQ(f.signal_bin[1], 2u);
}

TEST(SignalRate, BinClampedToLastBin) {
    RateField f(1, 1);
    const auto one = row_raster({1});
    compute_signal_rate(f, one, one, row_raster({5000}), 1.0, 1.0, 256);
    EXPECT_EQ(f.signal_bin[0], 255u);
}

TEST(SignalRate, AllInvalidIsEmptyScene) {
    RateField f(1, 2);
    auto range = row_raster({1, 1});
    std::fill(range.valid.begin(), range.valid.end(), 0);
    const auto one = row_raster({1, 1});
    EXPECT_THROW(compute_signal_rate(f, one, one, range, 1.0, 0.1, 10), EmptySceneError);
}

TEST(AmbientRate, Examples) {
    RateField f(1, 2);
    compute_ambient_rate(f, row_raster({2, 6}));
    EXPECT_DOUBLE_EQ(f.ambient_rate[0], 0.5);
    EXPECT_DOUBLE_EQ(f.ambient_rate[1], 1.5);
    compute_ambient_rate(f, row_raster({3, 3}));
    EXPECT_DOUBLE_EQ(f.ambient_rate[0], 1.0);
    compute_ambient_rate(f, row_raster({0, 0}));
    EXPECT_EQ(f.ambient_rate[0], 0.0);
    EXPECT_EQ(f.ambient_rate[1], 0.0);
}

TEST(AmbientRate, MeanIsOneOverValidPixels) {
    RateField f(1, 5);
    auto red = row_raster({0.2, 0.9, 0.4, 7.0, 0.1});
    red.valid[3] = 0;
    compute_ambient_rate(f, red);
    double s = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        if (red.valid[i]) s += f.ambient_rate[i];
    }
    EXPECT_NEAR(s / 4, 1.0, 1e-15);
    EXPECT_EQ(f.ambient_rate[3], 0.0);
}

TEST(IncidenceCosine, FacingAndBackFacing) {
    Raster n(1, 2, 3);
    n.data = {-1, 0, 0, 1, 0, 0};
    n.valid = {1, 1};
    const Vec3 rays[] = {{1, 0, 0}, {1, 0, 0}};
    const auto c = incidence_cosine(n, rays);
    EXPECT_DOUBLE_EQ(c.data[0], 1.0);
    EXPECT_DOUBLE_EQ(c.data[1], 0.0);
}

TEST(Poisson, ZeroRateIsZero) {
    for (std::uint32_t b = 0; b < 100; ++b) EXPECT_EQ(sample_poisson({1, 0, 2, 3}, b, 0.0), 0u);
    RateField f(1, 1);
    EXPECT_EQ(sample_bin(f, 9, 0, 5), 0u);
}

TEST(Poisson, SameKeySameDraw) {
    for (double lambda : {0.3, 4.0, 55.0, 900.0}) {
        EXPECT_EQ(sample_poisson({5, 0, 1, 2}, 17, lambda), sample_poisson({5, 0, 1, 2}, 17, lambda));
    }
}

TEST(Poisson, MeanAtFour) {
    const auto m = draw_moments(4.0, 100000, 2024);
    EXPECT_NEAR(m.mean, 4.0, 3 * 2.0 / std::sqrt(100000.0));
}

TEST(Poisson, MomentsAcrossRates) {
    const std::size_t n = 100000;
    for (double lambda : {0.5, 2.0, 8.0, 25.0, 60.0}) {
        const auto m = draw_moments(lambda, n, 77);
        EXPECT_NEAR(m.mean, lambda, 3 * std::sqrt(lambda / n)) << lambda;
        // var of the sample variance is ~ (mu4 - sigma^4)/n with mu4 = l + 3l^2
        const double sd_var = std::sqrt((lambda + 2 * lambda * lambda) / n);
        EXPECT_NEAR(m.var, lambda, 3 * sd_var) << lambda;
    }
}

TEST(Poisson, SignalOnlyAtItsBin) {
    RateField f(1, 1);
    f.has_signal[0] = 1;
    f.signal_rate[0] = 50.0;
    f.signal_bin[0] = 3;
    EXPECT_GT(sample_bin(f, 1, 0, 3), 0u);
    for (std::uint32_t b : {0u, 2u, 4u, 100u}) EXPECT_EQ(sample_bin(f, 1, 0, b), 0u);
}

TEST(PoissonTail, MatchesSummation) {
    for (double lambda : {0.1, 1.0, 3.7, 12.0}) {
        for (unsigned t = 0; t < 30; ++t) {
            const double want = tail_by_summation(lambda, t);
            const double got = poisson_upper_tail(lambda, t);
            if (want > 1e-300) EXPECT_NEAR(got, want, 1e-9 * want) << lambda << " " << t;
        }
    }
}

TEST(PoissonTail, ThresholdIsSmallestSafeInteger) {
    for (double lambda : {0.5, 1.0, 2.5}) {
        const double tau = ambient_tail_threshold(lambda, 25, 10240, 1e-9);
        const double trials = 25.0 * 10240.0;
        EXPECT_LT(trials * tail_by_summation(lambda, static_cast<unsigned>(tau)), 1e-9 * (1 + 1e-6));
        EXPECT_GE(trials * tail_by_summation(lambda, static_cast<unsigned>(tau) - 1), 1e-9 * (1 - 1e-6));
    }
    EXPECT_EQ(ambient_tail_threshold(0.0, 25, 10240, 1e-9), 1.0);
}
