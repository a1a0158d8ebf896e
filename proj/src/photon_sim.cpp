#include "melidar/photon_sim.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/poisson_distribution.hpp>

namespace melidar {

double RateField::max_ambient() const {
    double m = 0.0;
    for (double a : ambient_rate) m = std::max(m, a);
    return m;
}

std::vector<double> normalize_by_mean(std::span<const double> values, std::span<const std::uint8_t> valid) {
    std::vector<double> out(values.size(), 0.0);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!valid[i]) continue;
        sum += values[i];
        ++n;
    }
    if (n == 0 || sum == 0.0) return out;
    const double mean = sum / static_cast<double>(n);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (valid[i]) out[i] = values[i] / mean;
    }
    return out;
}

Raster incidence_cosine(const Raster& normals, std::span<const Vec3> rays) {
    Raster out(normals.rows, normals.cols, 1);
    for (std::size_t i = 0; i < rays.size(); ++i) {
        if (!normals.valid[i]) continue;
        const Vec3 n = Vec3{normals.data[3 * i], normals.data[3 * i + 1], normals.data[3 * i + 2]}.normalized();
        out.data[i] = std::clamp(-n.dot(rays[i]), 0.0, 1.0);
        out.valid[i] = 1;
    }
    return out;
}

void compute_signal_rate(RateField& field, const Raster& red, const Raster& cos_incidence, const Raster& range,
                         double sbr, double bin_width, std::uint32_t bins) {
    const std::size_t n = field.size();
    std::vector<double> raw(n, 0.0);
    std::vector<std::uint8_t> valid(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!red.valid[i] || !cos_incidence.valid[i] || !range.valid[i]) continue;
        const double r = range.data[i];
        if (!(r > 0.0)) continue;
        raw[i] = std::max(0.0, red.data[i * red.channels]) * cos_incidence.data[i] / (r * r);
        valid[i] = 1;
    }
    if (std::none_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; })) {
        throw EmptySceneError("no detector sees a valid surface");
    }
    const auto norm = normalize_by_mean(raw, valid);
    for (std::size_t i = 0; i < n; ++i) {
        field.has_signal[i] = valid[i];
        if (!valid[i]) {
            field.signal_rate[i] = 0.0;
            field.signal_bin[i] = 0;
            continue;
        }
        field.signal_rate[i] = sbr * norm[i];
        const double b = std::floor(range.data[i] / bin_width);
        field.signal_bin[i] = static_cast<std::uint32_t>(std::clamp(b, 0.0, static_cast<double>(bins - 1)));
    }
}

void compute_ambient_rate(RateField& field, const Raster& red) {
    std::vector<double> r(field.size(), 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::max(0.0, red.data[i * red.channels]);
    field.ambient_rate = normalize_by_mean(r, red.valid);
}

std::uint32_t sample_poisson(const PixelKey& key, std::uint32_t bin, double lambda) {
    if (!(lambda > 0.0)) return 0;
    if (!std::isfinite(lambda)) throw ConfigError("Poisson rate is not finite");
    PixelStream stream(key, bin);
    boost::random::poisson_distribution<std::uint32_t, double> dist(lambda);
    return dist(stream);
}

std::uint32_t sample_bin(const RateField& rates, std::uint64_t seed, std::size_t pixel, std::uint32_t bin) {
    double lambda = rates.ambient_rate[pixel];
    if (rates.has_signal[pixel] && rates.signal_bin[pixel] == bin) lambda += rates.signal_rate[pixel];
    const PixelKey key{seed, rates.view[pixel], static_cast<std::uint32_t>(pixel / rates.cols),
                       static_cast<std::uint32_t>(pixel % rates.cols)};
    return sample_poisson(key, bin, lambda);
}

double poisson_upper_tail(double lambda, std::uint32_t t) {
    if (t == 0) return 1.0;
    if (!(lambda > 0.0)) return 0.0;
    // P(X >= t) equals the regularized lower incomplete gamma P(t, lambda).
    return boost::math::gamma_p(static_cast<double>(t), lambda);
}

double ambient_tail_threshold(double lambda_max, std::size_t kernel_taps, std::uint32_t bins, double probability) {
    // A weighted mean (weights sum to 1) of the neighbors' counts can only
    // reach t if some neighbor's count reaches t, so a union bound over
    // neighbors and bins suffices.
    const double trials = static_cast<double>(kernel_taps) * static_cast<double>(bins);
    std::uint32_t t = 1;
    while (trials * poisson_upper_tail(lambda_max, t) >= probability) ++t;
    return static_cast<double>(t);
}

}  // namespace melidar
