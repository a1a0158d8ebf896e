#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "melidar/core_model.hpp"
#include "melidar/pixel_rng.hpp"
#include "melidar/polar_optics.hpp"

namespace melidar {

struct EmptySceneError : Error {
    using Error::Error;
};

/// Per-detector Poisson rates. The signal rate applies only at `signal_bin`;
/// the ambient rate applies uniformly to every bin.
struct RateField {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> signal_rate;
    std::vector<std::uint32_t> signal_bin;
    std::vector<std::uint8_t> has_signal;  ///< pixel has a valid surface return
    std::vector<double> ambient_rate;
    std::vector<std::uint32_t> view;       ///< view index used in the RNG key

    RateField() = default;
    RateField(std::size_t r, std::size_t c)
        : rows(r), cols(c), signal_rate(r * c, 0.0), signal_bin(r * c, 0), has_signal(r * c, 0),
          ambient_rate(r * c, 0.0), view(r * c, 0) {}

    [[nodiscard]] std::size_t size() const { return rows * cols; }
    [[nodiscard]] double max_ambient() const;
};

/// Divides by the mean over `valid` entries; an all-zero field stays zero.
std::vector<double> normalize_by_mean(std::span<const double> values, std::span<const std::uint8_t> valid);

/// cos of the incidence angle, max(0, -n.d), for sensor-frame unit normals.
Raster incidence_cosine(const Raster& normals, std::span<const Vec3> rays);

/// Fills signal_rate / signal_bin / has_signal:
/// f = red * cos / range^2, rate = sbr * f / mean(f), bin = floor(range / bin_width).
void compute_signal_rate(RateField& field, const Raster& red, const Raster& cos_incidence, const Raster& range,
                         double sbr, double bin_width, std::uint32_t bins);

/// Fills ambient_rate = red / mean(red) over validly resampled pixels.
void compute_ambient_rate(RateField& field, const Raster& red);

/// One Poisson draw from the stream keyed by (key, bin).
std::uint32_t sample_poisson(const PixelKey& key, std::uint32_t bin, double lambda);

/// Photon count of detector `pixel` (row-major index) in time bin `bin`.
std::uint32_t sample_bin(const RateField& rates, std::uint64_t seed, std::size_t pixel, std::uint32_t bin);

/// Smallest integer threshold t such that, for `bins` time bins and
/// `kernel_taps` neighbors each at most `lambda_max`, the chance that any
/// ambient-only aggregated bin of one pixel reaches t is below `probability`.
double ambient_tail_threshold(double lambda_max, std::size_t kernel_taps, std::uint32_t bins, double probability);

/// P(X >= t) for X ~ Poisson(lambda).
double poisson_upper_tail(double lambda, std::uint32_t t);

}  // namespace melidar
