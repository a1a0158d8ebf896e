#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "melidar/core_model.hpp"

namespace melidar {

/// S x S spatial weights, row-major, summing to 1.
struct AggregationKernel {
    std::size_t size = 1;
    std::vector<double> weights{1.0};

    static AggregationKernel gaussian(std::size_t size, double sigma);
    static AggregationKernel uniform(std::size_t size);

    [[nodiscard]] int radius() const { return static_cast<int>(size / 2); }
    [[nodiscard]] double at(int dr, int dc) const {
        return weights[static_cast<std::size_t>((dr + radius()) * static_cast<int>(size) + dc + radius())];
    }
};

struct BinCount {
    std::uint32_t bin = 0;
    double count = 0.0;
    constexpr bool operator==(const BinCount&) const = default;
};

/// Photon histogram of one detector holding only the bins that were drawn;
/// entries are sorted by bin and absent bins count zero.
using SparseHistogram = std::vector<BinCount>;

/// Count stored for `bin`, zero when absent.
double lookup(const SparseHistogram& h, std::uint32_t bin);

/// `acc + weight * count` evaluated without contraction, so sparse and dense
/// aggregation round identically.
double accumulate_weighted(double acc, double weight, double count);

/// Spatial weighted sum over each pixel's S x S neighborhood, per time bin,
/// with zero padding at the image border. With `query_bins` the output of
/// pixel p holds exactly query_bins[p]; otherwise the union of the bins
/// present in its neighborhood.
std::vector<SparseHistogram> aggregate_neighborhood(std::span<const SparseHistogram> histograms, std::size_t rows,
                                                    std::size_t cols, const AggregationKernel& kernel,
                                                    std::span<const std::vector<std::uint32_t>> query_bins = {},
                                                    std::size_t threads = 1);

struct EchoCandidate {
    std::uint32_t bin = 0;
    double strength = 0.0;
    constexpr bool operator==(const EchoCandidate&) const = default;
};

/// Up to K bins with strength >= tau, strongest first (ties: smaller bin),
/// greedily suppressing bins within +-nms_window of an accepted bin.
std::vector<EchoCandidate> select_topk(std::span<const BinCount> histogram, std::size_t k, double tau,
                                       std::size_t nms_window);
/// Dense variant: entry i is the count of bin i.
std::vector<EchoCandidate> select_topk_dense(std::span<const double> histogram, std::size_t k, double tau,
                                             std::size_t nms_window);

/// Bin-center range (n + 0.5) * bin_width along `direction`.
Vec3 backproject(std::uint32_t bin, const Vec3& direction, double bin_width);

/// Turns per-pixel candidates into a frame. Reflectance is the candidate
/// strength divided by the mean strength of every selected candidate.
MultiEchoFrame assemble_frame(std::span<const std::vector<EchoCandidate>> candidates, std::span<const double> ambient,
                              std::span<const Vec3> directions, std::size_t rows, std::size_t cols,
                              std::size_t max_echoes, double bin_width);

}  // namespace melidar
