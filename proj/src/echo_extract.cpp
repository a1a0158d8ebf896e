#include "melidar/echo_extract.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "melidar/parallel.hpp"

namespace melidar {

AggregationKernel AggregationKernel::gaussian(std::size_t size, double sigma) {
    if (size == 0 || size % 2 == 0) throw ConfigError("kernel size must be odd");
    if (!(sigma > 0.0)) throw ConfigError("kernel sigma must be positive");
    AggregationKernel k;
    k.size = size;
    k.weights.assign(size * size, 0.0);
    const int r = static_cast<int>(size / 2);
    double sum = 0.0;
    for (int dr = -r; dr <= r; ++dr) {
        for (int dc = -r; dc <= r; ++dc) {
            const double w = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
            k.weights[static_cast<std::size_t>((dr + r) * static_cast<int>(size) + dc + r)] = w;
            sum += w;
        }
    }
    for (double& w : k.weights) w /= sum;
    return k;
}

AggregationKernel AggregationKernel::uniform(std::size_t size) {
    if (size == 0 || size % 2 == 0) throw ConfigError("kernel size must be odd");
    AggregationKernel k;
    k.size = size;
    k.weights.assign(size * size, 1.0 / static_cast<double>(size * size));
    return k;
}

double lookup(const SparseHistogram& h, std::uint32_t bin) {
    auto it = std::lower_bound(h.begin(), h.end(), bin, [](const BinCount& e, std::uint32_t b) { return e.bin < b; });
    return (it != h.end() && it->bin == bin) ? it->count : 0.0;
}

#pragma GCC push_options
#pragma GCC optimize("fp-contract=off")
double accumulate_weighted(double acc, double weight, double count) {
    const double term = weight * count;
    return acc + term;
}
#pragma GCC pop_options

std::vector<SparseHistogram> aggregate_neighborhood(std::span<const SparseHistogram> histograms, std::size_t rows,
                                                    std::size_t cols, const AggregationKernel& kernel,
                                                    std::span<const std::vector<std::uint32_t>> query_bins,
                                                    std::size_t threads) {
    const int r = kernel.radius();
    const auto nr = static_cast<int>(rows);
    const auto nc = static_cast<int>(cols);
    std::vector<SparseHistogram> out(rows * cols);

    parallel_for(rows, threads, [&](std::size_t row_begin, std::size_t row_end) {
        std::vector<std::uint32_t> bins;
        for (int pr = static_cast<int>(row_begin); pr < static_cast<int>(row_end); ++pr) {
            for (int pc = 0; pc < nc; ++pc) {
                const std::size_t p = static_cast<std::size_t>(pr) * cols + static_cast<std::size_t>(pc);
                if (!query_bins.empty()) {
                    bins = query_bins[p];
                } else {
                    bins.clear();
                    for (int dr = -r; dr <= r; ++dr) {
                        for (int dc = -r; dc <= r; ++dc) {
                            const int qr = pr + dr;
                            const int qc = pc + dc;
                            if (qr < 0 || qc < 0 || qr >= nr || qc >= nc) continue;
                            for (const auto& e : histograms[static_cast<std::size_t>(qr) * cols + static_cast<std::size_t>(qc)]) {
                                bins.push_back(e.bin);
                            }
                        }
                    }
                    std::sort(bins.begin(), bins.end());
                    bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
                }

                auto& dst = out[p];
                dst.reserve(bins.size());
                for (std::uint32_t b : bins) {
                    double acc = 0.0;
                    for (int dr = -r; dr <= r; ++dr) {
                        for (int dc = -r; dc <= r; ++dc) {
                            const int qr = pr + dr;
                            const int qc = pc + dc;
                            if (qr < 0 || qc < 0 || qr >= nr || qc >= nc) continue;
                            const double c =
                                lookup(histograms[static_cast<std::size_t>(qr) * cols + static_cast<std::size_t>(qc)], b);
                            if (c != 0.0) acc = accumulate_weighted(acc, kernel.at(dr, dc), c);
                        }
                    }
                    dst.push_back({b, acc});
                }
            }
        }
    });
    return out;
}

std::vector<EchoCandidate> select_topk(std::span<const BinCount> histogram, std::size_t k, double tau,
                                       std::size_t nms_window) {
    std::vector<EchoCandidate> picked;
    if (k == 0) return picked;
    std::vector<std::size_t> order;
    order.reserve(histogram.size());
    for (std::size_t i = 0; i < histogram.size(); ++i) {
        if (histogram[i].count >= tau) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (histogram[a].count != histogram[b].count) return histogram[a].count > histogram[b].count;
        return histogram[a].bin < histogram[b].bin;
    });
    for (std::size_t i : order) {
        const auto bin = histogram[i].bin;
        const bool suppressed = std::any_of(picked.begin(), picked.end(), [&](const EchoCandidate& c) {
            const auto gap = bin > c.bin ? bin - c.bin : c.bin - bin;
            return gap <= nms_window;
        });
        if (suppressed) continue;
        picked.push_back({bin, histogram[i].count});
        if (picked.size() == k) break;
    }
    return picked;
}

std::vector<EchoCandidate> select_topk_dense(std::span<const double> histogram, std::size_t k, double tau,
                                             std::size_t nms_window) {
    std::vector<BinCount> entries;
    for (std::size_t i = 0; i < histogram.size(); ++i) {
        if (histogram[i] >= tau) entries.push_back({static_cast<std::uint32_t>(i), histogram[i]});
    }
    return select_topk(entries, k, tau, nms_window);
}

Vec3 backproject(std::uint32_t bin, const Vec3& direction, double bin_width) {
    const double range = (static_cast<double>(bin) + 0.5) * bin_width;
    return direction * range;
}

MultiEchoFrame assemble_frame(std::span<const std::vector<EchoCandidate>> candidates, std::span<const double> ambient,
                              std::span<const Vec3> directions, std::size_t rows, std::size_t cols,
                              std::size_t max_echoes, double bin_width) {
    MultiEchoFrame frame;
    frame.height = rows;
    frame.width = cols;
    frame.max_echoes = max_echoes;
    frame.bin_width = bin_width;
    frame.groups.resize(rows * cols);
    frame.beam_directions.assign(directions.begin(), directions.end());

    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& cs : candidates) {
        for (std::size_t k = 0; k < std::min(cs.size(), max_echoes); ++k) {
            sum += cs[k].strength;
            ++n;
        }
    }
    const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;

    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            auto& g = frame.groups[i];
            g.pixel = {static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)};
            g.ambient = ambient.empty() ? 0.0 : ambient[i];
            const auto& cs = candidates[i];
            for (std::size_t k = 0; k < std::min(cs.size(), max_echoes); ++k) {
                Echo e;
                e.bin = cs[k].bin;
                e.strength = cs[k].strength;
                e.reflectance = mean > 0.0 ? cs[k].strength / mean : 0.0;
                e.point = backproject(cs[k].bin, directions[i], bin_width);
                g.echoes.push_back(e);
            }
        }
    }
    return frame;
}

}  // namespace melidar
