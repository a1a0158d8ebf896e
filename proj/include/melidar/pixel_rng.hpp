#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace melidar {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32-10 block function (Salmon et al., counter-based RNG).
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Identifies one detector's random stream: (seed, view, row, col).
struct PixelKey {
    std::uint64_t seed = 0;
    std::uint32_t view = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;
};

/// UniformRandomBitGenerator over the keyed stream for one (pixel, bin).
/// Draws depend only on the key, the bin and how many values were consumed,
/// never on evaluation order or thread.
class PixelStream {
public:
    using result_type = std::uint64_t;

    PixelStream(const PixelKey& key, std::uint32_t bin);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

private:
    void refill();

    PhiloxKey key_;
    PhiloxCounter ctr_;
    std::array<std::uint64_t, 2> buf_{};
    unsigned used_ = 2;
    std::uint32_t block_ = 0;
};

}  // namespace melidar
