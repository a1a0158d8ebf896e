#include "melidar/pixel_rng.hpp"

#include <stdexcept>

namespace melidar {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

// Counter layout: {row, col, bin, view << 16 | block}.
PixelStream::PixelStream(const PixelKey& key, std::uint32_t bin)
    : key_{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)},
      ctr_{key.row, key.col, bin, key.view << 16} {
    if (key.view > 0xFFFFu) throw std::invalid_argument("view index exceeds 16 bits");
}

void PixelStream::refill() {
    if (block_ > 0xFFFFu) throw std::runtime_error("pixel stream exhausted");
    PhiloxCounter c = ctr_;
    c[3] |= block_++;
    const PhiloxCounter r = philox4x32_10(c, key_);
    buf_[0] = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
    buf_[1] = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
    used_ = 0;
}

PixelStream::result_type PixelStream::operator()() {
    if (used_ == 2) refill();
    return buf_[used_++];
}

}  // namespace melidar
