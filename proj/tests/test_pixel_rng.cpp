#include <gtest/gtest.h>

#include <set>

#include "melidar/pixel_rng.hpp"

using namespace melidar;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswerZero) {
    const auto r = philox4x32_10({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(r, (PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
    const auto r = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(r, (PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
    const auto r = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(r, (PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(PixelStream, SameKeySameSequence) {
    PixelStream a({42, 1, 7, 9}, 100);
    PixelStream b({42, 1, 7, 9}, 100);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(a(), b());
}

TEST(PixelStream, KeysAreIndependentStreams) {
    std::set<std::uint64_t> firsts;
    for (std::uint32_t row = 0; row < 4; ++row) {
        for (std::uint32_t col = 0; col < 4; ++col) {
            for (std::uint32_t bin = 0; bin < 4; ++bin) {
                for (std::uint32_t view = 0; view < 2; ++view) {
                    for (std::uint64_t seed : {0ull, 1ull, 1ull << 40}) {
                        PixelStream s({seed, view, row, col}, bin);
                        firsts.insert(s());
                    }
                }
            }
        }
    }
    EXPECT_EQ(firsts.size(), 4u * 4 * 4 * 2 * 3);
}

TEST(PixelStream, LongSequencesDoNotRepeatEarly) {
    PixelStream s({3, 0, 0, 0}, 0);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 10000; ++i) seen.insert(s());
    EXPECT_EQ(seen.size(), 10000u);
}

TEST(PixelStream, UniformBitBalance) {
    PixelStream s({11, 0, 5, 5}, 17);
    std::array<int, 64> ones{};
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto v = s();
        for (int b = 0; b < 64; ++b) ones[b] += (v >> b) & 1;
    }
    // each bit is Bernoulli(1/2): sd = sqrt(n)/2 ~ 71, allow 5 sd
    for (int b = 0; b < 64; ++b) EXPECT_NEAR(ones[b], n / 2, 5 * 71) << "bit " << b;
}
