#pragma once

#include <cmath>
#include <cstdint>

namespace cavitylb {

// Philox 4x32-10 counter-based generator (Salmon et al., SC'11).
// Stream layout: the 64-bit stream id becomes the key, the 128-bit counter
// enumerates blocks. Identical (stream, counter) pairs give identical output
// on every platform, which is what makes replicated runs bit-reproducible.
class philox_stream {
  public:
    explicit philox_stream(std::uint64_t stream_id)
        : key0_(static_cast<std::uint32_t>(stream_id)),
          key1_(static_cast<std::uint32_t>(stream_id >> 32)) {}

    std::uint64_t next_u64() {
        if (pos_ >= 2) refill();
        return out_[pos_++];
    }

    // uniform in [0, 1) with 53 random bits
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // exponential with the given mean; never returns inf
    double next_exponential(double mean = 1.0) { return -mean * std::log1p(-next_unit()); }

    // uniform integer in [0, n), unbiased by rejection
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = -n % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

  private:
    static void round_once(std::uint32_t ctr[4], const std::uint32_t key[2]) {
        constexpr std::uint64_t mul_a = 0xD2511F53u;
        constexpr std::uint64_t mul_b = 0xCD9E8D57u;
        const std::uint64_t prod0 = mul_a * ctr[0];
        const std::uint64_t prod1 = mul_b * ctr[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(prod0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(prod0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(prod1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(prod1);
        const std::uint32_t next[4] = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        ctr[0] = next[0];
        ctr[1] = next[1];
        ctr[2] = next[2];
        ctr[3] = next[3];
    }

    void refill() {
        std::uint32_t ctr[4] = {static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32), 0u, 0u};
        std::uint32_t key[2] = {key0_, key1_};
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            round_once(ctr, key);
        }
        out_[0] = (static_cast<std::uint64_t>(ctr[1]) << 32) | ctr[0];
        out_[1] = (static_cast<std::uint64_t>(ctr[3]) << 32) | ctr[2];
        ++block_;
        pos_ = 0;
    }

    std::uint32_t key0_, key1_;
    std::uint64_t block_ = 0;
    std::uint64_t out_[2] = {0, 0};
    int pos_ = 2;
};

}  // namespace cavitylb
