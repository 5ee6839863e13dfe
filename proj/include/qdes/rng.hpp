#pragma once
#include <cmath>
#include <cstdint>
#include <string>

namespace qdes {

/*
 Deterministic seeded randomness. All randomness in the library flows from a
 64-bit master seed through named child streams (e.g. "trial/7"), so results
 are reproducible bit-for-bit regardless of evaluation order or thread count.

 Gaussians use an explicit Box-Muller transform rather than
 std::normal_distribution, whose algorithm is implementation-defined.
*/

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

class RngStream {
public:
    explicit RngStream(uint64_t seed) : state_(seed) {
        // decorrelate nearby seeds
        splitmix64(state_);
    }
    RngStream(uint64_t master_seed, const std::string& label)
        : RngStream(master_seed ^ fnv1a64(label)) {}

    RngStream child(const std::string& label) const {
        uint64_t s = state_;
        return RngStream(splitmix64(s) ^ fnv1a64(label));
    }
    RngStream child(const std::string& label, uint64_t index) const {
        return child(label + "/" + std::to_string(index));
    }

    uint64_t next_u64() { return splitmix64(state_); }

    // low `count` bits, count <= 64
    uint64_t bits(int count) {
        uint64_t v = next_u64();
        return count >= 64 ? v : v & ((uint64_t(1) << count) - 1);
    }

    bool next_bool() { return next_u64() >> 63; }

    // Bit-granular draw from a buffered bit stream; consumes exactly `count`
    // bits (count <= 64) and keeps the remainder for the next call.
    uint64_t take_bits(int count) {
        uint64_t v = 0;
        for (int i = 0; i < count; ++i) {
            if (buf_len_ == 0) {
                buf_ = next_u64();
                buf_len_ = 64;
            }
            v |= (buf_ & 1) << i;
            buf_ >>= 1;
            --buf_len_;
            ++bits_consumed_;
        }
        return v;
    }
    uint64_t bits_consumed() const { return bits_consumed_; }

    // uniform in [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) {
        // rejection keeps the draw exactly uniform
        uint64_t limit = ~uint64_t(0) - (~uint64_t(0) % n);
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
    uint64_t buf_ = 0;
    int buf_len_ = 0;
    uint64_t bits_consumed_ = 0;
};

}  // namespace qdes
