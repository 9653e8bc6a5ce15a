#pragma once

#include <cstdint>

namespace csspa {

// Counter-style splitmix64 stream. Streams derived from (seed, id) pairs are
// statistically independent, which lets sampling workers own disjoint chunks
// while keeping output identical for any worker count.
class RngStream {
public:
    static constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z += golden;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static RngStream derive(std::uint64_t seed, std::uint64_t stream_id) {
        RngStream r;
        r.state_ = mix(mix(seed) ^ mix(stream_id * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL));
        return r;
    }

    explicit RngStream(std::uint64_t state = 0) : state_(state) {}

    std::uint64_t next_u64() {
        state_ += golden;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1]: zero is excluded so -ln(U) stays finite.
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    std::uint64_t state_;
};

} // namespace csspa
