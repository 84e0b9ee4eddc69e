#pragma once

#include <cmath>
#include <cstdint>

namespace netobs {

// Counter-based seeded generator built on the splitmix64 finalizer.
// Substreams derived with split() depend only on (seed, stream id), never on
// how many numbers the parent has produced, so parallel and serial sweeps
// draw identical values. All operations are pure integer arithmetic and
// therefore reproduce bit-identically across platforms.
class SplitRng {
  public:
    explicit SplitRng(std::uint64_t seed) : state_(mix(seed + kGamma)) {}

    // Independent child stream; deterministic in (parent state, stream).
    SplitRng split(std::uint64_t stream) const {
        return SplitRng(Raw{}, mix(state_ ^ mix(kGamma * (stream + 1))));
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix(state_);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0. Lemire reduction without rejection
    // bias beyond 2^-64, which is irrelevant at the sample sizes used here.
    int below(int n) {
        return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                                 static_cast<unsigned __int128>(n)) >>
                                64);
    }

    // Standard normal via Box-Muller; one draw consumes two uniforms.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

  private:
    struct Raw {};
    SplitRng(Raw, std::uint64_t state) : state_(state) {}

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

    std::uint64_t state_;
};

}  // namespace netobs
