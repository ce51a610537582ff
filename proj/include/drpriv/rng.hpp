#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace drpriv {

// SplitMix64 step, used to derive decorrelated child seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt));
}

// Deterministic random stream. mt19937_64 is fully specified by the
// standard, but the <random> distributions are not, so the uniform and
// normal transforms are done by hand to keep draws identical across
// compilers. normal() is Box-Muller without caching the second value,
// so the stream state is exactly the engine state (which makes state
// save/restore trivial).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Uniform index in [0, n). Modulo bias is negligible for any n this
    // project uses (n << 2^64) and the result is platform-stable.
    std::size_t index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("RngStream::index: n must be positive");
        return static_cast<std::size_t>(gen_() % n);
    }

    std::string save_state() const {
        std::ostringstream os;
        os << gen_;
        return os.str();
    }

    void restore_state(const std::string& state) {
        std::istringstream is(state);
        is >> gen_;
        if (!is) throw std::runtime_error("RngStream: malformed serialized state");
    }

private:
    static constexpr double kTwoPi = 6.283185307179586476925286766559;
    std::mt19937_64 gen_;
};

}  // namespace drpriv
