#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace signsynth::nn {

// Deterministic RNG. Distribution transforms are implemented explicitly
// (std:: distributions are implementation-defined) so identical seeds give
// identical streams everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed), base_seed_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n).
    std::int64_t uniform_int(std::int64_t n) {
        return static_cast<std::int64_t>(uniform() * static_cast<double>(n)) % n;
    }

    // Standard normal via Box-Muller; caches the second draw.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Categorical draw from non-negative weights (need not be normalized).
    int categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    // Derive an independent stream (for per-sequence generation).
    Rng fork(std::uint64_t stream) const {
        std::seed_seq seq{static_cast<std::uint32_t>(base_seed_),
                          static_cast<std::uint32_t>(base_seed_ >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        Rng r;
        r.engine_.seed(seq);
        return r;
    }

    void reseed(std::uint64_t seed) {
        engine_.seed(seed);
        base_seed_ = seed;
        has_cached_ = false;
    }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_ << ' ' << (has_cached_ ? 1 : 0) << ' '
           << std::bit_cast<std::uint64_t>(cached_) << ' ' << base_seed_;
        return os.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream is(s);
        int hc = 0;
        std::uint64_t cbits = 0;
        is >> engine_ >> hc >> cbits >> base_seed_;
        cached_ = std::bit_cast<double>(cbits);
        has_cached_ = hc != 0;
    }

  private:
    explicit Rng(std::mt19937_64 e) : engine_(e) {}

    std::mt19937_64 engine_;
    std::uint64_t base_seed_ = 0;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace signsynth::nn
