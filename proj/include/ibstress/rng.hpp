#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ibstress {

// All randomness in the toolkit flows through this header. std::mt19937_64 is
// fully specified by the standard; the variate transforms below are hand-rolled
// because the std distributions are implementation-defined and would break
// byte-level reproducibility across standard libraries.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed-splitting scheme (kSeedScheme = 1): mix the stream index into the
// master seed with two splitmix64 rounds. Streams are independent of the
// order in which they are consumed, so parallel workers can pick up any
// stream index and still reproduce the serial run.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    (void)splitmix64(s);
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1); safe under log().
    double uniform_open() {
        return (static_cast<double>(gen_() >> 12) + 0.5) * 0x1.0p-52;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

    // Box-Muller, two uniforms per draw (no cached spare, keeps call sites
    // deterministic regardless of interleaving).
    double normal(double mean, double sigma) {
        const double r = std::sqrt(-2.0 * std::log(uniform_open()));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * uniform();
        return mean + sigma * r * std::cos(theta);
    }

    double lognormal(double log_median, double log_sigma) {
        return std::exp(normal(log_median, log_sigma));
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace ibstress
