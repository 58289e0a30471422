#ifndef CAUSAL_BENCH_RNG_HPP
#define CAUSAL_BENCH_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <stdexcept>

namespace causal_bench {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Folds keys into a seed. Used to derive one independent stream per
/// (master seed, vars, degree, n, run).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t k : keys)
        h = mix64(h ^ mix64(k));
    return h;
}

/// Portable random stream: std::mt19937_64 (whose output sequence is fixed
/// by the standard) with hand-written transforms, since the std
/// distributions are implementation-defined.
///
///   uniform()        53 high bits / 2^53, in [0, 1)
///   uniform_index(n) rejection sampling on the top of the 64-bit range
///   normal()         Box-Muller, both variates used in turn
class Rng {
public:
    explicit Rng(std::uint64_t seed) : m_engine(seed) {}

    std::uint64_t next_u64() { return m_engine(); }

    double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0)
            throw std::invalid_argument("uniform_index of an empty range");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = m_engine();
        } while (r >= limit);
        return r % n;
    }

    double normal() {
        if (m_has_spare) {
            m_has_spare = false;
            return m_spare;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        m_spare = radius * std::sin(angle);
        m_has_spare = true;
        return radius * std::cos(angle);
    }

    /// Independent child stream keyed by `key`.
    Rng split(std::uint64_t key) { return Rng(derive_seed(m_engine(), {key})); }

private:
    std::mt19937_64 m_engine;
    double m_spare = 0.0;
    bool m_has_spare = false;
};

}  // namespace causal_bench

#endif  // CAUSAL_BENCH_RNG_HPP
