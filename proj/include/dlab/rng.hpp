#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dlab {

// Seeded random stream with a fixed draw format. std::mt19937_64 produces the
// same bit sequence on every conforming implementation; the uniform/normal
// mappings below avoid std::uniform_real_distribution / normal_distribution,
// whose output is implementation-defined. Streams for batch work are derived
// from (master seed, path), so episode k of iteration i draws the same numbers
// no matter how many threads run the batch.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via Box-Muller; consumes exactly two engine draws.
    double normal() {
        const double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Uniform integer in [0, n). Modulo bias is irrelevant at the n used here
    // (shuffles of a few thousand elements).
    std::uint64_t below(std::uint64_t n) { return n ? gen_() % n : 0; }

private:
    std::mt19937_64 gen_;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}
}  // namespace detail

// Deterministic sub-stream seed for a (master, path...) tuple.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = detail::splitmix64(master);
    for (std::uint64_t p : path) {
        s = detail::splitmix64(s ^ detail::splitmix64(p + 0x632BE59BD9B4E019ull));
    }
    return s;
}

inline RandomStream derive_stream(std::uint64_t master,
                                  std::initializer_list<std::uint64_t> path) {
    return RandomStream(derive_seed(master, path));
}

}  // namespace dlab
