#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dsb {

/// splitmix64 finalizer; used to derive independent seeds from one root seed.
std::uint64_t mix_seed(std::uint64_t state);

/// Named seed derivation: every RNG stream in the project is keyed by
/// (base seed, purpose tag[, index]) so that adding or removing one consumer
/// never shifts the draws of another.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index);

/// Deterministic random source. All variate transforms are implemented here
/// (not via std distributions, whose output is implementation-defined), so a
/// given seed reproduces the same stream on any conforming standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform01();

    /// Standard normal variate (Box-Muller, no cached spare).
    double normal();

    /// Uniform integer in [0, n). Rejection sampling, n must be > 0.
    std::uint64_t uniform_below(std::uint64_t n);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

}  // namespace dsb
