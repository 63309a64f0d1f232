#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "dsb/tabular.hpp"

namespace dsb::synth {

enum class Nonlinearity { linear, quadratic, interaction };

std::string nonlinearity_name(Nonlinearity n);
Nonlinearity nonlinearity_from_name(std::string_view name);

/// Recipe for an imbalanced-regression toy table: the target is a Gaussian
/// bulk plus a rare upper tail shifted by 3 stddevs, features follow the
/// target through the chosen nonlinearity plus noise, and categorical
/// features bin a noisy copy of the target at fixed cutpoints.
struct SynthSpec {
    std::size_t n = 1000;
    std::size_t p_numeric = 5;
    std::size_t p_categorical = 0;
    double tail_fraction = 0.05;
    double noise_sd = 0.5;
    Nonlinearity nonlinearity = Nonlinearity::quadratic;
    std::uint64_t rng_seed = 0;
};

/// Deterministic given spec.rng_seed. Columns: x0..x{p-1} numeric,
/// c0..c{p-1} categorical (4 levels), then the target column "y".
tabular::Dataset make_imbalanced(const SynthSpec& spec);

}  // namespace dsb::synth
