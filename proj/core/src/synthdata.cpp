#include "dsb/synthdata.hpp"

#include <stdexcept>

#include "dsb/rng.hpp"

namespace dsb::synth {

std::string nonlinearity_name(Nonlinearity n) {
    switch (n) {
        case Nonlinearity::linear: return "linear";
        case Nonlinearity::quadratic: return "quadratic";
        case Nonlinearity::interaction: return "interaction";
    }
    throw std::logic_error("nonlinearity_name: unknown value");
}

Nonlinearity nonlinearity_from_name(std::string_view name) {
    if (name == "linear") return Nonlinearity::linear;
    if (name == "quadratic") return Nonlinearity::quadratic;
    if (name == "interaction") return Nonlinearity::interaction;
    throw std::invalid_argument("unknown nonlinearity: " + std::string(name));
}

tabular::Dataset make_imbalanced(const SynthSpec& spec) {
    if (spec.n < 10) throw std::invalid_argument("make_imbalanced: n must be >= 10");
    if (spec.p_numeric + spec.p_categorical < 1)
        throw std::invalid_argument("make_imbalanced: need at least one feature");
    if (!(spec.tail_fraction > 0.0 && spec.tail_fraction < 0.5))
        throw std::invalid_argument("make_imbalanced: tail_fraction must be in (0, 0.5)");
    if (!(spec.noise_sd > 0.0))
        throw std::invalid_argument("make_imbalanced: noise_sd must be positive");

    const auto n = static_cast<Eigen::Index>(spec.n);

    // Independent streams per concern, so e.g. adding a feature never changes y.
    Rng y_rng(derive_seed(spec.rng_seed, "synth-y"));
    Rng h_rng(derive_seed(spec.rng_seed, "synth-h"));
    Rng x_rng(derive_seed(spec.rng_seed, "synth-x"));
    Rng c_rng(derive_seed(spec.rng_seed, "synth-c"));

    Eigen::VectorXd y(n), h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double shift = y_rng.uniform01() < spec.tail_fraction ? 3.0 : 0.0;
        y[i] = shift + y_rng.normal();
        h[i] = h_rng.normal();
    }

    tabular::Dataset ds;
    const auto total_cols = spec.p_numeric + spec.p_categorical + 1;
    ds.cells.resize(n, static_cast<Eigen::Index>(total_cols));

    for (std::size_t j = 0; j < spec.p_numeric; ++j) {
        const double cj = 1.0 / (1.0 + 0.25 * static_cast<double>(j));
        for (Eigen::Index i = 0; i < n; ++i) {
            double signal = cj * y[i];
            switch (spec.nonlinearity) {
                case Nonlinearity::linear: break;
                case Nonlinearity::quadratic:
                    if (j % 2 == 1) signal += 0.3 * y[i] * y[i];
                    break;
                case Nonlinearity::interaction:
                    if (j % 2 == 1) signal += 0.3 * y[i] * h[i];
                    break;
            }
            ds.cells(i, static_cast<Eigen::Index>(j)) = signal + spec.noise_sd * x_rng.normal();
        }
        ds.columns.push_back({"x" + std::to_string(j), tabular::ColumnKind::numeric, {}});
    }

    const std::vector<std::string> levels{"L0", "L1", "L2", "L3"};
    for (std::size_t j = 0; j < spec.p_categorical; ++j) {
        const auto col = static_cast<Eigen::Index>(spec.p_numeric + j);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = y[i] + spec.noise_sd * c_rng.normal();
            double level = 0.0;
            if (t > -0.5) level = 1.0;
            if (t > 0.5) level = 2.0;
            if (t > 1.5) level = 3.0;
            ds.cells(i, col) = level;
        }
        ds.columns.push_back({"c" + std::to_string(j), tabular::ColumnKind::categorical, levels});
    }

    ds.cells.col(static_cast<Eigen::Index>(total_cols - 1)) = y;
    ds.columns.push_back({"y", tabular::ColumnKind::numeric, {}});
    ds.target = total_cols - 1;
    tabular::validate(ds);
    return ds;
}

}  // namespace dsb::synth
