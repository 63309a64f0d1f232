#pragma once

#include <Eigen/Core>
#include <vector>

namespace dsb::density {

/// Gaussian-kernel configuration for the univariate target density.
/// bandwidth <= 0 selects Silverman's rule of thumb at evaluation time.
struct KdeConfig {
    double bandwidth = 0.0;
};

/// Per-row drawing/relevance weights 1 / f(y_i)^alpha.
struct RelevanceWeights {
    Eigen::VectorXd raw;         // 1 / f^alpha, unnormalized (used as loss weights)
    Eigen::VectorXd normalized;  // sums to 1 (used as sampling probabilities)
    double alpha = 1.0;
};

/// Diagonal kernel bandwidths for the latent-space bootstrap. The effective
/// per-dimension noise scale is hmult * per_dim[j].
struct BandwidthSpec {
    Eigen::VectorXd per_dim;
    double hmult = 1.0;
    std::vector<bool> floored;  // true where a constant dimension hit the 1e-8 floor
};

/// Gaussian KDE: f(t) = (1/(n h)) * sum_i phi((t - y_i) / h).
Eigen::VectorXd kde_eval(const Eigen::VectorXd& y, double h, const Eigen::VectorXd& points);

/// h = 0.9 * min(sd, IQR/1.34) * n^(-1/5), sample stddev (n-1), linear
/// interpolation quantiles. Falls back to sd when the IQR is zero; throws
/// when the data are all identical.
double silverman_bandwidth_1d(const Eigen::VectorXd& y);

RelevanceWeights relevance_weights(const Eigen::VectorXd& y, double alpha,
                                   const KdeConfig& kde = {});

/// Per-dimension Scott rule on a latent matrix: h_j = sd_j * n^(-1/(q+4)).
/// Constant dimensions get a 1e-8 floor and are flagged.
BandwidthSpec scott_bandwidth(const Eigen::MatrixXd& mu);

/// Linear-interpolation quantile of an unsorted vector, p in [0, 1].
double quantile(const Eigen::VectorXd& v, double p);

}  // namespace dsb::density
