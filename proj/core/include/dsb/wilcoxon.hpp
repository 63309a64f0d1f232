#pragma once

#include <Eigen/Core>
#include <string>

namespace dsb::stats {

struct WilcoxonResult {
    double statistic = 0.0;  // W+: rank sum of positive differences
    double p_value = 1.0;    // two-sided
    std::string method;      // "exact", "normal", or "degenerate"
    bool degenerate = false; // every difference was zero
};

/// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped,
/// tied absolute differences get averaged ranks. Exact p by enumerating all
/// 2^k sign assignments when at most 20 nonzero differences remain; normal
/// approximation with tie correction and continuity correction otherwise.
WilcoxonResult wilcoxon_signed_rank(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace dsb::stats
