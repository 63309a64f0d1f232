#include "dsb/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace dsb::stats {

WilcoxonResult wilcoxon_signed_rank(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("wilcoxon_signed_rank: length mismatch");
    if (a.size() < 1) throw std::invalid_argument("wilcoxon_signed_rank: empty samples");

    std::vector<double> diff;
    diff.reserve(static_cast<std::size_t>(a.size()));
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (!std::isfinite(d)) throw std::invalid_argument("wilcoxon_signed_rank: non-finite input");
        if (d != 0.0) diff.push_back(d);
    }
    const std::size_t k = diff.size();
    if (k == 0) return {0.0, 1.0, "degenerate", true};

    // Average ranks of |d|, ascending.
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(diff[x]) < std::abs(diff[y]);
    });
    std::vector<double> rank(k);
    std::vector<std::size_t> tie_sizes;
    for (std::size_t i = 0; i < k;) {
        std::size_t j = i;
        while (j < k && std::abs(diff[idx[j]]) == std::abs(diff[idx[i]])) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) rank[idx[t]] = avg;
        tie_sizes.push_back(j - i);
        i = j;
    }

    double w_plus = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        if (diff[i] > 0.0) w_plus += rank[i];

    WilcoxonResult res;
    res.statistic = w_plus;

    if (k <= 20) {
        // Exact two-sided p: enumerate every sign assignment of the fixed ranks.
        const auto total = std::uint64_t{1} << k;
        std::uint64_t le = 0, ge = 0;
        const double tol = 1e-9;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double w = 0.0;
            for (std::size_t i = 0; i < k; ++i)
                if (mask & (std::uint64_t{1} << i)) w += rank[i];
            if (w <= w_plus + tol) ++le;
            if (w >= w_plus - tol) ++ge;
        }
        const double denom = static_cast<double>(total);
        const double p = 2.0 * std::min(static_cast<double>(le), static_cast<double>(ge)) / denom;
        res.p_value = std::min(1.0, p);
        res.method = "exact";
        return res;
    }

    const double kd = static_cast<double>(k);
    const double mean = kd * (kd + 1.0) / 4.0;
    double var = kd * (kd + 1.0) * (2.0 * kd + 1.0) / 24.0;
    for (const std::size_t t : tie_sizes) {
        const double td = static_cast<double>(t);
        var -= (td * td * td - td) / 48.0;
    }
    if (!(var > 0.0)) return {w_plus, 1.0, "degenerate", true};

    const double delta = w_plus - mean;
    const double cc = delta > 0.0 ? -0.5 : (delta < 0.0 ? 0.5 : 0.0);  // continuity correction
    const double z = (delta + cc) / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
    res.method = "normal";
    return res;
}

}  // namespace dsb::stats
