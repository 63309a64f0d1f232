#include "dsb/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dsb::density {

namespace {

double sample_stddev(const Eigen::VectorXd& v) {
    const auto n = v.size();
    const double mean = v.mean();
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = v[i] - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace

double quantile(const Eigen::VectorXd& v, double p) {
    if (v.size() == 0) throw std::invalid_argument("quantile: empty vector");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile: p outside [0, 1]");
    std::vector<double> s(v.data(), v.data() + v.size());
    std::sort(s.begin(), s.end());
    const double pos = p * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= s.size()) return s.back();
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[lo + 1] - s[lo]);
}

Eigen::VectorXd kde_eval(const Eigen::VectorXd& y, double h, const Eigen::VectorXd& points) {
    if (y.size() == 0) throw std::invalid_argument("kde_eval: empty sample");
    if (!(h > 0.0)) throw std::invalid_argument("kde_eval: bandwidth must be positive");
    const double norm = 1.0 / (static_cast<double>(y.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    Eigen::VectorXd out(points.size());
    for (Eigen::Index p = 0; p < points.size(); ++p) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double u = (points[p] - y[i]) / h;
            acc += std::exp(-0.5 * u * u);
        }
        out[p] = norm * acc;
    }
    return out;
}

double silverman_bandwidth_1d(const Eigen::VectorXd& y) {
    if (y.size() < 2) throw std::invalid_argument("silverman_bandwidth_1d: need at least 2 points");
    const double sd = sample_stddev(y);
    if (sd == 0.0)
        throw std::invalid_argument(
            "silverman_bandwidth_1d: all values identical, bandwidth undefined");
    const double iqr = quantile(y, 0.75) - quantile(y, 0.25);
    // A heavily tied sample can have zero IQR with nonzero spread; the sd term
    // still gives a usable scale there.
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(y.size()), -0.2);
}

RelevanceWeights relevance_weights(const Eigen::VectorXd& y, double alpha, const KdeConfig& kde) {
    if (y.size() == 0) throw std::invalid_argument("relevance_weights: empty sample");
    if (alpha < 0.0) throw std::invalid_argument("relevance_weights: alpha must be >= 0");
    const double h = kde.bandwidth > 0.0 ? kde.bandwidth : silverman_bandwidth_1d(y);
    const Eigen::VectorXd dens = kde_eval(y, h, y);
    RelevanceWeights w;
    w.alpha = alpha;
    w.raw.resize(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(dens[i] > 0.0))
            throw std::runtime_error("relevance_weights: density underflow at a sample point");
        w.raw[i] = std::pow(dens[i], -alpha);
    }
    w.normalized = w.raw / w.raw.sum();
    return w;
}

BandwidthSpec scott_bandwidth(const Eigen::MatrixXd& mu) {
    if (mu.rows() < 2) throw std::invalid_argument("scott_bandwidth: need at least 2 rows");
    const auto n = mu.rows();
    const auto q = mu.cols();
    BandwidthSpec spec;
    spec.per_dim.resize(q);
    spec.floored.assign(static_cast<std::size_t>(q), false);
    const double scale = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(q) + 4.0));
    for (Eigen::Index j = 0; j < q; ++j) {
        const double sd = sample_stddev(mu.col(j));
        double h = sd * scale;
        if (h < 1e-8) {
            h = 1e-8;
            spec.floored[static_cast<std::size_t>(j)] = true;
        }
        spec.per_dim[j] = h;
    }
    return spec;
}

}  // namespace dsb::density
