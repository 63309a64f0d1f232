#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here is written from the mathematical definition, by a different
// route than the production code (explicit loops, alternative solvers,
// exhaustive enumeration), so agreement is evidence rather than tautology.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Kernel density: literal double loop over points x rows.
inline Eigen::VectorXd kde_brute(const Eigen::VectorXd& y, double h, const Eigen::VectorXd& pts) {
    const double inv = 1.0 / std::sqrt(2.0 * M_PI);
    Eigen::VectorXd out(pts.size());
    for (Eigen::Index p = 0; p < pts.size(); ++p) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double u = (pts[p] - y[i]) / h;
            acc += inv * std::exp(-0.5 * u * u);
        }
        out[p] = acc / (static_cast<double>(y.size()) * h);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ridge regression solved as one explicit normal-equations system with an
// intercept column (intercept unpenalized), via a QR factorization.
struct RidgeOracle {
    Eigen::VectorXd coef;
    double intercept = 0.0;
};

inline RidgeOracle ridge_normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                          double lambda) {
    const Eigen::Index n = X.rows(), d = X.cols();
    Eigen::MatrixXd A(n, d + 1);
    A.col(0).setOnes();
    A.rightCols(d) = X;
    Eigen::MatrixXd G = A.transpose() * A;
    for (Eigen::Index j = 1; j <= d; ++j) G(j, j) += lambda;  // skip the intercept
    const Eigen::VectorXd sol = G.colPivHouseholderQr().solve(A.transpose() * y);
    RidgeOracle r;
    r.intercept = sol[0];
    r.coef = sol.tail(d);
    return r;
}

// ---------------------------------------------------------------------------
// k-nearest-neighbour mean via a full stable sort on (distance, index).
inline double knn_exhaustive(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& query, std::size_t k) {
    std::vector<std::pair<double, Eigen::Index>> order;
    order.reserve(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        order.emplace_back((X.row(i).transpose() - query).squaredNorm(), i);
    std::stable_sort(order.begin(), order.end());
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += y[order[j].second];
    return acc / static_cast<double>(k);
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank by exhaustive enumeration of every sign assignment.
struct WilcoxonOracle {
    double w_plus = 0.0;
    double p_two_sided = 1.0;
    bool degenerate = false;  // every difference was zero
};

inline WilcoxonOracle wilcoxon_enumeration(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    std::vector<double> absd;
    std::vector<bool> positive;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d == 0.0) continue;
        absd.push_back(std::fabs(d));
        positive.push_back(d > 0.0);
    }
    WilcoxonOracle out;
    const std::size_t k = absd.size();
    if (k == 0) {
        out.degenerate = true;
        return out;
    }
    // Average-rank computation on |d|.
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return absd[x] < absd[y]; });
    std::vector<double> rank(k, 0.0);
    for (std::size_t s = 0; s < k;) {
        std::size_t e = s;
        while (e + 1 < k && absd[idx[e + 1]] == absd[idx[s]]) ++e;
        const double avg = (static_cast<double>(s) + static_cast<double>(e)) / 2.0 + 1.0;
        for (std::size_t t = s; t <= e; ++t) rank[idx[t]] = avg;
        s = e + 1;
    }
    for (std::size_t i = 0; i < k; ++i)
        if (positive[i]) out.w_plus += rank[i];

    // All 2^k sign vectors; count assignments at or beyond the observed W+.
    const std::uint64_t total = 1ull << k;
    std::uint64_t le = 0, ge = 0;
    const double eps = 1e-9;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            if (mask & (1ull << i)) w += rank[i];
        if (w <= out.w_plus + eps) ++le;
        if (w >= out.w_plus - eps) ++ge;
    }
    const double pl = static_cast<double>(le) / static_cast<double>(total);
    const double pg = static_cast<double>(ge) / static_cast<double>(total);
    out.p_two_sided = std::min(1.0, 2.0 * std::min(pl, pg));
    return out;
}

// ---------------------------------------------------------------------------
// Correlation penalty from the covariance matrix, explicit loops, population
// moments: sum over ordered pairs (a,b), a != b, of r(z_a, z_b)^2.
inline double corr_penalty_cov(const Eigen::MatrixXd& Z) {
    const Eigen::Index b = Z.rows(), q = Z.cols();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(q);
    for (Eigen::Index j = 0; j < q; ++j) {
        for (Eigen::Index i = 0; i < b; ++i) mean[j] += Z(i, j);
        mean[j] /= static_cast<double>(b);
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index j = 0; j < q; ++j)
        for (Eigen::Index l = 0; l < q; ++l) {
            for (Eigen::Index i = 0; i < b; ++i)
                cov(j, l) += (Z(i, j) - mean[j]) * (Z(i, l) - mean[l]);
            cov(j, l) /= static_cast<double>(b);
        }
    double penalty = 0.0;
    for (Eigen::Index j = 0; j < q; ++j)
        for (Eigen::Index l = 0; l < q; ++l) {
            if (j == l) continue;
            const double denom = cov(j, j) * cov(l, l);
            if (denom <= 0.0) continue;  // constant column: correlation defined as 0
            const double r = cov(j, l) / std::sqrt(denom);
            penalty += r * r;
        }
    return penalty;
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma (series + continued fraction), for the
// chi-square survival function used by goodness-of-fit checks.
namespace detail {

inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 500; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// P(Chi2_df > x): upper-tail probability of the chi-square distribution.
inline double chi_square_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    const double a = df / 2.0, half = x / 2.0;
    if (half < a + 1.0) return 1.0 - detail::gamma_p_series(a, half);
    return detail::gamma_q_contfrac(a, half);
}

// ---------------------------------------------------------------------------
// Central finite differences for gradient checking.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Relative error with the agreed denominator convention.
inline double grad_rel_err(double analytic, double fd) {
    return std::fabs(analytic - fd) / std::max({std::fabs(analytic), std::fabs(fd), 1e-8});
}

/// Finite-difference gradient of f over every entry of a parameter vector.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = xp[i];
        xp[i] = orig + h;
        const double fp = f(xp);
        xp[i] = orig - h;
        const double fm = f(xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Plain statistics helpers (definitional formulas).
inline double mean_of(const Eigen::VectorXd& v) { return v.sum() / static_cast<double>(v.size()); }

inline double sample_stddev(const Eigen::VectorXd& v) {
    const double m = mean_of(v);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) acc += (v[i] - m) * (v[i] - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

inline double mean_of(const std::vector<double>& v) {
    return mean_of(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

inline double sample_stddev(const std::vector<double>& v) {
    return sample_stddev(
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

}  // namespace oracle
