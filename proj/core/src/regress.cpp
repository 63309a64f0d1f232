#include "dsb/regress.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dsb::regress {

RidgeModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
    const Eigen::Index n = X.rows();
    if (n < 1) throw std::invalid_argument("ridge_fit: empty training set");
    if (y.size() != n) throw std::invalid_argument("ridge_fit: target length mismatch");
    if (lambda < 0.0) throw std::invalid_argument("ridge_fit: lambda must be >= 0");
    if (!X.allFinite() || !y.allFinite())
        throw std::invalid_argument("ridge_fit: non-finite input");

    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    const double y_mean = y.mean();
    const Eigen::MatrixXd xc = X.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::MatrixXd a = xc.transpose() * xc;
    a.diagonal().array() += lambda;
    const Eigen::VectorXd b = xc.transpose() * yc;

    RidgeModel model;
    if (lambda == 0.0) {
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (!lu.isInvertible())
            throw std::runtime_error(
                "ridge_fit: singular system with lambda=0; use lambda > 0 to regularize");
        model.coef = lu.solve(b);
    } else {
        model.coef = Eigen::LDLT<Eigen::MatrixXd>(a).solve(b);
    }
    model.intercept = y_mean - x_mean.dot(model.coef);
    if (!model.coef.allFinite() || !std::isfinite(model.intercept))
        throw std::runtime_error("ridge_fit: solve produced non-finite coefficients");
    return model;
}

Eigen::VectorXd ridge_predict(const RidgeModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.coef.size())
        throw std::invalid_argument("ridge_predict: feature width mismatch");
    return (X * model.coef).array() + model.intercept;
}

Eigen::VectorXd knn_predict(const Eigen::MatrixXd& train_X, const Eigen::VectorXd& train_y,
                            const Eigen::MatrixXd& query, std::size_t k) {
    const Eigen::Index n = train_X.rows();
    if (n == 0) throw std::invalid_argument("knn_predict: empty training set");
    if (train_y.size() != n) throw std::invalid_argument("knn_predict: target length mismatch");
    if (k < 1 || static_cast<Eigen::Index>(k) > n)
        throw std::invalid_argument("knn_predict: k must be in [1, n]");
    if (query.cols() != train_X.cols())
        throw std::invalid_argument("knn_predict: feature width mismatch");

    Eigen::VectorXd out(query.rows());
    std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
    for (Eigen::Index qi = 0; qi < query.rows(); ++qi) {
        for (Eigen::Index i = 0; i < n; ++i)
            dist[static_cast<std::size_t>(i)] = {(train_X.row(i) - query.row(qi)).squaredNorm(), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += train_y[dist[j].second];
        out[qi] = acc / static_cast<double>(k);
    }
    return out;
}

MetricSet compute_metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred,
                          const Eigen::VectorXd& weights,
                          std::optional<double> rare_threshold) {
    const Eigen::Index n = y_true.size();
    if (n == 0) throw std::invalid_argument("compute_metrics: empty input");
    if (y_pred.size() != n || weights.size() != n)
        throw std::invalid_argument("compute_metrics: length mismatch");
    if (!(weights.minCoeff() > 0.0))
        throw std::invalid_argument("compute_metrics: weights must be positive");

    const Eigen::ArrayXd err = (y_pred - y_true).array();
    MetricSet m;
    m.rmse = std::sqrt(err.square().mean());
    m.mae = err.abs().mean();
    m.weighted_mse = (weights.array() / weights.sum() * err.square()).sum();

    const double sst = (y_true.array() - y_true.mean()).square().sum();
    if (sst > 0.0) m.r2 = 1.0 - err.square().sum() / sst;

    if (rare_threshold) {
        double acc = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (y_true[i] > *rare_threshold) {
                acc += err[i] * err[i];
                ++count;
            }
        }
        if (count > 0) m.rare_region_rmse = std::sqrt(acc / static_cast<double>(count));
    }
    return m;
}

}  // namespace dsb::regress
