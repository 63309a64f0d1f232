#pragma once

#include <Eigen/Core>
#include <optional>

namespace dsb::regress {

struct RidgeModel {
    Eigen::VectorXd coef;
    double intercept = 0.0;
};

/// Exact minimizer of ||Xw - y||^2 + lambda ||w||^2 with an unpenalized
/// intercept (closed form on centered data). lambda = 0 on a singular system
/// throws, suggesting lambda > 0.
RidgeModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda);

Eigen::VectorXd ridge_predict(const RidgeModel& model, const Eigen::MatrixXd& X);

/// Mean target of the k nearest training rows (Euclidean distance, ties
/// broken toward the lower row index), per query row.
Eigen::VectorXd knn_predict(const Eigen::MatrixXd& train_X, const Eigen::VectorXd& train_y,
                            const Eigen::MatrixXd& query, std::size_t k);

struct MetricSet {
    double rmse = 0.0;
    double mae = 0.0;
    double weighted_mse = 0.0;
    std::optional<double> r2;               // empty when the true target is constant
    std::optional<double> rare_region_rmse; // empty without a threshold or rare rows
};

/// All metrics in the units of y. `weights` (positive, any scale) are
/// normalized to sum 1 for weighted_mse. rare_region_rmse covers rows with
/// y_true > rare_threshold.
MetricSet compute_metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred,
                          const Eigen::VectorXd& weights,
                          std::optional<double> rare_threshold = std::nullopt);

}  // namespace dsb::regress
