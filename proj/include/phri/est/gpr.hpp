#pragma once

#include <Eigen/Core>
#include <Eigen/Cholesky>
#include <cstdint>
#include <vector>

#include <json.hpp>

namespace phri::est {

/// Exponential (Matern nu = 1/2) kernel k(r) = variance * exp(-r / length_scale).
struct ExpKernel {
    double variance = 1.0;
    double length_scale = 1.0;
    double operator()(double r) const;
};

struct GPRSettings {
    double alpha = 0.5;                 // observation noise added to the diagonal
    double length_init = 1.0;
    double length_lo = 1e-20, length_hi = 1e5;
    double variance_init = 1.0;
    double variance_lo = 1e-5, variance_hi = 1e5;
    int restarts = 20;
    int max_iterations = 60;
    bool optimize = true;
    bool center_targets = false;
    std::uint64_t seed = 1;
};

/// Log marginal likelihood and its gradient w.r.t. (log variance, log length).
struct LmlResult {
    double value = 0.0;
    double d_log_variance = 0.0;
    double d_log_length = 0.0;
    bool ok = false;
};

/// Pairwise Euclidean distances between the columns of a and b.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

LmlResult log_marginal_likelihood(const Eigen::MatrixXd& distances, const Eigen::VectorXd& y, const ExpKernel& k,
                                  double alpha, bool with_gradient = true);

struct HyperFit {
    ExpKernel kernel;
    double lml_initial = 0.0;
    double lml = 0.0;
    std::vector<double> restart_lml;  // best value after each start, in order (non-decreasing)
};

/// Maximizes the log marginal likelihood from the initial hyperparameters and
/// `restarts` log-uniform draws within the bounds; keeps the best.
HyperFit optimize_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& y, const GPRSettings& s);

class GPRModel {
public:
    /// Exact posterior with Cholesky of K + alpha I. Inputs are one sample per column.
    /// Throws FitError when the kernel matrix stays indefinite after jitter escalation.
    static GPRModel fit(Eigen::MatrixXd inputs, const Eigen::VectorXd& targets, const ExpKernel& kernel,
                        double alpha, bool center_targets);

    struct Prediction {
        double mean = 0.0;
        double variance = 0.0;
    };
    Prediction predict(const Eigen::VectorXd& x, bool with_variance = true) const;
    double predict_mean(const Eigen::VectorXd& x) const { return predict(x, false).mean; }

    const ExpKernel& kernel() const { return kernel_; }
    double alpha() const { return alpha_; }
    long size() const { return inputs_.cols(); }
    double jitter() const { return jitter_; }

    nlohmann::json to_json() const;
    static GPRModel from_json(const nlohmann::json& j);

private:
    void factorize();

    Eigen::MatrixXd inputs_;
    Eigen::VectorXd weights_;  // (K + alpha I)^-1 (y - offset)
    Eigen::LLT<Eigen::MatrixXd> llt_;
    ExpKernel kernel_;
    double alpha_ = 0.5;
    double offset_ = 0.0;
    double jitter_ = 0.0;
    Eigen::VectorXd y_;
};

}  // namespace phri::est
