#include "phri/est/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "phri/core/errors.hpp"
#include "phri/core/hash.hpp"
#include "phri/est/codec.hpp"

namespace phri::est {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double ExpKernel::operator()(double r) const { return variance * std::exp(-r / length_scale); }

MatrixXd pairwise_distances(const MatrixXd& a, const MatrixXd& b) {
    const VectorXd na = a.colwise().squaredNorm().transpose();
    const Eigen::RowVectorXd nb = b.colwise().squaredNorm();
    MatrixXd d = -2.0 * a.transpose() * b;
    d.colwise() += na;
    d.rowwise() += nb;
    return d.cwiseMax(0.0).cwiseSqrt();
}

namespace {

// Entries below exp(-700) are stored as exact zeros to keep subnormals out of the factorization.
MatrixXd kernel_matrix(const MatrixXd& dist, const ExpKernel& k) {
    const Eigen::ArrayXXd r = dist.array() / k.length_scale;
    return (r > 700.0).select(0.0, k.variance * (-r.min(700.0)).exp()).matrix();
}

}  // namespace

LmlResult log_marginal_likelihood(const MatrixXd& dist, const VectorXd& y, const ExpKernel& k, double alpha,
                                  bool with_gradient) {
    LmlResult r;
    const auto n = static_cast<double>(y.size());
    const MatrixXd kf = kernel_matrix(dist, k);
    MatrixXd kn = kf;
    kn.diagonal().array() += alpha;
    Eigen::LLT<MatrixXd> llt(kn);
    if (llt.info() != Eigen::Success) return r;
    const VectorXd a = llt.solve(y);
    const MatrixXd& l = llt.matrixLLT();
    r.value = -0.5 * y.dot(a) - l.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(r.value)) return r;
    if (with_gradient) {
        // d lml / d theta = 1/2 tr((a a^T - K^-1) dK/dtheta)
        MatrixXd inner = a * a.transpose() - llt.solve(MatrixXd::Identity(y.size(), y.size()));
        r.d_log_variance = 0.5 * (inner.cwiseProduct(kf)).sum();
        r.d_log_length = 0.5 * (inner.cwiseProduct(kf.cwiseProduct(dist / k.length_scale))).sum();
    }
    r.ok = true;
    return r;
}

namespace {

struct Point {
    double lv, ll;  // log variance, log length
};

/// Projected BFGS ascent in log space with Armijo backtracking; returns the best point and value.
std::pair<Point, double> ascend(const MatrixXd& dist, const VectorXd& y, Point p, const GPRSettings& s) {
    const double lv_lo = std::log(s.variance_lo), lv_hi = std::log(s.variance_hi);
    const double ll_lo = std::log(s.length_lo), ll_hi = std::log(s.length_hi);
    auto clampp = [&](Point q) {
        return Point{std::clamp(q.lv, lv_lo, lv_hi), std::clamp(q.ll, ll_lo, ll_hi)};
    };
    auto eval = [&](Point q, bool grad) {
        return log_marginal_likelihood(dist, y, {std::exp(q.lv), std::exp(q.ll)}, s.alpha, grad);
    };
    p = clampp(p);
    auto cur = eval(p, true);
    if (!cur.ok) return {p, -std::numeric_limits<double>::infinity()};
    Eigen::Matrix2d h = Eigen::Matrix2d::Identity();  // inverse Hessian of -lml
    for (int it = 0; it < s.max_iterations; ++it) {
        const Eigen::Vector2d g(cur.d_log_variance, cur.d_log_length);
        if (!(g.norm() > 1e-8)) break;
        Eigen::Vector2d d = h * g;
        if (g.dot(d) <= 0.0) {
            h.setIdentity();
            d = g;
        }
        // Cap the trial step at 5 log units per coordinate.
        const double scale = std::min(1.0, 5.0 / d.cwiseAbs().maxCoeff());
        d *= scale;
        bool moved = false;
        for (double t = 1.0; t > 1e-10; t *= 0.5) {
            const Point q = clampp({p.lv + t * d(0), p.ll + t * d(1)});
            const Eigen::Vector2d step(q.lv - p.lv, q.ll - p.ll);
            if (step.norm() < 1e-12) break;
            if (const auto probe = eval(q, false); !(probe.ok && probe.value > cur.value + 1e-4 * g.dot(step))) continue;
            const auto cand = eval(q, true);
            if (cand.ok) {
                const Eigen::Vector2d yv = g - Eigen::Vector2d(cand.d_log_variance, cand.d_log_length);
                const double sy = step.dot(yv);
                if (sy > 1e-12) {
                    const double rho = 1.0 / sy;
                    const Eigen::Matrix2d i2 = Eigen::Matrix2d::Identity();
                    h = (i2 - rho * step * yv.transpose()) * h * (i2 - rho * yv * step.transpose()) +
                        rho * step * step.transpose();
                }
                const double gain = cand.value - cur.value;
                p = q;
                cur = cand;
                moved = true;
                if (gain < 1e-9 * std::max(1.0, std::abs(cur.value))) it = s.max_iterations;
                break;
            }
        }
        if (!moved) break;
    }
    return {p, cur.value};
}

}  // namespace

HyperFit optimize_hyperparameters(const MatrixXd& inputs, const VectorXd& y, const GPRSettings& s) {
    const MatrixXd dist = pairwise_distances(inputs, inputs);
    HyperFit h;
    h.kernel = {s.variance_init, s.length_init};
    const auto init = log_marginal_likelihood(dist, y, h.kernel, s.alpha, false);
    h.lml_initial = init.ok ? init.value : -std::numeric_limits<double>::infinity();
    h.lml = h.lml_initial;
    std::mt19937_64 rng(mix_seed(s.seed, 0x6b1ULL));
    std::uniform_real_distribution<double> ulv(std::log(s.variance_lo), std::log(s.variance_hi));
    std::uniform_real_distribution<double> ull(std::log(s.length_lo), std::log(s.length_hi));
    for (int r = 0; r <= s.restarts; ++r) {
        const Point start = r == 0 ? Point{std::log(s.variance_init), std::log(s.length_init)} : Point{ulv(rng), ull(rng)};
        const auto [p, value] = ascend(dist, y, start, s);
        if (value > h.lml) {
            h.lml = value;
            h.kernel = {std::exp(p.lv), std::exp(p.ll)};
        }
        h.restart_lml.push_back(h.lml);
    }
    return h;
}

GPRModel GPRModel::fit(MatrixXd inputs, const VectorXd& targets, const ExpKernel& kernel, double alpha,
                       bool center_targets) {
    if (inputs.cols() != targets.size() || inputs.cols() == 0) throw FitError("GPR training set is empty or misaligned");
    GPRModel m;
    m.inputs_ = std::move(inputs);
    m.kernel_ = kernel;
    m.alpha_ = alpha;
    m.offset_ = center_targets ? targets.mean() : 0.0;
    m.y_ = targets.array() - m.offset_;
    m.factorize();
    return m;
}

void GPRModel::factorize() {
    MatrixXd k = kernel_matrix(pairwise_distances(inputs_, inputs_), kernel_);
    k.diagonal().array() += alpha_;
    jitter_ = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
        if (attempt > 0) {
            const double add = kernel_.variance * std::pow(10.0, -10 + 2 * attempt);
            k.diagonal().array() += add - jitter_;
            jitter_ = add;
        }
        llt_.compute(k);
        if (llt_.info() == Eigen::Success) {
            weights_ = llt_.solve(y_);
            return;
        }
    }
    throw FitError("GPR kernel matrix is not positive definite after jitter escalation");
}

GPRModel::Prediction GPRModel::predict(const VectorXd& x, bool with_variance) const {
    if (x.size() != inputs_.rows()) throw ConfigError("GPR input dimension mismatch");
    VectorXd ks(inputs_.cols());
    for (Eigen::Index i = 0; i < inputs_.cols(); ++i) ks(i) = kernel_((inputs_.col(i) - x).norm());
    Prediction p;
    p.mean = ks.dot(weights_) + offset_;
    if (with_variance) {
        const VectorXd v = llt_.matrixL().solve(ks);
        p.variance = std::max(0.0, kernel_.variance - v.squaredNorm());
    }
    return p;
}

nlohmann::json GPRModel::to_json() const {
    return {{"variance", kernel_.variance}, {"length_scale", kernel_.length_scale}, {"alpha", alpha_},
            {"offset", offset_},          {"inputs", encode_matrix(inputs_)},    {"targets", encode_matrix(y_)}};
}

GPRModel GPRModel::from_json(const nlohmann::json& j) {
    GPRModel m;
    m.kernel_ = {j.at("variance").get<double>(), j.at("length_scale").get<double>()};
    m.alpha_ = j.at("alpha").get<double>();
    m.offset_ = j.at("offset").get<double>();
    m.inputs_ = decode_matrix(j.at("inputs"));
    m.y_ = decode_matrix(j.at("targets")).col(0);
    m.factorize();
    return m;
}

}  // namespace phri::est
