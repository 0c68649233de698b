#include "phri/est/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phri/core/errors.hpp"
#include "phri/est/codec.hpp"

namespace phri::est {

Eigen::VectorXd DTWTemplate::normalize(const Eigen::VectorXd& raw) const {
    Eigen::VectorXd out(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i)
        out(i) = (raw(i) - mean[static_cast<std::size_t>(i)]) / stddev[static_cast<std::size_t>(i)];
    return out;
}

nlohmann::json DTWTemplate::to_json() const {
    return {{"sequence", encode_matrix(sequence)}, {"mean", mean}, {"std", stddev}, {"lambda", encode_vector(lambda)}};
}

DTWTemplate DTWTemplate::from_json(const nlohmann::json& j) {
    DTWTemplate t;
    t.sequence = decode_matrix(j.at("sequence"));
    t.mean = j.at("mean").get<std::vector<double>>();
    t.stddev = j.at("std").get<std::vector<double>>();
    t.lambda = decode_vector(j.at("lambda"));
    return t;
}

namespace {

Eigen::MatrixXd resample(const Eigen::MatrixXd& seq, int length) {
    Eigen::MatrixXd out(seq.rows(), length);
    const double last = static_cast<double>(seq.cols() - 1);
    for (int j = 0; j < length; ++j) {
        const double pos = length == 1 ? 0.0 : last * j / (length - 1);
        const auto i = std::min(static_cast<Eigen::Index>(pos), seq.cols() - 1);
        const double f = pos - static_cast<double>(i);
        out.col(j) = i + 1 < seq.cols() ? ((1.0 - f) * seq.col(i) + f * seq.col(i + 1)).eval() : seq.col(i);
    }
    return out;
}

std::vector<double> resample(const std::vector<double>& v, int length) {
    Eigen::MatrixXd m = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::MatrixXd r = resample(m, length);
    return {r.data(), r.data() + r.size()};
}

}  // namespace

DTWTemplate build_dtw_template(const std::vector<Eigen::MatrixXd>& sequences,
                               const std::vector<std::vector<double>>& lambdas, int length) {
    if (sequences.empty()) throw ConfigError("DTW template needs at least one training sequence");
    if (lambdas.size() != sequences.size()) throw ConfigError("DTW template progress list size mismatch");
    if (length < 2) throw ConfigError("DTW template length must be at least 2");
    const auto nf = sequences.front().rows();
    DTWTemplate t;
    t.mean.assign(static_cast<std::size_t>(nf), 0.0);
    t.stddev.assign(static_cast<std::size_t>(nf), 0.0);
    double n = 0.0;
    for (const auto& s : sequences) {
        if (s.rows() != nf || s.cols() < 2) throw ConfigError("DTW training sequence has the wrong shape");
        for (Eigen::Index f = 0; f < nf; ++f) {
            t.mean[static_cast<std::size_t>(f)] += s.row(f).sum();
            t.stddev[static_cast<std::size_t>(f)] += s.row(f).squaredNorm();
        }
        n += static_cast<double>(s.cols());
    }
    for (std::size_t f = 0; f < t.mean.size(); ++f) {
        t.mean[f] /= n;
        const double var = t.stddev[f] / n - t.mean[f] * t.mean[f];
        t.stddev[f] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    t.sequence = Eigen::MatrixXd::Zero(nf, length);
    t.lambda.assign(static_cast<std::size_t>(length), 0.0);
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        Eigen::MatrixXd r = resample(sequences[i], length);
        for (Eigen::Index f = 0; f < nf; ++f)
            r.row(f) = (r.row(f).array() - t.mean[static_cast<std::size_t>(f)]) / t.stddev[static_cast<std::size_t>(f)];
        t.sequence += r;
        const auto l = resample(lambdas[i], length);
        for (int j = 0; j < length; ++j) t.lambda[static_cast<std::size_t>(j)] += l[static_cast<std::size_t>(j)];
    }
    t.sequence /= static_cast<double>(sequences.size());
    for (auto& v : t.lambda) v /= static_cast<double>(sequences.size());
    return t;
}

DTWMatcher::DTWMatcher(Eigen::MatrixXd reference) : ref_(std::move(reference)) {
    if (ref_.cols() == 0) throw ConfigError("DTW reference is empty");
    reset();
}

void DTWMatcher::reset() {
    row_.assign(static_cast<std::size_t>(ref_.cols()), std::numeric_limits<double>::infinity());
    next_ = row_;
    count_ = 0;
}

void DTWMatcher::push(const Eigen::VectorXd& q) {
    if (q.size() != ref_.rows()) throw ConfigError("DTW query feature count mismatch");
    const auto m = static_cast<std::size_t>(ref_.cols());
    auto dist = [&](std::size_t j) { return (ref_.col(static_cast<Eigen::Index>(j)) - q).norm(); };
    if (count_ == 0) {
        // First query sample is anchored to template index 0.
        next_[0] = dist(0);
        for (std::size_t j = 1; j < m; ++j) next_[j] = next_[j - 1] + dist(j);
    } else {
        next_[0] = row_[0] + dist(0);
        for (std::size_t j = 1; j < m; ++j) next_[j] = dist(j) + std::min({row_[j], next_[j - 1], row_[j - 1]});
    }
    std::swap(row_, next_);
    ++count_;
}

int DTWMatcher::best_index() const {
    if (count_ == 0) throw ConfigError("DTW query is empty");
    return static_cast<int>(std::min_element(row_.begin(), row_.end()) - row_.begin());
}

double dtw_progress(const Eigen::MatrixXd& query, const Eigen::MatrixXd& reference) {
    DTWMatcher m(reference);
    for (Eigen::Index i = 0; i < query.cols(); ++i) m.push(query.col(i));
    return static_cast<double>(m.best_index()) / static_cast<double>(std::max<Eigen::Index>(1, reference.cols() - 1));
}

}  // namespace phri::est
