#pragma once

#include <Eigen/Core>
#include <vector>

#include <json.hpp>

namespace phri::est {

/// Fixed-length averaged Driving template (features x length), with the
/// per-feature normalization applied to queries and the mean trajectory
/// progress at each template index.
struct DTWTemplate {
    Eigen::MatrixXd sequence;   // normalized features x length
    std::vector<double> mean;   // per-feature normalization
    std::vector<double> stddev;
    std::vector<double> lambda; // mean trajectory progress per template index

    int length() const { return static_cast<int>(sequence.cols()); }
    Eigen::VectorXd normalize(const Eigen::VectorXd& raw) const;
    nlohmann::json to_json() const;
    static DTWTemplate from_json(const nlohmann::json& j);
};

/// Builds a template from raw Driving feature sequences (features x samples,
/// one per trial) and their trajectory progress: every sequence is resampled
/// to `length` points, normalized and averaged.
DTWTemplate build_dtw_template(const std::vector<Eigen::MatrixXd>& sequences,
                               const std::vector<std::vector<double>>& lambdas, int length = 200);

/// Open-end DTW against a template with symmetric steps and Euclidean local
/// distance, extended one query sample at a time.
class DTWMatcher {
public:
    explicit DTWMatcher(Eigen::MatrixXd reference);
    void reset();
    /// Appends one (already normalized) query sample.
    void push(const Eigen::VectorXd& sample);
    /// Template index where the query best ends (ties: smallest index). Requires size() > 0.
    int best_index() const;
    std::size_t size() const { return count_; }
    const std::vector<double>& row() const { return row_; }

private:
    Eigen::MatrixXd ref_;
    std::vector<double> row_;
    std::vector<double> next_;
    std::size_t count_ = 0;
};

/// Progress of a complete query against a raw reference: best_index / (length - 1).
double dtw_progress(const Eigen::MatrixXd& query, const Eigen::MatrixXd& reference);

}  // namespace phri::est
