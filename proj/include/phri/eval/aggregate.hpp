#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace phri::eval {

/// Metric values of one trial (or fold) tagged with a group label.
struct MetricRecord {
    std::string id;
    std::string group;
    std::map<std::string, double> values;
};

struct SummaryRow {
    std::string group;
    std::string metric;
    long n = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

/// Linear-interpolation quantile of a non-empty sample (q in [0, 1]).
double quantile(std::vector<double> values, double q);

/// Descriptive statistics per (group, metric); non-finite values are skipped.
std::vector<SummaryRow> aggregate(const std::vector<MetricRecord>& records);

/// Looks up one summary row; throws FormatError when absent.
const SummaryRow& find_row(const std::vector<SummaryRow>& rows, const std::string& group, const std::string& metric);

/// Long-format per-record table: id,group,metric,value.
void write_records_csv(const std::vector<MetricRecord>& records, const std::filesystem::path& file);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& file);
nlohmann::json summary_json(const std::vector<SummaryRow>& rows);

}  // namespace phri::eval
