#include "phri/eval/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "phri/core/errors.hpp"
#include "phri/core/numfmt.hpp"

namespace phri::eval {

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw FormatError("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= v.size()) return v.back();
    const double f = pos - static_cast<double>(i);
    return v[i] + f * (v[i + 1] - v[i]);
}

std::vector<SummaryRow> aggregate(const std::vector<MetricRecord>& records) {
    std::map<std::pair<std::string, std::string>, std::vector<double>> buckets;
    for (const auto& r : records)
        for (const auto& [metric, value] : r.values)
            if (std::isfinite(value)) buckets[{r.group, metric}].push_back(value);
    std::vector<SummaryRow> rows;
    for (const auto& [key, values] : buckets) {
        SummaryRow row;
        row.group = key.first;
        row.metric = key.second;
        row.n = static_cast<long>(values.size());
        row.min = *std::min_element(values.begin(), values.end());
        row.max = *std::max_element(values.begin(), values.end());
        row.q1 = quantile(values, 0.25);
        row.median = quantile(values, 0.5);
        row.q3 = quantile(values, 0.75);
        rows.push_back(std::move(row));
    }
    return rows;
}

const SummaryRow& find_row(const std::vector<SummaryRow>& rows, const std::string& group, const std::string& metric) {
    for (const auto& r : rows)
        if (r.group == group && r.metric == metric) return r;
    throw FormatError("no summary for " + group + "/" + metric);
}

namespace {
std::ofstream open_out(const std::filesystem::path& file) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw FormatError("cannot write " + file.string());
    return out;
}
}  // namespace

void write_records_csv(const std::vector<MetricRecord>& records, const std::filesystem::path& file) {
    auto out = open_out(file);
    out << "id,group,metric,value\n";
    for (const auto& r : records)
        for (const auto& [metric, value] : r.values)
            out << r.id << ',' << r.group << ',' << metric << ',' << format_double(value) << '\n';
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& file) {
    auto out = open_out(file);
    out << "group,metric,n,min,q1,median,q3,max\n";
    for (const auto& r : rows)
        out << r.group << ',' << r.metric << ',' << r.n << ',' << format_double(r.min) << ',' << format_double(r.q1)
            << ',' << format_double(r.median) << ',' << format_double(r.q3) << ',' << format_double(r.max) << '\n';
}

nlohmann::json summary_json(const std::vector<SummaryRow>& rows) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& r : rows)
        j[r.group][r.metric] = {{"n", r.n},        {"min", r.min}, {"q1", r.q1},
                                {"median", r.median}, {"q3", r.q3}, {"max", r.max}};
    return j;
}

}  // namespace phri::eval
