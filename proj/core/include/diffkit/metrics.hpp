#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace diffkit {

// One row of the experiment metrics table. Fixed column order:
// experiment,S,policy,metric,value,seconds
struct MetricsRow {
    std::string experiment;
    int S = 0;
    std::string policy;
    std::string metric;
    double value = 0.0;
    double seconds = 0.0;

    std::string to_csv() const;
    static MetricsRow from_csv(const std::string& line);
};

inline const char* kMetricsCsvHeader = "experiment,S,policy,metric,value,seconds";

// Append-only CSV writer; emits the header when creating the file.
class MetricsWriter {
public:
    explicit MetricsWriter(std::filesystem::path path) : path_(std::move(path)) {}

    void append(const MetricsRow& row);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

// Least-squares fit y = a*x + b; returns {a, b, r_squared}.
struct LinearFit {
    double slope;
    double intercept;
    double r_squared;
};
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

} // namespace diffkit
