#include "diffkit/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "diffkit/errors.hpp"

namespace diffkit {

std::string MetricsRow::to_csv() const {
    std::ostringstream out;
    out << experiment << ',' << S << ',' << policy << ',' << metric << ','
        << std::setprecision(17) << value << ',' << seconds;
    return out.str();
}

MetricsRow MetricsRow::from_csv(const std::string& line) {
    std::istringstream in(line);
    std::string field;
    MetricsRow row;
    auto next = [&](const char* what) {
        if (!std::getline(in, field, ','))
            throw IoError(std::string("metrics row missing field: ") + what);
        return field;
    };
    row.experiment = next("experiment");
    row.S = std::stoi(next("S"));
    row.policy = next("policy");
    row.metric = next("metric");
    row.value = std::stod(next("value"));
    row.seconds = std::stod(next("seconds"));
    return row;
}

void MetricsWriter::append(const MetricsRow& row) {
    const bool fresh = !std::filesystem::exists(path_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot open metrics file: " + path_.string());
    if (fresh) out << kMetricsCsvHeader << '\n';
    out << row.to_csv() << '\n';
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metrics file: " + path.string());
    std::vector<MetricsRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first && line == kMetricsCsvHeader) {
            first = false;
            continue;
        }
        first = false;
        rows.push_back(MetricsRow::from_csv(line));
    }
    return rows;
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_linear: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_linear: degenerate x values");
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;

    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred = slope * x[i] + intercept;
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    const double r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return LinearFit{slope, intercept, r2};
}

} // namespace diffkit
