#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace diffkit {

// Minimal static SVG emission for 2D experiment outputs. Plotting is
// best-effort decoration and never gates verification.

// Scatter of (n, 2) points; optional per-point group index selects one of
// a small palette.
void write_scatter_svg(const std::filesystem::path& path, const Eigen::MatrixXd& points,
                       const std::string& title = "",
                       const std::vector<int>& groups = {});

// Polyline through (x, y) pairs, e.g. a metric against step count.
void write_line_svg(const std::filesystem::path& path, const std::vector<double>& x,
                    const std::vector<double>& y, const std::string& title = "");

} // namespace diffkit
