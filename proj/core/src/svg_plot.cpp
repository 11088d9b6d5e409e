#include "diffkit/svg_plot.hpp"

#include <algorithm>
#include <fstream>

#include "diffkit/errors.hpp"

namespace diffkit {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 640;
constexpr int kMargin = 40;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

struct Range {
    double lo, hi;
    double map(double v, int pixels) const {
        const double span = hi - lo == 0.0 ? 1.0 : hi - lo;
        return kMargin + (v - lo) / span * (pixels - 2 * kMargin);
    }
};

Range padded_range(double lo, double hi) {
    const double pad = (hi - lo == 0.0 ? 1.0 : hi - lo) * 0.05;
    return Range{lo - pad, hi + pad};
}

void open_svg(std::ofstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty())
        out << "<text x=\"" << kMargin << "\" y=\"24\" font-family=\"monospace\" font-size=\"14\">"
            << title << "</text>\n";
}

} // namespace

void write_scatter_svg(const std::filesystem::path& path, const Eigen::MatrixXd& points,
                       const std::string& title, const std::vector<int>& groups) {
    if (points.cols() != 2)
        throw std::invalid_argument("write_scatter_svg: points must be (n, 2)");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open svg for writing: " + path.string());

    const Range rx = padded_range(points.col(0).minCoeff(), points.col(0).maxCoeff());
    const Range ry = padded_range(points.col(1).minCoeff(), points.col(1).maxCoeff());

    open_svg(out, title);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const char* color = kPalette[0];
        if (!groups.empty())
            color = kPalette[static_cast<std::size_t>(groups[static_cast<std::size_t>(i)]) %
                             std::size(kPalette)];
        const double px = rx.map(points(i, 0), kWidth);
        const double py = kHeight - ry.map(points(i, 1), kHeight);
        out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"2\" fill=\"" << color
            << "\" fill-opacity=\"0.6\"/>\n";
    }
    out << "</svg>\n";
}

void write_line_svg(const std::filesystem::path& path, const std::vector<double>& x,
                    const std::vector<double>& y, const std::string& title) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("write_line_svg: x/y size mismatch or empty");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open svg for writing: " + path.string());

    const Range rx = padded_range(*std::min_element(x.begin(), x.end()),
                                  *std::max_element(x.begin(), x.end()));
    const Range ry = padded_range(*std::min_element(y.begin(), y.end()),
                                  *std::max_element(y.begin(), y.end()));

    open_svg(out, title);
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[0] << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << rx.map(x[i], kWidth) << ',' << kHeight - ry.map(y[i], kHeight) << ' ';
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << "<circle cx=\"" << rx.map(x[i], kWidth) << "\" cy=\""
            << kHeight - ry.map(y[i], kHeight) << "\" r=\"3\" fill=\"" << kPalette[1] << "\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace diffkit
