#include "dpos/svg.hpp"

#include "dpos/error.hpp"
#include "dpos/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dpos {

namespace {

constexpr double kCanvas = 800.0;
constexpr double kMargin = 40.0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

SvgPlot::SvgPlot(const StateBox& view, const ChartTopology& topology)
    : view_(view), topology_(topology) {
    if (view.dim() < 2) throw Error(ErrorCode::InvalidInput, "SVG plots need a planar view");
    if (!(view.hi(0) > view.lo(0)) || !(view.hi(1) > view.lo(1)))
        throw Error(ErrorCode::InvalidInput, "SVG view box is empty");
}

std::string SvgPlot::point(const Vector& x) const {
    const double span = kCanvas - 2.0 * kMargin;
    const double px = kMargin + (x(0) - view_.lo(0)) / (view_.hi(0) - view_.lo(0)) * span;
    const double py = kCanvas - kMargin - (x(1) - view_.lo(1)) / (view_.hi(1) - view_.lo(1)) * span;
    return fmt(px) + "," + fmt(py);
}

void SvgPlot::polyline(const std::vector<Vector>& points, const std::string& colour, double width) {
    std::vector<std::string> runs;
    std::string cur;
    for (std::size_t k = 0; k < points.size(); ++k) {
        bool jump = false;
        if (k > 0) {
            for (std::size_t d = 0; d < 2 && d < topology_.kinds.size(); ++d)
                if (topology_.kinds[d] == CoordKind::Circle &&
                    std::abs(points[k](static_cast<Eigen::Index>(d)) - points[k - 1](static_cast<Eigen::Index>(d))) > 0.5 * kTwoPi)
                    jump = true;
        }
        if (jump && !cur.empty()) {
            runs.push_back(cur);
            cur.clear();
        }
        if (!cur.empty()) cur += ' ';
        cur += point(points[k]);
    }
    if (!cur.empty()) runs.push_back(cur);
    for (const auto& r : runs)
        layers_.push_back("<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"" +
                          fmt(width) + "\" points=\"" + r + "\"/>");
}

void SvgPlot::arrow(const Vector& x, const Vector& dir, double length, const std::string& colour) {
    const Vector d = dir.head(2).normalized();
    const Vector tip = x.head(2) + length * d;
    const Vector back = tip - 0.3 * length * d;
    const Vector side(Vector::Unit(2, 0) * -d(1) + Vector::Unit(2, 1) * d(0));
    const Vector left = back + 0.15 * length * side;
    const Vector right = back - 0.15 * length * side;
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\""
       << point(x.head(2)) << ' ' << point(tip) << "\"/>";
    layers_.push_back(os.str());
    layers_.push_back("<polygon fill=\"" + colour + "\" points=\"" + point(tip) + " " + point(left) +
                      " " + point(right) + "\"/>");
}

void SvgPlot::cone_wedge(const Vector& x, const Cone& cone, double length, const std::string& colour) {
    if (cone.dim() != 2) return;
    const Matrix& g = cone.generators();
    const Vector a = x.head(2) + length * g.col(0).normalized();
    const Vector b = x.head(2) + length * g.col(1).normalized();
    layers_.push_back("<polygon fill=\"" + colour + "\" fill-opacity=\"0.25\" stroke=\"" + colour +
                      "\" stroke-width=\"0.8\" points=\"" + point(x.head(2)) + " " + point(a) + " " +
                      point(b) + "\"/>");
}

void SvgPlot::title(const std::string& text) { title_ = text; }

std::string SvgPlot::str() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"800\" fill=\"white\"/>\n";
    os << "<rect x=\"" << fmt(kMargin) << "\" y=\"" << fmt(kMargin) << "\" width=\""
       << fmt(kCanvas - 2 * kMargin) << "\" height=\"" << fmt(kCanvas - 2 * kMargin)
       << "\" fill=\"none\" stroke=\"#888888\"/>\n";
    if (!title_.empty())
        os << "<text x=\"400.00\" y=\"25.00\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"16\">"
           << escape(title_) << "</text>\n";
    for (const auto& l : layers_) os << l << '\n';
    os << "</svg>\n";
    return os.str();
}

std::string render_pf_svg(const SystemDef& sys, const PFGrid& grid,
                          const std::vector<std::vector<Vector>>& trajectories) {
    SvgPlot plot(grid.box, sys.topology);
    plot.title(sys.name + ": cone field and Perron-Frobenius directions");
    const double scale = 0.35 * std::min((grid.box.hi(0) - grid.box.lo(0)) /
                                             std::max(1, grid.resolution.at(0)),
                                         (grid.box.hi(1) - grid.box.lo(1)) /
                                             std::max(1, grid.resolution.at(1)));
    const std::size_t wedge_every = std::max<std::size_t>(1, grid.cells.size() / 64);
    for (std::size_t i = 0; i < grid.cells.size(); i += wedge_every) {
        const auto& c = grid.cells[i];
        try {
            plot.cone_wedge(c.x, sys.cone_field.cone_at(c.x), 2.0 * scale, "#4a90d9");
        } catch (const Error&) {
            // degenerate cone at this node (e.g. the origin of a rotating field)
        }
    }
    for (const auto& tr : trajectories) plot.polyline(tr, "#333333");
    for (const auto& c : grid.cells)
        if (c.value) plot.arrow(c.x, c.value->w, scale, "#c0392b");
    return plot.str();
}

}  // namespace dpos
