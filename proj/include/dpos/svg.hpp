#pragma once

// Minimal deterministic SVG emitter for planar phase portraits: trajectory
// polylines, cone wedges and PF arrows on a fixed 800x800 canvas. Only the
// first two state coordinates are drawn.

#include "dpos/dynsys.hpp"
#include "dpos/pffield.hpp"

#include <string>
#include <vector>

namespace dpos {

class SvgPlot {
public:
    SvgPlot(const StateBox& view, const ChartTopology& topology);

    /// Breaks the line wherever a circle coordinate wraps.
    void polyline(const std::vector<Vector>& points, const std::string& colour, double width = 1.5);
    /// Arrow from x along dir, `length` in state units.
    void arrow(const Vector& x, const Vector& dir, double length, const std::string& colour);
    /// Filled wedge spanned by the two extreme rays of a planar cone.
    void cone_wedge(const Vector& x, const Cone& cone, double length, const std::string& colour);
    void title(const std::string& text);

    [[nodiscard]] std::string str() const;

private:
    [[nodiscard]] std::string point(const Vector& x) const;

    StateBox view_;
    ChartTopology topology_;
    std::vector<std::string> layers_;
    std::string title_;
};

/// Phase portrait with cone wedges at a subset of grid cells and PF arrows at
/// every successful cell, plus optional trajectories.
[[nodiscard]] std::string render_pf_svg(const SystemDef& sys, const PFGrid& grid,
                                        const std::vector<std::vector<Vector>>& trajectories = {});

}  // namespace dpos
