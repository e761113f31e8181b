#include "dpos/pffield.hpp"

#include "dpos/geometry.hpp"
#include "dpos/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace dpos {

namespace {

// Backward path from x, stored in reverse time order: path[0] = x, and
// consecutive points are h/2 apart (one iteration apart for maps).
class BackwardPath {
public:
    BackwardPath(const SystemDef& sys, const Vector& x, const Vector& u, const StepSettings& step,
                 double bound)
        : rev_(time_reversed(sys)), u_(u), discrete_(sys.time_kind == TimeKind::Discrete) {
        step_ = step;
        step_.divergence_bound = bound;
        if (!discrete_) step_.h = 0.5 * step.h;
        step_.record_stride = 1;
        points_.push_back(chart_normalize(sys, x).x);
    }

    /// Number of path intervals per unit of window.
    [[nodiscard]] double density() const { return discrete_ ? 1.0 : 1.0 / step_.h; }

    /// Extends the path to cover `window`; returns false if the backward flow
    /// escaped first (the path then stops at the last completed chunk).
    bool extend_to(double window) {
        const auto needed = static_cast<std::size_t>(std::llround(window * density()));
        while (points_.size() - 1 < needed && !escaped_) {
            const std::size_t chunk = std::min<std::size_t>(kChunk, needed - (points_.size() - 1));
            const double duration = discrete_ ? static_cast<double>(chunk)
                                              : static_cast<double>(chunk) * step_.h;
            try {
                const Trajectory tr = flow(rev_, points_.back(), Input(u_), {0.0, duration}, step_);
                for (std::size_t k = 1; k < tr.size(); ++k) points_.push_back(tr.states[k]);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Diverged && e.code() != ErrorCode::LeftDomain) throw;
                escaped_ = true;
                reason_ = e.what();
            }
        }
        return points_.size() - 1 >= needed;
    }

    [[nodiscard]] double covered() const {
        return static_cast<double>(points_.size() - 1) / density();
    }
    [[nodiscard]] bool escaped() const { return escaped_; }
    [[nodiscard]] const std::string& reason() const { return reason_; }

    /// Forward-ordered path for a window of `intervals` path steps.
    [[nodiscard]] std::vector<Vector> forward(std::size_t intervals) const {
        return {points_.rbegin() + static_cast<std::ptrdiff_t>(points_.size() - 1 - intervals),
                points_.rend()};
    }

private:
    static constexpr std::size_t kChunk = 500;
    SystemDef rev_;
    Vector u_;
    bool discrete_;
    StepSettings step_;
    std::vector<Vector> points_;
    bool escaped_ = false;
    std::string reason_;
};

struct Pushed {
    Vector probe;
    Matrix rays;
};

// Chooses the representative with the first non-negligible facet value positive.
Vector orient(const Cone& cone, Vector w) {
    const Vector vals = cone.evaluate(w);
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (std::abs(vals(i)) > 1e-12 * cone.halfspaces().row(i).norm()) {
            if (vals(i) < 0.0) w = -w;
            break;
        }
    }
    return w / w.norm();
}

// Pushes the probe and the extreme rays of K(path.front()) together; column 0
// is the probe. Columns are renormalized after every step.
Pushed push_cone(const SystemDef& sys, const std::vector<Vector>& path, double h, const Vector& u) {
    const Cone start = sys.cone_field.cone_at(path.front());
    Matrix v(sys.dim, start.generators().cols() + 1);
    v.col(0) = start.interior_probe();
    v.rightCols(start.generators().cols()) = start.generators();
    auto renorm = [&] {
        if (!v.allFinite()) throw Error(ErrorCode::Diverged, sys.name + ": pushed cone became non-finite");
        for (Eigen::Index c = 0; c < v.cols(); ++c) v.col(c) /= v.col(c).norm();
    };
    if (sys.time_kind == TimeKind::Discrete) {
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            v = state_jacobian(sys, path[k], u) * v;
            renorm();
        }
    } else {
        for (std::size_t k = 0; k + 2 < path.size(); k += 2) {
            const Matrix a0 = state_jacobian(sys, path[k], u);
            const Matrix am = state_jacobian(sys, path[k + 1], u);
            const Matrix a1 = state_jacobian(sys, path[k + 2], u);
            const Matrix k1 = a0 * v;
            const Matrix k2 = am * (v + 0.5 * h * k1);
            const Matrix k3 = am * (v + 0.5 * h * k2);
            const Matrix k4 = a1 * (v + h * k3);
            v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            renorm();
        }
    }
    return {v.col(0), v.rightCols(v.cols() - 1)};
}

double distance_or_inf(const Cone& cone, const Vector& a, const Vector& b) {
    try {
        return hilbert_distance(cone, a, b).value;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::OutsideCone) throw;
        return kInf;
    }
}

double ray_diameter(const Cone& cone, const Matrix& rays) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < rays.cols(); ++i)
        for (Eigen::Index j = i + 1; j < rays.cols(); ++j)
            d = std::max(d, distance_or_inf(cone, rays.col(i), rays.col(j)));
    return d;
}

}  // namespace

PFVector pf_vector_at(const SystemDef& sys, const Vector& x_in, const Vector& u_in,
                      const PFSettings& settings) {
    if (!(settings.window > 0.0) || !(settings.tol > 0.0) || settings.max_doublings < 0)
        throw Error(ErrorCode::InvalidInput, "invalid PF settings");
    const Vector u = resolve_input(sys, u_in);
    const bool discrete = sys.time_kind == TimeKind::Discrete;
    const Vector x = chart_normalize(sys, x_in).x;
    const Cone here = sys.cone_field.cone_at(x);
    BackwardPath back(sys, x, u, settings.step, settings.backward_bound);

    double window = discrete ? std::max(1.0, std::round(settings.window)) : settings.window;
    std::optional<Vector> previous;
    for (int k = 0; k <= settings.max_doublings; ++k) {
        bool clamped = false;
        if (!back.extend_to(window)) {
            const double reached = back.covered();
            std::ostringstream os;
            os << sys.name << ": backward flow escaped after " << reached
               << " time units before the PF direction converged (" << back.reason() << ")";
            // A shorter final window is still informative if it extends past the last one.
            if (!previous || reached <= 0.5 * window) throw Error(ErrorCode::Diverged, os.str());
            window = reached;
            clamped = true;
        }
        auto intervals = static_cast<std::size_t>(std::llround(window * back.density()));
        if (!discrete && intervals % 2 == 1) --intervals;
        const Pushed pushed = push_cone(sys, back.forward(intervals), settings.step.h, u);
        const Vector w = orient(here, pushed.probe);

        if (previous) {
            const double gap = distance_or_inf(here, w, *previous);
            if (gap < settings.tol) {
                if (!std::isfinite(ray_diameter(here, pushed.rays)))
                    throw Error(ErrorCode::NonContractive,
                                sys.name + ": pushed cone keeps its boundary rays; no contraction onto a ray");
                return {x, w, gap, window, clamped};
            }
            if (clamped) {
                std::ostringstream os;
                os << sys.name << ": backward flow escaped at window " << window
                   << " with successive PF distance " << gap << " above tol " << settings.tol;
                throw Error(ErrorCode::Diverged, os.str());
            }
        }
        previous = w;
        window *= 2.0;
    }
    throw Error(ErrorCode::NonContractive,
                sys.name + ": PF direction did not settle within the doubling cap");
}

std::size_t PFGrid::succeeded() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const PFCell& c) { return c.value.has_value(); }));
}

PFGrid pf_field_on_grid(const SystemDef& sys, const StateBox& box, const std::vector<int>& resolution,
                        const Vector& u, const PFSettings& settings) {
    PFGrid grid;
    grid.box = box;
    grid.resolution = resolution;
    const std::vector<Vector> nodes = grid_samples(sys.topology, box, resolution);
    grid.cells.resize(nodes.size());
    PFSettings cell_settings = settings;
    cell_settings.threads = 1;
    parallel_for(nodes.size(), settings.threads, [&](std::size_t i) {
        PFCell& cell = grid.cells[i];
        cell.index = i;
        cell.x = nodes[i];
        try {
            cell.value = pf_vector_at(sys, nodes[i], u, cell_settings);
        } catch (const Error& e) {
            cell.error = e.code();
            cell.message = e.what();
        }
    });
    return grid;
}

namespace {

struct Axis {
    double lo = 0.0;
    double step = 0.0;
    int count = 1;
    bool periodic = false;
};

std::vector<Axis> grid_axes(const ChartTopology& topo, const PFGrid& grid) {
    std::vector<Axis> axes;
    for (int d = 0; d < grid.box.dim(); ++d) {
        Axis a;
        a.count = grid.resolution[static_cast<std::size_t>(d)];
        const double lo = grid.box.lo(d), hi = grid.box.hi(d);
        a.periodic = d < topo.dim() && topo.kinds[static_cast<std::size_t>(d)] == CoordKind::Circle &&
                     hi - lo >= kTwoPi - 1e-9;
        a.lo = a.count == 1 ? 0.5 * (lo + hi) : lo;
        a.step = a.count == 1 ? 0.0 : (a.periodic ? (hi - lo) / a.count : (hi - lo) / (a.count - 1));
        axes.push_back(a);
    }
    return axes;
}

double axis_offset(const Axis& a, double v) {
    double off = v - a.lo;
    if (a.periodic) off = std::fmod(std::fmod(off, kTwoPi) + kTwoPi, kTwoPi);
    return off;
}

std::size_t flat_index(const std::vector<Axis>& axes, const std::vector<int>& idx) {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes.size(); ++d)
        flat = flat * static_cast<std::size_t>(axes[d].count) + static_cast<std::size_t>(idx[d]);
    return flat;
}

const Vector& cell_w(const PFGrid& grid, std::size_t flat) {
    const PFCell& c = grid.cells.at(flat);
    if (!c.value) throw Error(ErrorCode::NeedsDenserGrid, "neighbouring PF cell failed: " + c.message);
    return c.value->w;
}

[[noreturn]] void denser(const std::string& why) { throw Error(ErrorCode::NeedsDenserGrid, why); }

// Multilinear interpolation of w at y (renormalized).
Vector interpolate_w(const PFGrid& grid, const std::vector<Axis>& axes, const Vector& y) {
    const std::size_t n = axes.size();
    std::vector<int> base(n);
    std::vector<double> frac(n);
    for (std::size_t d = 0; d < n; ++d) {
        const Axis& a = axes[d];
        if (a.count < 2) denser("interpolation needs at least two nodes per axis");
        const double s = axis_offset(a, y(static_cast<Eigen::Index>(d))) / a.step;
        int i0 = static_cast<int>(std::floor(s));
        if (!a.periodic) {
            if (s < -1e-9 || s > a.count - 1 + 1e-9) denser("image point lies outside the PF grid");
            i0 = std::clamp(i0, 0, a.count - 2);
        }
        base[d] = i0;
        frac[d] = s - i0;
    }
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
        std::vector<int> idx(n);
        double weight = 1.0;
        for (std::size_t d = 0; d < n; ++d) {
            const bool up = (corner >> d) & 1U;
            int i = base[d] + (up ? 1 : 0);
            if (axes[d].periodic) i = ((i % axes[d].count) + axes[d].count) % axes[d].count;
            idx[d] = i;
            weight *= up ? frac[d] : 1.0 - frac[d];
        }
        if (weight == 0.0) continue;
        acc += weight * cell_w(grid, flat_index(axes, idx));
    }
    return acc / acc.norm();
}

}  // namespace

PFResidual pf_residual(const SystemDef& sys, const PFGrid& grid, const Vector& x, const Vector& u_in) {
    const Vector u = resolve_input(sys, u_in);
    const std::vector<Axis> axes = grid_axes(sys.topology, grid);
    const std::size_t n = axes.size();
    if (static_cast<int>(n) != sys.dim || x.size() != sys.dim)
        throw Error(ErrorCode::InvalidInput, "grid/state dimension mismatch");

    std::vector<int> idx(n);
    for (std::size_t d = 0; d < n; ++d) {
        const Axis& a = axes[d];
        if (a.count < 3 && !a.periodic) denser("need at least three nodes per axis");
        if (a.step > 0.1 + 1e-12) denser("grid spacing above 0.1");
        int i = static_cast<int>(std::llround(axis_offset(a, x(static_cast<Eigen::Index>(d))) / a.step));
        if (a.periodic) i %= a.count;
        idx[d] = i;
    }
    const std::size_t centre = flat_index(axes, idx);
    const Vector& node = grid.cells.at(centre).x;
    const Vector& w = cell_w(grid, centre);
    const Matrix a = state_jacobian(sys, node, u);

    PFResidual out;
    out.x = node;
    if (sys.time_kind == TimeKind::Discrete) {
        const Vector fx = evaluate_field(sys, node, u);
        const Vector wf = interpolate_w(grid, axes, chart_normalize(sys, fx).x);
        const Vector aw = a * w;
        out.lambda = wf.dot(aw);
        out.pde_residual = (aw / out.lambda - wf).norm();
        return out;
    }

    Matrix dw(sys.dim, sys.dim);
    for (std::size_t d = 0; d < n; ++d) {
        const Axis& ax = axes[d];
        std::vector<int> lo = idx, hi = idx;
        lo[d] -= 1;
        hi[d] += 1;
        if (ax.periodic) {
            lo[d] = (lo[d] + ax.count) % ax.count;
            hi[d] %= ax.count;
        } else if (lo[d] < 0 || hi[d] >= ax.count) {
            denser("state has no grid neighbours on both sides");
        }
        dw.col(static_cast<Eigen::Index>(d)) =
            (cell_w(grid, flat_index(axes, hi)) - cell_w(grid, flat_index(axes, lo))) / (2.0 * ax.step);
    }
    const Vector f = evaluate_field(sys, node, u);
    const Vector dwf = dw * f;
    const Vector aw = a * w;
    out.lambda = w.dot(aw) - w.dot(dwf);
    out.pde_residual = (dwf - aw + out.lambda * w).norm();
    return out;
}

void write_pf_csv(std::ostream& os, const PFGrid& grid) {
    const int n = grid.box.dim();
    for (int i = 1; i <= n; ++i) os << "x_" << i << ',';
    for (int i = 1; i <= n; ++i) os << "w_" << i << ',';
    os << "residual,window\n";
    std::ostringstream line;
    line << std::setprecision(17);
    for (const auto& c : grid.cells) {
        line.str("");
        for (int i = 0; i < n; ++i) line << c.x(i) << ',';
        if (c.value) {
            for (int i = 0; i < n; ++i) line << c.value->w(i) << ',';
            line << c.value->residual_hilbert << ',' << c.value->window;
        } else {
            for (int i = 0; i < n; ++i) line << "nan,";
            line << "nan,nan";
        }
        os << line.str() << '\n';
    }
}

}  // namespace dpos
