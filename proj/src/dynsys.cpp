#include "dpos/dynsys.hpp"

#include "dpos/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dpos {

bool ChartTopology::has_circle() const {
    return std::find(kinds.begin(), kinds.end(), CoordKind::Circle) != kinds.end();
}

void SystemDef::validate() const {
    if (dim <= 0) throw Error(ErrorCode::InvalidSpec, name + ": dimension must be positive");
    if (!field) throw Error(ErrorCode::InvalidSpec, name + ": missing vector field");
    if (topology.dim() != dim)
        throw Error(ErrorCode::InvalidSpec, name + ": topology dimension mismatch");
    if (cone_field.dim() != dim)
        throw Error(ErrorCode::InvalidSpec, name + ": cone field dimension mismatch");
    if (input_dim < 0 || default_input.size() != input_dim)
        throw Error(ErrorCode::InvalidSpec, name + ": default input dimension mismatch");
}

Vector evaluate_field(const SystemDef& sys, const Vector& x, const Vector& u) {
    if (x.size() != sys.dim) throw Error(ErrorCode::InvalidInput, "state dimension mismatch");
    if (u.size() != sys.input_dim) throw Error(ErrorCode::InvalidInput, "input dimension mismatch");
    Vector fx = sys.field(x, u);
    if (fx.size() != sys.dim || !fx.allFinite()) {
        std::ostringstream os;
        os << sys.name << ": non-finite field value at x = " << x.transpose();
        throw Error(ErrorCode::EvaluationError, os.str());
    }
    return fx;
}

namespace {

Matrix central_difference(const std::function<Vector(const Vector&)>& fn, const Vector& at,
                          int rows) {
    Matrix out(rows, at.size());
    for (Eigen::Index j = 0; j < at.size(); ++j) {
        const double step = kJacobianStep * std::max(1.0, std::abs(at(j)));
        Vector plus = at, minus = at;
        plus(j) += step;
        minus(j) -= step;
        const Vector fp = fn(plus), fm = fn(minus);
        if (!fp.allFinite() || !fm.allFinite())
            throw Error(ErrorCode::EvaluationError, "non-finite field value near linearization point");
        out.col(j) = (fp - fm) / (plus(j) - minus(j));
    }
    return out;
}

}  // namespace

Matrix state_jacobian(const SystemDef& sys, const Vector& x, const Vector& u) {
    if (sys.jacobian) {
        Matrix a = sys.jacobian(x, u);
        if (a.rows() != sys.dim || a.cols() != sys.dim || !a.allFinite())
            throw Error(ErrorCode::EvaluationError, sys.name + ": invalid Jacobian value");
        return a;
    }
    return central_difference([&](const Vector& y) { return sys.field(y, u); }, x, sys.dim);
}

Linearization linearize(const SystemDef& sys, const Vector& x, const Vector& u) {
    Linearization lin;
    lin.A = state_jacobian(sys, x, u);
    if (sys.input_dim == 0) {
        lin.B = Matrix::Zero(sys.dim, 0);
    } else if (sys.input_jacobian) {
        lin.B = sys.input_jacobian(x, u);
        if (lin.B.rows() != sys.dim || lin.B.cols() != sys.input_dim || !lin.B.allFinite())
            throw Error(ErrorCode::EvaluationError, sys.name + ": invalid input Jacobian value");
    } else {
        lin.B = central_difference([&](const Vector& v) { return sys.field(x, v); }, u, sys.dim);
    }
    return lin;
}

ProlongedRhs prolonged_rhs(const SystemDef& sys, const ProlongedState& ps, const Vector& u,
                           const Vector& du) {
    if (ps.dx.size() != sys.dim) throw Error(ErrorCode::InvalidInput, "tangent dimension mismatch");
    ProlongedRhs out;
    out.xdot = evaluate_field(sys, ps.x, u);
    out.dxdot = state_jacobian(sys, ps.x, u) * ps.dx;
    if (du.size() > 0) {
        if (du.size() != sys.input_dim)
            throw Error(ErrorCode::InvalidInput, "input tangent dimension mismatch");
        out.dxdot += linearize(sys, ps.x, u).B * du;
    }
    return out;
}

NormalizedState chart_normalize(const SystemDef& sys, const Vector& x) {
    if (x.size() != sys.topology.dim()) throw Error(ErrorCode::InvalidInput, "state dimension mismatch");
    NormalizedState out{x, std::vector<std::int64_t>(static_cast<std::size_t>(x.size()), 0)};
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        switch (sys.topology.kinds[static_cast<std::size_t>(i)]) {
            case CoordKind::Circle: {
                const double turns = std::floor(x(i) / kTwoPi);
                double wrapped = x(i) - turns * kTwoPi;
                auto count = static_cast<std::int64_t>(turns);
                if (wrapped >= kTwoPi) {
                    wrapped -= kTwoPi;
                    ++count;
                }
                if (wrapped < 0.0) wrapped = 0.0;
                out.x(i) = wrapped;
                out.wraps[static_cast<std::size_t>(i)] = count;
                break;
            }
            case CoordKind::PositiveHalfLine:
                if (!(x(i) > 0.0)) {
                    std::ostringstream os;
                    os << sys.name << ": coordinate " << i << " left the positive half-line ("
                       << x(i) << ")";
                    throw Error(ErrorCode::LeftDomain, os.str());
                }
                break;
            case CoordKind::Line:
                break;
        }
    }
    return out;
}

Vector chart_difference(const ChartTopology& topo, const Vector& a, const Vector& b) {
    Vector d = a - b;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (topo.kinds[static_cast<std::size_t>(i)] != CoordKind::Circle) continue;
        d(i) = std::remainder(d(i), kTwoPi);
    }
    return d;
}

double chart_escape_norm(const ChartTopology& topo, const Vector& x) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (topo.kinds[static_cast<std::size_t>(i)] != CoordKind::Circle) sq += x(i) * x(i);
    return std::sqrt(sq);
}

JacobianCheck check_jacobian(const SystemDef& sys, const std::vector<Vector>& states,
                             const Vector& u_in) {
    const Vector u = resolve_input(sys, u_in);
    JacobianCheck out;
    out.worst_excess = -kInf;
    for (const auto& x : states) {
        const Matrix analytic = state_jacobian(sys, x, u);
        const Matrix fd =
            central_difference([&](const Vector& y) { return sys.field(y, u); }, x, sys.dim);
        const double allowed = std::max(1e-5, 1e-4 * analytic.norm());
        const double excess = (fd - analytic).cwiseAbs().maxCoeff() - allowed;
        if (excess > out.worst_excess) {
            out.worst_excess = excess;
            out.worst_state = x;
        }
        ++out.samples;
    }
    out.ok = out.worst_excess <= 0.0;
    return out;
}

SystemDef time_reversed(const SystemDef& sys) {
    SystemDef rev = sys;
    rev.name = sys.name + " (reversed)";
    if (sys.time_kind == TimeKind::Discrete) {
        if (!sys.inverse)
            throw Error(ErrorCode::Unsupported,
                        sys.name + ": backward iteration needs an inverse map");
        rev.field = sys.inverse;
        rev.inverse = sys.field;
        rev.jacobian = nullptr;
        rev.input_jacobian = nullptr;
        return rev;
    }
    rev.field = [f = sys.field](const Vector& x, const Vector& u) -> Vector { return -f(x, u); };
    if (sys.jacobian)
        rev.jacobian = [j = sys.jacobian](const Vector& x, const Vector& u) -> Matrix {
            return -j(x, u);
        };
    if (sys.input_jacobian)
        rev.input_jacobian = [j = sys.input_jacobian](const Vector& x, const Vector& u) -> Matrix {
            return -j(x, u);
        };
    return rev;
}

Vector Input::at(double t) const {
    if (const auto* v = std::get_if<Vector>(&value_)) return *v;
    return std::get<Signal>(value_)(t);
}

const Vector& Input::constant() const {
    if (const auto* v = std::get_if<Vector>(&value_)) return *v;
    throw Error(ErrorCode::InvalidInput, "a constant input is required here");
}

Vector resolve_input(const SystemDef& sys, const Vector& u) {
    if (u.size() == 0 && sys.input_dim > 0) return sys.default_input;
    if (u.size() != sys.input_dim) throw Error(ErrorCode::InvalidInput, "input dimension mismatch");
    return u;
}

bool StateBox::contains(const Vector& x, double tol) const {
    if (x.size() != lo.size()) return false;
    return ((x.array() >= lo.array() - tol) && (x.array() <= hi.array() + tol)).all();
}

std::vector<Vector> grid_samples(const ChartTopology& topo, const StateBox& box,
                                 const std::vector<int>& resolution) {
    const int n = box.dim();
    if (n == 0 || static_cast<int>(resolution.size()) != n || box.hi.size() != n)
        throw Error(ErrorCode::InvalidInput, "grid box/resolution dimension mismatch");
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
        const int r = resolution[static_cast<std::size_t>(d)];
        if (r <= 0) throw Error(ErrorCode::InvalidInput, "grid resolution must be positive");
        const double lo = box.lo(d), hi = box.hi(d);
        if (!(hi >= lo)) throw Error(ErrorCode::InvalidInput, "grid box has hi < lo");
        auto& axis = axes[static_cast<std::size_t>(d)];
        if (r == 1) {
            axis.push_back(0.5 * (lo + hi));
            continue;
        }
        const bool periodic = d < topo.dim() &&
                              topo.kinds[static_cast<std::size_t>(d)] == CoordKind::Circle &&
                              hi - lo >= kTwoPi - 1e-9;
        const double step = periodic ? (hi - lo) / r : (hi - lo) / (r - 1);
        for (int i = 0; i < r; ++i) axis.push_back(lo + i * step);
    }
    std::vector<Vector> out;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    while (true) {
        Vector x(n);
        for (int d = 0; d < n; ++d) x(d) = axes[static_cast<std::size_t>(d)][static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
        out.push_back(std::move(x));
        // last axis varies fastest
        int d = n - 1;
        while (d >= 0 && ++idx[static_cast<std::size_t>(d)] == resolution[static_cast<std::size_t>(d)]) {
            idx[static_cast<std::size_t>(d)] = 0;
            --d;
        }
        if (d < 0) break;
    }
    return out;
}

std::vector<Vector> halton_samples(const StateBox& box, std::size_t count, std::uint64_t seed) {
    static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    const int n = box.dim();
    if (n > static_cast<int>(std::size(kPrimes)))
        throw Error(ErrorCode::InvalidInput, "halton sampling supports up to 12 dimensions");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector shift(n);
    for (int d = 0; d < n; ++d) shift(d) = unit(rng);
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t i = 1; i <= count; ++i) {
        Vector x(n);
        for (int d = 0; d < n; ++d) {
            double f = 1.0, r = 0.0;
            for (std::size_t k = i; k > 0; k /= static_cast<std::size_t>(kPrimes[d])) {
                f /= kPrimes[d];
                r += f * static_cast<double>(k % static_cast<std::size_t>(kPrimes[d]));
            }
            const double frac = std::fmod(r + shift(d), 1.0);
            x(d) = box.lo(d) + frac * (box.hi(d) - box.lo(d));
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace dpos
