#include "dpos/integrate.hpp"

#include "dpos/error.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace dpos {

Vector Trajectory::unwound(std::size_t i) const {
    Vector x = states[i];
    const auto& w = wrap_counts[i];
    for (std::size_t k = 0; k < w.size(); ++k) x(static_cast<Eigen::Index>(k)) += kTwoPi * static_cast<double>(w[k]);
    return x;
}

namespace {

// Joint stepper for (x, V) with V an n x p tangent block (p may be 0).
class JointStepper {
public:
    JointStepper(const SystemDef& sys, const Input& u) : sys_(sys), u_(u) {}

    void step(double t, double h, Vector& x, Matrix& v) const {
        if (sys_.time_kind == TimeKind::Discrete) {
            const Vector ut = u_.at(t);
            if (v.cols() > 0) v = state_jacobian(sys_, x, ut) * v;
            x = evaluate_field(sys_, x, ut);
            return;
        }
        const Vector u0 = u_.at(t);
        const Vector um = u_.is_constant() ? u0 : u_.at(t + 0.5 * h);
        const Vector u1 = u_.is_constant() ? u0 : u_.at(t + h);
        const bool tangents = v.cols() > 0;

        auto rhs = [&](const Vector& xs, const Matrix& vs, const Vector& us, Vector& dx, Matrix& dv) {
            dx = evaluate_field(sys_, xs, us);
            if (tangents) dv = state_jacobian(sys_, xs, us) * vs;
        };

        Vector k1x, k2x, k3x, k4x;
        Matrix k1v, k2v, k3v, k4v;
        rhs(x, v, u0, k1x, k1v);
        rhs(x + 0.5 * h * k1x, tangents ? Matrix(v + 0.5 * h * k1v) : v, um, k2x, k2v);
        rhs(x + 0.5 * h * k2x, tangents ? Matrix(v + 0.5 * h * k2v) : v, um, k3x, k3v);
        rhs(x + h * k3x, tangents ? Matrix(v + h * k3v) : v, u1, k4x, k4v);
        x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        if (tangents) v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }

private:
    const SystemDef& sys_;
    const Input& u_;
};

struct RunResult {
    Trajectory traj;
    std::vector<Matrix> tangents;
    double log_growth = 0.0;
};

[[noreturn]] void diverged(const SystemDef& sys, double t, const std::string& what) {
    std::ostringstream os;
    os << sys.name << ": " << what << " at t = " << t;
    throw Error(ErrorCode::Diverged, os.str());
}

RunResult run(const SystemDef& sys, const Vector& x0, const Matrix& v0, const Input& u,
              TimeSpan span, const StepSettings& settings, bool renormalize, bool keep_tangents) {
    if (x0.size() != sys.dim) throw Error(ErrorCode::InvalidInput, "initial state dimension mismatch");
    if (!std::isfinite(span.t0) || !std::isfinite(span.t1) || span.t1 < span.t0)
        throw Error(ErrorCode::InvalidInput, "time span must be finite with t1 >= t0");
    const bool discrete = sys.time_kind == TimeKind::Discrete;
    if (!discrete && !(settings.h > 0.0)) throw Error(ErrorCode::InvalidInput, "step must be positive");
    if (settings.record_stride == 0) throw Error(ErrorCode::InvalidInput, "record stride must be >= 1");

    const double h = discrete ? 1.0 : settings.h;
    const double duration = span.t1 - span.t0;
    const auto steps = static_cast<std::int64_t>(std::ceil(duration / h - 1e-9));

    NormalizedState cur = chart_normalize(sys, x0);
    Vector x = cur.x;
    std::vector<std::int64_t> wraps = cur.wraps;
    Matrix v = v0;
    double log_growth = 0.0;

    RunResult out;
    auto record = [&](double t) {
        out.traj.times.push_back(t);
        out.traj.states.push_back(x);
        out.traj.wrap_counts.push_back(wraps);
        if (keep_tangents) out.tangents.push_back(v);
    };
    record(span.t0);

    // an empty constant input selects the system default
    const Input input = u.is_constant() ? Input(resolve_input(sys, u.constant())) : u;
    const JointStepper stepper(sys, input);
    for (std::int64_t k = 0; k < steps; ++k) {
        const double t = span.t0 + static_cast<double>(k) * h;
        const double t_next = (k + 1 == steps) ? span.t1 : span.t0 + static_cast<double>(k + 1) * h;
        stepper.step(t, discrete ? 1.0 : t_next - t, x, v);

        if (!x.allFinite()) diverged(sys, t_next, "state became non-finite");
        NormalizedState norm = chart_normalize(sys, x);
        x = norm.x;
        for (std::size_t i = 0; i < wraps.size(); ++i) wraps[i] += norm.wraps[i];
        if (chart_escape_norm(sys.topology, x) > settings.divergence_bound)
            diverged(sys, t_next, "state norm exceeded the divergence bound");

        if (v.cols() > 0) {
            if (!v.allFinite()) diverged(sys, t_next, "tangent became non-finite");
            if (renormalize) {
                for (Eigen::Index c = 0; c < v.cols(); ++c) {
                    const double nrm = v.col(c).norm();
                    if (!(nrm > 0.0)) diverged(sys, t_next, "tangent collapsed to zero");
                    v.col(c) /= nrm;
                    if (c == 0) log_growth += std::log(nrm);
                }
            } else if (v.norm() > settings.tangent_bound) {
                diverged(sys, t_next, "tangent norm exceeded the divergence bound");
            }
        }
        if ((k + 1) % static_cast<std::int64_t>(settings.record_stride) == 0 || k + 1 == steps)
            record(t_next);
    }
    out.log_growth = log_growth;
    return out;
}

}  // namespace

Trajectory flow(const SystemDef& sys, const Vector& x0, const Input& u, TimeSpan span,
                const StepSettings& settings) {
    return run(sys, x0, Matrix(sys.dim, 0), u, span, settings, false, false).traj;
}

VariationalFlow variational_flow(const SystemDef& sys, const Vector& x0, const Vector& dx0,
                                 const Input& u, TimeSpan span, const StepSettings& settings,
                                 bool renormalize) {
    if (dx0.size() != sys.dim) throw Error(ErrorCode::InvalidInput, "tangent dimension mismatch");
    Matrix v0 = dx0;
    if (renormalize) {
        const double nrm = dx0.norm();
        if (!(nrm > 0.0)) throw Error(ErrorCode::InvalidInput, "renormalization needs dx0 != 0");
        v0 /= nrm;
    }
    RunResult r = run(sys, x0, v0, u, span, settings, renormalize, true);
    VariationalFlow out;
    out.trajectory = std::move(r.traj);
    out.tangents.reserve(r.tangents.size());
    for (auto& m : r.tangents) out.tangents.emplace_back(m.col(0));
    out.log_growth = r.log_growth + (renormalize ? std::log(dx0.norm()) : 0.0);
    return out;
}

VariationalBlockFlow variational_block_flow(const SystemDef& sys, const Vector& x0,
                                           const Matrix& dx0, const Input& u, TimeSpan span,
                                           const StepSettings& settings, bool renormalize) {
    if (dx0.rows() != sys.dim) throw Error(ErrorCode::InvalidInput, "tangent dimension mismatch");
    Matrix v0 = dx0;
    double log0 = 0.0;
    if (renormalize) {
        for (Eigen::Index c = 0; c < v0.cols(); ++c) {
            const double nrm = v0.col(c).norm();
            if (!(nrm > 0.0)) throw Error(ErrorCode::InvalidInput, "renormalization needs nonzero tangents");
            v0.col(c) /= nrm;
            if (c == 0) log0 = std::log(nrm);
        }
    }
    RunResult r = run(sys, x0, v0, u, span, settings, renormalize, true);
    return {std::move(r.traj), std::move(r.tangents), r.log_growth + log0};
}

FundamentalMatrix fundamental_matrix(const SystemDef& sys, const Vector& x0, const Input& u,
                                     double t0, double t, const StepSettings& settings) {
    StepSettings s = settings;
    s.record_stride = std::numeric_limits<std::size_t>::max();
    RunResult r = run(sys, x0, Matrix::Identity(sys.dim, sys.dim), u, {t0, t}, s, false, true);
    return {t0, t, r.tangents.back()};
}

TangentPush push_along_path(const SystemDef& sys, const std::vector<Vector>& path, double h,
                            const Vector& u, const Vector& dx0, bool renormalize) {
    if (path.empty()) throw Error(ErrorCode::InvalidInput, "empty base path");
    TangentPush out{dx0, 0.0};
    if (renormalize) {
        const double nrm = dx0.norm();
        if (!(nrm > 0.0)) throw Error(ErrorCode::InvalidInput, "renormalization needs dx0 != 0");
        out.dx /= nrm;
        out.log_growth = std::log(nrm);
    }
    auto renorm = [&] {
        if (!out.dx.allFinite()) throw Error(ErrorCode::Diverged, sys.name + ": tangent became non-finite");
        if (!renormalize) return;
        const double nrm = out.dx.norm();
        if (!(nrm > 0.0)) throw Error(ErrorCode::Diverged, sys.name + ": tangent collapsed to zero");
        out.dx /= nrm;
        out.log_growth += std::log(nrm);
    };
    if (sys.time_kind == TimeKind::Discrete) {
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            out.dx = state_jacobian(sys, path[k], u) * out.dx;
            renorm();
        }
        return out;
    }
    if (path.size() % 2 == 0)
        throw Error(ErrorCode::InvalidInput, "half-step path must have an odd number of points");
    for (std::size_t k = 0; k + 2 < path.size(); k += 2) {
        const Matrix a0 = state_jacobian(sys, path[k], u);
        const Matrix am = state_jacobian(sys, path[k + 1], u);
        const Matrix a1 = state_jacobian(sys, path[k + 2], u);
        const Vector k1 = a0 * out.dx;
        const Vector k2 = am * (out.dx + 0.5 * h * k1);
        const Vector k3 = am * (out.dx + 0.5 * h * k2);
        const Vector k4 = a1 * (out.dx + h * k3);
        out.dx += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        renorm();
    }
    return out;
}

void write_trajectory_csv(std::ostream& os, const SystemDef& sys, const Trajectory& traj) {
    std::vector<std::size_t> circles;
    for (std::size_t i = 0; i < sys.topology.kinds.size(); ++i)
        if (sys.topology.kinds[i] == CoordKind::Circle) circles.push_back(i);
    os << "t";
    for (int i = 1; i <= sys.dim; ++i) os << ",x_" << i;
    for (std::size_t c : circles) os << ",wrap_" << c + 1;
    os << '\n';
    std::ostringstream line;
    line << std::setprecision(17);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        line.str("");
        line << traj.times[k];
        for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) line << ',' << traj.states[k](i);
        for (std::size_t c : circles) line << ',' << traj.wrap_counts[k][c];
        os << line.str() << '\n';
    }
}

}  // namespace dpos
