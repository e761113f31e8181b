#include "dpos/limitsets.hpp"

#include "dpos/error.hpp"
#include "dpos/geometry.hpp"
#include "dpos/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dpos {

OmegaSet omega_from_trajectory(const Trajectory& traj, double tail_fraction) {
    if (traj.empty()) throw Error(ErrorCode::InvalidInput, "empty trajectory");
    if (!(tail_fraction > 0.0) || tail_fraction > 1.0)
        throw Error(ErrorCode::InvalidInput, "tail fraction must lie in (0, 1]");
    const std::size_t n = traj.size();
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n))));
    const std::size_t first = n - std::min(keep, n);
    OmegaSet out;
    out.source = traj.states.front();
    out.t_transient = traj.times[first] - traj.times.front();
    out.t_tail = traj.times.back() - traj.times[first];
    auto cut = [first](const auto& v) { return std::decay_t<decltype(v)>(v.begin() + static_cast<std::ptrdiff_t>(first), v.end()); };
    out.tail.times = cut(traj.times);
    out.tail.states = cut(traj.states);
    out.tail.wrap_counts = cut(traj.wrap_counts);
    return out;
}

OmegaSet omega_estimate(const SystemDef& sys, const Vector& x0, const Input& u,
                        const OmegaSettings& settings) {
    if (!(settings.t_max > 0.0)) throw Error(ErrorCode::InvalidInput, "t_max must be positive");
    const Trajectory traj = flow(sys, x0, u, {0.0, settings.t_max}, settings.step);
    OmegaSet out = omega_from_trajectory(traj, settings.tail_fraction);
    out.source = x0;
    if (settings.box) {
        for (const auto& p : out.points()) {
            if (!settings.box->contains(p, 1e-9)) {
                std::ostringstream os;
                os << sys.name << ": omega-limit sample " << p.transpose() << " left the state box";
                throw Error(ErrorCode::Diverged, os.str());
            }
        }
    }
    return out;
}

double cloud_extent(const ChartTopology& topo, const std::vector<Vector>& points) {
    if (points.empty()) throw Error(ErrorCode::InvalidInput, "empty point cloud");
    Vector lo = Vector::Zero(points.front().size());
    Vector hi = lo;
    for (const auto& p : points) {
        const Vector d = chart_difference(topo, p, points.front());
        lo = lo.cwiseMin(d);
        hi = hi.cwiseMax(d);
    }
    return (hi - lo).norm();
}

Vector cloud_centroid(const ChartTopology& topo, const std::vector<Vector>& points) {
    if (points.empty()) throw Error(ErrorCode::InvalidInput, "empty point cloud");
    Vector acc = Vector::Zero(points.front().size());
    for (const auto& p : points) acc += chart_difference(topo, p, points.front());
    Vector c = points.front() + acc / static_cast<double>(points.size());
    for (Eigen::Index i = 0; i < c.size(); ++i)
        if (topo.kinds[static_cast<std::size_t>(i)] == CoordKind::Circle)
            c(i) = std::fmod(std::fmod(c(i), kTwoPi) + kTwoPi, kTwoPi);
    return c;
}

CrossingAnalysis analyze_crossings(const ChartTopology& topo, const Trajectory& traj,
                                   const Section& section, double spread_tol) {
    if (section.normal.size() != section.point.size() || section.normal.norm() == 0.0)
        throw Error(ErrorCode::InvalidInput, "section needs a nonzero normal of state dimension");
    CrossingAnalysis out;
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        const Vector d0 = chart_difference(topo, traj.states[k], section.point);
        const Vector d1 = d0 + chart_difference(topo, traj.states[k + 1], traj.states[k]);
        const double g0 = section.normal.dot(d0);
        const double g1 = section.normal.dot(d1);
        if (!(g0 <= 0.0 && g1 > 0.0)) continue;
        const double s = -g0 / (g1 - g0);
        if ((d0 + s * (d1 - d0)).norm() > section.radius) continue;
        out.crossings.push_back(traj.times[k] + s * (traj.times[k + 1] - traj.times[k]));
    }
    if (out.crossings.size() < 3) {
        std::ostringstream os;
        os << "only " << out.crossings.size() << " section crossings (need 3)";
        throw Error(ErrorCode::NoPeriod, os.str());
    }
    double lo = kInf, hi = 0.0, sum = 0.0;
    for (std::size_t k = 1; k < out.crossings.size(); ++k) {
        const double gap = out.crossings[k] - out.crossings[k - 1];
        lo = std::min(lo, gap);
        hi = std::max(hi, gap);
        sum += gap;
    }
    out.mean_gap = sum / static_cast<double>(out.crossings.size() - 1);
    out.relative_spread = (hi - lo) / out.mean_gap;
    if (out.relative_spread <= spread_tol) out.period = out.mean_gap;
    return out;
}

std::optional<double> detect_period(const ChartTopology& topo, const Trajectory& traj,
                                    const Section& section, double spread_tol) {
    return analyze_crossings(topo, traj, section, spread_tol).period;
}

std::string to_string(AlignmentTag tag) {
    switch (tag) {
        case AlignmentTag::Aligned: return "Aligned";
        case AlignmentTag::NotInCone: return "NotInCone";
        case AlignmentTag::Equilibrium: return "Equilibrium";
        case AlignmentTag::PFError: return "PFError";
    }
    return "PFError";
}

std::string to_string(LimitVerdict v) {
    switch (v) {
        case LimitVerdict::FixedPoint: return "FixedPoint";
        case LimitVerdict::LimitCycle: return "LimitCycle";
        case LimitVerdict::FixedPointsAndArcs: return "FixedPointsAndArcs";
        case LimitVerdict::NonAligned: return "NonAligned";
        case LimitVerdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

std::vector<AlignmentPoint> alignment_profile(const SystemDef& sys, const Vector& u_in,
                                              const OmegaSet& omega,
                                              const AlignmentSettings& settings) {
    const Vector u = resolve_input(sys, u_in);
    const auto& pts = omega.points();
    std::vector<std::size_t> picks;
    const std::size_t count = std::min(settings.max_points, pts.size());
    for (std::size_t i = 0; i < count; ++i) picks.push_back(i * pts.size() / count);

    std::vector<AlignmentPoint> out(picks.size());
    PFSettings pf = settings.pf;
    pf.threads = 1;
    parallel_for(picks.size(), settings.threads, [&](std::size_t i) {
        AlignmentPoint& ap = out[i];
        ap.x = pts[picks[i]];
        const Vector f = evaluate_field(sys, ap.x, u);
        if (f.norm() < settings.equilibrium_tol) {
            ap.tag = AlignmentTag::Equilibrium;
            ap.distance = 0.0;
            return;
        }
        const Cone cone = sys.cone_field.cone_at(ap.x);
        Vector oriented;
        if (cone_contains(cone, f, false, 1e-9))
            oriented = f;
        else if (cone_contains(cone, -f, false, 1e-9))
            oriented = -f;
        if (oriented.size() == 0) {
            ap.tag = AlignmentTag::NotInCone;
            ap.distance = kInf;
            return;
        }
        try {
            const PFVector w = pf_vector_at(sys, ap.x, u, pf);
            ap.distance = hilbert_distance(cone, oriented, w.w).value;
        } catch (const Error& e) {
            ap.tag = AlignmentTag::PFError;
            ap.distance = kInf;
            ap.message = e.what();
        }
    });
    return out;
}

LimitVerdict decide_verdict(const VerdictInputs& in) {
    if (in.extent < in.fp_tol) return LimitVerdict::FixedPoint;
    const bool aligned = in.profiled > in.equilibria && in.not_in_cone == 0 && in.pf_errors == 0 &&
                         in.alignment_max <= in.align_tol;
    if (in.period && *in.period > 0.0 && aligned) return LimitVerdict::LimitCycle;
    if (in.equilibrium_clusters >= 2 && aligned) return LimitVerdict::FixedPointsAndArcs;
    const bool all_not_in_cone = in.not_in_cone > 0 && in.not_in_cone + in.equilibria == in.profiled;
    if (all_not_in_cone && in.growth_flag) return LimitVerdict::NonAligned;
    return LimitVerdict::Inconclusive;
}

namespace {

std::size_t equilibrium_clusters(const SystemDef& sys, const Vector& u, const std::vector<Vector>& pts,
                                 double f_tol, double join) {
    std::vector<Vector> centres;
    for (const auto& p : pts) {
        if (evaluate_field(sys, p, u).norm() >= f_tol) continue;
        const bool known = std::any_of(centres.begin(), centres.end(), [&](const Vector& c) {
            return chart_difference(sys.topology, p, c).norm() < join;
        });
        if (!known) centres.push_back(p);
    }
    return centres.size();
}

}  // namespace

LimitSetReport classify_limit_set(const SystemDef& sys, const Vector& u_in, const Vector& x0,
                                  const ClassifySettings& settings) {
    const Vector u = resolve_input(sys, u_in);
    const Cone start = sys.cone_field.cone_at(x0);
    const VariationalFlow vf = variational_flow(sys, x0, start.interior_probe(), Input(u),
                                                {0.0, settings.t_max}, settings.step, true);
    LimitSetReport rep;
    rep.omega = omega_from_trajectory(vf.trajectory, settings.tail_fraction);
    rep.omega.source = x0;
    rep.log_growth = vf.log_growth;
    rep.growth_flag = vf.log_growth > settings.growth_nats;

    const auto& pts = rep.omega.points();
    rep.cloud_extent = cloud_extent(sys.topology, pts);
    VerdictInputs in;
    in.extent = rep.cloud_extent;
    in.fp_tol = settings.fp_tol;
    in.align_tol = settings.align_tol;
    in.growth_flag = rep.growth_flag;
    if (rep.cloud_extent < settings.fp_tol) {
        rep.fixed_point = cloud_centroid(sys.topology, pts);
        rep.alignment_max = 0.0;
        rep.verdict = decide_verdict(in);
        return rep;
    }

    // Section through the tail point nearest the centroid, normal along f there.
    const Vector centroid = cloud_centroid(sys.topology, pts);
    std::size_t nearest = 0;
    double best = kInf;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = chart_difference(sys.topology, pts[i], centroid).norm();
        if (d < best) {
            best = d;
            nearest = i;
        }
    }
    const Vector fp = evaluate_field(sys, pts[nearest], u);
    if (fp.norm() > 0.0) {
        Section sec{pts[nearest], fp / fp.norm(), 0.25 * rep.cloud_extent};
        try {
            const CrossingAnalysis ca = analyze_crossings(sys.topology, rep.omega.tail, sec,
                                                          settings.period_spread);
            rep.crossings = ca.crossings.size();
            rep.period_spread = ca.relative_spread;
            rep.period = ca.period;
            if (!ca.period) {
                std::ostringstream os;
                os << "section crossing gaps spread " << ca.relative_spread;
                rep.diagnostic = os.str();
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoPeriod) throw;
            rep.diagnostic = e.what();
        }
    }
    in.period = rep.period;

    rep.profile = alignment_profile(sys, u, rep.omega, settings.alignment);
    rep.alignment_max = 0.0;
    in.profiled = rep.profile.size();
    for (const auto& ap : rep.profile) {
        switch (ap.tag) {
            case AlignmentTag::Aligned: rep.alignment_max = std::max(rep.alignment_max, ap.distance); break;
            case AlignmentTag::NotInCone: ++in.not_in_cone; break;
            case AlignmentTag::Equilibrium: ++in.equilibria; break;
            case AlignmentTag::PFError:
                ++in.pf_errors;
                if (rep.diagnostic.empty()) rep.diagnostic = ap.message;
                break;
        }
    }
    if (in.not_in_cone > 0 || in.pf_errors > 0) rep.alignment_max = kInf;
    in.alignment_max = rep.alignment_max;
    in.equilibrium_clusters = equilibrium_clusters(sys, u, pts, 1e-6, 1e-2);
    rep.verdict = decide_verdict(in);
    return rep;
}

RegionCheck invariant_region_check(const SystemDef& sys, const Vector& u_in, const StateBox& region,
                                   const std::vector<Vector>& samples, double horizon,
                                   const StepSettings& step) {
    const Vector u = resolve_input(sys, u_in);
    RegionCheck out;
    out.margin = kInf;
    out.interior_ok = true;
    for (const auto& x : samples) {
        const Vector f = evaluate_field(sys, x, u);
        const Cone cone = sys.cone_field.cone_at(x);
        const double nf = f.norm();
        const double slack = nf > 0.0 ? cone.evaluate(f).minCoeff() / nf : 0.0;
        if (slack < out.margin) {
            out.margin = slack;
            out.worst_state = x;
        }
        if (!(nf > 0.0) || !cone_contains(cone, f, true, 0.0)) out.interior_ok = false;
    }
    if (samples.empty()) {
        out.interior_ok = false;
        out.message = "no samples";
    }

    auto periodic = [&](int d) {
        return sys.topology.kinds[static_cast<std::size_t>(d)] == CoordKind::Circle &&
               region.hi(d) - region.lo(d) >= kTwoPi - 1e-9;
    };
    out.invariance_ok = true;
    for (const auto& x : samples) {
        bool on_face = false;
        for (int d = 0; d < region.dim(); ++d) {
            if (periodic(d)) continue;
            const double scale = 1e-9 * std::max(1.0, std::abs(x(d)));
            if (std::abs(x(d) - region.lo(d)) <= scale || std::abs(x(d) - region.hi(d)) <= scale)
                on_face = true;
        }
        if (!on_face) continue;
        ++out.boundary_samples;
        try {
            const Trajectory tr = flow(sys, x, Input(u), {0.0, horizon}, step);
            for (const auto& p : tr.states) {
                Vector q = p;
                for (int d = 0; d < region.dim(); ++d)
                    if (periodic(d)) q(d) = region.lo(d);
                if (!region.contains(q, 1e-9)) {
                    out.invariance_ok = false;
                    std::ostringstream os;
                    os << "flow from " << x.transpose() << " leaves the region at " << p.transpose();
                    if (out.message.empty()) out.message = os.str();
                    break;
                }
            }
        } catch (const Error& e) {
            out.invariance_ok = false;
            if (out.message.empty()) out.message = e.what();
        }
    }
    if (!out.interior_ok && out.message.empty()) {
        std::ostringstream os;
        os << "f is not strictly inside the cone at " << out.worst_state.transpose();
        out.message = os.str();
    }
    out.ok = out.interior_ok && out.invariance_ok;
    return out;
}

Vector find_equilibrium(const SystemDef& sys, const Vector& u_in, const Vector& guess, double tol,
                        int max_iter) {
    const Vector u = resolve_input(sys, u_in);
    Vector x = guess;
    for (int it = 0; it < max_iter; ++it) {
        const Vector f = evaluate_field(sys, x, u);
        if (f.norm() <= tol) return chart_normalize(sys, x).x;
        const Matrix a = state_jacobian(sys, x, u);
        const Vector step = a.fullPivLu().solve(-f);
        if (!step.allFinite()) break;
        x += step;
    }
    if (evaluate_field(sys, x, u).norm() <= 1e3 * tol) return chart_normalize(sys, x).x;
    throw Error(ErrorCode::EvaluationError, sys.name + ": Newton iteration for an equilibrium failed");
}

namespace {

double line_angle(const Vector& a, const Vector& b) {
    const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
    return std::acos(std::min(1.0, c));
}

}  // namespace

Vector linear_pf_vector(const Matrix& a, const Cone& cone) {
    Eigen::EigenSolver<Matrix> es(a);
    double best = -kInf;
    Vector out;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const auto lam = es.eigenvalues()(i);
        if (std::abs(lam.imag()) > 1e-12 * std::max(1.0, std::abs(lam.real()))) continue;
        Vector v = es.eigenvectors().col(i).real();
        v /= v.norm();
        if (!cone_contains(cone, v, false, 1e-9)) v = -v;
        if (!cone_contains(cone, v, false, 1e-9)) continue;
        if (lam.real() > best) {
            best = lam.real();
            out = v;
        }
    }
    if (out.size() == 0) throw Error(ErrorCode::InvalidInput, "no real eigenvector inside the cone");
    return out;
}

SaddleReport saddle_tangency_diagnostic(const SystemDef& sys, const Vector& u_in, const Vector& saddle,
                                        double tol, double arc_time) {
    const Vector u = resolve_input(sys, u_in);
    SaddleReport rep;
    rep.saddle = find_equilibrium(sys, u, saddle);
    const Matrix a = state_jacobian(sys, rep.saddle, u);
    Eigen::EigenSolver<Matrix> es(a);
    rep.eigenvalues_real = es.eigenvalues().real();
    int positive = 0, negative = 0;
    Eigen::Index top = -1;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double re = rep.eigenvalues_real(i);
        if (std::abs(re) < 1e-9) throw Error(ErrorCode::NotHyperbolic, "eigenvalue on the imaginary axis");
        if (re > 0) {
            ++positive;
            if (std::abs(es.eigenvalues()(i).imag()) < 1e-12 && (top < 0 || re > rep.eigenvalues_real(top)))
                top = i;
        } else {
            ++negative;
        }
    }
    if (positive == 0 || negative == 0 || top < 0)
        throw Error(ErrorCode::NotHyperbolic, sys.name + ": equilibrium is not a saddle");

    rep.unstable_direction = es.eigenvectors().col(top).real().normalized();
    const Cone cone = sys.cone_field.cone_at(rep.saddle);
    if (!cone_contains(cone, rep.unstable_direction, false, 1e-9)) rep.unstable_direction *= -1.0;
    rep.pf_direction = linear_pf_vector(a, cone);
    rep.unstable_pf_angle = line_angle(rep.unstable_direction, rep.pf_direction);

    rep.tangent = true;
    StepSettings step;
    for (int side : {1, -1}) {
        TangencyArc arc;
        arc.side = side;
        const Vector start = rep.saddle + side * 1e-6 * rep.unstable_direction;
        try {
            const Trajectory tr = flow(sys, start, Input(u), {0.0, arc_time}, step);
            arc.endpoint = find_equilibrium(sys, u, tr.states.back());
            for (std::size_t k = 0; k < tr.size(); ++k) {
                const Vector d = chart_difference(sys.topology, tr.states[k], arc.endpoint);
                if (d.norm() < 1e-4) {
                    arc.arrival_direction = d / d.norm();
                    break;
                }
            }
            if (arc.arrival_direction.size() == 0)
                throw Error(ErrorCode::EvaluationError, "arc did not reach its endpoint");
            const Matrix ae = state_jacobian(sys, arc.endpoint, u);
            arc.pf_direction = linear_pf_vector(ae, sys.cone_field.cone_at(arc.endpoint));
            arc.angle = line_angle(arc.arrival_direction, arc.pf_direction);
            if (arc.angle > tol) rep.tangent = false;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Diverged && e.code() != ErrorCode::LeftDomain &&
                e.code() != ErrorCode::EvaluationError)
                throw;
            arc.escaped = true;
        }
        rep.arcs.push_back(std::move(arc));
    }
    return rep;
}

}  // namespace dpos
