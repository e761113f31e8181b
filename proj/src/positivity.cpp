#include "dpos/positivity.hpp"

#include "dpos/error.hpp"
#include "dpos/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

namespace dpos {

namespace {

constexpr double kTightTol = 1e-12;

std::vector<int> tight_facets(const Matrix& h, const Vector& dx) {
    std::vector<int> out;
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        if (std::abs(h.row(i).dot(dx)) <= kTightTol * h.row(i).norm() * dx.norm())
            out.push_back(static_cast<int>(i));
    return out;
}

// Removes the component along h_facet so the sample is exactly tight, then
// normalizes.
Vector onto_facet(const Matrix& h, int facet, Vector v) {
    const auto row = h.row(facet);
    v -= (row.dot(v) / row.squaredNorm()) * row.transpose();
    return v / v.norm();
}

Vector slerp(const Vector& a, const Vector& b, double s) {
    const double c = std::clamp(a.dot(b), -1.0, 1.0);
    const double omega = std::acos(c);
    if (omega < 1e-12) return a;
    Vector v = (std::sin((1.0 - s) * omega) * a + std::sin(s * omega) * b) / std::sin(omega);
    return v / v.norm();
}

}  // namespace

std::vector<BoundarySample> boundary_samples(const Cone& cone, const Vector& x, int per_facet) {
    if (per_facet < 1) throw Error(ErrorCode::InvalidInput, "per_facet must be >= 1");
    const Matrix& h = cone.halfspaces();
    const Matrix& g = cone.generators();
    const int n = cone.dim();
    std::vector<BoundarySample> out;
    for (int f = 0; f < cone.num_facets(); ++f) {
        const std::vector<int> rays = cone.facet_generators(f);
        if (static_cast<int>(rays.size()) < n - 1)
            throw Error(ErrorCode::InvalidCone, "facet " + std::to_string(f) + " has too few extreme rays");
        std::vector<Vector> dirs;
        if (n == 2) {
            dirs.push_back(g.col(rays.front()));
        } else if (rays.size() == 2) {
            const int count = std::max(per_facet, 2);
            for (int s = 0; s < count; ++s)
                dirs.push_back(slerp(g.col(rays[0]), g.col(rays[1]),
                                     static_cast<double>(s) / (count - 1)));
        } else {
            for (int r : rays) {
                if (static_cast<int>(dirs.size()) >= per_facet) break;
                dirs.push_back(g.col(r));
            }
            std::mt19937_64 rng(0x5eedULL + static_cast<std::uint64_t>(f));
            std::exponential_distribution<double> expo(1.0);
            while (static_cast<int>(dirs.size()) < per_facet) {
                Vector v = Vector::Zero(n);
                for (int r : rays) v += expo(rng) * g.col(r);
                dirs.push_back(v / v.norm());
            }
        }
        for (auto& d : dirs) {
            BoundarySample s;
            s.x = x;
            s.dx = onto_facet(h, f, d);
            s.facet = f;
            s.tight_set = tight_facets(h, s.dx);
            if (std::find(s.tight_set.begin(), s.tight_set.end(), f) == s.tight_set.end())
                s.tight_set.insert(s.tight_set.begin(), f);
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<BoundarySample> boundary_samples(const ConeField& field, const Vector& x,
                                             int per_facet) {
    return boundary_samples(field.cone_at(x), x, per_facet);
}

std::string to_string(PositivityVerdict v) {
    switch (v) {
        case PositivityVerdict::Positive: return "Positive";
        case PositivityVerdict::NotPositive: return "NotPositive";
        case PositivityVerdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

std::string to_string(StrictVerdict v) {
    switch (v) {
        case StrictVerdict::Strict: return "Strict";
        case StrictVerdict::NonStrict: return "NonStrict";
        case StrictVerdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

namespace {

struct StateRates {
    std::vector<MarginRecord> records;
};

// d/dt H(x(t)) along f: analytic hook when present, else central differences.
Matrix facet_rate_matrix(const ConeField& field, const Vector& x, const Vector& fx) {
    if (field.is_constant()) return Matrix::Zero(field.halfspaces_at(x).rows(), field.dim());
    if (auto hd = field.facet_rate(x, fx)) return *hd;
    const double eps = 1e-6 / std::max(1.0, fx.norm());
    const Matrix hp = field.halfspaces_at(x + eps * fx);
    const Matrix hm = field.halfspaces_at(x - eps * fx);
    return (hp - hm) / (2.0 * eps);
}

PositivityReport reduce(std::vector<StateRates>& per_state, const std::vector<Vector>& states,
                        int facets, const PositivitySettings& settings) {
    PositivityReport rep;
    rep.facet_min_margin = Vector::Constant(facets, kInf);
    for (std::size_t s = 0; s < per_state.size(); ++s) {
        for (auto& r : per_state[s].records) {
            r.state_index = s;
            ++rep.samples_checked;
            if (r.facet < facets)
                rep.facet_min_margin(r.facet) = std::min(rep.facet_min_margin(r.facet), r.rate);
            if (r.rate < rep.min_margin) {
                rep.min_margin = r.rate;
                rep.min_margin_state = states[s];
            }
            if (r.rate < -settings.tolerance) {
                rep.witnesses.push_back({states[s], r.dx, r.facet, r.rate});
                ++rep.witness_count;
            }
            if (settings.record_margins) rep.margins.push_back(r);
        }
    }
    std::stable_sort(rep.witnesses.begin(), rep.witnesses.end(),
                     [](const Witness& a, const Witness& b) { return a.rate < b.rate; });
    if (rep.witnesses.size() > settings.max_witnesses) rep.witnesses.resize(settings.max_witnesses);
    if (rep.samples_checked == 0)
        rep.verdict = PositivityVerdict::Inconclusive;
    else
        rep.verdict = rep.witness_count > 0 ? PositivityVerdict::NotPositive : PositivityVerdict::Positive;
    return rep;
}

}  // namespace

PositivityReport check_pointwise_positivity(const SystemDef& sys, const std::vector<Vector>& states,
                                            const Vector& u_in, const PositivitySettings& settings) {
    const Vector u = resolve_input(sys, u_in);
    const bool discrete = sys.time_kind == TimeKind::Discrete;
    std::vector<StateRates> per_state(states.size());
    std::vector<int> facet_counts(states.size(), 0);

    parallel_for(states.size(), settings.threads, [&](std::size_t s) {
        const Vector& x = states[s];
        const Cone cone = sys.cone_field.cone_at(x);
        facet_counts[s] = cone.num_facets();
        const auto samples = boundary_samples(cone, x, settings.per_facet);
        const Vector fx = evaluate_field(sys, x, u);
        const Matrix a = state_jacobian(sys, x, u);
        auto& out = per_state[s].records;
        if (discrete) {
            const Matrix h_next = sys.cone_field.halfspaces_at(fx);
            for (const auto& bs : samples) {
                const Vector vals = h_next * (a * bs.dx);
                for (Eigen::Index i = 0; i < vals.size(); ++i)
                    out.push_back({0, static_cast<int>(i), bs.dx, vals(i)});
            }
            return;
        }
        const Matrix& h = cone.halfspaces();
        const Matrix hdot = facet_rate_matrix(sys.cone_field, x, fx);
        for (const auto& bs : samples) {
            const Vector adx = a * bs.dx;
            for (int j : bs.tight_set) {
                const double rate = hdot.row(j).dot(bs.dx) + h.row(j).dot(adx);
                out.push_back({0, j, bs.dx, rate});
            }
        }
    });

    int facets = 0;
    for (int c : facet_counts) facets = std::max(facets, c);
    return reduce(per_state, states, facets, settings);
}

PositivityReport metzler_check(const SystemDef& sys, const std::vector<Vector>& states,
                               const Vector& u_in, const PositivitySettings& settings) {
    if (!sys.cone_field.is_orthant())
        throw Error(ErrorCode::WrongConeKind, sys.name + ": Metzler check needs the positive orthant");
    const Vector u = resolve_input(sys, u_in);
    const bool discrete = sys.time_kind == TimeKind::Discrete;
    const int n = sys.dim;
    std::vector<StateRates> per_state(states.size());
    parallel_for(states.size(), settings.threads, [&](std::size_t s) {
        const Matrix a = state_jacobian(sys, states[s], u);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j && !discrete) continue;
                per_state[s].records.push_back({0, i, Vector::Unit(n, j), a(i, j)});
            }
        }
    });
    return reduce(per_state, states, n, settings);
}

double max_pairwise_distance(const Cone& cone, const Matrix& images) {
    double diam = 0.0;
    for (Eigen::Index i = 0; i < images.cols(); ++i) {
        for (Eigen::Index j = i + 1; j < images.cols(); ++j) {
            try {
                diam = std::max(diam, hilbert_distance(cone, images.col(i), images.col(j)).value);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::OutsideCone) throw;
                return kInf;
            }
            if (!std::isfinite(diam)) return kInf;
        }
    }
    return diam;
}

namespace {

struct StrictState {
    bool failed = false;
    std::string error;
    bool strict = true;
    double diameter = 0.0;
    double slack = kInf;
    std::vector<double> times;
    std::vector<double> distances;
    std::optional<double> lambda;
};

// Least-squares slope of log d against t over points with finite d > floor.
std::optional<double> decay_rate(const std::vector<double>& t, const std::vector<double>& d,
                                 double t_from, double floor) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_from - 1e-12 || !std::isfinite(d[k]) || d[k] <= floor) continue;
        const double y = std::log(d[k]);
        sx += t[k];
        sy += y;
        sxx += t[k] * t[k];
        sxy += t[k] * y;
        ++count;
    }
    if (count < 3) return std::nullopt;
    const double den = count * sxx - sx * sx;
    if (!(std::abs(den) > 0.0)) return std::nullopt;
    return -(count * sxy - sx * sy) / den;
}

}  // namespace

ContractionReport check_strict_positivity(const SystemDef& sys, const std::vector<Vector>& states,
                                          double T, const Vector& u_in,
                                          const StrictSettings& settings) {
    if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorCode::InvalidInput, "horizon T must be positive");
    if (states.empty()) throw Error(ErrorCode::InvalidInput, "no state samples");
    const Vector u = resolve_input(sys, u_in);
    const bool discrete = sys.time_kind == TimeKind::Discrete;
    const double h = discrete ? 1.0 : settings.step.h;
    const auto stride_for = [&](double duration) {
        const auto steps = static_cast<std::size_t>(std::ceil(duration / h - 1e-9));
        const std::size_t per_piece = std::max<std::size_t>(1, settings.decay_points / 3);
        return std::max<std::size_t>(1, steps / per_piece);
    };

    std::vector<StrictState> results(states.size());
    parallel_for(states.size(), settings.threads, [&](std::size_t s) {
        StrictState& r = results[s];
        try {
            const Vector& x = states[s];
            const auto samples = boundary_samples(sys.cone_field, x, settings.per_facet);
            Matrix v0(sys.dim, static_cast<Eigen::Index>(samples.size()));
            for (std::size_t k = 0; k < samples.size(); ++k) v0.col(static_cast<Eigen::Index>(k)) = samples[k].dx;

            auto track = [&](const VariationalBlockFlow& fl, bool skip_first) {
                for (std::size_t k = skip_first ? 1 : 0; k < fl.trajectory.size(); ++k) {
                    const Cone cone = sys.cone_field.cone_at(fl.trajectory.states[k]);
                    r.times.push_back(fl.trajectory.times[k]);
                    r.distances.push_back(max_pairwise_distance(cone, fl.tangents[k]));
                }
            };

            StepSettings step = settings.step;
            step.record_stride = stride_for(T);
            const auto first = variational_block_flow(sys, x, v0, u, {0.0, T}, step, true);
            track(first, false);

            const Vector& xT = first.trajectory.states.back();
            const Matrix& vT = first.tangents.back();
            const Cone coneT = sys.cone_field.cone_at(xT);
            for (Eigen::Index c = 0; c < vT.cols(); ++c) {
                const Vector vals = coneT.evaluate(vT.col(c));
                const double slack = vals.minCoeff() / vT.col(c).norm();
                r.slack = std::min(r.slack, slack);
                if (!cone_contains(coneT, vT.col(c), true, settings.interior_tol)) r.strict = false;
            }
            r.diameter = max_pairwise_distance(coneT, vT);
            if (!std::isfinite(r.diameter)) r.strict = false;

            step.record_stride = stride_for(2.0 * T);
            const auto second = variational_block_flow(sys, xT, vT, u, {T, 3.0 * T}, step, true);
            track(second, true);
            r.lambda = decay_rate(r.times, r.distances, T, settings.fit_floor);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Diverged && e.code() != ErrorCode::LeftDomain) throw;
            r.failed = true;
            r.error = e.what();
        }
    });

    ContractionReport rep;
    rep.T = T;
    rep.diameter_estimate = 0.0;
    rep.worst_interior_slack = kInf;
    bool any_failed = false, all_strict = true;
    std::optional<double> lambda;
    for (std::size_t s = 0; s < results.size(); ++s) {
        const StrictState& r = results[s];
        if (r.failed) {
            if (!any_failed) {
                std::ostringstream os;
                os << "flow from state " << s << " failed: " << r.error;
                rep.diagnostic = os.str();
            }
            any_failed = true;
            continue;
        }
        rep.samples_checked += 1;
        rep.worst_interior_slack = std::min(rep.worst_interior_slack, r.slack);
        rep.diameter_estimate = std::max(rep.diameter_estimate, r.diameter);
        if (!r.strict) {
            all_strict = false;
            rep.non_strict_states.push_back(states[s]);
        }
        if (r.lambda) lambda = lambda ? std::min(*lambda, *r.lambda) : *r.lambda;
        if (rep.decay.empty()) {
            for (std::size_t k = 0; k < r.times.size(); ++k) rep.decay.push_back({r.times[k], r.distances[k]});
        } else {
            for (std::size_t k = 0; k < r.times.size() && k < rep.decay.size(); ++k)
                rep.decay[k].distance = std::max(rep.decay[k].distance, r.distances[k]);
        }
    }
    rep.mu_T = contraction_ratio(rep.diameter_estimate);
    // Every state contracted below the fit floor before T: faster than measurable.
    rep.fitted_lambda = lambda ? *lambda : kInf;

    if (any_failed) {
        rep.verdict = StrictVerdict::Inconclusive;
    } else if (!all_strict) {
        rep.verdict = StrictVerdict::NonStrict;
        if (rep.diagnostic.empty())
            rep.diagnostic = "boundary ray images not strictly interior at T";
    } else if (!(rep.fitted_lambda > 0.0)) {
        rep.verdict = StrictVerdict::NonStrict;
        rep.diagnostic = "pairwise Hilbert distances do not decay over [T, 3T]";
    } else {
        rep.verdict = StrictVerdict::Strict;
    }
    return rep;
}

}  // namespace dpos
