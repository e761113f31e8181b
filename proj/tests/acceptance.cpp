// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "dpos/geometry.hpp"
#include "dpos/integrate.hpp"
#include "dpos/limitsets.hpp"
#include "dpos/models.hpp"
#include "dpos/parallel.hpp"
#include "dpos/pffield.hpp"
#include "dpos/positivity.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace dpos;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

SystemDef pendulum(double k, double u = 0.0) {
    return make_model({ModelName::Pendulum, {{"k", k}, {"u", u}}, {}});
}

SystemDef model(ModelName name) { return make_model({name, {}, {}}); }

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

double wrap_pi(double a) { return std::remainder(a, kTwoPi); }

// ---------------------------------------------------------------------------

Outcome hilbert_closed_form() {
    const Cone k = Cone::orthant(2);
    const double d0 = hilbert_distance(k, vec2(2, 1), vec2(1, 1)).value;
    double worst = std::abs(d0 - std::log(2.0));

    std::mt19937_64 rng(11);
    const Cone k3 = Cone::orthant(3);
    double worst_pairs = 0, worst_scale = 0, worst_sym = 0, worst_tri = -kInf;
    for (int i = 0; i < 200; ++i) {
        const int n = i % 2 ? 3 : 2;
        const Cone& c = n == 3 ? k3 : k;
        const Vector x = oracle::random_positive(rng, n), y = oracle::random_positive(rng, n),
                     z = oracle::random_positive(rng, n);
        const double dxy = hilbert_distance(c, x, y).value;
        worst_pairs = std::max(worst_pairs, std::abs(dxy - oracle::orthant_hilbert(x, y)));
        const double a = oracle::uniform(rng, 0.01, 100), b = oracle::uniform(rng, 0.01, 100);
        worst_scale = std::max(worst_scale, std::abs(hilbert_distance(c, a * x, b * y).value - dxy));
        worst_sym = std::max(worst_sym, std::abs(hilbert_distance(c, y, x).value - dxy));
        worst_tri = std::max(worst_tri, hilbert_distance(c, x, z).value - dxy - hilbert_distance(c, y, z).value);
    }
    Outcome o;
    o.pass = worst <= 1e-12 && worst_pairs <= 1e-12 && worst_scale <= 1e-12 && worst_sym <= 1e-12 &&
             worst_tri <= 1e-10;
    o.detail = "|d-log2|=" + fmt(worst) + " pairs=" + fmt(worst_pairs) + " scale=" + fmt(worst_scale) +
               " sym=" + fmt(worst_sym) + " triangle excess=" + fmt(worst_tri);
    return o;
}

Outcome contraction_constants() {
    double worst = 0, worst_trip = 0;
    for (int i = 0; i <= 400; ++i) {
        const double delta = 0.02 * i;
        const double mu = contraction_ratio(delta);
        worst = std::max(worst, std::abs(mu - std::tanh(delta / 4.0)));
        worst_trip = std::max(worst_trip, std::abs(4.0 * std::atanh(mu) - delta));
    }
    const bool inf_ok = contraction_ratio(kInf) == 1.0;
    return {worst <= 1e-12 && worst_trip <= 1e-12 && inf_ok,
            "tanh err=" + fmt(worst) + " round trip=" + fmt(worst_trip) + " mu(inf)=1:" + (inf_ok ? "yes" : "no")};
}

Outcome pendulum_threshold() {
    const std::vector<double> positive{2.0, 2.5, 3.0, 4.0}, negative{1.0, 1.5, 1.9};
    const StateBox box{vec2(0, -3), vec2(kTwoPi, 3)};
    const auto states = grid_samples({{CoordKind::Circle, CoordKind::Line}}, box, {36, 13});
    const double spacing = kTwoPi / 36;

    bool ok = true;
    double worst_margin = 0;
    std::ostringstream msg;
    for (double k : positive) {
        const SystemDef sys = pendulum(k);
        const auto r = check_pointwise_positivity(sys, states);
        if (r.verdict != PositivityVerdict::Positive) {
            ok = false;
            msg << " k=" << k << ":" << to_string(r.verdict);
        }
    }
    for (double k : negative) {
        const SystemDef sys = pendulum(k);
        PositivitySettings ps;
        const auto r = check_pointwise_positivity(sys, states, {}, ps);
        const bool near_zero = !r.witnesses.empty() &&
                               std::abs(wrap_pi(r.witnesses.front().x(0))) <= spacing + 1e-12 &&
                               r.witnesses.front().facet == 1;
        if (r.verdict != PositivityVerdict::NotPositive || !near_zero) {
            ok = false;
            msg << " k=" << k << ":" << to_string(r.verdict) << (near_zero ? "" : " (witness away from 0)");
        }
    }
    // margin on the facet dtheta + dv = 0 against k - 1 - cos(theta); the tight
    // sample is the unit vector (1,-1)/sqrt(2), hence the sqrt(2).
    for (double k : {1.0, 1.5, 1.9, 2.0, 2.5, 3.0, 4.0}) {
        const SystemDef sys = pendulum(k);
        PositivitySettings ps;
        ps.record_margins = true;
        const auto r = check_pointwise_positivity(sys, states, {}, ps);
        double expect_min = kInf;
        for (const auto& m : r.margins) {
            if (m.facet != 1) continue;
            const double theta = states[m.state_index](0);
            const double expect = k - 1.0 - std::cos(theta);
            worst_margin = std::max(worst_margin, std::abs(m.rate * std::sqrt(2.0) - expect));
            expect_min = std::min(expect_min, expect);
        }
        worst_margin = std::max(worst_margin, std::abs(r.facet_min_margin(1) * std::sqrt(2.0) - expect_min));
    }
    ok = ok && worst_margin <= 1e-6;
    return {ok, "verdicts" + (msg.str().empty() ? std::string(" as expected") : msg.str()) +
                    "; |sqrt2*margin - (k-1-cos)|=" + fmt(worst_margin)};
}

Outcome strictness_dichotomy() {
    const auto states = grid_samples({{CoordKind::Circle, CoordKind::Line}},
                                     {vec2(0, -2), vec2(kTwoPi, 2)}, {12, 9});
    StrictSettings ss;
    ss.threads = 0;
    const auto k3 = check_strict_positivity(pendulum(3.0), states, 2.0, {}, ss);
    const auto k2 = check_strict_positivity(pendulum(2.0), states, 2.0, {}, ss);

    const SystemDef osc = model(ModelName::HarmonicOscillatorRotatingCone);
    std::vector<Vector> osc_states;
    std::mt19937_64 rng(4);
    for (int i = 0; i < 12; ++i) {
        const double r = oracle::uniform(rng, 0.5, 2.0), a = oracle::uniform(rng, 0, kTwoPi);
        osc_states.push_back(vec2(r * std::cos(a), r * std::sin(a)));
    }
    const auto ko = check_strict_positivity(osc, osc_states, 2.0, {}, ss);

    // pairwise distances of interior vectors stay put
    double drift = 0;
    for (int i = 0; i < 10; ++i) {
        const Vector& x0 = osc_states[static_cast<std::size_t>(i)];
        const Cone c0 = osc.cone_field.cone_at(x0);
        const Matrix& g = c0.generators();
        Matrix dx0(2, 2);
        const double a = oracle::uniform(rng, 0.1, 0.9), b = oracle::uniform(rng, 0.1, 0.9);
        dx0.col(0) = a * g.col(0) + (1 - a) * g.col(1);
        dx0.col(1) = b * g.col(0) + (1 - b) * g.col(1);
        StepSettings st;
        st.record_stride = 100;
        const auto vf = variational_block_flow(osc, x0, dx0, Input{}, {0.0, 20.0}, st, false);
        const double d0 = hilbert_distance(c0, dx0.col(0), dx0.col(1)).value;
        for (std::size_t s = 0; s < vf.trajectory.size(); ++s) {
            const Cone c = osc.cone_field.cone_at(vf.trajectory.states[s]);
            const Matrix& t = vf.tangents[s];
            drift = std::max(drift, std::abs(hilbert_distance(c, t.col(0), t.col(1)).value - d0));
        }
    }
    const bool ok = k3.verdict == StrictVerdict::Strict && k3.fitted_lambda > 0 &&
                    k2.verdict == StrictVerdict::NonStrict && ko.verdict == StrictVerdict::NonStrict &&
                    drift <= 1e-6;
    return {ok, "k=3 " + to_string(k3.verdict) + " lambda=" + fmt(k3.fitted_lambda) + "; k=2 " +
                    to_string(k2.verdict) + "; oscillator " + to_string(ko.verdict) +
                    " distance drift=" + fmt(drift)};
}

Outcome oscillator_conservation() {
    const SystemDef osc = model(ModelName::HarmonicOscillatorRotatingCone);
    std::mt19937_64 rng(5);
    double drift = 0;
    for (int i = 0; i < 10; ++i) {
        const Vector x0 = vec2(oracle::uniform(rng, -2, 2), oracle::uniform(rng, -2, 2));
        const Vector dx0 = vec2(oracle::uniform(rng, -1, 1), oracle::uniform(rng, -1, 1));
        StepSettings st;
        st.h = 1e-3;
        st.record_stride = 10;
        const auto vf = variational_flow(osc, x0, dx0, Input{}, {0.0, 20.0}, st, false);
        const Vector k0 = osc.cone_field.halfspaces_at(x0) * dx0;
        for (std::size_t s = 0; s < vf.trajectory.size(); ++s) {
            const Vector ks = osc.cone_field.halfspaces_at(vf.trajectory.states[s]) * vf.tangents[s];
            drift = std::max(drift, (ks - k0).cwiseAbs().maxCoeff());
        }
    }
    return {drift <= 1e-6, "max |k(t)-k(0)|=" + fmt(drift)};
}

// Q = dtheta^2 - drho^2/rho^2 along the prolonged flow, at time s.
double polar_q(const SystemDef& polar, const Vector& x0, const Vector& dx0, double s) {
    StepSettings st;
    st.h = 1e-4;
    const SystemDef sys = s >= 0 ? polar : time_reversed(polar);
    const auto vf = variational_flow(sys, x0, dx0, Input{}, {0.0, std::abs(s)}, st, false);
    const Vector& x = vf.trajectory.states.back();
    const Vector& dx = vf.tangents.back();
    return dx(0) * dx(0) - dx(1) * dx(1) / (x(1) * x(1));
}

Outcome polar_boundary_push() {
    const SystemDef polar = model(ModelName::PolarDecoupled);
    std::mt19937_64 rng(6);
    double worst_claim = 0, worst_derived = 0;
    for (int i = 0; i < 50; ++i) {
        const double theta = oracle::uniform(rng, 0, kTwoPi), rho = oracle::uniform(rng, 0.3, 2.5);
        const double drho = oracle::uniform(rng, 0.2, 1.5) * (i % 2 ? 1 : -1);
        const double dtheta = std::abs(drho) / rho * (i % 3 ? 1 : -1);
        const Vector x0 = vec2(theta, rho), dx0 = vec2(dtheta, drho);
        // Richardson-extrapolated central difference
        const double e = 2e-3;
        const double d1 = (polar_q(polar, x0, dx0, e) - polar_q(polar, x0, dx0, -e)) / (2 * e);
        const double d2 = (polar_q(polar, x0, dx0, e / 2) - polar_q(polar, x0, dx0, -e / 2)) / e;
        const double deriv = (4 * d2 - d1) / 3;
        const double claimed = (1 + rho * rho / 3) * drho * drho / (rho * rho);
        const double derived = 4.0 / 3.0 * drho * drho;
        worst_claim = std::max(worst_claim, std::abs(deriv - claimed));
        worst_derived = std::max(worst_derived, std::abs(deriv - derived));
    }
    return {worst_claim <= 1e-6, "|dQ/dt - (1+rho^2/3)drho^2/rho^2|=" + fmt(worst_claim) +
                                     " (vs 4/3 drho^2: " + fmt(worst_derived) + ")"};
}

Outcome pf_linear() {
    const SystemDef lin = model(ModelName::PositiveLinear);
    std::mt19937_64 rng(7);
    PFSettings pf;
    pf.tol = 1e-10;
    const Vector perron = vec2(1, 1) / std::sqrt(2.0);
    double worst = 0;
    for (int i = 0; i < 10; ++i) {
        const Vector x = vec2(oracle::uniform(rng, -3, 3), oracle::uniform(rng, -3, 3));
        worst = std::max(worst, (pf_vector_at(lin, x, {}, pf).w - perron).norm());
    }

    Matrix a(2, 2);
    a << 2, 1, 1, 2;
    const Cone k = Cone::orthant(2);
    StepSettings st;
    st.record_stride = 50;
    const auto vf = variational_block_flow(lin, vec2(0.3, -0.2), Matrix::Identity(2, 2), Input{}, {0.0, 3.0}, st);
    std::vector<double> ts, logs;
    double oracle_gap = 0;
    for (std::size_t s = 0; s < vf.trajectory.size(); ++s) {
        const double t = vf.trajectory.times[s];
        if (t < 1.0 - 1e-9) continue;
        const double d = hilbert_distance(k, vf.tangents[s].col(0), vf.tangents[s].col(1)).value;
        const Matrix e = oracle::expm(a * t);
        const double de = oracle::orthant_hilbert(e.col(0), e.col(1));
        oracle_gap = std::max(oracle_gap, std::abs(d - de) / de);
        ts.push_back(t);
        logs.push_back(std::log(d));
    }
    const double slope = oracle::slope(ts, logs);
    const bool ok = worst <= 1e-8 && std::abs(slope + 2.0) <= 0.1 && oracle_gap <= 1e-6;
    return {ok, "|w - perron|=" + fmt(worst) + " decay slope=" + fmt(slope) + " rel gap to expm=" + fmt(oracle_gap)};
}

Outcome pf_pde_residual() {
    const SystemDef lin = model(ModelName::PositiveLinear);
    PFSettings pf;
    pf.tol = 1e-12;
    const StateBox box{vec2(0.5, -0.5), vec2(1.5, 0.5)};
    const auto grid = pf_field_on_grid(lin, box, {11, 11}, {}, pf);
    const auto r = pf_residual(lin, grid, vec2(1.0, 0.0));

    const SystemDef pend = pendulum(3.0, 1.2);
    PFSettings pp;
    pp.tol = 1e-8;
    const StateBox local{vec2(0.95, 0.45), vec2(1.05, 0.55)};
    const auto pgrid = pf_field_on_grid(pend, local, {5, 5}, {}, pp);
    const auto pr = pf_residual(pend, pgrid, vec2(1.0, 0.5));
    const bool ok = r.pde_residual <= 1e-10 && std::abs(r.lambda - 3.0) <= 1e-8 && pr.pde_residual <= 5e-2;
    return {ok, "linear residual=" + fmt(r.pde_residual) + " lambda=" + fmt(r.lambda) +
                    "; pendulum residual=" + fmt(pr.pde_residual)};
}

Outcome limit_sets() {
    const SystemDef pend = pendulum(3.0, 1.2);
    std::mt19937_64 rng(9);
    std::vector<Vector> x0s;
    for (int i = 0; i < 20; ++i) x0s.push_back(vec2(oracle::uniform(rng, 0, kTwoPi), oracle::uniform(rng, -2, 2)));
    std::vector<LimitSetReport> reports(x0s.size());
    parallel_for(x0s.size(), 0, [&](std::size_t i) {
        reports[i] = classify_limit_set(pend, pend.default_input, x0s[i]);
    });
    bool cycles = true;
    double pmin = kInf, pmax = 0, align = 0;
    for (const auto& r : reports) {
        if (r.verdict != LimitVerdict::LimitCycle || !r.period) {
            cycles = false;
            continue;
        }
        pmin = std::min(pmin, *r.period);
        pmax = std::max(pmax, *r.period);
        align = std::max(align, r.alignment_max);
    }
    const double spread = cycles ? (pmax - pmin) / pmin : kInf;

    const SystemDef rest = pendulum(3.0, 0.5);
    const auto fp = classify_limit_set(rest, rest.default_input, vec2(2.0, 1.0));
    const double fp_err = fp.fixed_point ? (*fp.fixed_point - vec2(std::asin(0.5), 0)).norm() : kInf;

    const SystemDef osc = model(ModelName::HarmonicOscillatorRotatingCone);
    const auto traj = flow(osc, vec2(1, 0), Input{}, {0.0, 40.0});
    const auto period = detect_period(osc.topology, traj, {vec2(0, 0), vec2(0, 1)});
    const double osc_err = period ? std::abs(*period - kTwoPi) : kInf;

    const bool ok = cycles && spread <= 1e-3 && align <= 1e-2 && fp.verdict == LimitVerdict::FixedPoint &&
                    fp_err <= 1e-4 && osc_err <= 1e-5;
    return {ok, "cycles:" + std::string(cycles ? "20/20" : "missing") + " period=" + fmt(pmin) +
                    " spread=" + fmt(spread) + " alignment_max=" + fmt(align) + "; u=0.5 " +
                    to_string(fp.verdict) + " err=" + fmt(fp_err) + "; oscillator period err=" + fmt(osc_err)};
}

Outcome bistable_sweep() {
    const SystemDef bi = model(ModelName::MonotoneBistable);
    const double r = oracle::bistable_root();
    std::mt19937_64 rng(10);
    std::vector<Vector> x0s;
    for (int i = 0; i < 100; ++i) x0s.push_back(vec2(oracle::uniform(rng, -3, 3), oracle::uniform(rng, -3, 3)));
    std::vector<LimitSetReport> reports(x0s.size());
    parallel_for(x0s.size(), 0, [&](std::size_t i) { reports[i] = classify_limit_set(bi, {}, x0s[i]); });
    int fixed = 0;
    double worst = 0;
    for (const auto& rep : reports) {
        if (rep.verdict != LimitVerdict::FixedPoint || !rep.fixed_point) {
            worst = kInf;
            continue;
        }
        ++fixed;
        const double e = std::min((*rep.fixed_point - vec2(r, r)).norm(), (*rep.fixed_point + vec2(r, r)).norm());
        worst = std::max(worst, e);
    }
    return {fixed == 100 && worst <= 1e-4, std::to_string(fixed) + "/100 FixedPoint, max distance to stable equilibria=" + fmt(worst)};
}

Outcome integrator_order() {
    const SystemDef osc = model(ModelName::HarmonicOscillatorRotatingCone);
    const Vector x0 = vec2(1.0, 0.5);
    const double T = 10.0;
    auto err = [&](double h) {
        StepSettings st;
        st.h = h;
        const auto traj = flow(osc, x0, Input{}, {0.0, T}, st);
        return (traj.states.back() - oracle::oscillator(x0, T)).norm();
    };
    const double ratio = err(0.05) / err(0.025);
    return {ratio >= 12 && ratio <= 20, "error ratio=" + fmt(ratio)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"Hilbert metric closed form and properties", hilbert_closed_form},
        {"contraction ratio tanh(D/4)", contraction_constants},
        {"pendulum positivity threshold at k=2", pendulum_threshold},
        {"strict vs non-strict (pendulum k=3/k=2, oscillator)", strictness_dichotomy},
        {"oscillator cone functionals conserved", oscillator_conservation},
        {"polar model boundary push", polar_boundary_push},
        {"PF field of a linear positive system", pf_linear},
        {"PF PDE residual", pf_pde_residual},
        {"limit-set classification", limit_sets},
        {"bistable generic convergence", bistable_sweep},
        {"RK4 step-halving ratio", integrator_order},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::printf("%s %2zu  %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
