#include "dpos/config.hpp"
#include "dpos/error.hpp"
#include "dpos/exprsys.hpp"
#include "dpos/integrate.hpp"
#include "dpos/positivity.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace dpos;
using testutil::v2;

namespace {

const ChartTopology kCylinder{{CoordKind::Circle, CoordKind::Line}};

std::vector<Vector> pendulum_grid(int nt = 24, int nv = 13) {
    return grid_samples(kCylinder, {v2(0, -3), v2(kTwoPi, 3)}, {nt, nv});
}

std::vector<Vector> annulus(std::mt19937_64& rng, int count) {
    std::vector<Vector> out;
    for (int i = 0; i < count; ++i) {
        const double r = oracle::uniform(rng, 0.3, 3), a = oracle::uniform(rng, 0, kTwoPi);
        out.push_back(v2(r * std::cos(a), r * std::sin(a)));
    }
    return out;
}

SystemDef linear(double a11, double a12, double a21, double a22) {
    return testutil::model(ModelName::PositiveLinear, {{"a11", a11}, {"a12", a12}, {"a21", a21}, {"a22", a22}});
}

}  // namespace

TEST_CASE("boundary samples lie on their facet") {
    std::vector<Cone> cones{Cone::orthant(2), Cone::orthant(3), testutil::pendulum(3).cone_field.cone_at(v2(0, 0))};
    Matrix g(3, 3);
    g << 1, 0, -1, 0, 1, 0, 2, 2, 2;
    cones.push_back(Cone::from_generators(g));
    for (const Cone& c : cones) {
        for (int per : {1, 2, 5}) {
            const auto samples = boundary_samples(c, Vector::Zero(c.dim()), per);
            CHECK(samples.size() >= static_cast<std::size_t>(c.num_facets()));
            for (const auto& s : samples) {
                const Vector vals = c.halfspaces() * s.dx;
                CHECK(std::abs(vals(s.facet)) <= 1e-12);
                CHECK(vals.minCoeff() >= -1e-12);
                CHECK(s.dx.norm() == doctest::Approx(1.0).epsilon(1e-14));
                CHECK(std::find(s.tight_set.begin(), s.tight_set.end(), s.facet) != s.tight_set.end());
            }
        }
    }
}

TEST_CASE("pendulum: positive iff k >= 2, margin (k - 1 - cos theta)/sqrt 2") {
    const auto states = pendulum_grid();
    for (double k : {0.0, 0.5, 1.0, 1.5, 1.9, 1.99, 2.0, 2.1, 3.0, 5.0}) {
        PositivitySettings ps;
        ps.record_margins = true;
        const auto r = check_pointwise_positivity(testutil::pendulum(k, 0.7), states, {}, ps);
        CHECK_MESSAGE(r.verdict == (k >= 2.0 ? PositivityVerdict::Positive : PositivityVerdict::NotPositive), k);
        CHECK((r.witness_count > 0) == (r.verdict == PositivityVerdict::NotPositive));
        for (const auto& w : r.witnesses) CHECK(w.rate < -ps.tolerance);
        for (const auto& m : r.margins) {
            const double theta = states[m.state_index](0);
            const double expect = m.facet == 1 ? (k - 1 - std::cos(theta)) / std::sqrt(2.0) : 1.0;
            CHECK(m.rate == doctest::Approx(expect).epsilon(1e-12));
        }
        CHECK(r.facet_min_margin(1) == doctest::Approx((k - 2) / std::sqrt(2.0)).epsilon(1e-12));
        if (!r.witnesses.empty()) {
            CHECK(r.witnesses.front().x(0) == 0.0);  // worst at theta = 0
            CHECK(r.witnesses.front().facet == 1);
        }
    }
}

TEST_CASE("built-in models carry their documented verdicts") {
    std::mt19937_64 rng(1);
    const auto box = grid_samples(ChartTopology::euclidean(2), {v2(-3, -3), v2(3, 3)}, {15, 15});
    CHECK(check_pointwise_positivity(testutil::model(ModelName::PositiveLinear), box).verdict ==
          PositivityVerdict::Positive);
    CHECK(check_pointwise_positivity(testutil::model(ModelName::MonotoneBistable), box).verdict ==
          PositivityVerdict::Positive);
    CHECK(check_pointwise_positivity(testutil::model(ModelName::HarmonicOscillatorRotatingCone), annulus(rng, 200))
              .verdict == PositivityVerdict::Positive);
    const auto polar_states = grid_samples({{CoordKind::Circle, CoordKind::PositiveHalfLine}},
                                           {v2(0, 0.1), v2(kTwoPi, 3)}, {12, 15});
    CHECK(check_pointwise_positivity(testutil::model(ModelName::PolarDecoupled), polar_states).verdict ==
          PositivityVerdict::Positive);
    CHECK(check_pointwise_positivity(testutil::pendulum(3.0), pendulum_grid()).verdict == PositivityVerdict::Positive);
}

TEST_CASE("Metzler shortcut agrees with the facet test on orthant fields") {
    std::mt19937_64 rng(2);
    const auto states = grid_samples(ChartTopology::euclidean(2), {v2(-2, -2), v2(2, 2)}, {9, 9});
    std::vector<SystemDef> systems{testutil::model(ModelName::PositiveLinear),
                                   testutil::model(ModelName::MonotoneBistable),
                                   testutil::model(ModelName::MonotoneBistable, {{"gain", -1.0}})};
    for (int i = 0; i < 20; ++i)
        systems.push_back(linear(oracle::uniform(rng, -2, 2), oracle::uniform(rng, -1, 1),
                                 oracle::uniform(rng, -1, 1), oracle::uniform(rng, -2, 2)));
    for (const auto& sys : systems) {
        const auto a = metzler_check(sys, states);
        const auto b = check_pointwise_positivity(sys, states);
        CHECK(a.verdict == b.verdict);
    }
    const auto bad = metzler_check(linear(-1, -0.5, 1, -1), states);
    REQUIRE(bad.verdict == PositivityVerdict::NotPositive);
    CHECK(bad.witnesses.front().facet == 0);
    CHECK(bad.witnesses.front().rate == doctest::Approx(-0.5));

    try {
        (void)metzler_check(testutil::pendulum(3.0), pendulum_grid(4, 4));
        FAIL("expected WrongConeKind");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::WrongConeKind);
    }
}

TEST_CASE("state-dependent cone without a rate hook uses finite differences") {
    const SystemDef e = load_expression_system(parse_config(
        "[system]\nstates = [\"x1\", \"x2\"]\nfield = [\"x2\", \"-x1\"]\n[cone]\n"
        "halfspaces = [[\"-(x1+x2)\", \"x1-x2\"], [\"-(x2-x1)\", \"x1+x2\"]]\n"));
    std::mt19937_64 rng(3);
    const auto states = annulus(rng, 100);
    PositivitySettings ps;
    ps.record_margins = true;
    const auto fd = check_pointwise_positivity(e, states, {}, ps);
    const auto hook = check_pointwise_positivity(testutil::model(ModelName::HarmonicOscillatorRotatingCone), states, {}, ps);
    CHECK(fd.verdict == PositivityVerdict::Positive);
    REQUIRE(fd.margins.size() == hook.margins.size());
    for (std::size_t i = 0; i < fd.margins.size(); ++i)
        CHECK(std::abs(fd.margins[i].rate - hook.margins[i].rate) <= 1e-6);
}

TEST_CASE("discrete maps use the image cone") {
    auto map = [](const char* field) {
        return load_expression_system(parse_config(std::string("[system]\ntime = \"discrete\"\nstates = [\"x\", \"y\"]\nfield = ") +
                                                   field + "\n[cone]\northant = true\ndim = 2\n"));
    };
    const auto states = grid_samples(ChartTopology::euclidean(2), {v2(-1, -1), v2(1, 1)}, {5, 5});
    CHECK(check_pointwise_positivity(map("[\"0.5*x + 0.1*y\", \"0.2*x + tanh(y)\"]"), states).verdict ==
          PositivityVerdict::Positive);
    CHECK(check_pointwise_positivity(map("[\"0.5*x - 0.1*y\", \"0.2*x + y\"]"), states).verdict ==
          PositivityVerdict::NotPositive);
    // for maps the diagonal matters too
    CHECK(metzler_check(map("[\"-0.5*x\", \"y\"]"), states).verdict == PositivityVerdict::NotPositive);
}

TEST_CASE("certified models keep interior tangents inside the cone field") {
    std::mt19937_64 rng(4);
    struct Case {
        SystemDef sys;
        Vector x0;
        double T;
    };
    std::vector<Case> cases{{testutil::pendulum(3.0, 1.2), v2(0.4, -0.3), 20.0},
                            {testutil::model(ModelName::MonotoneBistable), v2(1.5, -2.0), 20.0},
                            {testutil::model(ModelName::HarmonicOscillatorRotatingCone), v2(1.0, 0.4), 20.0},
                            {testutil::model(ModelName::PolarDecoupled), v2(0.3, 0.4), 20.0},
                            {testutil::model(ModelName::PositiveLinear), v2(1e-3, -2e-3), 5.0}};
    for (const auto& c : cases) {
        const Cone k0 = c.sys.cone_field.cone_at(c.x0);
        for (int i = 0; i < 5; ++i) {
            Vector dx0 = Vector::Zero(2);
            for (int j = 0; j < 2; ++j) dx0 += oracle::uniform(rng, 0.01, 1) * k0.generators().col(j);
            StepSettings st;
            st.record_stride = 20;
            const auto vf = variational_flow(c.sys, c.x0, dx0, Input{}, {0.0, c.T}, st, true);
            bool inside = true;
            for (std::size_t s = 0; s < vf.trajectory.size(); ++s)
                inside = inside && cone_contains(c.sys.cone_field.cone_at(vf.trajectory.states[s]),
                                                 vf.tangents[s], false, 1e-7);
            CHECK_MESSAGE(inside, c.sys.name);
        }
    }
}

TEST_CASE("strict check: pendulum k = 3 contracts, k = 2 does not") {
    const auto states = grid_samples(kCylinder, {v2(0, -2), v2(kTwoPi, 2)}, {12, 9});
    const auto strict = check_strict_positivity(testutil::pendulum(3.0), states, 2.0);
    CHECK(strict.verdict == StrictVerdict::Strict);
    CHECK(strict.fitted_lambda > 0.0);
    CHECK(strict.mu_T >= 0.0);
    CHECK(strict.mu_T < 1.0);
    CHECK(strict.mu_T == doctest::Approx(contraction_ratio(strict.diameter_estimate)));
    CHECK(strict.worst_interior_slack > 1e-7);
    REQUIRE(strict.decay.size() > 10);
    for (std::size_t i = 1; i < strict.decay.size(); ++i)
        CHECK(strict.decay[i].distance <= strict.decay[i - 1].distance * (1 + 1e-9) + 1e-12);

    const auto flat = check_strict_positivity(testutil::pendulum(2.0), states, 2.0);
    CHECK(flat.verdict == StrictVerdict::NonStrict);
    CHECK(flat.mu_T == 1.0);
    CHECK_FALSE(flat.non_strict_states.empty());
    for (const auto& x : flat.non_strict_states) CHECK(std::abs(std::remainder(x(0), kTwoPi)) < 1e-12);
}

TEST_CASE("strict check on the oscillator and on escaping flows") {
    std::mt19937_64 rng(5);
    const auto osc = check_strict_positivity(testutil::model(ModelName::HarmonicOscillatorRotatingCone),
                                             annulus(rng, 8), 2.0);
    CHECK(osc.verdict == StrictVerdict::NonStrict);
    CHECK(osc.mu_T == 1.0);

    const auto lin = check_strict_positivity(testutil::model(ModelName::PositiveLinear), {v2(1, 1)}, 10.0);
    CHECK(lin.verdict == StrictVerdict::Inconclusive);
    CHECK_FALSE(lin.diagnostic.empty());
}

TEST_CASE("polar model: the boundary quadratic form grows at 4/3 drho^2") {
    // d/dt (dtheta^2 - drho^2/rho^2) with dtheta' = 0, drho' = (1 - rho^2) drho
    // and rho' = rho - rho^3/3 gives 4/3 drho^2 on the boundary.
    const SystemDef polar = testutil::model(ModelName::PolarDecoupled);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 50; ++i) {
        const double rho = oracle::uniform(rng, 0.3, 2.5), drho = oracle::uniform(rng, -1.5, 1.5);
        const Vector x = v2(oracle::uniform(rng, 0, kTwoPi), rho), dx = v2(std::abs(drho) / rho, drho);
        const auto r = prolonged_rhs(polar, {x, dx, 0.0}, {}, {});
        const double rhodot = evaluate_field(polar, x, {})(1);
        const double qdot = 2 * dx(0) * r.dxdot(0) - 2 * dx(1) * r.dxdot(1) / (rho * rho) +
                            2 * dx(1) * dx(1) * rhodot / (rho * rho * rho);
        CHECK(qdot == doctest::Approx(4.0 / 3.0 * drho * drho).epsilon(1e-12));
    }
}

TEST_CASE("pairwise distance helper") {
    Matrix imgs(2, 3);
    imgs << 1, 2, 1, 1, 1, 2;
    CHECK(max_pairwise_distance(Cone::orthant(2), imgs) == doctest::Approx(2 * std::log(2.0)));
    imgs(0, 0) = -1;
    CHECK(max_pairwise_distance(Cone::orthant(2), imgs) == kInf);
}
