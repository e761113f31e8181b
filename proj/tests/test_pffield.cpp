#include "dpos/config.hpp"
#include "dpos/error.hpp"
#include "dpos/exprsys.hpp"
#include "dpos/integrate.hpp"
#include "dpos/pffield.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace dpos;
using testutil::v2;

namespace {

ErrorCode pf_error(const SystemDef& sys, const Vector& x, const PFSettings& s = {}) {
    try {
        (void)pf_vector_at(sys, x, {}, s);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("pf_vector_at succeeded");
    return ErrorCode::Unsupported;
}

}  // namespace

TEST_CASE("PF vectors are unit and strictly inside the cone") {
    const SystemDef p = testutil::pendulum(3.0, 1.2);
    const auto grid = pf_field_on_grid(p, {v2(0, -2), v2(kTwoPi, 2)}, {8, 5});
    CHECK(grid.succeeded() == grid.cells.size());
    for (const auto& cell : grid.cells) {
        REQUIRE(cell.value);
        CHECK(std::abs(cell.value->w.norm() - 1.0) <= 1e-12);
        CHECK(cone_contains(p.cone_field.cone_at(cell.x), cell.value->w, true));
        CHECK(cell.value->residual_hilbert < 1e-6);
    }
}

TEST_CASE("linear positive system: constant Perron vector") {
    const SystemDef lin = testutil::model(ModelName::PositiveLinear);
    PFSettings s;
    s.tol = 1e-10;
    const auto grid = pf_field_on_grid(lin, {v2(-2, -2), v2(2, 2)}, {6, 6}, {}, s);
    const Vector perron = v2(1, 1) / std::sqrt(2.0);
    double spread = 0;
    for (const auto& a : grid.cells)
        for (const auto& b : grid.cells) spread = std::max(spread, (a.value->w - b.value->w).norm());
    CHECK(spread <= 1e-8);
    CHECK((grid.cells.front().value->w - perron).norm() <= 1e-8);

    // a non-symmetric Metzler matrix, against the eigen-decomposition
    const SystemDef m = testutil::model(ModelName::PositiveLinear, {{"a11", -1}, {"a12", 0.5}, {"a21", 2}, {"a22", -3}});
    Matrix a(2, 2);
    a << -1, 0.5, 2, -3;
    Eigen::EigenSolver<Matrix> es(a);
    int top = es.eigenvalues().real()(0) > es.eigenvalues().real()(1) ? 0 : 1;
    Vector v = es.eigenvectors().col(top).real().normalized();
    if (v(0) < 0) v = -v;
    CHECK((pf_vector_at(m, v2(0.3, 0.7), {}, s).w - v).norm() <= 1e-8);
}

TEST_CASE("window doubling tightens monotonically") {
    const SystemDef p = testutil::pendulum(3.0, 1.2);
    PFSettings s;
    s.tol = 1e3;  // stop after the first comparison: residual = d(w_W, w_2W)
    double last = kInf;
    for (double w : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        s.window = w;
        const double gap = pf_vector_at(p, v2(1.0, 0.5), {}, s).residual_hilbert;
        CHECK(gap <= last * (1 + 1e-9) + 1e-13);
        last = gap;
    }
}

TEST_CASE("PF field is carried by the flow") {
    const SystemDef p = testutil::pendulum(3.0, 1.2);
    PFSettings s;
    s.tol = 1e-9;
    for (const Vector& x : {v2(1.0, 0.5), v2(4.0, -1.0), v2(0.0, 1.5)}) {
        const Vector w = pf_vector_at(p, x, {}, s).w;
        const auto vf = variational_flow(p, x, w, Input{}, {0.0, 1.0}, {}, true);
        const Vector& y = vf.trajectory.states.back();
        const Vector wy = pf_vector_at(p, y, {}, s).w;
        CHECK(hilbert_distance(p.cone_field.cone_at(y), vf.tangents.back(), wy).value <= 1e-3);
    }
}

TEST_CASE("non-contracting systems are reported") {
    CHECK(pf_error(testutil::model(ModelName::HarmonicOscillatorRotatingCone), v2(1.0, 0.5)) ==
          ErrorCode::NonContractive);
    CHECK(pf_error(testutil::model(ModelName::PolarDecoupled), v2(1.0, 0.5)) == ErrorCode::NonContractive);
    PFSettings bad;
    bad.window = -1;
    CHECK(pf_error(testutil::pendulum(3.0), v2(0, 0), bad) == ErrorCode::InvalidInput);
}

TEST_CASE("discrete positive map: PF vector and residual") {
    const SystemDef map = load_expression_system(parse_config(
        "[system]\ntime = \"discrete\"\nstates = [\"x\", \"y\"]\nfield = [\"0.5*x + 0.25*y\", \"0.25*x + 0.5*y\"]\n"
        "inverse = [\"(8*x - 4*y)/3\", \"(8*y - 4*x)/3\"]\n[cone]\northant = true\ndim = 2\n"));
    PFSettings s;
    s.tol = 1e-10;
    const Vector w = pf_vector_at(map, v2(0.3, -0.2), {}, s).w;
    CHECK((w - v2(1, 1) / std::sqrt(2.0)).norm() <= 1e-8);
    const auto grid = pf_field_on_grid(map, {v2(-0.2, -0.2), v2(0.2, 0.2)}, {5, 5}, {}, s);
    CHECK(pf_residual(map, grid, v2(0.0, 0.0)).pde_residual <= 1e-8);
}

TEST_CASE("PDE residual needs a fine enough grid") {
    const SystemDef lin = testutil::model(ModelName::PositiveLinear);
    const auto coarse = pf_field_on_grid(lin, {v2(-2, -2), v2(2, 2)}, {5, 5});
    try {
        (void)pf_residual(lin, coarse, v2(0, 0));
        FAIL("expected NeedsDenserGrid");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NeedsDenserGrid);
    }
    PFSettings s;
    s.tol = 1e-12;
    const auto fine = pf_field_on_grid(lin, {v2(-0.2, -0.2), v2(0.2, 0.2)}, {5, 5}, {}, s);
    const auto r = pf_residual(lin, fine, v2(0.01, -0.02));
    CHECK(r.x == v2(0, 0));  // nearest node
    CHECK(r.pde_residual <= 1e-10);
    CHECK(r.lambda == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("PF CSV rows and failed cells") {
    const SystemDef osc = testutil::model(ModelName::HarmonicOscillatorRotatingCone);
    const auto grid = pf_field_on_grid(osc, {v2(0.5, 0.5), v2(1.5, 1.5)}, {2, 2});
    CHECK(grid.succeeded() == 0);
    for (const auto& c : grid.cells) CHECK(c.error == ErrorCode::NonContractive);
    std::ostringstream os;
    write_pf_csv(os, grid);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "x_1,x_2,w_1,w_2,residual,window");
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        CHECK(line.find("nan") != std::string::npos);
    }
    CHECK(rows == 4);
}

TEST_CASE("grid sweeps are identical with and without threads") {
    const SystemDef p = testutil::pendulum(3.0, 1.2);
    PFSettings serial, threaded;
    threaded.threads = 4;
    const StateBox box{v2(0, -1), v2(kTwoPi, 1)};
    const auto a = pf_field_on_grid(p, box, {5, 3}, {}, serial);
    const auto b = pf_field_on_grid(p, box, {5, 3}, {}, threaded);
    for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].value->w == b.cells[i].value->w);
}
