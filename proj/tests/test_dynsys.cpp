#include "dpos/config.hpp"
#include "dpos/dynsys.hpp"
#include "dpos/error.hpp"
#include "dpos/expr.hpp"
#include "dpos/exprsys.hpp"
#include "dpos/models.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace dpos;
using testutil::v2;

namespace {

std::vector<ModelName> all_models() {
    return {ModelName::PositiveLinear, ModelName::MonotoneBistable, ModelName::HarmonicOscillatorRotatingCone,
            ModelName::PolarDecoupled, ModelName::Pendulum};
}

std::vector<Vector> random_states(const SystemDef& sys, std::mt19937_64& rng, int count) {
    std::vector<Vector> out;
    for (int i = 0; i < count; ++i) {
        Vector x(sys.dim);
        for (int j = 0; j < sys.dim; ++j)
            x(j) = sys.topology.kinds[static_cast<std::size_t>(j)] == CoordKind::PositiveHalfLine
                       ? oracle::uniform(rng, 0.2, 3)
                       : oracle::uniform(rng, -3, 3);
        out.push_back(x);
    }
    return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::Unsupported;
}

}  // namespace

TEST_CASE("analytic Jacobians of the built-in models match central differences") {
    std::mt19937_64 rng(1);
    for (ModelName name : all_models()) {
        const SystemDef sys = testutil::model(name);
        const auto check = check_jacobian(sys, random_states(sys, rng, 30), sys.default_input);
        CHECK_MESSAGE(check.ok, model_name(name));
    }
}

TEST_CASE("prolonged right-hand side is linear in the tangent") {
    std::mt19937_64 rng(2);
    for (ModelName name : all_models()) {
        const SystemDef sys = testutil::model(name);
        for (const Vector& x : random_states(sys, rng, 10)) {
            const Vector a = Vector::Random(2), b = Vector::Random(2);
            const double s = oracle::uniform(rng, -3, 3);
            const Vector du = Vector::Zero(sys.input_dim);
            auto rate = [&](const Vector& dx) {
                return prolonged_rhs(sys, {x, dx, 0.0}, sys.default_input, du).dxdot;
            };
            CHECK((rate(a + b) - rate(a) - rate(b)).norm() <= 1e-10);
            CHECK((rate(s * a) - s * rate(a)).norm() <= 1e-10);
        }
    }
}

TEST_CASE("the vector field is a variational direction") {
    std::mt19937_64 rng(3);
    for (ModelName name : all_models()) {
        const SystemDef sys = testutil::model(name);
        for (const Vector& x : random_states(sys, rng, 10)) {
            const Vector f = evaluate_field(sys, x, sys.default_input);
            const auto r = prolonged_rhs(sys, {x, f, 0.0}, sys.default_input, Vector::Zero(sys.input_dim));
            CHECK((r.dxdot - state_jacobian(sys, x, sys.default_input) * f).norm() <= 1e-12);
        }
    }
}

TEST_CASE("input channel of the pendulum") {
    const SystemDef p = testutil::pendulum(3.0, 0.0);
    const auto lin = linearize(p, v2(0.3, 0.1), Vector::Zero(1));
    CHECK(lin.B(0, 0) == 0.0);
    CHECK(lin.B(1, 0) == 1.0);
    const auto r = prolonged_rhs(p, {v2(0.3, 0.1), v2(0, 0), 0.0}, Vector::Zero(1), Vector::Constant(1, 2.0));
    CHECK(r.dxdot(1) == doctest::Approx(2.0));
}

TEST_CASE("chart normalization wraps circles and guards the half-line") {
    const SystemDef p = testutil::pendulum(3.0);
    const auto n = chart_normalize(p, v2(7.0, -1.0));
    CHECK(n.x(0) == doctest::Approx(7.0 - kTwoPi));
    CHECK(n.wraps[0] == 1);
    CHECK(chart_normalize(p, v2(-0.5, 0)).x(0) == doctest::Approx(kTwoPi - 0.5));
    CHECK(chart_difference(p.topology, v2(0.1, 0), v2(kTwoPi - 0.1, 0))(0) == doctest::Approx(0.2));

    const SystemDef polar = testutil::model(ModelName::PolarDecoupled);
    CHECK(code_of([&] { (void)chart_normalize(polar, v2(1.0, -0.1)); }) == ErrorCode::LeftDomain);
}

TEST_CASE("sample generators") {
    const ChartTopology topo{{CoordKind::Circle, CoordKind::Line}};
    const StateBox box{v2(0, -1), v2(kTwoPi, 1)};
    const auto g = grid_samples(topo, box, {4, 3});
    REQUIRE(g.size() == 12);
    // full-turn circle axis drops the duplicate endpoint
    CHECK(g[0](0) == 0.0);
    CHECK(g[3 * 3](0) == doctest::Approx(0.75 * kTwoPi));
    const auto h1 = halton_samples(box, 50, 7), h2 = halton_samples(box, 50, 7), h3 = halton_samples(box, 50, 8);
    CHECK(h1.size() == 50);
    bool same = true, differ = false;
    for (std::size_t i = 0; i < 50; ++i) {
        same = same && h1[i] == h2[i];
        differ = differ || h1[i] != h3[i];
        CHECK(box.contains(h1[i]));
    }
    CHECK(same);
    CHECK(differ);
}

TEST_CASE("time reversal") {
    const SystemDef p = testutil::pendulum(3.0, 0.4);
    const SystemDef r = time_reversed(p);
    const Vector x = v2(1.0, 0.5);
    CHECK((evaluate_field(r, x, p.default_input) + evaluate_field(p, x, p.default_input)).norm() == 0.0);
}

TEST_CASE("model parameter validation") {
    CHECK(code_of([] { (void)testutil::pendulum(-1.0); }) == ErrorCode::InvalidSpec);
    CHECK(code_of([] { (void)testutil::model(ModelName::Pendulum, {{"mass", 1.0}}); }) == ErrorCode::InvalidSpec);
    CHECK(code_of([] { (void)parse_model_name("lorenz"); }) == ErrorCode::InvalidSpec);
    CHECK(parse_model_name("Positive_Linear") == ModelName::PositiveLinear);
    for (const auto& n : model_names()) CHECK(model_name(parse_model_name(n)) == n);
}

TEST_CASE("expressions: evaluation and symbolic derivatives") {
    SymbolTable s{{"x", "y"}, {{"b", 2.0}}};
    const Expr e = parse_expression("-y + b*tanh(x) + x^2/3 - sin(x)*cos(y)", s);
    const double x = 0.7, y = -0.4;
    const std::vector<double> at{x, y};
    CHECK(e.eval(at) == doctest::Approx(-y + 2 * std::tanh(x) + x * x / 3 - std::sin(x) * std::cos(y)));
    const double t = std::tanh(x);
    CHECK(e.derivative(0).eval(at) ==
          doctest::Approx(2 * (1 - t * t) + 2 * x / 3 - std::cos(x) * std::cos(y)));
    // d/dy of -sin(x)cos(y) is sin(x) sin(y)
    CHECK(e.derivative(1).eval(at) == doctest::Approx(-1 + std::sin(x) * std::sin(y)));
    CHECK(parse_expression("2^3^2", s).eval(at) == doctest::Approx(512.0));
    CHECK(parse_expression("-x^2", s).eval(at) == doctest::Approx(-x * x));
}

TEST_CASE("expression errors carry a column") {
    SymbolTable s{{"x"}, {}};
    try {
        (void)parse_expression("x + * 2", s);
        FAIL("expected ConfigParse");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigParse);
        CHECK(std::string(e.what()).find("column") != std::string::npos);
    }
    CHECK(code_of([&] { (void)parse_expression("z + 1", s); }) == ErrorCode::ConfigParse);
}

TEST_CASE("config parser") {
    const ConfigValue root = parse_config(R"cfg(# demo
model = "pendulum"
params = {k = 3.0, u = 1.2}
[settings]
grid = [21, 21]
flag = true
name = "a\"b"
[cone]
halfspaces = [[1, 0],
              [1, 1]]   # trailing comment
)cfg");
    CHECK(root.find("model")->as_string() == "pendulum");
    CHECK(root.find("params")->find("u")->as_number() == 1.2);
    CHECK(root.find("settings")->find("flag")->as_bool());
    CHECK(root.find("settings")->find("name")->as_string() == "a\"b");
    CHECK(root.find("cone")->find("halfspaces")->as_number_rows().size() == 2);
    CHECK(root.find("absent") == nullptr);

    try {
        (void)parse_config("a = 1\nb = [1, 2\n");
        FAIL("expected ConfigParse");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigParse);
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    CHECK(code_of([] { (void)parse_config("a = 1\na = 2\n"); }) == ErrorCode::ConfigParse);
    CHECK(code_of([] { (void)parse_config("a = \"x\"\n").find("a")->as_number(); }) == ErrorCode::ConfigParse);
    CHECK(code_of([] { (void)load_config_file("/nonexistent/path.toml"); }) == ErrorCode::ConfigParse);
}

TEST_CASE("expression-defined system matches the built-in bistable model") {
    const ConfigValue root = parse_config(R"cfg(
[system]
name = "toggle"
states = ["x", "y"]
params = {b = 2.0}
field = ["-x + y", "-y + b*tanh(x)"]
[cone]
orthant = true
dim = 2
)cfg");
    const SystemDef e = load_expression_system(root);
    const SystemDef m = testutil::model(ModelName::MonotoneBistable);
    std::mt19937_64 rng(4);
    for (const Vector& x : random_states(m, rng, 20)) {
        CHECK((evaluate_field(e, x, {}) - evaluate_field(m, x, {})).norm() <= 1e-14);
        CHECK((state_jacobian(e, x, {}) - state_jacobian(m, x, {})).norm() <= 1e-14);
    }
    CHECK(e.cone_field.is_orthant());
}

TEST_CASE("expression-defined state-dependent cone") {
    const ConfigValue root = parse_config(R"cfg(
[system]
states = ["x1", "x2"]
field = ["x2", "-x1"]
[cone]
halfspaces = [["-(x1+x2)", "x1-x2"], ["-(x2-x1)", "x1+x2"]]
)cfg");
    const SystemDef e = load_expression_system(root);
    const SystemDef m = testutil::model(ModelName::HarmonicOscillatorRotatingCone);
    CHECK_FALSE(e.cone_field.is_constant());
    CHECK_FALSE(e.cone_field.has_transport());
    const Vector x = v2(0.4, -1.3);
    CHECK((e.cone_field.halfspaces_at(x) - m.cone_field.halfspaces_at(x)).norm() == 0.0);
}

TEST_CASE("expression system errors point at the offending entry") {
    const auto bad = [](const char* text) { return code_of([text] { (void)load_expression_system(parse_config(text)); }); };
    CHECK(bad("[system]\nstates = [\"x\"]\nfield = [\"x +\"]\n[cone]\northant = true\ndim = 1\n") == ErrorCode::ConfigParse);
    CHECK(bad("[system]\nstates = [\"x\", \"y\"]\nfield = [\"x\"]\n[cone]\northant = true\ndim = 2\n") == ErrorCode::ConfigParse);
    CHECK(bad("[system]\nstates = [\"x\"]\nfield = [\"x\"]\n") == ErrorCode::ConfigParse);
}
