#include "dpos/models.hpp"

#include "dpos/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dpos {

namespace {

double param(const ModelSpec& spec, const std::string& key, double fallback) {
    auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

void require_known(const ModelSpec& spec, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : spec.params) {
        if (!allowed.count(key))
            throw Error(ErrorCode::InvalidSpec,
                        model_name(spec.name) + ": unknown parameter '" + key + "'");
        if (!std::isfinite(value))
            throw Error(ErrorCode::InvalidSpec,
                        model_name(spec.name) + ": parameter '" + key + "' must be finite");
    }
}

Matrix rotation(double angle) {
    Matrix r(2, 2);
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

SystemDef positive_linear(const ModelSpec& spec) {
    require_known(spec, {"a11", "a12", "a21", "a22"});
    Matrix a;
    if (spec.matrix) {
        if (!spec.params.empty())
            throw Error(ErrorCode::InvalidSpec, "positive-linear: give either a matrix or a11..a22");
        a = *spec.matrix;
        if (a.rows() != a.cols() || a.rows() == 0)
            throw Error(ErrorCode::InvalidSpec, "positive-linear: matrix must be square");
    } else {
        a.resize(2, 2);
        a << param(spec, "a11", 2.0), param(spec, "a12", 1.0), param(spec, "a21", 1.0),
            param(spec, "a22", 2.0);
    }
    if (!a.allFinite()) throw Error(ErrorCode::InvalidSpec, "positive-linear: entries must be finite");
    const int n = static_cast<int>(a.rows());
    SystemDef sys;
    sys.name = "positive-linear";
    sys.dim = n;
    sys.field = [a](const Vector& x, const Vector&) -> Vector { return a * x; };
    sys.jacobian = [a](const Vector&, const Vector&) -> Matrix { return a; };
    sys.topology = ChartTopology::euclidean(n);
    sys.cone_field = ConeField::constant(Cone::orthant(n));
    sys.default_input = Vector(0);
    return sys;
}

SystemDef bistable(const ModelSpec& spec) {
    require_known(spec, {"gain"});
    const double b = param(spec, "gain", 2.0);
    SystemDef sys;
    sys.name = "bistable";
    sys.dim = 2;
    sys.field = [b](const Vector& x, const Vector&) -> Vector {
        Vector f(2);
        f << -x(0) + x(1), -x(1) + b * std::tanh(x(0));
        return f;
    };
    sys.jacobian = [b](const Vector& x, const Vector&) -> Matrix {
        const double t = std::tanh(x(0));
        Matrix j(2, 2);
        j << -1.0, 1.0, b * (1.0 - t * t), -1.0;
        return j;
    };
    sys.topology = ChartTopology::euclidean(2);
    sys.cone_field = ConeField::constant(Cone::orthant(2));
    sys.default_input = Vector(0);
    return sys;
}

SystemDef oscillator(const ModelSpec& spec) {
    require_known(spec, {});
    SystemDef sys;
    sys.name = "oscillator";
    sys.dim = 2;
    sys.field = [](const Vector& x, const Vector&) -> Vector {
        Vector f(2);
        f << x(1), -x(0);
        return f;
    };
    sys.jacobian = [](const Vector&, const Vector&) -> Matrix {
        Matrix j(2, 2);
        j << 0.0, 1.0, -1.0, 0.0;
        return j;
    };
    sys.topology = ChartTopology::euclidean(2);

    auto halfspaces = [](const Vector& x) -> Matrix {
        Matrix h(2, 2);
        h << -(x(0) + x(1)), x(0) - x(1),
             -(x(1) - x(0)), x(0) + x(1);
        return h;
    };
    // The cone at x is the cone at (|x|, 0) rotated by arg(x).
    auto transport = [](const Vector& x1, const Vector& x2) -> Matrix {
        return rotation(std::atan2(x2(1), x2(0)) - std::atan2(x1(1), x1(0)));
    };
    auto facet_rate = [](const Vector&, const Vector& xdot) -> Matrix {
        Matrix hd(2, 2);
        hd << -(xdot(0) + xdot(1)), xdot(0) - xdot(1),
              -(xdot(1) - xdot(0)), xdot(0) + xdot(1);
        return hd;
    };
    sys.cone_field = ConeField::state_dependent(2, halfspaces, transport, facet_rate);
    sys.default_input = Vector(0);
    return sys;
}

SystemDef polar(const ModelSpec& spec) {
    require_known(spec, {});
    SystemDef sys;
    sys.name = "polar";
    sys.dim = 2;
    sys.field = [](const Vector& x, const Vector&) -> Vector {
        Vector f(2);
        f << 1.0, x(1) - x(1) * x(1) * x(1) / 3.0;
        return f;
    };
    sys.jacobian = [](const Vector& x, const Vector&) -> Matrix {
        Matrix j(2, 2);
        j << 0.0, 0.0, 0.0, 1.0 - x(1) * x(1);
        return j;
    };
    sys.topology = {{CoordKind::Circle, CoordKind::PositiveHalfLine}};
    sys.cone_field = ConeField::constant(Cone::orthant(2));
    sys.default_input = Vector(0);
    return sys;
}

SystemDef pendulum(const ModelSpec& spec) {
    require_known(spec, {"k", "u"});
    const double k = param(spec, "k", 3.0);
    if (k < 0.0) throw Error(ErrorCode::InvalidSpec, "pendulum: damping k must be >= 0");
    SystemDef sys;
    sys.name = "pendulum";
    sys.dim = 2;
    sys.input_dim = 1;
    sys.field = [k](const Vector& x, const Vector& u) -> Vector {
        Vector f(2);
        f << x(1), -std::sin(x(0)) - k * x(1) + u(0);
        return f;
    };
    sys.jacobian = [k](const Vector& x, const Vector&) -> Matrix {
        Matrix j(2, 2);
        j << 0.0, 1.0, -std::cos(x(0)), -k;
        return j;
    };
    sys.input_jacobian = [](const Vector&, const Vector&) -> Matrix {
        Matrix b(2, 1);
        b << 0.0, 1.0;
        return b;
    };
    sys.topology = {{CoordKind::Circle, CoordKind::Line}};
    Matrix h(2, 2);
    h << 1.0, 0.0, 1.0, 1.0;
    sys.cone_field = ConeField::constant(Cone::from_halfspaces(h));
    sys.default_input = Vector::Constant(1, param(spec, "u", 0.0));
    return sys;
}

}  // namespace

ModelName parse_model_name(const std::string& raw) {
    std::string name = raw;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return c == '_' ? '-' : static_cast<char>(std::tolower(c)); });
    if (name == "positive-linear" || name == "linear" || name == "positivelinear")
        return ModelName::PositiveLinear;
    if (name == "bistable" || name == "monotone-bistable" || name == "monotonebistable")
        return ModelName::MonotoneBistable;
    if (name == "oscillator" || name == "harmonic-oscillator" ||
        name == "harmonicoscillatorrotatingcone")
        return ModelName::HarmonicOscillatorRotatingCone;
    if (name == "polar" || name == "polar-decoupled" || name == "polardecoupled")
        return ModelName::PolarDecoupled;
    if (name == "pendulum") return ModelName::Pendulum;
    throw Error(ErrorCode::InvalidSpec, "unknown model '" + raw + "'");
}

std::string model_name(ModelName name) {
    switch (name) {
        case ModelName::PositiveLinear: return "positive-linear";
        case ModelName::MonotoneBistable: return "bistable";
        case ModelName::HarmonicOscillatorRotatingCone: return "oscillator";
        case ModelName::PolarDecoupled: return "polar";
        case ModelName::Pendulum: return "pendulum";
    }
    return "unknown";
}

std::vector<std::string> model_names() {
    return {"positive-linear", "bistable", "oscillator", "polar", "pendulum"};
}

SystemDef make_model(const ModelSpec& spec) {
    SystemDef sys;
    switch (spec.name) {
        case ModelName::PositiveLinear: sys = positive_linear(spec); break;
        case ModelName::MonotoneBistable: sys = bistable(spec); break;
        case ModelName::HarmonicOscillatorRotatingCone: sys = oscillator(spec); break;
        case ModelName::PolarDecoupled: sys = polar(spec); break;
        case ModelName::Pendulum: sys = pendulum(spec); break;
    }
    sys.validate();
    return sys;
}

StateBox default_box(ModelName name) {
    auto box = [](double a, double b, double c, double d) {
        StateBox s;
        s.lo = Vector(2);
        s.hi = Vector(2);
        s.lo << a, c;
        s.hi << b, d;
        return s;
    };
    switch (name) {
        case ModelName::PositiveLinear: return box(-2, 2, -2, 2);
        case ModelName::MonotoneBistable: return box(-3, 3, -3, 3);
        case ModelName::HarmonicOscillatorRotatingCone: return box(-2, 2, -2, 2);
        case ModelName::PolarDecoupled: return box(0, kTwoPi, 0.2, 3);
        case ModelName::Pendulum: return box(0, kTwoPi, -3, 3);
    }
    return box(-1, 1, -1, 1);
}

}  // namespace dpos
