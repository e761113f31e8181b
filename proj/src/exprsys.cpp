#include "dpos/exprsys.hpp"

#include "dpos/error.hpp"
#include "dpos/expr.hpp"

#include <memory>

namespace dpos {

namespace {

const ConfigValue& require(const ConfigValue& table, const std::string& key) {
    const ConfigValue* v = table.find(key);
    if (!v) table.fail("missing key '" + key + "'");
    return *v;
}

std::vector<std::string> string_list(const ConfigValue& v) {
    std::vector<std::string> out;
    for (const auto& e : v.as_array()) out.push_back(e.as_string());
    return out;
}

Expr parse_at(const ConfigValue& v, const SymbolTable& symbols) {
    try {
        return parse_expression(v.as_string(), symbols);
    } catch (const Error& e) {
        v.fail(e.what());
    }
}

// Evaluation buffer layout: states first, then inputs.
struct Compiled {
    int n = 0;
    int m = 0;
    std::vector<Expr> field;
    std::vector<std::vector<Expr>> jac;   // n x n
    std::vector<std::vector<Expr>> ujac;  // n x m

    void load(std::vector<double>& buf, const Vector& x, const Vector& u) const {
        buf.resize(static_cast<std::size_t>(n + m));
        for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = x(i);
        for (int j = 0; j < m; ++j) buf[static_cast<std::size_t>(n + j)] = u(j);
    }
};

std::shared_ptr<Compiled> compile(const std::vector<Expr>& field, int n, int m) {
    auto c = std::make_shared<Compiled>();
    c->n = n;
    c->m = m;
    c->field = field;
    for (const auto& f : field) {
        std::vector<Expr> row, urow;
        for (int j = 0; j < n; ++j) row.push_back(f.derivative(j));
        for (int j = 0; j < m; ++j) urow.push_back(f.derivative(n + j));
        c->jac.push_back(std::move(row));
        c->ujac.push_back(std::move(urow));
    }
    return c;
}

FieldFn field_fn(std::shared_ptr<Compiled> c) {
    return [c](const Vector& x, const Vector& u) -> Vector {
        std::vector<double> buf;
        c->load(buf, x, u);
        Vector out(c->n);
        for (int i = 0; i < c->n; ++i) out(i) = c->field[static_cast<std::size_t>(i)].eval(buf);
        return out;
    };
}

JacobianFn jacobian_fn(std::shared_ptr<Compiled> c, bool inputs) {
    return [c, inputs](const Vector& x, const Vector& u) -> Matrix {
        std::vector<double> buf;
        c->load(buf, x, u);
        const auto& rows = inputs ? c->ujac : c->jac;
        Matrix out(c->n, inputs ? c->m : c->n);
        for (int i = 0; i < out.rows(); ++i)
            for (int j = 0; j < out.cols(); ++j)
                out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(buf);
        return out;
    };
}

CoordKind coord_kind(const ConfigValue& v) {
    const std::string& s = v.as_string();
    if (s == "line") return CoordKind::Line;
    if (s == "circle") return CoordKind::Circle;
    if (s == "positive") return CoordKind::PositiveHalfLine;
    v.fail("unknown coordinate kind '" + s + "' (line, circle, positive)");
}

}  // namespace

Cone load_constant_cone(const ConfigValue& cone_table) {
    if (const ConfigValue* o = cone_table.find("orthant"); o && o->as_bool()) {
        const ConfigValue* d = cone_table.find("dim");
        if (!d) cone_table.fail("orthant cone needs 'dim'");
        return Cone::orthant(static_cast<int>(d->as_number()));
    }
    const ConfigValue& hv = require(cone_table, "halfspaces");
    const auto rows = hv.as_number_rows();
    if (rows.empty()) hv.fail("empty halfspace list");
    Matrix h(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    try {
        return Cone::from_halfspaces(h);
    } catch (const Error& e) {
        hv.fail(e.what());
    }
}

SystemDef load_expression_system(const ConfigValue& root) {
    const ConfigValue& sys_table = require(root, "system");
    SystemDef sys;
    sys.name = sys_table.find("name") ? sys_table.find("name")->as_string() : "expression-system";

    if (const ConfigValue* t = sys_table.find("time")) {
        if (t->as_string() == "discrete")
            sys.time_kind = TimeKind::Discrete;
        else if (t->as_string() != "continuous")
            t->fail("time must be 'continuous' or 'discrete'");
    }

    SymbolTable symbols;
    symbols.variables = string_list(require(sys_table, "states"));
    const int n = static_cast<int>(symbols.variables.size());
    if (n == 0) sys_table.fail("at least one state is required");
    int m = 0;
    if (const ConfigValue* in = sys_table.find("inputs")) {
        for (auto& name : string_list(*in)) symbols.variables.push_back(name);
        m = static_cast<int>(symbols.variables.size()) - n;
    }
    if (const ConfigValue* p = sys_table.find("params"))
        for (const auto& [key, value] : p->as_table()) symbols.constants[key] = value.as_number();

    const ConfigValue& fv = require(sys_table, "field");
    if (static_cast<int>(fv.as_array().size()) != n) fv.fail("field needs one expression per state");
    std::vector<Expr> field;
    for (const auto& e : fv.as_array()) field.push_back(parse_at(e, symbols));

    auto compiled = compile(field, n, m);
    sys.dim = n;
    sys.input_dim = m;
    sys.field = field_fn(compiled);
    sys.jacobian = jacobian_fn(compiled, false);
    if (m > 0) sys.input_jacobian = jacobian_fn(compiled, true);

    if (const ConfigValue* inv = sys_table.find("inverse")) {
        if (sys.time_kind != TimeKind::Discrete) inv->fail("'inverse' only applies to discrete systems");
        if (static_cast<int>(inv->as_array().size()) != n) inv->fail("inverse needs one expression per state");
        std::vector<Expr> inverse;
        for (const auto& e : inv->as_array()) inverse.push_back(parse_at(e, symbols));
        sys.inverse = field_fn(compile(inverse, n, m));
    }

    sys.topology = ChartTopology::euclidean(n);
    if (const ConfigValue* topo = sys_table.find("topology")) {
        if (static_cast<int>(topo->as_array().size()) != n) topo->fail("topology needs one entry per state");
        sys.topology.kinds.clear();
        for (const auto& k : topo->as_array()) sys.topology.kinds.push_back(coord_kind(k));
    }

    sys.default_input = Vector::Zero(m);
    if (const ConfigValue* dv = sys_table.find("input")) {
        const auto vals = dv->as_number_list();
        if (static_cast<int>(vals.size()) != m) dv->fail("input needs one value per declared input");
        for (int j = 0; j < m; ++j) sys.default_input(j) = vals[static_cast<std::size_t>(j)];
    }

    const ConfigValue& cone_table = require(root, "cone");
    bool constant = true;
    if (const ConfigValue* hv = cone_table.find("halfspaces"))
        for (const auto& row : hv->as_array())
            for (const auto& e : row.as_array())
                if (e.is_string()) constant = false;

    if (constant) {
        sys.cone_field = ConeField::constant(load_constant_cone(cone_table));
    } else {
        SymbolTable state_symbols = symbols;
        state_symbols.variables.resize(static_cast<std::size_t>(n));
        const ConfigValue& hv = *cone_table.find("halfspaces");
        std::vector<std::vector<Expr>> rows;
        for (const auto& row : hv.as_array()) {
            if (static_cast<int>(row.as_array().size()) != n) row.fail("halfspace row needs one entry per state");
            std::vector<Expr> r;
            for (const auto& e : row.as_array())
                r.push_back(e.is_string() ? parse_at(e, state_symbols) : Expr::constant(e.as_number()));
            rows.push_back(std::move(r));
        }
        auto map = [rows, n](const Vector& x) -> Matrix {
            std::vector<double> buf(x.data(), x.data() + x.size());
            Matrix h(static_cast<Eigen::Index>(rows.size()), n);
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (int j = 0; j < n; ++j)
                    h(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)].eval(buf);
            return h;
        };
        sys.cone_field = ConeField::state_dependent(n, map);
    }
    if (sys.cone_field.dim() != n) cone_table.fail("cone dimension does not match the state dimension");
    sys.validate();
    return sys;
}

}  // namespace dpos
