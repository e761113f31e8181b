#include "dpos/cli.hpp"

#include "dpos/error.hpp"
#include "dpos/exprsys.hpp"
#include "dpos/limitsets.hpp"
#include "dpos/models.hpp"
#include "dpos/pffield.hpp"
#include "dpos/positivity.hpp"
#include "dpos/report.hpp"
#include "dpos/svg.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace dpos {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Vector to_vector(const std::vector<double>& v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

std::vector<int> parse_grid(const std::string& text) {
    std::string s = text;
    for (char& c : s)
        if (c == 'x' || c == 'X') c = ',';
    std::vector<int> out;
    for (double v : parse_number_list(s)) {
        if (v < 1 || v != static_cast<int>(v))
            throw Error(ErrorCode::InvalidInput, "grid entries must be positive integers: '" + text + "'");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

Matrix parse_matrix(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(text);
    std::string row;
    while (std::getline(ss, row, ';')) rows.push_back(parse_number_list(row));
    if (rows.empty()) throw Error(ErrorCode::InvalidInput, "empty matrix");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw Error(ErrorCode::InvalidInput, "matrix rows differ in length");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

Matrix rows_matrix(const ConfigValue& v) {
    const auto rows = v.as_number_rows();
    if (rows.empty()) v.fail("empty matrix");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) v.fail("matrix rows differ in length");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

std::vector<int> grid_from(const ConfigValue& v) {
    std::vector<int> out;
    const auto nums = v.is_number() ? std::vector<double>{v.as_number()} : v.as_number_list();
    for (double d : nums) {
        if (d < 1 || d != static_cast<int>(d)) v.fail("grid entries must be positive integers");
        out.push_back(static_cast<int>(d));
    }
    return out;
}

std::vector<double> list_from(const ConfigValue& v) {
    return v.is_number() ? std::vector<double>{v.as_number()} : v.as_number_list();
}

// Where the main artifact goes.
class Sink {
public:
    Sink(const std::optional<std::string>& path, std::ostream& fallback) : os_(&fallback) {
        if (path) {
            file_.open(*path, std::ios::binary);
            if (!file_) throw Error(ErrorCode::InvalidInput, "cannot open '" + *path + "' for writing");
            os_ = &file_;
        }
    }
    std::ostream& stream() { return *os_; }

private:
    std::ofstream file_;
    std::ostream* os_;
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidInput, "cannot open '" + path + "' for writing");
    f << text;
}

// Resolved view of a RunConfig against a particular system.
struct Context {
    SystemDef sys;
    Vector u;
    StateBox box;
    std::size_t threads = 0;
    std::uint64_t seed = 0;
    StepSettings step;
    std::string format;

    [[nodiscard]] std::vector<int> grid(const RunConfig& cfg, int fallback) const {
        std::vector<int> g = cfg.grid.value_or(std::vector<int>{fallback});
        if (g.size() == 1) g.assign(static_cast<std::size_t>(sys.dim), g.front());
        if (static_cast<int>(g.size()) != sys.dim)
            throw Error(ErrorCode::InvalidInput, "grid needs one entry per state coordinate");
        return g;
    }

    [[nodiscard]] Vector x0(const RunConfig& cfg) const {
        if (!cfg.x0) return Vector::Zero(sys.dim);
        if (static_cast<int>(cfg.x0->size()) != sys.dim)
            throw Error(ErrorCode::InvalidInput, "x0 needs one value per state coordinate");
        return to_vector(*cfg.x0);
    }
};

std::optional<ModelName> model_of(const RunConfig& cfg) {
    if (cfg.document && cfg.document->find("system")) return std::nullopt;
    if (cfg.model) return parse_model_name(*cfg.model);
    return std::nullopt;
}

Context resolve(const RunConfig& cfg, const std::string& default_format) {
    Context c;
    c.sys = build_system(cfg);
    const int n = c.sys.dim;
    if (cfg.u) {
        if (static_cast<int>(cfg.u->size()) != c.sys.input_dim)
            throw Error(ErrorCode::InvalidInput, "u needs " + std::to_string(c.sys.input_dim) + " value(s)");
        c.u = to_vector(*cfg.u);
    } else {
        c.u = c.sys.default_input;
    }
    if (const auto m = model_of(cfg)) {
        c.box = default_box(*m);
    } else {
        c.box.lo = Vector::Constant(n, -2.0);
        c.box.hi = Vector::Constant(n, 2.0);
    }
    if (cfg.box_lo) c.box.lo = to_vector(*cfg.box_lo);
    if (cfg.box_hi) c.box.hi = to_vector(*cfg.box_hi);
    if (c.box.lo.size() != n || c.box.hi.size() != n)
        throw Error(ErrorCode::InvalidInput, "box bounds need one value per state coordinate");
    for (int i = 0; i < n; ++i)
        if (!(c.box.lo(i) < c.box.hi(i))) throw Error(ErrorCode::InvalidInput, "box lo must be below hi");
    c.threads = cfg.threads.value_or(0);
    c.seed = cfg.seed.value_or(1);
    if (cfg.step) {
        if (!(*cfg.step > 0)) throw Error(ErrorCode::InvalidInput, "step must be positive");
        c.step.h = *cfg.step;
    }
    c.format = cfg.format.value_or(default_format);
    if (c.format != "json" && c.format != "csv")
        throw Error(ErrorCode::InvalidInput, "format must be json or csv");
    return c;
}

int run_check(const RunConfig& cfg, std::ostream& out) {
    const Context c = resolve(cfg, "json");
    const auto res = c.grid(cfg, 24);
    auto states = grid_samples(c.sys.topology, c.box, res);
    const auto extra = halton_samples(c.box, states.size(), c.seed);
    states.insert(states.end(), extra.begin(), extra.end());

    PositivitySettings ps;
    ps.tolerance = cfg.tolerance.value_or(1e-9);
    ps.per_facet = cfg.per_facet.value_or(3);
    ps.threads = c.threads;
    const auto report = check_pointwise_positivity(c.sys, states, c.u, ps);

    Sink sink(cfg.out, out);
    if (c.format == "json") {
        Json j = to_json(report, ps.tolerance);
        j["system"] = c.sys.name;
        sink.stream() << dump_report(j);
    } else {
        auto& os = sink.stream();
        os << "facet,rate";
        for (int i = 0; i < c.sys.dim; ++i) os << ",x_" << i + 1;
        for (int i = 0; i < c.sys.dim; ++i) os << ",dx_" << i + 1;
        os << '\n';
        for (const auto& w : report.witnesses) {
            os << w.facet << ',' << fmt(w.rate);
            for (int i = 0; i < c.sys.dim; ++i) os << ',' << fmt(w.x(i));
            for (int i = 0; i < c.sys.dim; ++i) os << ',' << fmt(w.dx(i));
            os << '\n';
        }
    }
    return report.verdict == PositivityVerdict::NotPositive ? 2 : 0;
}

void write_decay_csv(std::ostream& os, const ContractionReport& r) {
    os << "t,distance\n";
    for (const auto& p : r.decay) os << fmt(p.t) << ',' << fmt(p.distance) << '\n';
}

int run_strict(const RunConfig& cfg, std::ostream& out) {
    const Context c = resolve(cfg, "json");
    const auto states = grid_samples(c.sys.topology, c.box, c.grid(cfg, 8));
    const double T = cfg.horizon.value_or(2.0);
    if (!(T > 0)) throw Error(ErrorCode::InvalidInput, "horizon must be positive");

    PositivitySettings ps;
    ps.tolerance = cfg.tolerance.value_or(1e-9);
    ps.per_facet = cfg.per_facet.value_or(1);
    ps.threads = c.threads;
    const auto pointwise = check_pointwise_positivity(c.sys, states, c.u, ps);

    ContractionReport report;
    if (pointwise.verdict == PositivityVerdict::NotPositive) {
        report.T = T;
        report.verdict = StrictVerdict::NonStrict;
        report.samples_checked = pointwise.samples_checked;
        report.diagnostic = "pointwise positivity fails at " + std::to_string(pointwise.witness_count) +
                            " boundary sample(s), min margin " + fmt(pointwise.min_margin);
    } else {
        StrictSettings ss;
        ss.per_facet = cfg.per_facet.value_or(1);
        ss.threads = c.threads;
        ss.step = c.step;
        report = check_strict_positivity(c.sys, states, T, c.u, ss);
    }

    if (cfg.decay) {
        std::ofstream f(*cfg.decay, std::ios::binary);
        if (!f) throw Error(ErrorCode::InvalidInput, "cannot open '" + *cfg.decay + "' for writing");
        write_decay_csv(f, report);
    }
    Sink sink(cfg.out, out);
    if (c.format == "json") {
        Json j = to_json(report);
        j["system"] = c.sys.name;
        sink.stream() << dump_report(j);
    } else {
        write_decay_csv(sink.stream(), report);
    }
    return report.verdict == StrictVerdict::NonStrict ? 2 : 0;
}

int run_pf_field(const RunConfig& cfg, std::ostream& out) {
    const Context c = resolve(cfg, "csv");
    PFSettings pf;
    if (cfg.window) pf.window = *cfg.window;
    if (cfg.tolerance) pf.tol = *cfg.tolerance;
    pf.step = c.step;
    pf.threads = c.threads;
    if (!(pf.window > 0) || !(pf.tol > 0)) throw Error(ErrorCode::InvalidInput, "window and tolerance must be positive");
    const auto grid = pf_field_on_grid(c.sys, c.box, c.grid(cfg, 21), c.u, pf);

    Sink sink(cfg.out, out);
    if (c.format == "json") {
        Json j = to_json(grid);
        j["system"] = c.sys.name;
        sink.stream() << dump_report(j);
    } else {
        write_pf_csv(sink.stream(), grid);
    }
    if (cfg.svg) write_file(*cfg.svg, render_pf_svg(c.sys, grid));
    return 0;
}

int run_classify(const RunConfig& cfg, std::ostream& out) {
    const Context c = resolve(cfg, "json");
    ClassifySettings cs;
    if (cfg.horizon) cs.t_max = *cfg.horizon;
    cs.step.h = c.step.h;
    cs.alignment.threads = c.threads;
    cs.alignment.pf.step.h = c.step.h;
    if (cfg.window) cs.alignment.pf.window = *cfg.window;
    if (cfg.tolerance) cs.align_tol = *cfg.tolerance;
    const auto report = classify_limit_set(c.sys, c.u, c.x0(cfg), cs);

    Sink sink(cfg.out, out);
    if (c.format == "json") {
        Json j = to_json(report);
        j["system"] = c.sys.name;
        sink.stream() << dump_report(j);
    } else {
        write_trajectory_csv(sink.stream(), c.sys, report.omega.tail);
    }
    if (cfg.svg) {
        SvgPlot plot(c.box, c.sys.topology);
        plot.polyline(report.omega.points(), "#1f5fa8");
        plot.title(c.sys.name + ": " + to_string(report.verdict));
        write_file(*cfg.svg, plot.str());
    }
    return 0;
}

int run_simulate(const RunConfig& cfg, std::ostream& out) {
    const Context c = resolve(cfg, "csv");
    const double horizon = cfg.horizon.value_or(20.0);
    if (!(horizon > 0)) throw Error(ErrorCode::InvalidInput, "horizon must be positive");
    StepSettings step = c.step;
    if (c.sys.time_kind == TimeKind::Continuous)
        step.record_stride = static_cast<std::size_t>(std::max(1.0, std::round(0.01 / step.h)));
    const auto traj = flow(c.sys, c.x0(cfg), c.u, {0.0, horizon}, step);

    Sink sink(cfg.out, out);
    if (c.format == "json")
        sink.stream() << dump_report(to_json(traj));
    else
        write_trajectory_csv(sink.stream(), c.sys, traj);
    if (cfg.svg) {
        SvgPlot plot(c.box, c.sys.topology);
        plot.polyline(traj.states, "#1f5fa8");
        plot.title(c.sys.name);
        write_file(*cfg.svg, plot.str());
    }
    return 0;
}

int run_hilbert(const RunConfig& cfg, std::ostream& out) {
    const bool bare_cone =
        cfg.document && cfg.document->find("cone") && !cfg.document->find("system") && !cfg.model;
    const std::string format = cfg.format.value_or("json");
    if (format != "json" && format != "csv") throw Error(ErrorCode::InvalidInput, "format must be json or csv");
    const Cone cone = [&] {
        if (bare_cone) return load_constant_cone(*cfg.document->find("cone"));
        const Context c = resolve(cfg, "json");
        return c.sys.cone_field.cone_at(c.x0(cfg));
    }();
    const int n = cone.dim();
    if (cfg.dx.empty()) throw Error(ErrorCode::InvalidInput, "hilbert needs at least one --dx");
    if (cfg.dy.size() != cfg.dx.size() && cfg.dy.size() != 1)
        throw Error(ErrorCode::InvalidInput, "give one --dy, or one per --dx");

    std::vector<HilbertRow> rows;
    for (std::size_t i = 0; i < cfg.dx.size(); ++i) {
        const auto& a = cfg.dx[i];
        const auto& b = cfg.dy.size() == 1 ? cfg.dy.front() : cfg.dy[i];
        if (static_cast<int>(a.size()) != n || static_cast<int>(b.size()) != n)
            throw Error(ErrorCode::InvalidInput, "dx and dy need " + std::to_string(n) + " components");
        HilbertRow row;
        row.dx = to_vector(a);
        row.dy = to_vector(b);
        const auto d = hilbert_distance(cone, row.dx, row.dy);
        row.bounds = {d.M, d.m};
        row.distance = d.value;
        rows.push_back(std::move(row));
    }

    Sink sink(cfg.out, out);
    if (format == "json") {
        sink.stream() << dump_report(to_json(rows));
    } else {
        auto& os = sink.stream();
        for (int i = 0; i < n; ++i) os << "dx_" << i + 1 << ',';
        for (int i = 0; i < n; ++i) os << "dy_" << i + 1 << ',';
        os << "M,m,distance\n";
        for (const auto& r : rows) {
            for (int i = 0; i < n; ++i) os << fmt(r.dx(i)) << ',';
            for (int i = 0; i < n; ++i) os << fmt(r.dy(i)) << ',';
            os << fmt(r.bounds.M) << ',' << fmt(r.bounds.m) << ',' << fmt(r.distance) << '\n';
        }
    }
    return 0;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (t.empty() || end != t.c_str() + t.size())
            throw Error(ErrorCode::InvalidInput, "not a number list: '" + text + "'");
        out.push_back(v);
    }
    if (out.empty()) throw Error(ErrorCode::InvalidInput, "empty number list");
    return out;
}

RunConfig config_from_document(const ConfigValue& root) {
    RunConfig cfg;
    if (const auto* v = root.find("command")) cfg.command = v->as_string();
    if (const auto* v = root.find("model")) cfg.model = v->as_string();
    if (const auto* v = root.find("params"))
        for (const auto& [k, p] : v->as_table()) cfg.params[k] = p.as_number();
    if (const auto* v = root.find("matrix")) cfg.matrix = rows_matrix(*v);
    if (root.find("system") || root.find("cone")) cfg.document = root;

    if (const auto* s = root.find("settings")) {
        if (const auto* v = s->find("step")) cfg.step = v->as_number();
        if (const auto* v = s->find("horizon")) cfg.horizon = v->as_number();
        if (const auto* v = s->find("tolerance")) cfg.tolerance = v->as_number();
        if (const auto* v = s->find("window")) cfg.window = v->as_number();
        if (const auto* v = s->find("grid")) cfg.grid = grid_from(*v);
        if (const auto* v = s->find("seed")) {
            if (v->as_number() < 0) v->fail("seed must be non-negative");
            cfg.seed = static_cast<std::uint64_t>(v->as_number());
        }
        if (const auto* v = s->find("threads")) {
            if (v->as_number() < 0) v->fail("threads must be non-negative");
            cfg.threads = static_cast<std::size_t>(v->as_number());
        }
        if (const auto* v = s->find("per_facet")) cfg.per_facet = static_cast<int>(v->as_number());
        if (const auto* v = s->find("format")) cfg.format = v->as_string();
        if (const auto* v = s->find("out")) cfg.out = v->as_string();
        if (const auto* v = s->find("svg")) cfg.svg = v->as_string();
        if (const auto* v = s->find("decay")) cfg.decay = v->as_string();
        if (const auto* v = s->find("x0")) cfg.x0 = list_from(*v);
        if (const auto* v = s->find("u")) cfg.u = list_from(*v);
        if (const auto* b = s->find("box")) {
            if (const auto* v = b->find("lo")) cfg.box_lo = list_from(*v);
            if (const auto* v = b->find("hi")) cfg.box_hi = list_from(*v);
        }
    }
    if (const auto* h = root.find("hilbert")) {
        if (const auto* v = h->find("dx")) cfg.dx = v->as_number_rows();
        if (const auto* v = h->find("dy")) cfg.dy = v->as_number_rows();
    }
    return cfg;
}

void overlay(RunConfig& base, const RunConfig& top) {
    auto take = [](auto& dst, const auto& src) {
        if (src) dst = src;
    };
    if (!top.command.empty()) base.command = top.command;
    take(base.model, top.model);
    for (const auto& [k, v] : top.params) base.params[k] = v;
    take(base.matrix, top.matrix);
    take(base.document, top.document);
    take(base.format, top.format);
    take(base.out, top.out);
    take(base.svg, top.svg);
    take(base.decay, top.decay);
    take(base.tolerance, top.tolerance);
    take(base.step, top.step);
    take(base.horizon, top.horizon);
    take(base.window, top.window);
    take(base.grid, top.grid);
    take(base.seed, top.seed);
    take(base.threads, top.threads);
    take(base.per_facet, top.per_facet);
    take(base.box_lo, top.box_lo);
    take(base.box_hi, top.box_hi);
    take(base.x0, top.x0);
    take(base.u, top.u);
    if (!top.dx.empty()) base.dx = top.dx;
    if (!top.dy.empty()) base.dy = top.dy;
}

SystemDef build_system(const RunConfig& cfg) {
    if (cfg.document && cfg.document->find("system")) {
        if (cfg.model) throw Error(ErrorCode::InvalidSpec, "give either a model or a [system] table, not both");
        return load_expression_system(*cfg.document);
    }
    if (!cfg.model) throw Error(ErrorCode::InvalidSpec, "no model given (use --model or a [system] table)");
    ModelSpec spec;
    spec.name = parse_model_name(*cfg.model);
    spec.params = cfg.params;
    spec.matrix = cfg.matrix;
    return make_model(spec);
}

int run(const RunConfig& cfg, std::ostream& out) {
    const std::string& cmd = cfg.command;
    if (cmd == "check") return run_check(cfg, out);
    if (cmd == "strict") return run_strict(cfg, out);
    if (cmd == "pf-field") return run_pf_field(cfg, out);
    if (cmd == "classify") return run_classify(cfg, out);
    if (cmd == "simulate") return run_simulate(cfg, out);
    if (cmd == "hilbert") return run_hilbert(cfg, out);
    throw Error(ErrorCode::InvalidInput, cmd.empty() ? "no command given" : "unknown command '" + cmd + "'");
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Differential positivity analysis for planar and low-dimensional systems"};
    app.require_subcommand(0, 1);

    std::string config_path, model, format, out_path, svg, decay, grid, x0, u, box_lo, box_hi, matrix;
    std::vector<std::string> params, dx, dy;
    double tolerance = 0, step = 0, horizon = 0, window = 0;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    int per_facet = 0;

    std::map<std::string, CLI::Option*> opts;
    auto add_common = [&](CLI::App* sub) {
        opts["config"] = sub->add_option("--config", config_path, "TOML config file");
        opts["model"] = sub->add_option("--model", model, "built-in model: " + [] {
            std::string s;
            for (const auto& n : model_names()) s += (s.empty() ? "" : ", ") + n;
            return s;
        }());
        opts["param"] = sub->add_option("--param", params, "model parameter k=v (repeatable)");
        opts["matrix"] = sub->add_option("--matrix", matrix, "positive-linear matrix, rows split by ';'");
        opts["format"] = sub->add_option("--format", format, "json or csv");
        opts["out"] = sub->add_option("--out", out_path, "write the main output here instead of stdout");
        opts["tolerance"] = sub->add_option("--tolerance", tolerance);
        opts["step"] = sub->add_option("--step", step, "RK4 step");
        opts["horizon"] = sub->add_option("--horizon", horizon, "time horizon");
        opts["grid"] = sub->add_option("--grid", grid, "samples per axis, e.g. 21,21");
        opts["seed"] = sub->add_option("--seed", seed);
        opts["threads"] = sub->add_option("--threads", threads, "0 = all cores");
        opts["x0"] = sub->add_option("--x0", x0, "initial state a,b");
        opts["u"] = sub->add_option("--u", u, "constant input");
        opts["box-lo"] = sub->add_option("--box-lo", box_lo);
        opts["box-hi"] = sub->add_option("--box-hi", box_hi);
    };
    // Each subcommand gets its own option objects bound to the same variables.
    std::vector<std::pair<CLI::App*, std::map<std::string, CLI::Option*>>> subs;
    auto make = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        opts.clear();
        add_common(sub);
        return sub;
    };

    CLI::App* check = make("check", "pointwise differential positivity on a sample grid");
    opts["per-facet"] = check->add_option("--per-facet", per_facet);
    subs.emplace_back(check, opts);

    CLI::App* strict = make("strict", "uniform strict positivity and Hilbert contraction");
    opts["per-facet"] = strict->add_option("--per-facet", per_facet);
    opts["decay"] = strict->add_option("--decay", decay, "write the distance decay CSV here");
    subs.emplace_back(strict, opts);

    CLI::App* pf = make("pf-field", "Perron-Frobenius vector field on a grid");
    opts["window"] = pf->add_option("--window", window, "initial backward window");
    opts["svg"] = pf->add_option("--svg", svg, "phase portrait output");
    subs.emplace_back(pf, opts);

    CLI::App* classify = make("classify", "classify the omega-limit set of x0");
    opts["window"] = classify->add_option("--window", window);
    opts["svg"] = classify->add_option("--svg", svg);
    subs.emplace_back(classify, opts);

    CLI::App* simulate = make("simulate", "integrate a trajectory");
    opts["svg"] = simulate->add_option("--svg", svg);
    subs.emplace_back(simulate, opts);

    CLI::App* hilbert = make("hilbert", "Hilbert distances between tangent vectors");
    opts["dx"] = hilbert->add_option("--dx", dx, "tangent vector (repeatable)");
    opts["dy"] = hilbert->add_option("--dy", dy, "tangent vector (repeatable)");
    subs.emplace_back(hilbert, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        out << dump_report(error_envelope(ErrorCode::InvalidInput, e.what()));
        return 1;
    }

    try {
        RunConfig flags;
        std::map<std::string, CLI::Option*>* given = nullptr;
        for (auto& [sub, o] : subs)
            if (sub->parsed()) {
                flags.command = sub->get_name();
                given = &o;
            }
        if (!given) {
            out << app.help();
            return 1;
        }
        auto has = [&](const char* key) {
            const auto it = given->find(key);
            return it != given->end() && it->second->count() > 0;
        };

        if (has("model")) flags.model = model;
        for (const auto& p : params) {
            const auto eq = p.find('=');
            if (eq == std::string::npos) throw Error(ErrorCode::InvalidInput, "--param expects k=v, got '" + p + "'");
            const auto vals = parse_number_list(p.substr(eq + 1));
            if (vals.size() != 1) throw Error(ErrorCode::InvalidInput, "--param expects a single value: '" + p + "'");
            flags.params[trim(p.substr(0, eq))] = vals.front();
        }
        if (has("matrix")) flags.matrix = parse_matrix(matrix);
        if (has("format")) flags.format = format;
        if (has("out")) flags.out = out_path;
        if (has("svg")) flags.svg = svg;
        if (has("decay")) flags.decay = decay;
        if (has("tolerance")) flags.tolerance = tolerance;
        if (has("step")) flags.step = step;
        if (has("horizon")) flags.horizon = horizon;
        if (has("window")) flags.window = window;
        if (has("grid")) flags.grid = parse_grid(grid);
        if (has("seed")) flags.seed = seed;
        if (has("threads")) flags.threads = threads;
        if (has("per-facet")) flags.per_facet = per_facet;
        if (has("x0")) flags.x0 = parse_number_list(x0);
        if (has("u")) flags.u = parse_number_list(u);
        if (has("box-lo")) flags.box_lo = parse_number_list(box_lo);
        if (has("box-hi")) flags.box_hi = parse_number_list(box_hi);
        for (const auto& v : dx) flags.dx.push_back(parse_number_list(v));
        for (const auto& v : dy) flags.dy.push_back(parse_number_list(v));

        RunConfig cfg;
        if (has("config")) {
            cfg = config_from_document(load_config_file(config_path));
            if (!cfg.command.empty() && cfg.command != flags.command)
                err << "note: config command '" << cfg.command << "' overridden by '" << flags.command << "'\n";
            // a --model flag replaces an inline [system]
            if (flags.model && cfg.document && cfg.document->find("system")) cfg.document.reset();
        }
        overlay(cfg, flags);
        return run(cfg, out);
    } catch (const Error& e) {
        out << dump_report(error_envelope(e.code(), e.what()));
        return 1;
    } catch (const std::exception& e) {
        out << dump_report(error_envelope(ErrorCode::EvaluationError, e.what()));
        return 1;
    }
}

}  // namespace dpos
