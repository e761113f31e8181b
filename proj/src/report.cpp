#include "dpos/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace dpos {

Json number_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double number_from_json(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan") return std::nan("");
    }
    throw Error(ErrorCode::InvalidInput, "expected a number, got " + j.dump());
}

Json vector_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_json(v(i)));
    return a;
}

Json to_json(const PositivityReport& r, double tolerance) {
    Json j;
    j["kind"] = "positivity";
    j["verdict"] = to_string(r.verdict);
    j["samples_checked"] = r.samples_checked;
    j["tolerance"] = number_json(tolerance);
    j["min_margin"] = number_json(r.min_margin);
    j["facet_min_margin"] = vector_json(r.facet_min_margin);
    j["min_margin_state"] = vector_json(r.min_margin_state);
    j["witness_count"] = r.witness_count;
    Json w = Json::array();
    for (const auto& wit : r.witnesses)
        w.push_back({{"x", vector_json(wit.x)},
                     {"dx", vector_json(wit.dx)},
                     {"facet", wit.facet},
                     {"rate", number_json(wit.rate)}});
    j["witnesses"] = std::move(w);
    return j;
}

Json to_json(const ContractionReport& r) {
    Json j;
    j["kind"] = "contraction";
    j["verdict"] = to_string(r.verdict);
    j["T"] = number_json(r.T);
    j["diameter_estimate"] = number_json(r.diameter_estimate);
    j["mu_T"] = number_json(r.mu_T);
    j["fitted_lambda"] = number_json(r.fitted_lambda);
    j["samples_checked"] = r.samples_checked;
    j["worst_interior_slack"] = number_json(r.worst_interior_slack);
    Json bad = Json::array();
    for (const auto& x : r.non_strict_states) bad.push_back(vector_json(x));
    j["non_strict_states"] = std::move(bad);
    j["decay_points"] = r.decay.size();
    j["diagnostic"] = r.diagnostic;
    return j;
}

Json to_json(const LimitSetReport& r) {
    Json j;
    j["kind"] = "limit_set";
    j["verdict"] = to_string(r.verdict);
    j["alignment_max"] = number_json(r.alignment_max);
    j["period"] = r.period ? number_json(*r.period) : Json(nullptr);
    j["crossings"] = r.crossings;
    j["period_spread"] = number_json(r.period_spread);
    j["growth_flag"] = r.growth_flag;
    j["log_growth"] = number_json(r.log_growth);
    j["cloud_extent"] = number_json(r.cloud_extent);
    j["fixed_point"] = r.fixed_point ? vector_json(*r.fixed_point) : Json(nullptr);
    j["tail_points"] = r.omega.points().size();
    Json prof = Json::array();
    for (const auto& p : r.profile)
        prof.push_back({{"x", vector_json(p.x)},
                        {"tag", to_string(p.tag)},
                        {"distance", number_json(p.distance)}});
    j["profile"] = std::move(prof);
    j["diagnostic"] = r.diagnostic;
    return j;
}

Json to_json(const PFGrid& g) {
    Json j;
    j["kind"] = "pf_field";
    j["cells"] = g.cells.size();
    j["succeeded"] = g.succeeded();
    j["resolution"] = g.resolution;
    Json fails = Json::array();
    for (const auto& c : g.cells) {
        if (c.value) continue;
        fails.push_back({{"index", c.index},
                         {"x", vector_json(c.x)},
                         {"error", std::string(to_string(*c.error))},
                         {"message", c.message}});
    }
    j["failures"] = std::move(fails);
    return j;
}

Json to_json(const RegionCheck& r) {
    Json j;
    j["kind"] = "region";
    j["ok"] = r.ok;
    j["interior_ok"] = r.interior_ok;
    j["invariance_ok"] = r.invariance_ok;
    j["margin"] = number_json(r.margin);
    j["worst_state"] = vector_json(r.worst_state);
    j["boundary_samples"] = r.boundary_samples;
    j["message"] = r.message;
    return j;
}

Json to_json(const SaddleReport& r) {
    Json j;
    j["kind"] = "saddle";
    j["saddle"] = vector_json(r.saddle);
    j["eigenvalues_real"] = vector_json(r.eigenvalues_real);
    j["unstable_direction"] = vector_json(r.unstable_direction);
    j["pf_direction"] = vector_json(r.pf_direction);
    j["unstable_pf_angle"] = number_json(r.unstable_pf_angle);
    j["tangent"] = r.tangent;
    Json arcs = Json::array();
    for (const auto& a : r.arcs)
        arcs.push_back({{"side", a.side},
                        {"escaped", a.escaped},
                        {"endpoint", vector_json(a.endpoint)},
                        {"angle", number_json(a.angle)}});
    j["arcs"] = std::move(arcs);
    return j;
}

Json to_json(const std::vector<HilbertRow>& rows) {
    Json j;
    j["kind"] = "hilbert";
    Json a = Json::array();
    for (const auto& r : rows)
        a.push_back({{"dx", vector_json(r.dx)},
                     {"dy", vector_json(r.dy)},
                     {"M", number_json(r.bounds.M)},
                     {"m", number_json(r.bounds.m)},
                     {"distance", number_json(r.distance)}});
    j["rows"] = std::move(a);
    return j;
}

Json to_json(const Trajectory& t) {
    Json j;
    j["kind"] = "trajectory";
    Json times = Json::array();
    for (double v : t.times) times.push_back(number_json(v));
    j["times"] = times;
    Json states = Json::array();
    for (const auto& x : t.states) states.push_back(vector_json(x));
    j["states"] = states;
    return j;
}

Json error_envelope(ErrorCode code, const std::string& message) {
    Json j;
    j["kind"] = "error";
    j["error"] = {{"code", std::string(to_string(code))}, {"message", message}};
    return j;
}

namespace {

enum class Field { Number, Count, String, Bool, Array, Object, NumberOrNull, ArrayOrNull, NumberArray };

bool is_number_like(const Json& j) {
    if (j.is_number()) return true;
    if (!j.is_string()) return false;
    const auto s = j.get<std::string>();
    return s == "inf" || s == "-inf" || s == "nan";
}

bool matches(const Json& j, Field f) {
    switch (f) {
        case Field::Number: return is_number_like(j);
        case Field::Count: return j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0);
        case Field::String: return j.is_string();
        case Field::Bool: return j.is_boolean();
        case Field::Array: return j.is_array();
        case Field::Object: return j.is_object();
        case Field::NumberOrNull: return j.is_null() || is_number_like(j);
        case Field::ArrayOrNull: return j.is_null() || j.is_array();
        case Field::NumberArray:
            if (!j.is_array()) return false;
            for (const auto& e : j)
                if (!is_number_like(e)) return false;
            return true;
    }
    return false;
}

using Schema = std::vector<std::pair<const char*, Field>>;

const std::map<std::string, Schema>& schemas() {
    static const std::map<std::string, Schema> s = {
        {"positivity",
         {{"verdict", Field::String}, {"samples_checked", Field::Count}, {"tolerance", Field::Number},
          {"min_margin", Field::Number}, {"facet_min_margin", Field::NumberArray},
          {"min_margin_state", Field::NumberArray}, {"witness_count", Field::Count},
          {"witnesses", Field::Array}}},
        {"contraction",
         {{"verdict", Field::String}, {"T", Field::Number}, {"diameter_estimate", Field::Number},
          {"mu_T", Field::Number}, {"fitted_lambda", Field::Number}, {"samples_checked", Field::Count},
          {"worst_interior_slack", Field::Number}, {"non_strict_states", Field::Array},
          {"decay_points", Field::Count}, {"diagnostic", Field::String}}},
        {"limit_set",
         {{"verdict", Field::String}, {"alignment_max", Field::Number}, {"period", Field::NumberOrNull},
          {"crossings", Field::Count}, {"period_spread", Field::Number}, {"growth_flag", Field::Bool},
          {"log_growth", Field::Number}, {"cloud_extent", Field::Number},
          {"fixed_point", Field::ArrayOrNull}, {"tail_points", Field::Count}, {"profile", Field::Array},
          {"diagnostic", Field::String}}},
        {"pf_field",
         {{"cells", Field::Count}, {"succeeded", Field::Count}, {"resolution", Field::Array},
          {"failures", Field::Array}}},
        {"region",
         {{"ok", Field::Bool}, {"interior_ok", Field::Bool}, {"invariance_ok", Field::Bool},
          {"margin", Field::Number}, {"worst_state", Field::NumberArray},
          {"boundary_samples", Field::Count}, {"message", Field::String}}},
        {"saddle",
         {{"saddle", Field::NumberArray}, {"eigenvalues_real", Field::NumberArray},
          {"unstable_direction", Field::NumberArray}, {"pf_direction", Field::NumberArray},
          {"unstable_pf_angle", Field::Number}, {"tangent", Field::Bool}, {"arcs", Field::Array}}},
        {"hilbert", {{"rows", Field::Array}}},
        {"trajectory", {{"times", Field::NumberArray}, {"states", Field::Array}}},
        {"error", {{"error", Field::Object}}},
    };
    return s;
}

const std::map<std::string, std::vector<std::string>>& verdicts() {
    static const std::map<std::string, std::vector<std::string>> v = {
        {"positivity", {"Positive", "NotPositive", "Inconclusive"}},
        {"contraction", {"Strict", "NonStrict", "Inconclusive"}},
        {"limit_set", {"FixedPoint", "LimitCycle", "FixedPointsAndArcs", "NonAligned", "Inconclusive"}},
    };
    return v;
}

}  // namespace

std::string validate_report(const Json& doc) {
    if (!doc.is_object()) return "report is not an object";
    if (!doc.contains("kind") || !doc["kind"].is_string()) return "missing string field 'kind'";
    const auto kind = doc["kind"].get<std::string>();
    const auto it = schemas().find(kind);
    if (it == schemas().end()) return "unknown report kind '" + kind + "'";
    for (const auto& [key, type] : it->second) {
        if (!doc.contains(key)) return kind + ": missing field '" + key + "'";
        if (!matches(doc[key], type)) return kind + ": field '" + key + "' has the wrong type";
    }
    if (const auto v = verdicts().find(kind); v != verdicts().end()) {
        const auto verdict = doc["verdict"].get<std::string>();
        if (std::find(v->second.begin(), v->second.end(), verdict) == v->second.end())
            return kind + ": unknown verdict '" + verdict + "'";
    }
    if (kind == "contraction") {
        const double mu = number_from_json(doc["mu_T"]);
        if (!(mu >= 0.0 && mu <= 1.0)) return "contraction: mu_T outside [0, 1]";
    }
    if (kind == "error") {
        const auto& e = doc["error"];
        if (!e.contains("code") || !e["code"].is_string() || !e.contains("message") ||
            !e["message"].is_string())
            return "error: envelope needs string code and message";
    }
    return {};
}

std::string dump_report(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace dpos
