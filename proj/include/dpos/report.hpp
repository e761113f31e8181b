#pragma once

// JSON encodings of the analysis reports. Non-finite numbers are written as
// the strings "inf", "-inf" and "nan" so every document is strict JSON.

#include "dpos/error.hpp"
#include "dpos/geometry.hpp"
#include "dpos/limitsets.hpp"
#include "dpos/pffield.hpp"
#include "dpos/positivity.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace dpos {

using Json = nlohmann::ordered_json;

[[nodiscard]] Json number_json(double v);
/// Inverse of number_json; InvalidInput for anything else.
[[nodiscard]] double number_from_json(const Json& j);
[[nodiscard]] Json vector_json(const Vector& v);

[[nodiscard]] Json to_json(const PositivityReport& r, double tolerance);
[[nodiscard]] Json to_json(const ContractionReport& r);
[[nodiscard]] Json to_json(const LimitSetReport& r);
[[nodiscard]] Json to_json(const PFGrid& g);
[[nodiscard]] Json to_json(const RegionCheck& r);
[[nodiscard]] Json to_json(const SaddleReport& r);

struct HilbertRow {
    Vector dx;
    Vector dy;
    HilbertBounds bounds;
    double distance = 0.0;
};
[[nodiscard]] Json to_json(const std::vector<HilbertRow>& rows);

/// Times and chart-normalized states only (wrap counts go to the CSV form).
[[nodiscard]] Json to_json(const Trajectory& t);

[[nodiscard]] Json error_envelope(ErrorCode code, const std::string& message);

/// Checks a parsed document against the schema of its "kind"; returns an
/// empty string when valid, otherwise the first problem found.
[[nodiscard]] std::string validate_report(const Json& doc);

/// Two-space indented dump with a trailing newline.
[[nodiscard]] std::string dump_report(const Json& doc);

}  // namespace dpos
