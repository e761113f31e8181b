#pragma once

// Built-in systems with their cone fields:
//
//   positive-linear   xdot = A x, positive orthant (A Metzler)
//   bistable          x1' = -x1 + x2, x2' = -x2 + b*tanh(x1) (b = 2), orthant
//   oscillator        x1' = x2, x2' = -x1 with the rotating cone
//                       k1 = -(x1+x2) dx1 + (x1-x2) dx2
//                       k2 = -(x2-x1) dx1 + (x1+x2) dx2
//   polar             theta' = 1, rho' = rho - rho^3/3 on S x R+, orthant
//   pendulum          theta' = v, v' = -sin(theta) - k v + u on S x R,
//                       cone { dtheta >= 0, dtheta + dv >= 0 }

#include "dpos/dynsys.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dpos {

enum class ModelName { PositiveLinear, MonotoneBistable, HarmonicOscillatorRotatingCone, PolarDecoupled, Pendulum };

struct ModelSpec {
    ModelName name = ModelName::Pendulum;
    std::map<std::string, double> params;
    /// PositiveLinear only; overrides a11..a22 params when set.
    std::optional<Matrix> matrix;
};

/// Accepts the canonical CLI names above plus a few aliases; InvalidSpec otherwise.
[[nodiscard]] ModelName parse_model_name(const std::string& name);
[[nodiscard]] std::string model_name(ModelName name);
[[nodiscard]] std::vector<std::string> model_names();

[[nodiscard]] SystemDef make_model(const ModelSpec& spec);

/// Default state box used by the CLI for sampling and plotting.
[[nodiscard]] StateBox default_box(ModelName name);

}  // namespace dpos
