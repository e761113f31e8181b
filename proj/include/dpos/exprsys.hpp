#pragma once

// Systems declared in a config document instead of built in:
//
//   [system]
//   name = "toggle"
//   time = "continuous"            # or "discrete" (then `inverse` is optional)
//   states = ["x", "y"]
//   topology = ["line", "line"]    # line | circle | positive
//   inputs = ["u"]                 # optional, with defaults in `input`
//   input = [0.0]
//   params = {b = 2.0}
//   field = ["-x + y", "-y + b*tanh(x)"]
//
//   [cone]
//   halfspaces = [[1, 0], [0, 1]]  # numbers, or expression strings in the states
//
// Jacobians are derived symbolically. A state-dependent cone gets no transport
// map and finite-difference facet rates.

#include "dpos/config.hpp"
#include "dpos/dynsys.hpp"

namespace dpos {

/// `root` is the whole document; reads its [system] and [cone] tables.
[[nodiscard]] SystemDef load_expression_system(const ConfigValue& root);

/// Cone from a [cone] table holding constant halfspace rows.
[[nodiscard]] Cone load_constant_cone(const ConfigValue& cone_table);

}  // namespace dpos
