#pragma once

// System definitions, chart topology, linearization and the prolonged
// (state + tangent) dynamics.

#include "dpos/geometry.hpp"
#include "dpos/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace dpos {

enum class TimeKind { Continuous, Discrete };

enum class CoordKind { Line, Circle, PositiveHalfLine };

struct ChartTopology {
    std::vector<CoordKind> kinds;

    [[nodiscard]] static ChartTopology euclidean(int dim) {
        return {std::vector<CoordKind>(static_cast<std::size_t>(dim), CoordKind::Line)};
    }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(kinds.size()); }
    [[nodiscard]] bool has_circle() const;
};

using FieldFn = std::function<Vector(const Vector& x, const Vector& u)>;
using JacobianFn = std::function<Matrix(const Vector& x, const Vector& u)>;

struct SystemDef {
    std::string name;
    TimeKind time_kind = TimeKind::Continuous;
    int dim = 0;
    int input_dim = 0;
    /// Vector field (continuous) or next-state map (discrete).
    FieldFn field;
    /// Analytic d/dx field; central differences are used when empty.
    JacobianFn jacobian;
    /// Analytic d/du field; central differences are used when empty.
    JacobianFn input_jacobian;
    /// Discrete systems only: inverse map, needed for backward iteration.
    FieldFn inverse;
    ChartTopology topology;
    ConeField cone_field;
    /// Constant input used when a caller does not supply one.
    Vector default_input;

    /// Structural checks (dimensions, callbacks present); throws InvalidSpec.
    void validate() const;
};

/// Evaluates f(x,u); throws EvaluationError on NaN/Inf.
[[nodiscard]] Vector evaluate_field(const SystemDef& sys, const Vector& x, const Vector& u);

struct Linearization {
    Matrix A;  ///< n x n
    Matrix B;  ///< n x m
};

/// Relative central-difference step used whenever no analytic Jacobian exists.
inline constexpr double kJacobianStep = 1e-6;

[[nodiscard]] Matrix state_jacobian(const SystemDef& sys, const Vector& x, const Vector& u);
[[nodiscard]] Linearization linearize(const SystemDef& sys, const Vector& x, const Vector& u);

struct ProlongedState {
    Vector x;
    Vector dx;
    /// Accumulated log of the tangent norm discarded by renormalization.
    double log_scale = 0.0;
};

struct ProlongedRhs {
    Vector xdot;
    Vector dxdot;
};

/// (f(x,u), df/dx dx + df/du du) for continuous systems, or the next prolonged
/// state (f(x,u), df/dx dx + df/du du) for discrete ones.
[[nodiscard]] ProlongedRhs prolonged_rhs(const SystemDef& sys, const ProlongedState& ps,
                                         const Vector& u, const Vector& du);

struct NormalizedState {
    Vector x;
    std::vector<std::int64_t> wraps;  ///< per-coordinate winding count (0 for non-circle)
};

/// Wraps Circle coordinates into [0, 2*pi); LeftDomain if a PositiveHalfLine
/// coordinate is <= 0.
[[nodiscard]] NormalizedState chart_normalize(const SystemDef& sys, const Vector& x);

/// Difference a - b with Circle components taken in (-pi, pi].
[[nodiscard]] Vector chart_difference(const ChartTopology& topo, const Vector& a, const Vector& b);

/// Norm over non-circle coordinates (circle coordinates are bounded).
[[nodiscard]] double chart_escape_norm(const ChartTopology& topo, const Vector& x);

struct JacobianCheck {
    bool ok = true;
    double worst_excess = 0.0;  ///< max(|fd - analytic| - allowed), <= 0 when ok
    Vector worst_state;
    std::size_t samples = 0;
};

/// Compares the supplied Jacobian with central differences at the given
/// states: |fd - J| <= max(1e-5, 1e-4 * |J|) entrywise.
[[nodiscard]] JacobianCheck check_jacobian(const SystemDef& sys, const std::vector<Vector>& states,
                                           const Vector& u);

/// Same system with time reversed (continuous: -f; discrete: inverse map).
[[nodiscard]] SystemDef time_reversed(const SystemDef& sys);

/// Constant input or a time-varying signal. Only the integrator accepts signals.
class Input {
public:
    using Signal = std::function<Vector(double)>;

    Input() = default;
    Input(Vector u) : value_(std::move(u)) {}  // NOLINT(google-explicit-constructor)
    [[nodiscard]] static Input signal(Signal s) {
        Input in;
        in.value_ = std::move(s);
        return in;
    }

    [[nodiscard]] bool is_constant() const noexcept { return std::holds_alternative<Vector>(value_); }
    [[nodiscard]] Vector at(double t) const;
    /// InvalidInput for signals.
    [[nodiscard]] const Vector& constant() const;

private:
    std::variant<Vector, Signal> value_ = Vector();
};

/// Resolves an empty input to the system default.
[[nodiscard]] Vector resolve_input(const SystemDef& sys, const Vector& u);

/// Axis-aligned box of states.
struct StateBox {
    Vector lo;
    Vector hi;
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(lo.size()); }
    [[nodiscard]] bool contains(const Vector& x, double tol = 0.0) const;
};

/// Tensor grid over the box. Circle coordinates spanning a full turn exclude
/// the duplicate endpoint; resolution 1 along an axis picks the midpoint.
[[nodiscard]] std::vector<Vector> grid_samples(const ChartTopology& topo, const StateBox& box,
                                               const std::vector<int>& resolution);

/// Low-discrepancy (Halton) points in the box, shifted by a seeded offset.
[[nodiscard]] std::vector<Vector> halton_samples(const StateBox& box, std::size_t count,
                                                 std::uint64_t seed);

}  // namespace dpos
