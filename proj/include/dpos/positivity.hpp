#pragma once

// Sample-based certificates of differential positivity.
//
// Pointwise: at every tight facet k_j(x, dx) = 0 of the cone field the rate
// k_j' = <dh_j/dt, dx> + <h_j, A(x) dx> must be nonnegative. Strict: boundary
// rays pushed forward over a horizon T must land strictly inside the cone at
// the image point, at finite mutual Hilbert distance.

#include "dpos/dynsys.hpp"
#include "dpos/integrate.hpp"

#include <string>
#include <vector>

namespace dpos {

struct BoundarySample {
    Vector x;
    Vector dx;  ///< unit, <h_facet, dx> = 0
    int facet = 0;
    std::vector<int> tight_set;  ///< every facet with <h_i, dx> = 0
};

/// Boundary directions of one cone at x. Each facet contributes the extreme
/// rays it contains, then (n >= 3) further points of its spherical
/// cross-section up to `per_facet` samples: evenly spaced along the arc for
/// two-ray facets, seeded Dirichlet combinations otherwise.
[[nodiscard]] std::vector<BoundarySample> boundary_samples(const Cone& cone, const Vector& x,
                                                           int per_facet = 1);
[[nodiscard]] std::vector<BoundarySample> boundary_samples(const ConeField& field,
                                                           const Vector& x, int per_facet = 1);

enum class PositivityVerdict { Positive, NotPositive, Inconclusive };
[[nodiscard]] std::string to_string(PositivityVerdict v);

struct Witness {
    Vector x;
    Vector dx;
    int facet = 0;
    double rate = 0.0;
};

struct MarginRecord {
    std::size_t state_index = 0;
    int facet = 0;
    Vector dx;
    double rate = 0.0;
};

struct PositivitySettings {
    double tolerance = 1e-9;
    int per_facet = 1;
    std::size_t max_witnesses = 50;
    std::size_t threads = 1;
    bool record_margins = false;
};

struct PositivityReport {
    PositivityVerdict verdict = PositivityVerdict::Inconclusive;
    std::vector<Witness> witnesses;  ///< worst first, capped at max_witnesses
    std::size_t witness_count = 0;   ///< before capping
    std::size_t samples_checked = 0;
    double min_margin = kInf;
    Vector facet_min_margin;  ///< per facet index; +inf when never tight
    Vector min_margin_state;
    std::vector<MarginRecord> margins;  ///< only with record_margins
};

/// Remark-1 test at every state sample for a constant input (empty u selects
/// the model default). Discrete systems check <h_i(f(x)), J dx> >= -tol for
/// every facet i instead.
[[nodiscard]] PositivityReport check_pointwise_positivity(const SystemDef& sys,
                                                          const std::vector<Vector>& states,
                                                          const Vector& u = {},
                                                          const PositivitySettings& settings = {});

/// Orthant shortcut: off-diagonal Jacobian entries >= -tol (all entries for
/// discrete maps). Witness (x, e_j, facet i, J_ij). WrongConeKind otherwise.
[[nodiscard]] PositivityReport metzler_check(const SystemDef& sys,
                                             const std::vector<Vector>& states,
                                             const Vector& u = {},
                                             const PositivitySettings& settings = {});

enum class StrictVerdict { Strict, NonStrict, Inconclusive };
[[nodiscard]] std::string to_string(StrictVerdict v);

struct DecayPoint {
    double t = 0.0;
    double distance = 0.0;  ///< max over states of the max pairwise distance; may be inf
};

struct StrictSettings {
    int per_facet = 1;
    double interior_tol = 1e-7;
    /// Distances below this are treated as fully contracted in the fit.
    double fit_floor = 1e-12;
    std::size_t decay_points = 300;
    std::size_t threads = 1;
    StepSettings step;
};

struct ContractionReport {
    double T = 0.0;
    double diameter_estimate = kInf;
    double mu_T = 1.0;
    double fitted_lambda = 0.0;
    StrictVerdict verdict = StrictVerdict::Inconclusive;
    std::size_t samples_checked = 0;
    std::vector<DecayPoint> decay;
    std::vector<Vector> non_strict_states;
    double worst_interior_slack = kInf;  ///< min <h_i, v>/|v| over all images at T
    std::string diagnostic;
};

[[nodiscard]] ContractionReport check_strict_positivity(const SystemDef& sys,
                                                        const std::vector<Vector>& states,
                                                        double T, const Vector& u = {},
                                                        const StrictSettings& settings = {});

/// Max pairwise Hilbert distance of the columns of `images` in `cone`.
[[nodiscard]] double max_pairwise_distance(const Cone& cone, const Matrix& images);

}  // namespace dpos
