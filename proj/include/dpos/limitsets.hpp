#pragma once

// omega-limit estimates, Poincare-section periods, alignment of f with the
// Perron-Frobenius field, and the fixed-point / limit-cycle classification.

#include "dpos/dynsys.hpp"
#include "dpos/integrate.hpp"
#include "dpos/pffield.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dpos {

struct OmegaSet {
    Vector source;
    double t_transient = 0.0;
    double t_tail = 0.0;
    Trajectory tail;  ///< last tail_fraction of the samples

    [[nodiscard]] const std::vector<Vector>& points() const noexcept { return tail.states; }
};

struct OmegaSettings {
    double t_max = 200.0;
    double tail_fraction = 0.2;
    StepSettings step{1e-3, 1e8, 1e12, 10};
    /// Raise Diverged when a tail point leaves this box (unset: no check).
    std::optional<StateBox> box;
};

[[nodiscard]] OmegaSet omega_estimate(const SystemDef& sys, const Vector& x0, const Input& u,
                                      const OmegaSettings& settings = {});

/// Keeps the last `tail_fraction` of an existing trajectory.
[[nodiscard]] OmegaSet omega_from_trajectory(const Trajectory& traj, double tail_fraction);

/// Diagonal of the bounding box of the cloud in chart coordinates (circle
/// offsets taken relative to the first point). Between the true diameter and
/// sqrt(n) times it.
[[nodiscard]] double cloud_extent(const ChartTopology& topo, const std::vector<Vector>& points);

/// Chart mean of the cloud; circle coordinates averaged as offsets from the
/// first point and renormalized.
[[nodiscard]] Vector cloud_centroid(const ChartTopology& topo, const std::vector<Vector>& points);

struct Section {
    Vector point;
    Vector normal;
    /// Only crossings within this chart distance of `point` count.
    double radius = kInf;
};

struct CrossingAnalysis {
    std::vector<double> crossings;  ///< interpolated times of upward crossings
    double mean_gap = 0.0;
    double relative_spread = 0.0;  ///< (max gap - min gap) / mean gap
    std::optional<double> period;
};

/// Upward crossings (<normal, x - point> from <= 0 to > 0). NoPeriod when fewer
/// than three crossings are found; `period` is set when the relative spread
/// of the gaps is within `spread_tol`.
[[nodiscard]] CrossingAnalysis analyze_crossings(const ChartTopology& topo, const Trajectory& traj,
                                                 const Section& section, double spread_tol = 1e-3);

[[nodiscard]] std::optional<double> detect_period(const ChartTopology& topo, const Trajectory& traj,
                                                  const Section& section, double spread_tol = 1e-3);

enum class AlignmentTag { Aligned, NotInCone, Equilibrium, PFError };
[[nodiscard]] std::string to_string(AlignmentTag tag);

struct AlignmentPoint {
    Vector x;
    AlignmentTag tag = AlignmentTag::Aligned;
    double distance = 0.0;  ///< Hilbert distance between +-f(x) and w(x); inf when NotInCone
    std::string message;
};

struct AlignmentSettings {
    std::size_t max_points = 24;
    double equilibrium_tol = 1e-8;  ///< |f(x)| below this tags an equilibrium
    PFSettings pf{1.0, 1e-5, 10, {}, 1e12, 1};
    std::size_t threads = 1;
};

/// Profiles up to max_points evenly spaced tail points.
[[nodiscard]] std::vector<AlignmentPoint> alignment_profile(const SystemDef& sys, const Vector& u,
                                                            const OmegaSet& omega,
                                                            const AlignmentSettings& settings = {});

enum class LimitVerdict { FixedPoint, LimitCycle, FixedPointsAndArcs, NonAligned, Inconclusive };
[[nodiscard]] std::string to_string(LimitVerdict v);

/// Everything the decision tree looks at, so it can be tested on its own.
struct VerdictInputs {
    double extent = kInf;
    double fp_tol = 1e-4;
    std::optional<double> period;
    double alignment_max = kInf;  ///< over Aligned points
    double align_tol = 1e-2;
    std::size_t profiled = 0;
    std::size_t not_in_cone = 0;
    std::size_t equilibria = 0;
    std::size_t pf_errors = 0;
    std::size_t equilibrium_clusters = 0;
    bool growth_flag = false;
};

[[nodiscard]] LimitVerdict decide_verdict(const VerdictInputs& in);

struct ClassifySettings {
    double t_max = 600.0;
    double tail_fraction = 0.2;
    double fp_tol = 1e-4;
    double align_tol = 1e-2;
    double period_spread = 1e-3;
    double growth_nats = 20.0;
    StepSettings step{1e-3, 1e8, 1e12, 10};
    AlignmentSettings alignment;
};

struct LimitSetReport {
    LimitVerdict verdict = LimitVerdict::Inconclusive;
    double alignment_max = kInf;
    std::optional<double> period;
    std::size_t crossings = 0;
    double period_spread = 0.0;
    bool growth_flag = false;
    double log_growth = 0.0;
    double cloud_extent = 0.0;
    std::optional<Vector> fixed_point;
    std::vector<AlignmentPoint> profile;
    OmegaSet omega;
    std::string diagnostic;
};

[[nodiscard]] LimitSetReport classify_limit_set(const SystemDef& sys, const Vector& u,
                                                const Vector& x0,
                                                const ClassifySettings& settings = {});

struct RegionCheck {
    bool ok = false;
    bool interior_ok = false;
    bool invariance_ok = false;
    double margin = -kInf;  ///< min over samples of min_i <h_i, f>/|f|
    Vector worst_state;
    std::size_t boundary_samples = 0;
    std::string message;
};

/// f(x) strictly inside K(x) at every sample, and flows started at samples on
/// the region boundary (non-periodic faces) stay in the region over `horizon`.
[[nodiscard]] RegionCheck invariant_region_check(const SystemDef& sys, const Vector& u,
                                                 const StateBox& region,
                                                 const std::vector<Vector>& samples,
                                                 double horizon = 2.0,
                                                 const StepSettings& step = {});

/// Newton iteration on f(x) = 0 from `guess`. EvaluationError when it fails to
/// converge.
[[nodiscard]] Vector find_equilibrium(const SystemDef& sys, const Vector& u, const Vector& guess,
                                      double tol = 1e-12, int max_iter = 60);

struct TangencyArc {
    int side = 1;  ///< launched along +v_u or -v_u
    bool escaped = false;
    Vector endpoint;
    Vector arrival_direction;
    Vector pf_direction;  ///< PF vector of the linearization at the endpoint
    double angle = 0.0;   ///< radians between the two lines
};

struct SaddleReport {
    Vector saddle;
    Vector eigenvalues_real;
    Vector unstable_direction;
    Vector pf_direction;          ///< PF vector of the linearization at the saddle
    double unstable_pf_angle = 0.0;
    std::vector<TangencyArc> arcs;
    bool tangent = false;  ///< every non-escaped arc arrives within tol
};

/// PF vector of a linear map: eigenvector (real eigenvalue, largest) with +-v
/// in the cone. InvalidInput when none exists.
[[nodiscard]] Vector linear_pf_vector(const Matrix& a, const Cone& cone);

[[nodiscard]] SaddleReport saddle_tangency_diagnostic(const SystemDef& sys, const Vector& u,
                                                      const Vector& saddle, double tol = 1e-2,
                                                      double arc_time = 60.0);

}  // namespace dpos
