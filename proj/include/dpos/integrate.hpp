#pragma once

// Fixed-step flows of the base, prolonged and matrix-variational dynamics.
//
// Continuous systems use classical RK4 with a fixed step; the base state and
// the tangent(s) are advanced as one joint state so both see the same stages.
// Discrete systems iterate the map (one unit of time per iteration).

#include "dpos/dynsys.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace dpos {

struct StepSettings {
    double h = 1e-3;
    /// Abort with Diverged once the non-circle part of the state exceeds this.
    double divergence_bound = 1e8;
    /// Tangent norm that counts as divergence when not renormalizing.
    double tangent_bound = 1e12;
    /// Keep every k-th step (the final sample is always kept).
    std::size_t record_stride = 1;
};

struct TimeSpan {
    double t0 = 0.0;
    double t1 = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;  ///< chart-normalized
    std::vector<std::vector<std::int64_t>> wrap_counts;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] bool empty() const noexcept { return times.empty(); }
    /// State with circle coordinates unwound by their winding counts.
    [[nodiscard]] Vector unwound(std::size_t i) const;
};

[[nodiscard]] Trajectory flow(const SystemDef& sys, const Vector& x0, const Input& u,
                              TimeSpan span, const StepSettings& settings = {});

struct VariationalFlow {
    Trajectory trajectory;
    std::vector<Vector> tangents;  ///< unit vectors when renormalizing
    double log_growth = 0.0;       ///< log of the total discarded scale
};

[[nodiscard]] VariationalFlow variational_flow(const SystemDef& sys, const Vector& x0,
                                               const Vector& dx0, const Input& u, TimeSpan span,
                                               const StepSettings& settings = {},
                                               bool renormalize = false);

struct VariationalBlockFlow {
    Trajectory trajectory;
    std::vector<Matrix> tangents;  ///< n x p per sample; columns unit when renormalizing
    double log_growth = 0.0;       ///< accumulated for column 0
};

/// Several tangents along one base trajectory (columns of dx0), each
/// renormalized independently when requested.
[[nodiscard]] VariationalBlockFlow variational_block_flow(const SystemDef& sys, const Vector& x0,
                                                          const Matrix& dx0, const Input& u,
                                                          TimeSpan span,
                                                          const StepSettings& settings = {},
                                                          bool renormalize = false);

struct FundamentalMatrix {
    double t0 = 0.0;
    double t = 0.0;
    Matrix psi;
};

[[nodiscard]] FundamentalMatrix fundamental_matrix(const SystemDef& sys, const Vector& x0,
                                                   const Input& u, double t0, double t,
                                                   const StepSettings& settings = {});

struct TangentPush {
    Vector dx;
    double log_growth = 0.0;
};

/// Integrates the variational equation along a recorded base path given in
/// forward time order with spacing h/2 (even indices are RK4 step points, odd
/// ones the midpoints). For discrete systems the path holds consecutive
/// iterates and h is ignored.
[[nodiscard]] TangentPush push_along_path(const SystemDef& sys, const std::vector<Vector>& path,
                                          double h, const Vector& u, const Vector& dx0,
                                          bool renormalize);

/// `t, x_1..x_n, wrap_1..wrap_k` (one wrap column per circle coordinate), 17
/// significant digits, LF line endings.
void write_trajectory_csv(std::ostream& os, const SystemDef& sys, const Trajectory& traj);

}  // namespace dpos
