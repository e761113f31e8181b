#pragma once

// Perron-Frobenius vector field for constant inputs.
//
// w(x) is the limit of the cone K(z) pushed forward along the trajectory from
// z = psi_{-W}(x) to x as the backward window W grows. We push the deep
// interior probe of K(z), double W until successive results agree in the
// Hilbert metric, and normalize in the chart's Euclidean metric.

#include "dpos/dynsys.hpp"
#include "dpos/error.hpp"
#include "dpos/integrate.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dpos {

struct PFSettings {
    double window = 1.0;  ///< initial backward window (iterations for maps)
    double tol = 1e-6;    ///< Hilbert distance between successive windows
    int max_doublings = 10;
    StepSettings step;
    /// Escape bound for the backward path (replaces step.divergence_bound).
    double backward_bound = 1e12;
    std::size_t threads = 1;
};

struct PFVector {
    Vector x;
    Vector w;  ///< unit, strictly inside K(x)
    double residual_hilbert = 0.0;
    double window = 0.0;
    /// true when the final window was cut short at the backward escape time.
    bool clamped = false;
};

/// Errors: NonContractive when the pushed cone does not shrink onto a ray
/// (boundary rays stay on the boundary, or no convergence after the cap);
/// Diverged when the backward flow escapes before convergence.
[[nodiscard]] PFVector pf_vector_at(const SystemDef& sys, const Vector& x, const Vector& u = {},
                                    const PFSettings& settings = {});

struct PFCell {
    std::size_t index = 0;
    Vector x;
    std::optional<PFVector> value;
    std::optional<ErrorCode> error;
    std::string message;
};

struct PFGrid {
    StateBox box;
    std::vector<int> resolution;
    std::vector<PFCell> cells;  ///< grid order, last axis fastest

    [[nodiscard]] std::size_t succeeded() const;
};

[[nodiscard]] PFGrid pf_field_on_grid(const SystemDef& sys, const StateBox& box,
                                      const std::vector<int>& resolution, const Vector& u = {},
                                      const PFSettings& settings = {});

struct PFResidual {
    Vector x;  ///< grid node the residual was evaluated at
    double pde_residual = 0.0;
    double lambda = 0.0;
};

/// PDE defect |[dw] f - [df] w + lambda w| at the grid node nearest x, with
/// dw from central differences of neighbouring cells (spacing <= 0.1, else
/// NeedsDenserGrid). Discrete maps compare w(f(x)) with [df] w / |[df] w|,
/// interpolating w multilinearly.
[[nodiscard]] PFResidual pf_residual(const SystemDef& sys, const PFGrid& grid, const Vector& x,
                                     const Vector& u = {});

/// `x_1..x_n, w_1..w_n, residual, window`; failed cells carry nan.
void write_pf_csv(std::ostream& os, const PFGrid& grid);

}  // namespace dpos
