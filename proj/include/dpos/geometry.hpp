#pragma once

// Polyhedral cones, cone fields and the Hilbert projective metric.
//
// A cone is stored in both representations:
//   halfspaces  k x n, row i is a covector h_i, the cone is { v : <h_i, v> >= 0 }
//   generators  n x r, column j is a unit extreme ray g_j
// Halfspace rows are kept exactly as supplied (no rescaling) so that facet
// rates reported by the positivity checks are in the caller's units.

#include "dpos/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dpos {

class Cone {
public:
    /// Builds the cone from its facet covectors and enumerates the extreme rays.
    /// Throws InvalidCone unless the result is solid and pointed.
    [[nodiscard]] static Cone from_halfspaces(const Matrix& halfspaces);

    /// Builds from a simplicial generator set (n generators in dimension n),
    /// or from any generator set in dimension 2 (the two extreme ones are kept).
    [[nodiscard]] static Cone from_generators(const Matrix& generators);

    [[nodiscard]] static Cone orthant(int dim);

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(halfspaces_.cols()); }
    [[nodiscard]] int num_facets() const noexcept { return static_cast<int>(halfspaces_.rows()); }
    [[nodiscard]] const Matrix& halfspaces() const noexcept { return halfspaces_; }
    [[nodiscard]] const Matrix& generators() const noexcept { return generators_; }

    /// Normalized sum of the unit generators; a deep interior direction.
    [[nodiscard]] Vector interior_probe() const;

    /// Indices of generators lying on facet `facet` (relative tolerance).
    [[nodiscard]] std::vector<int> facet_generators(int facet, double tol = 1e-10) const;

    /// Facet evaluations <h_i, v>.
    [[nodiscard]] Vector evaluate(const Vector& v) const;

private:
    Cone(Matrix halfspaces, Matrix generators);

    Matrix halfspaces_;
    Matrix generators_;
};

/// Representation checks; returns an empty string when the cone is valid,
/// otherwise a description of the first violated invariant.
[[nodiscard]] std::string validate_cone(const Matrix& halfspaces, const Matrix& generators,
                                        double tol = 1e-9);

/// true iff <h_i, v> >= -tol*|v| for all i, or (strict) <h_i, v> > tol*|v|.
[[nodiscard]] bool cone_contains(const Cone& cone, const Vector& v, bool strict,
                                 double tol = 0.0);

struct HilbertBounds {
    double M = 0.0;  ///< may be +inf
    double m = 0.0;
};

struct HilbertDistance {
    double value = 0.0;  ///< may be +inf
    double M = 0.0;
    double m = 0.0;

    [[nodiscard]] bool finite() const noexcept { return std::isfinite(value); }
};

/// M = inf{l >= 0 : l*dy - dx in K}, m = sup{l >= 0 : dx - l*dy in K}, in
/// closed form from the facet ratios <h_i,dx>/<h_i,dy>.
[[nodiscard]] HilbertBounds hilbert_bounds(const Cone& cone, const Vector& dx, const Vector& dy);

[[nodiscard]] HilbertDistance hilbert_distance(const Cone& cone, const Vector& dx,
                                               const Vector& dy);

/// Max pairwise Hilbert distance of the samples (a lower estimate of the
/// projective diameter of the set they were drawn from).
[[nodiscard]] double projective_diameter(const Cone& cone, const std::vector<Vector>& samples);

/// tanh(diameter / 4); 1 for an infinite diameter.
[[nodiscard]] double contraction_ratio(double diameter);

/// State-dependent polyhedral cone field with an optional transport map
/// Gamma(x1, x2) satisfying Gamma * K(x1) = K(x2).
class ConeField {
public:
    using HalfspaceMap = std::function<Matrix(const Vector&)>;
    using TransportMap = std::function<Matrix(const Vector&, const Vector&)>;
    /// Analytic override for the rate of change of the halfspace rows along a
    /// velocity: (x, xdot) -> d/dt H(x(t)).
    using FacetRateMap = std::function<Matrix(const Vector&, const Vector&)>;

    ConeField() = default;

    [[nodiscard]] static ConeField constant(Cone cone);
    [[nodiscard]] static ConeField state_dependent(int dim, HalfspaceMap halfspaces,
                                                   std::optional<TransportMap> transport = {},
                                                   std::optional<FacetRateMap> facet_rate = {});

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] bool is_constant() const noexcept { return constant_.has_value(); }
    [[nodiscard]] bool has_transport() const noexcept {
        return is_constant() || transport_.has_value();
    }
    [[nodiscard]] bool has_facet_rate() const noexcept { return facet_rate_.has_value(); }

    [[nodiscard]] Matrix halfspaces_at(const Vector& x) const;
    [[nodiscard]] Cone cone_at(const Vector& x) const;

    /// Identity for constant fields; MissingTransport when the model supplied none.
    [[nodiscard]] Matrix transport(const Vector& x1, const Vector& x2) const;

    /// d/dt H(x(t)) along xdot, from the analytic hook when present.
    [[nodiscard]] std::optional<Matrix> facet_rate(const Vector& x, const Vector& xdot) const;

    /// Constant field equal to the positive orthant up to positive row scaling
    /// and row order.
    [[nodiscard]] bool is_orthant() const;

private:
    int dim_ = 0;
    std::optional<Cone> constant_;
    HalfspaceMap halfspaces_;
    std::optional<TransportMap> transport_;
    std::optional<FacetRateMap> facet_rate_;
};

struct TransportCheck {
    bool ok = false;
    double inverse_defect = 0.0;  ///< max |Gamma(x1,x2) Gamma(x2,x1) - I|
    double worst_facet = 0.0;     ///< min over images of generators of <h_i(x2), .>
};

/// Checks that Gamma(x1,x2) maps the generators of K(x1) into K(x2) and that
/// Gamma(x1,x2) Gamma(x2,x1) = I within tol.
[[nodiscard]] TransportCheck check_transport(const ConeField& field, const Vector& x1,
                                             const Vector& x2, double tol = 1e-10);

}  // namespace dpos
