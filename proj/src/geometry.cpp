#include "dpos/geometry.hpp"

#include "dpos/error.hpp"

#include <algorithm>
#include <sstream>

namespace dpos {

namespace {

constexpr double kRayTol = 1e-10;
constexpr double kZeroRatioTol = 1e-13;
constexpr double kMembershipTol = 1e-12;
constexpr double kDistanceFloor = 1e-14;

int numeric_rank(const Matrix& a, double rel_tol = 1e-10) {
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++rank;
    return rank;
}

// Calls fn(indices) for every size-r subset of {0..k-1}.
template <typename Fn>
void for_each_subset(int k, int r, Fn&& fn) {
    std::vector<int> idx(r);
    for (int i = 0; i < r; ++i) idx[i] = i;
    if (r > k) return;
    while (true) {
        fn(idx);
        int i = r - 1;
        while (i >= 0 && idx[i] == k - r + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
    }
}

Matrix enumerate_extreme_rays(const Matrix& h) {
    const int n = static_cast<int>(h.cols());
    const int k = static_cast<int>(h.rows());
    std::vector<Vector> rays;

    auto accept = [&](Vector v) {
        const double norm = v.norm();
        if (!(norm > 0.0)) return;
        v /= norm;
        const Vector vals = h * v;
        bool pos = true, neg = true;
        for (int i = 0; i < k; ++i) {
            const double scale = kRayTol * h.row(i).norm();
            if (vals(i) < -scale) pos = false;
            if (vals(i) > scale) neg = false;
        }
        if (pos == neg) return;  // infeasible, or in the lineality space
        if (neg) v = -v;
        for (const auto& r : rays)
            if (r.dot(v) > 1.0 - 1e-12) return;
        rays.push_back(v);
    };

    if (n == 1) {
        accept(Vector::Ones(1));
    } else {
        for_each_subset(k, n - 1, [&](const std::vector<int>& idx) {
            Matrix sub(n - 1, n);
            for (int i = 0; i < n - 1; ++i) sub.row(i) = h.row(idx[i]);
            Eigen::JacobiSVD<Matrix> svd(sub, Eigen::ComputeFullV);
            const auto& s = svd.singularValues();
            if (s(n - 2) <= 1e-10 * std::max(1.0, s(0))) return;
            accept(svd.matrixV().col(n - 1));
        });
    }

    Matrix g(n, static_cast<Eigen::Index>(rays.size()));
    for (std::size_t j = 0; j < rays.size(); ++j) g.col(static_cast<Eigen::Index>(j)) = rays[j];
    return g;
}

}  // namespace

std::string validate_cone(const Matrix& h, const Matrix& g, double tol) {
    const int n = static_cast<int>(h.cols());
    if (n == 0 || h.rows() == 0) return "empty cone";
    if (g.rows() != n) return "generator dimension mismatch";
    if (!h.allFinite() || !g.allFinite()) return "non-finite entries";
    if (numeric_rank(h) < n) return "not pointed: halfspaces do not have full rank";
    if (g.cols() < n || numeric_rank(g) < n) return "not solid: generators do not span the space";
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        const double scale = h.row(i).norm();
        int tight = 0;
        Matrix tight_set(n, 0);
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
            const double val = h.row(i).dot(g.col(j));
            if (val < -tol * scale * g.col(j).norm()) {
                std::ostringstream os;
                os << "generator " << j << " violates halfspace " << i;
                return os.str();
            }
            if (std::abs(val) <= tol * scale * g.col(j).norm()) {
                tight_set.conservativeResize(n, tight + 1);
                tight_set.col(tight++) = g.col(j);
            }
        }
        if (n > 1 && numeric_rank(tight_set) < n - 1) {
            std::ostringstream os;
            os << "halfspace " << i << " is redundant (tight on fewer than n-1 generators)";
            return os.str();
        }
    }
    return {};
}

Cone::Cone(Matrix halfspaces, Matrix generators)
    : halfspaces_(std::move(halfspaces)), generators_(std::move(generators)) {}

Cone Cone::from_halfspaces(const Matrix& halfspaces) {
    if (halfspaces.rows() == 0 || halfspaces.cols() == 0)
        throw Error(ErrorCode::InvalidCone, "cone needs at least one halfspace");
    if (!halfspaces.allFinite())
        throw Error(ErrorCode::InvalidCone, "non-finite halfspace entries");
    if (numeric_rank(halfspaces) < halfspaces.cols())
        throw Error(ErrorCode::InvalidCone, "cone is not pointed: halfspaces are rank deficient");
    Matrix g = enumerate_extreme_rays(halfspaces);
    if (auto msg = validate_cone(halfspaces, g); !msg.empty())
        throw Error(ErrorCode::InvalidCone, msg);
    return Cone(halfspaces, std::move(g));
}

Cone Cone::from_generators(const Matrix& generators) {
    const Eigen::Index n = generators.rows();
    if (n == 0 || generators.cols() < n)
        throw Error(ErrorCode::InvalidCone, "not enough generators for a solid cone");
    Matrix g = generators;
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        const double norm = g.col(j).norm();
        if (!(norm > 0.0)) throw Error(ErrorCode::InvalidCone, "zero generator");
        g.col(j) /= norm;
    }
    if (n == 2 && g.cols() > 2) {
        // keep the pair spanning all the others
        bool found = false;
        for (Eigen::Index a = 0; a < g.cols() && !found; ++a) {
            for (Eigen::Index b = a + 1; b < g.cols() && !found; ++b) {
                Matrix pair(2, 2);
                pair << g.col(a), g.col(b);
                if (std::abs(pair.determinant()) < 1e-12) continue;
                const Matrix coeffs = pair.inverse() * g;
                if ((coeffs.array() >= -1e-12).all()) {
                    g = pair;
                    found = true;
                }
            }
        }
        if (!found) throw Error(ErrorCode::InvalidCone, "generators do not span a pointed cone");
    }
    if (g.cols() != n)
        throw Error(ErrorCode::InvalidInput,
                    "halfspace reconstruction supports simplicial or 2-D generator sets only");
    Eigen::FullPivLU<Matrix> lu(g);
    if (!lu.isInvertible()) throw Error(ErrorCode::InvalidCone, "generators are not independent");
    Matrix h = lu.inverse();
    for (Eigen::Index i = 0; i < h.rows(); ++i) h.row(i) /= h.row(i).norm();
    if (auto msg = validate_cone(h, g); !msg.empty()) throw Error(ErrorCode::InvalidCone, msg);
    return Cone(std::move(h), std::move(g));
}

Cone Cone::orthant(int dim) {
    if (dim <= 0) throw Error(ErrorCode::InvalidInput, "orthant dimension must be positive");
    return Cone(Matrix::Identity(dim, dim), Matrix::Identity(dim, dim));
}

Vector Cone::interior_probe() const {
    Vector sum = generators_.rowwise().sum();
    return sum / sum.norm();
}

std::vector<int> Cone::facet_generators(int facet, double tol) const {
    std::vector<int> out;
    const double scale = halfspaces_.row(facet).norm();
    for (Eigen::Index j = 0; j < generators_.cols(); ++j)
        if (std::abs(halfspaces_.row(facet).dot(generators_.col(j))) <= tol * scale)
            out.push_back(static_cast<int>(j));
    return out;
}

Vector Cone::evaluate(const Vector& v) const {
    if (v.size() != dim()) throw Error(ErrorCode::InvalidInput, "vector dimension mismatch");
    return halfspaces_ * v;
}

bool cone_contains(const Cone& cone, const Vector& v, bool strict, double tol) {
    const Vector vals = cone.evaluate(v);
    const double slack = tol * v.norm();
    if (strict) return (vals.array() > slack).all();
    return (vals.array() >= -slack).all();
}

HilbertBounds hilbert_bounds(const Cone& cone, const Vector& dx, const Vector& dy) {
    const Vector a = cone.evaluate(dx);
    const Vector b = cone.evaluate(dy);
    if (dy.norm() == 0.0) throw Error(ErrorCode::InvalidInput, "hilbert bounds need dy != 0");
    if (!a.allFinite() || !b.allFinite())
        throw Error(ErrorCode::InvalidInput, "non-finite tangent vector");

    HilbertBounds out{0.0, kInf};
    bool any_ratio = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double hn = cone.halfspaces().row(i).norm();
        const double za = kZeroRatioTol * hn * dx.norm();
        const double zb = kZeroRatioTol * hn * dy.norm();
        if (a(i) < -std::max(za, kMembershipTol * hn * dx.norm()))
            throw Error(ErrorCode::OutsideCone, "dx is outside the cone");
        if (b(i) < -std::max(zb, kMembershipTol * hn * dy.norm()))
            throw Error(ErrorCode::OutsideCone, "dy is outside the cone");
        const double ai = a(i) <= za ? 0.0 : a(i);
        const double bi = b(i) <= zb ? 0.0 : b(i);
        if (bi == 0.0) {
            if (ai > 0.0) out.M = kInf;
            continue;
        }
        const double ratio = ai / bi;
        any_ratio = true;
        out.M = std::max(out.M, ratio);
        out.m = std::min(out.m, ratio);
    }
    if (!any_ratio) throw Error(ErrorCode::InvalidInput, "dy lies in every facet (zero vector)");
    return out;
}

HilbertDistance hilbert_distance(const Cone& cone, const Vector& dx, const Vector& dy) {
    if (dx.norm() == 0.0) throw Error(ErrorCode::InvalidInput, "hilbert distance needs dx != 0");
    const HilbertBounds b = hilbert_bounds(cone, dx, dy);
    HilbertDistance d{0.0, b.M, b.m};
    if (!std::isfinite(b.M) || b.m <= 0.0) {
        d.value = kInf;
    } else {
        d.value = std::log(b.M / b.m);
        if (d.value < kDistanceFloor) d.value = 0.0;
    }
    return d;
}

double projective_diameter(const Cone& cone, const std::vector<Vector>& samples) {
    if (samples.empty()) throw Error(ErrorCode::InvalidInput, "projective diameter of empty set");
    double diam = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            diam = std::max(diam, hilbert_distance(cone, samples[i], samples[j]).value);
            if (!std::isfinite(diam)) return kInf;
        }
    }
    return diam;
}

double contraction_ratio(double diameter) {
    if (std::isnan(diameter) || diameter < 0.0)
        throw Error(ErrorCode::InvalidInput, "diameter must be nonnegative");
    if (!std::isfinite(diameter)) return 1.0;
    return std::tanh(diameter / 4.0);
}

ConeField ConeField::constant(Cone cone) {
    ConeField f;
    f.dim_ = cone.dim();
    f.constant_ = std::move(cone);
    return f;
}

ConeField ConeField::state_dependent(int dim, HalfspaceMap halfspaces,
                                     std::optional<TransportMap> transport,
                                     std::optional<FacetRateMap> facet_rate) {
    if (!halfspaces) throw Error(ErrorCode::InvalidInput, "cone field needs a halfspace map");
    ConeField f;
    f.dim_ = dim;
    f.halfspaces_ = std::move(halfspaces);
    f.transport_ = std::move(transport);
    f.facet_rate_ = std::move(facet_rate);
    return f;
}

Matrix ConeField::halfspaces_at(const Vector& x) const {
    if (constant_) return constant_->halfspaces();
    if (!halfspaces_) throw Error(ErrorCode::InvalidCone, "empty cone field");
    Matrix h = halfspaces_(x);
    if (h.cols() != dim_) throw Error(ErrorCode::InvalidCone, "cone field dimension mismatch");
    return h;
}

Cone ConeField::cone_at(const Vector& x) const {
    if (constant_) return *constant_;
    return Cone::from_halfspaces(halfspaces_at(x));
}

Matrix ConeField::transport(const Vector& x1, const Vector& x2) const {
    if (constant_) return Matrix::Identity(dim_, dim_);
    if (!transport_)
        throw Error(ErrorCode::MissingTransport,
                    "cone field has no transport map; the model must supply one");
    return (*transport_)(x1, x2);
}

std::optional<Matrix> ConeField::facet_rate(const Vector& x, const Vector& xdot) const {
    if (constant_) return Matrix::Zero(constant_->num_facets(), dim_);
    if (facet_rate_) return (*facet_rate_)(x, xdot);
    return std::nullopt;
}

bool ConeField::is_orthant() const {
    if (!constant_) return false;
    const Matrix& h = constant_->halfspaces();
    if (h.rows() != h.cols()) return false;
    std::vector<bool> seen(static_cast<std::size_t>(h.cols()), false);
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        Eigen::Index hit = -1;
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
            if (h(i, j) == 0.0) continue;
            if (h(i, j) < 0.0 || hit >= 0) return false;
            hit = j;
        }
        if (hit < 0 || seen[static_cast<std::size_t>(hit)]) return false;
        seen[static_cast<std::size_t>(hit)] = true;
    }
    return true;
}

TransportCheck check_transport(const ConeField& field, const Vector& x1, const Vector& x2,
                               double tol) {
    TransportCheck out;
    const Matrix fwd = field.transport(x1, x2);
    const Matrix bwd = field.transport(x2, x1);
    const int n = field.dim();
    out.inverse_defect = (fwd * bwd - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();

    const Cone k1 = field.cone_at(x1);
    const Cone k2 = field.cone_at(x2);
    double worst = kInf;
    auto scan = [&worst](const Cone& target, const Matrix& images) {
        for (Eigen::Index j = 0; j < images.cols(); ++j) {
            const Vector v = images.col(j) / images.col(j).norm();
            for (Eigen::Index i = 0; i < target.num_facets(); ++i) {
                const double hn = target.halfspaces().row(i).norm();
                worst = std::min(worst, target.halfspaces().row(i).dot(v) / hn);
            }
        }
    };
    scan(k2, fwd * k1.generators());
    scan(k1, bwd * k2.generators());
    out.worst_facet = worst;
    out.ok = out.inverse_defect <= tol && worst >= -tol;
    return out;
}

}  // namespace dpos
