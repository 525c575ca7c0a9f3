#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "vfp/linalg.hpp"
#include "vfp/mdp.hpp"

namespace vfp {

/// The class of policies agreeing with `base` on `fixed_states`.
struct AgreementSet {
    Policy base;
    std::vector<std::size_t> fixed_states;

    /// Throws InvalidArgument on out-of-range or repeated states.
    void validate(std::size_t n_states) const;
    /// Copy of `policy` with the fixed rows overwritten by the base rows.
    Policy constrain(const Policy& policy) const;
    std::vector<std::size_t> free_states(std::size_t n_states) const;
};

/// anchor + span(basis columns)
struct AffineSlice {
    ValueVector anchor;
    Matrix basis;  // |S| x (|S| - k)

    /// Least-squares distance from `point` to the affine subspace.
    double residual(const ValueVector& point) const;
};

struct LineSegment {
    Policy pi_low;
    Policy pi_high;
    ValueVector v_low;
    ValueVector v_high;
    std::size_t state;
};

/// Samples of rho on a uniform mu-grid where
///   f_v(mu p1 + (1 - mu) p0) = rho(mu) f_v(p1) + (1 - rho(mu)) f_v(p0).
struct InterpolationCurve {
    std::vector<std::pair<double, double>> rho_samples;
    double alpha = 0.0;
    double beta = 0.0;
    double omega = 0.0;
    /// Set when f_v(p0) == f_v(p1); rho is then identically zero.
    bool constant = false;
    /// Evaluates the closed form at mu (0 when constant).
    double rho(double mu, double gamma) const;
};

/// mu * p1 + (1 - mu) * p0, rowwise. Throws MuOutOfRange outside [0, 1].
Policy mix_policies(const Policy& p0, const Policy& p1, double mu);

/// Brackets f_v over policies agreeing with `policy` off `state` by the
/// minimal and maximal s-deterministic variants.
LineSegment line_segment(const Mdp& mdp, const Policy& policy, std::size_t state);

/// Closed-form rho for two policies that may differ only at `state`.
/// grid_size >= 2 points mu = i / (grid_size - 1).
InterpolationCurve interpolation_curve(const Mdp& mdp, const Policy& p0, const Policy& p1, std::size_t state,
                                       std::size_t grid_size);

AffineSlice affine_slice(const Mdp& mdp, const AgreementSet& agreement);

/// Policy sample number `index` of the stream identified by `seed`; used by
/// every sampler so results are independent of the worker count.
Policy sample_policy(const Mdp& mdp, std::uint64_t seed, std::size_t index);

/// Values of n flat-Dirichlet policies (constrained to the agreement class
/// when given), evaluated exactly.
std::vector<ValueVector> sample_values(const Mdp& mdp, std::size_t n, std::uint64_t seed,
                                       const std::optional<AgreementSet>& agreement = std::nullopt);

struct Vertex {
    Policy policy;
    ValueVector value;
};

/// Values of all deterministic policies, lexicographic policy order.
std::vector<Vertex> polytope_vertices_det(const Mdp& mdp, std::size_t cap = kDefaultEnumerationCap);

using Point2 = Eigen::Vector2d;

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
/// Throws DimensionUnsupported for non-2-D input.
std::vector<Point2> hull_2d(const std::vector<ValueVector>& points);

/// Inside or within `tolerance` of the hull boundary.
bool point_in_hull(const ValueVector& point, const std::vector<Point2>& hull, double tolerance = 1e-9);

/// Euclidean distance from p to a polyline (closed: last vertex joins the first).
double distance_to_polyline(const Point2& p, const std::vector<Point2>& polyline, bool closed);

/// Values of n random policies in D_{s,a}: action `action` is taken
/// deterministically at `state`, the other rows are flat-Dirichlet.
std::vector<ValueVector> boundary_semidet_sample(const Mdp& mdp, std::size_t state, std::size_t action,
                                                 std::size_t n, std::uint64_t seed);

/// Sequence from p_from to p_to switching one state's row at a time, in
/// state order; states where the rows already agree are skipped.
std::vector<Policy> path_between(const Mdp& mdp, const Policy& p_from, const Policy& p_to);

/// Numerical rank of {v_i - v_0} (singular values above 1e-8 of the largest).
std::size_t slice_rank(const std::vector<ValueVector>& values);

/// Outer boundary of a 2-D point cloud by angular sweep around its centroid:
/// the farthest point in each of `bins` equal sectors, in angular order.
std::vector<Point2> cloud_boundary_2d(const std::vector<ValueVector>& points, std::size_t bins);

}  // namespace vfp
