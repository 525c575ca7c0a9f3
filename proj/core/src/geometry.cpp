#include "vfp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "vfp/error.hpp"
#include "vfp/evaluation.hpp"
#include "vfp/parallel.hpp"
#include "vfp/random.hpp"

namespace vfp {

namespace {

constexpr double kOrderTolerance = 1e-8;

bool dominated(const ValueVector& a, const ValueVector& b, double tol) {
    return ((a - b).array() <= tol).all();
}

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double distance_to_segment(const Point2& p, const Point2& a, const Point2& b) {
    const Point2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

Point2 as_point(const ValueVector& v) {
    if (v.size() != 2) {
        throw Error(ErrorCode::DimensionUnsupported, "planar geometry needs 2-component points, got " +
                                                         std::to_string(v.size()));
    }
    return {v(0), v(1)};
}

bool rows_equal(const Policy& a, const Policy& b, std::size_t s) {
    const auto i = static_cast<Eigen::Index>(s);
    return a.probs().row(i) == b.probs().row(i);
}

}  // namespace

void AgreementSet::validate(std::size_t n_states) const {
    if (base.n_states() != n_states) {
        throw Error(ErrorCode::ShapeMismatch, "agreement base policy has the wrong number of states");
    }
    std::set<std::size_t> seen;
    for (std::size_t s : fixed_states) {
        if (s >= n_states) throw Error(ErrorCode::InvalidArgument, "fixed state out of range");
        if (!seen.insert(s).second) throw Error(ErrorCode::InvalidArgument, "fixed state listed twice");
    }
}

Policy AgreementSet::constrain(const Policy& policy) const {
    Matrix m = policy.probs();
    for (std::size_t s : fixed_states) {
        m.row(static_cast<Eigen::Index>(s)) = base.probs().row(static_cast<Eigen::Index>(s));
    }
    return Policy(std::move(m));
}

std::vector<std::size_t> AgreementSet::free_states(std::size_t n_states) const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < n_states; ++s) {
        if (std::find(fixed_states.begin(), fixed_states.end(), s) == fixed_states.end()) out.push_back(s);
    }
    return out;
}

double AffineSlice::residual(const ValueVector& point) const {
    const Vector offset = point - anchor;
    if (basis.cols() == 0) return offset.norm();
    const Vector coeffs = basis.colPivHouseholderQr().solve(offset);
    return (offset - basis * coeffs).norm();
}

double InterpolationCurve::rho(double mu, double gamma) const {
    if (constant) return 0.0;
    const double tail = gamma * (1.0 - mu);
    return mu - gamma * mu * (1.0 - mu) / (1.0 + omega * tail) * (beta / alpha);
}

Policy mix_policies(const Policy& p0, const Policy& p1, double mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) {
        throw Error(ErrorCode::MuOutOfRange, "mixture weight must lie in [0, 1]");
    }
    if (p0.n_states() != p1.n_states() || p0.n_actions() != p1.n_actions()) {
        throw Error(ErrorCode::ShapeMismatch, "cannot mix policies of different shapes");
    }
    if (mu == 0.0) return p0;
    if (mu == 1.0) return p1;
    return Policy(mu * p1.probs() + (1.0 - mu) * p0.probs());
}

LineSegment line_segment(const Mdp& mdp, const Policy& policy, std::size_t state) {
    require_shape(mdp, policy);
    if (state >= mdp.n_states()) throw Error(ErrorCode::InvalidArgument, "state out of range");

    std::vector<Policy> variants;
    std::vector<ValueVector> values;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        variants.push_back(policy.with_action(state, a));
        values.push_back(value_function(mdp, variants.back()));
    }
    // Variants differ by multiples of a resolvent column whose own-state entry
    // is at least one, so that component orders them.
    const auto s = static_cast<Eigen::Index>(state);
    std::size_t low = 0;
    std::size_t high = 0;
    for (std::size_t a = 1; a < values.size(); ++a) {
        if (values[a](s) < values[low](s)) low = a;
        if (values[a](s) > values[high](s)) high = a;
    }
    for (std::size_t a = 0; a < values.size(); ++a) {
        if (!dominated(values[low], values[a], kOrderTolerance) || !dominated(values[a], values[high], kOrderTolerance)) {
            throw Error(ErrorCode::OrderViolation,
                        "s-deterministic variants are not totally ordered at state " + std::to_string(state));
        }
    }
    return {variants[low], variants[high], values[low], values[high], state};
}

InterpolationCurve interpolation_curve(const Mdp& mdp, const Policy& p0, const Policy& p1, std::size_t state,
                                       std::size_t grid_size) {
    require_shape(mdp, p0);
    require_shape(mdp, p1);
    if (state >= mdp.n_states()) throw Error(ErrorCode::InvalidArgument, "state out of range");
    if (grid_size < 2) throw Error(ErrorCode::InvalidArgument, "grid_size must be at least 2");
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        if (s != state && !rows_equal(p0, p1, s)) {
            throw Error(ErrorCode::NotAgreeing, "policies also differ at state " + std::to_string(s));
        }
    }

    const ValueVector v0 = value_function(mdp, p0);
    const ValueVector v1 = value_function(mdp, p1);
    const ValueVector diff = v0 - v1;

    InterpolationCurve curve;
    if (max_abs(diff) < 1e-12) {
        curve.constant = true;
    } else {
        const InducedChain chain1 = induce(mdp, p1);
        const InducedChain chain0 = induce(mdp, p0);
        const auto s = static_cast<Eigen::Index>(state);
        // P^{pi1} - P^{pi0} = e_s w^T; only row s differs.
        const Vector w = (chain1.p_pi.row(s) - chain0.p_pi.row(s)).transpose();
        const Vector column = chain1.resolvent.col(s);
        Eigen::Index pivot = 0;
        column.cwiseAbs().maxCoeff(&pivot);
        curve.omega = w.dot(column);
        curve.beta = w.dot(diff);
        curve.alpha = diff(pivot) / column(pivot);
    }

    const double gamma = mdp.gamma();
    curve.rho_samples.reserve(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double mu = static_cast<double>(i) / static_cast<double>(grid_size - 1);
        curve.rho_samples.emplace_back(mu, curve.rho(mu, gamma));
    }
    return curve;
}

AffineSlice affine_slice(const Mdp& mdp, const AgreementSet& agreement) {
    require_shape(mdp, agreement.base);
    agreement.validate(mdp.n_states());
    const InducedChain chain = induce(mdp, agreement.base);
    const auto free = agreement.free_states(mdp.n_states());
    AffineSlice slice;
    slice.anchor = dense_solve(Matrix::Identity(chain.p_pi.rows(), chain.p_pi.rows()) - mdp.gamma() * chain.p_pi,
                               chain.r_pi);
    slice.basis.resize(static_cast<Eigen::Index>(mdp.n_states()), static_cast<Eigen::Index>(free.size()));
    for (std::size_t j = 0; j < free.size(); ++j) {
        slice.basis.col(static_cast<Eigen::Index>(j)) = chain.resolvent.col(static_cast<Eigen::Index>(free[j]));
    }
    return slice;
}

Policy sample_policy(const Mdp& mdp, std::uint64_t seed, std::size_t index) {
    return random_policy(mdp, derive_seed(seed, index));
}

std::vector<ValueVector> sample_values(const Mdp& mdp, std::size_t n, std::uint64_t seed,
                                       const std::optional<AgreementSet>& agreement) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be at least 1");
    if (agreement) {
        require_shape(mdp, agreement->base);
        agreement->validate(mdp.n_states());
    }
    std::vector<ValueVector> out(n);
    parallel_for(n, [&](std::size_t i) {
        Policy p = sample_policy(mdp, seed, i);
        if (agreement) p = agreement->constrain(p);
        out[i] = value_function(mdp, p);
    });
    return out;
}

std::vector<Vertex> polytope_vertices_det(const Mdp& mdp, std::size_t cap) {
    std::vector<Vertex> out;
    for (Policy& p : deterministic_policies(mdp, cap)) {
        ValueVector v = value_function(mdp, p);
        out.push_back({std::move(p), std::move(v)});
    }
    return out;
}

std::vector<Point2> hull_2d(const std::vector<ValueVector>& points) {
    std::vector<Point2> pts;
    pts.reserve(points.size());
    for (const auto& v : points) pts.push_back(as_point(v));
    if (pts.empty()) throw Error(ErrorCode::InvalidArgument, "hull of an empty point set");
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;

    // Andrew's monotone chain; `<= 0` pops collinear points.
    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double distance_to_polyline(const Point2& p, const std::vector<Point2>& polyline, bool closed) {
    if (polyline.empty()) return std::numeric_limits<double>::infinity();
    if (polyline.size() == 1) return (p - polyline.front()).norm();
    double best = std::numeric_limits<double>::infinity();
    const std::size_t edges = closed ? polyline.size() : polyline.size() - 1;
    for (std::size_t i = 0; i < edges; ++i) {
        best = std::min(best, distance_to_segment(p, polyline[i], polyline[(i + 1) % polyline.size()]));
    }
    return best;
}

bool point_in_hull(const ValueVector& point, const std::vector<Point2>& hull, double tolerance) {
    const Point2 p = as_point(point);
    if (hull.empty()) return false;
    if (hull.size() <= 2) return distance_to_polyline(p, hull, false) <= tolerance;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Point2& a = hull[i];
        const Point2& b = hull[(i + 1) % hull.size()];
        // Signed distance of p to the left of edge a->b.
        const double signed_distance = cross(a, b, p) / (b - a).norm();
        if (signed_distance < -tolerance) return false;
    }
    return true;
}

std::vector<ValueVector> boundary_semidet_sample(const Mdp& mdp, std::size_t state, std::size_t action, std::size_t n,
                                                 std::uint64_t seed) {
    if (state >= mdp.n_states() || action >= mdp.n_actions()) {
        throw Error(ErrorCode::InvalidArgument, "state or action out of range");
    }
    std::vector<ValueVector> out(n);
    parallel_for(n, [&](std::size_t i) {
        out[i] = value_function(mdp, sample_policy(mdp, seed, i).with_action(state, action));
    });
    return out;
}

std::vector<Policy> path_between(const Mdp& mdp, const Policy& p_from, const Policy& p_to) {
    require_shape(mdp, p_from);
    require_shape(mdp, p_to);
    std::vector<Policy> path{p_from};
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        if (rows_equal(path.back(), p_to, s)) continue;
        path.push_back(path.back().with_row(s, p_to.probs().row(static_cast<Eigen::Index>(s)).transpose()));
    }
    return path;
}

std::size_t slice_rank(const std::vector<ValueVector>& values) {
    if (values.size() < 2) throw Error(ErrorCode::InvalidArgument, "slice_rank needs at least two points");
    const auto dim = values.front().size();
    Matrix diffs(dim, static_cast<Eigen::Index>(values.size() - 1));
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i].size() != dim) throw Error(ErrorCode::ShapeMismatch, "points of different dimension");
        diffs.col(static_cast<Eigen::Index>(i - 1)) = values[i] - values.front();
    }
    const Vector sv = diffs.jacobiSvd().singularValues();
    if (sv.size() == 0 || sv(0) <= 1e-12) return 0;
    return static_cast<std::size_t>((sv.array() > 1e-8 * sv(0)).count());
}

std::vector<Point2> cloud_boundary_2d(const std::vector<ValueVector>& points, std::size_t bins) {
    if (points.empty() || bins == 0) return {};
    std::vector<Point2> pts;
    pts.reserve(points.size());
    Point2 centroid = Point2::Zero();
    for (const auto& v : points) {
        pts.push_back(as_point(v));
        centroid += pts.back();
    }
    centroid /= static_cast<double>(pts.size());

    std::vector<double> radius(bins, -1.0);
    std::vector<std::size_t> owner(bins, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point2 d = pts[i] - centroid;
        const double angle = std::atan2(d.y(), d.x()) + std::numbers::pi;  // [0, 2pi]
        auto bin = static_cast<std::size_t>(angle / (2.0 * std::numbers::pi) * static_cast<double>(bins));
        bin = std::min(bin, bins - 1);
        const double r = d.norm();
        if (r > radius[bin]) {
            radius[bin] = r;
            owner[bin] = i;
        }
    }
    std::vector<Point2> out;
    for (std::size_t b = 0; b < bins; ++b) {
        if (radius[b] >= 0.0) out.push_back(pts[owner[b]]);
    }
    return out;
}

}  // namespace vfp
