#include "vfp/verification.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vfp/error.hpp"
#include "vfp/evaluation.hpp"
#include "vfp/geometry.hpp"
#include "vfp/parallel.hpp"
#include "vfp/random.hpp"

namespace vfp {

namespace {

// Sample one index from a probability row.
std::size_t draw(Rng& rng, const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs(i);
        if (u < acc) return static_cast<std::size_t>(i);
    }
    // Rounding left u above the last partial sum; take the last positive entry.
    for (Eigen::Index i = probs.size(); i-- > 0;) {
        if (probs(i) > 0.0) return static_cast<std::size_t>(i);
    }
    return 0;
}

struct Instance {
    std::string name;
    Mdp mdp;
    std::uint64_t seed;
};

std::string describe(const Mdp& mdp, std::uint64_t seed) {
    std::ostringstream os;
    os << "random(seed=" << seed << ",S=" << mdp.n_states() << ",A=" << mdp.n_actions() << ",gamma=" << mdp.gamma()
       << ")";
    return os.str();
}

std::vector<Instance> build_instances(const SuiteOptions& options, bool two_states_only) {
    std::vector<Instance> out;
    if (options.include_fixtures) {
        for (FixtureId id : all_fixtures()) {
            out.push_back({"fixture:" + std::string(fixture_name(id)), builtin_fixture(id),
                           derive_seed(options.seed, 0xf1, static_cast<std::uint64_t>(id))});
        }
    }
    for (std::size_t t = 0; t < options.trials; ++t) {
        const std::uint64_t seed = derive_seed(options.seed, t);
        Rng rng(seed);
        const std::size_t S = two_states_only ? 2 : 2 + static_cast<std::size_t>(rng.next() % 3);
        const std::size_t A = 2 + static_cast<std::size_t>(rng.next() % 2);
        const double gamma = rng.uniform(0.5, 0.95);
        Mdp mdp = random_mdp(S, A, gamma, rng.next());
        out.push_back({describe(mdp, seed), std::move(mdp), derive_seed(seed, 0x5eed)});
    }
    return out;
}

// Random policy that agrees with `base` everywhere except at `state`.
Policy agreeing_except(const Policy& base, std::size_t state, std::uint64_t seed) {
    const Policy other = random_policy(base.n_states(), base.n_actions(), seed);
    return base.with_row(state, other.probs().row(static_cast<Eigen::Index>(state)).transpose());
}

// Distance of p to segment [a, b] in R^n, relative to the segment length when
// it is at least 1e-12.
double segment_deviation(const ValueVector& p, const ValueVector& a, const ValueVector& b) {
    const Vector ab = b - a;
    const double len = ab.norm();
    if (len < 1e-12) return (p - a).norm();
    const double t = (p - a).dot(ab) / (len * len);
    const double along = std::clamp(t, 0.0, 1.0);
    return (p - (a + along * ab)).norm() / len;
}

double order_violation(const ValueVector& low, const ValueVector& x, const ValueVector& high) {
    return std::max({0.0, (low - x).maxCoeff(), (x - high).maxCoeff()});
}

// Probability rows on the action simplex with entries in {0, 1/grid, ..., 1}.
std::vector<Vector> simplex_lattice(std::size_t n_actions, std::size_t grid) {
    std::vector<Vector> rows;
    std::vector<std::size_t> parts(n_actions, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t j, std::size_t left) {
        if (j + 1 == n_actions) {
            parts[j] = left;
            Vector row(static_cast<Eigen::Index>(n_actions));
            for (std::size_t a = 0; a < n_actions; ++a) row(static_cast<Eigen::Index>(a)) = static_cast<double>(parts[a]) / static_cast<double>(grid);
            rows.push_back(std::move(row));
            return;
        }
        for (std::size_t k = 0; k <= left; ++k) {
            parts[j] = k;
            rec(j + 1, left - k);
        }
    };
    rec(0, grid);
    return rows;
}

// Samples of one semi-deterministic family, ordered along its principal axis.
std::vector<Point2> family_polyline(const std::vector<ValueVector>& values) {
    Point2 mean = Point2::Zero();
    for (const auto& v : values) mean += Point2(v(0), v(1));
    mean /= static_cast<double>(values.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& v : values) {
        const Point2 d = Point2(v(0), v(1)) - mean;
        cov += d * d.transpose();
    }
    const Point2 axis = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvectors().col(1);
    std::vector<Point2> pts;
    pts.reserve(values.size());
    for (const auto& v : values) pts.emplace_back(v(0), v(1));
    std::sort(pts.begin(), pts.end(), [&](const Point2& a, const Point2& b) { return a.dot(axis) < b.dot(axis); });
    return pts;
}

using InstanceCheck = std::function<double(const Instance&)>;

CheckReport run_instances(std::string name, const std::vector<Instance>& instances, double tolerance,
                          const InstanceCheck& check) {
    std::vector<double> deviations(instances.size());
    parallel_for(instances.size(), [&](std::size_t i) { deviations[i] = check(instances[i]); });
    CheckReport report;
    report.check_name = std::move(name);
    for (std::size_t i = 0; i < instances.size(); ++i) report.record(instances[i].name, deviations[i], tolerance);
    return report;
}

// Policies of one instance's random stream.
Policy nth_policy(const Instance& inst, std::uint64_t k) { return random_policy(inst.mdp, derive_seed(inst.seed, k)); }

std::vector<std::size_t> random_subset(Rng& rng, std::size_t n, std::size_t k) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next() % (n - i));
        std::swap(all[i], all[j]);
    }
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

double line_check(const Instance& inst) {
    const Mdp& mdp = inst.mdp;
    Rng rng(inst.seed);
    const Policy base = nth_policy(inst, 1);
    const std::size_t state = static_cast<std::size_t>(rng.next() % mdp.n_states());
    const LineSegment seg = line_segment(mdp, base, state);
    if (!seg.pi_low.is_deterministic_at(state) || !seg.pi_high.is_deterministic_at(state)) {
        return std::numeric_limits<double>::infinity();
    }
    double worst = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double mu = i / 20.0;
        const ValueVector v = value_function(mdp, mix_policies(seg.pi_low, seg.pi_high, mu));
        worst = std::max({worst, segment_deviation(v, seg.v_low, seg.v_high),
                          order_violation(seg.v_low, v, seg.v_high)});
    }
    // Arbitrary members of the class also stay on the segment.
    for (std::uint64_t k = 0; k < 5; ++k) {
        const ValueVector v = value_function(mdp, agreeing_except(base, state, derive_seed(inst.seed, 100 + k)));
        worst = std::max({worst, segment_deviation(v, seg.v_low, seg.v_high),
                          order_violation(seg.v_low, v, seg.v_high)});
    }
    return worst;
}

double order_check(const Instance& inst) {
    Rng rng(inst.seed);
    const std::size_t state = static_cast<std::size_t>(rng.next() % inst.mdp.n_states());
    const Policy p0 = nth_policy(inst, 1);
    const Policy p1 = agreeing_except(p0, state, derive_seed(inst.seed, 2));
    const ValueVector v0 = value_function(inst.mdp, p0);
    const ValueVector v1 = value_function(inst.mdp, p1);
    return std::max(0.0, std::min((v0 - v1).maxCoeff(), (v1 - v0).maxCoeff()));
}

double rho_check(const Instance& inst) {
    const Mdp& mdp = inst.mdp;
    Rng rng(inst.seed);
    const std::size_t state = static_cast<std::size_t>(rng.next() % mdp.n_states());
    const Policy p0 = nth_policy(inst, 1);
    const Policy p1 = agreeing_except(p0, state, derive_seed(inst.seed, 2));
    const InterpolationCurve curve = interpolation_curve(mdp, p0, p1, state, 101);
    const ValueVector v0 = value_function(mdp, p0);
    const ValueVector v1 = value_function(mdp, p1);
    const Vector diff = v1 - v0;
    const double spread = max_abs(diff);

    double worst = 0.0;
    double previous = -std::numeric_limits<double>::infinity();
    for (const auto& [mu, rho] : curve.rho_samples) {
        const ValueVector v = value_function(mdp, mix_policies(p0, p1, mu));
        if (curve.constant) {
            worst = std::max(worst, max_abs(v - v0));
            continue;
        }
        for (Eigen::Index i = 0; i < diff.size(); ++i) {
            if (std::abs(diff(i)) < 1e-8 * spread) continue;
            worst = std::max(worst, std::abs(rho - (v(i) - v0(i)) / diff(i)));
        }
        if (spread > 1e-8 && rho <= previous) {
            worst = std::max(worst, std::numeric_limits<double>::infinity());
        }
        previous = rho;
    }
    return worst;
}

double slice_check(const Instance& inst, std::size_t samples) {
    const Mdp& mdp = inst.mdp;
    Rng rng(inst.seed);
    const std::size_t k = static_cast<std::size_t>(rng.next() % (mdp.n_states() + 1));
    const AgreementSet agreement{nth_policy(inst, 1), random_subset(rng, mdp.n_states(), k)};
    const AffineSlice slice = affine_slice(mdp, agreement);
    double worst = 0.0;
    for (const auto& v : sample_values(mdp, samples, derive_seed(inst.seed, 3), agreement)) {
        worst = std::max(worst, slice.residual(v));
    }
    return worst;
}

// Largest relative residual of projecting the columns of `b` onto span(a).
double projection_gap(const Matrix& a, const Matrix& b) {
    if (b.cols() == 0) return 0.0;
    const auto qr = a.colPivHouseholderQr();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
        const Vector col = b.col(j);
        const Vector fitted = a * qr.solve(col);
        worst = std::max(worst, (col - fitted).norm() / std::max(col.norm(), 1e-300));
    }
    return worst;
}

double span_check(const Instance& inst) {
    const Mdp& mdp = inst.mdp;
    Rng rng(inst.seed);
    const std::size_t k = static_cast<std::size_t>(rng.next() % mdp.n_states());
    const AgreementSet agreement{nth_policy(inst, 1), random_subset(rng, mdp.n_states(), k)};
    const Policy other = agreement.constrain(nth_policy(inst, 2));
    const Matrix b1 = affine_slice(mdp, agreement).basis;
    const Matrix b2 = affine_slice(mdp, AgreementSet{other, agreement.fixed_states}).basis;
    return std::max(projection_gap(b1, b2), projection_gap(b2, b1));
}

double zeros_check(const Instance& inst) {
    const Mdp& mdp = inst.mdp;
    Rng rng(inst.seed);
    const std::size_t k = 1 + static_cast<std::size_t>(rng.next() % mdp.n_states());
    const AgreementSet agreement{nth_policy(inst, 1), random_subset(rng, mdp.n_states(), k)};
    const Policy other = agreement.constrain(nth_policy(inst, 2));
    const InducedChain c1 = induce(mdp, agreement.base);
    const InducedChain c2 = induce(mdp, other);
    double worst = 0.0;
    for (std::size_t s : agreement.fixed_states) {
        const auto i = static_cast<Eigen::Index>(s);
        worst = std::max(worst, std::abs(c1.r_pi(i) - c2.r_pi(i)));
        worst = std::max(worst, (c1.p_pi.row(i) - c2.p_pi.row(i)).cwiseAbs().maxCoeff());
    }
    return worst;
}

double hull_check(const Instance& inst, std::size_t samples) {
    std::vector<ValueVector> vertices;
    for (auto& v : polytope_vertices_det(inst.mdp)) vertices.push_back(std::move(v.value));
    const auto hull = hull_2d(vertices);
    double worst = 0.0;
    for (const auto& v : sample_values(inst.mdp, samples, inst.seed)) {
        if (point_in_hull(v, hull, 0.0)) continue;
        // Outside distance to the hull polygon.
        worst = std::max(worst, distance_to_polyline({v(0), v(1)}, hull, true));
    }
    return worst;
}

double rank_check(const Instance& inst, std::size_t samples) {
    const Mdp& mdp = inst.mdp;
    Rng rng(inst.seed);
    const std::size_t k = static_cast<std::size_t>(rng.next() % (mdp.n_states() + 1));
    const AgreementSet agreement{nth_policy(inst, 1), random_subset(rng, mdp.n_states(), k)};
    const std::size_t rank = slice_rank(sample_values(mdp, samples, derive_seed(inst.seed, 3), agreement));
    const std::size_t bound = mdp.n_states() - k;
    return rank > bound ? static_cast<double>(rank - bound) : 0.0;
}

double path_check(const Instance& inst) {
    const Mdp& mdp = inst.mdp;
    const auto path = path_between(mdp, nth_policy(inst, 1), nth_policy(inst, 2));
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const ValueVector a = value_function(mdp, path[i]);
        const ValueVector b = value_function(mdp, path[i + 1]);
        for (int j = 0; j <= 20; ++j) {
            const ValueVector v = value_function(mdp, mix_policies(path[i], path[i + 1], j / 20.0));
            worst = std::max(worst, segment_deviation(v, a, b));
        }
    }
    return worst;
}

double dominance_check(const Instance& inst, std::size_t samples) {
    const ValueVector best = optimal_value(inst.mdp).values;
    double worst = 0.0;
    for (const auto& v : sample_values(inst.mdp, samples, inst.seed)) {
        worst = std::max(worst, (v - best).maxCoeff());
    }
    return worst;
}

// Central differences of f_v along a policy-space direction at two scales,
// against the analytic directional derivative
//   dV = (I - gamma P)^{-1} (dr + gamma dP V).
double smooth_check(const Instance& inst, double step) {
    const Mdp& mdp = inst.mdp;
    const Policy p = mix_policies(nth_policy(inst, 1), Policy::uniform(mdp.n_states(), mdp.n_actions()), 0.5);
    const Policy q = nth_policy(inst, 2);
    const Matrix direction = q.probs() - p.probs();
    const InducedChain chain = induce(mdp, p);
    const ValueVector v = chain.resolvent * chain.r_pi;
    const Matrix dm = policy_matrix(Policy::uniform(mdp.n_states(), mdp.n_actions()));  // shape template
    Matrix d_block = Matrix::Zero(dm.rows(), dm.cols());
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());
    for (Eigen::Index s = 0; s < direction.rows(); ++s) d_block.block(s, s * A, 1, A) = direction.row(s);
    const Vector exact =
        chain.resolvent * (d_block * mdp.rewards() + mdp.gamma() * (d_block * mdp.transitions()) * v);
    const double scale = std::max(exact.norm(), 1e-12);

    double worst = 0.0;
    for (double h : {step, step / 2.0}) {
        // p +- h * direction stays on the simplex because p is interior and
        // h is far below its smallest entry.
        const ValueVector plus = value_function(mdp, Policy(p.probs() + h * direction));
        const ValueVector minus = value_function(mdp, Policy(p.probs() - h * direction));
        const Vector fd = (plus - minus) / (2.0 * h);
        worst = std::max(worst, std::abs(fd.norm() / scale - 1.0));
        worst = std::max(worst, (fd - exact).norm() / scale);
    }
    return worst;
}

double bounded_check(const Instance& inst, std::size_t samples) {
    const double bound = inst.mdp.value_bound();
    double worst = 0.0;
    for (const auto& v : sample_values(inst.mdp, samples, inst.seed)) worst = std::max(worst, max_abs(v) - bound);
    return std::max(worst, 0.0);
}

}  // namespace

void OracleConfig::validate() const {
    if (neumann_terms == 0 || mc_horizon == 0 || mc_episodes == 0 || !(fd_step > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "oracle configuration values must be positive");
    }
}

McEstimate mc_value_oracle(const Mdp& mdp, const Policy& policy, const OracleConfig& config) {
    require_shape(mdp, policy);
    config.validate();
    const std::size_t S = mdp.n_states();
    McEstimate out;
    out.estimate = ValueVector::Zero(static_cast<Eigen::Index>(S));
    out.standard_error = Vector::Zero(static_cast<Eigen::Index>(S));
    out.truncation_bound = std::pow(mdp.gamma(), static_cast<double>(config.mc_horizon)) * mdp.value_bound();

    parallel_for(S, [&](std::size_t start) {
        Rng rng(derive_seed(config.seed, start));
        // Welford accumulation of the per-episode return.
        double mean = 0.0;
        double m2 = 0.0;
        for (std::size_t e = 0; e < config.mc_episodes; ++e) {
            std::size_t s = start;
            double ret = 0.0;
            double discount = 1.0;
            for (std::size_t t = 0; t < config.mc_horizon; ++t) {
                const std::size_t a = draw(rng, policy.probs().row(static_cast<Eigen::Index>(s)));
                ret += discount * mdp.reward(s, a);
                s = draw(rng, mdp.transitions().row(static_cast<Eigen::Index>(mdp.index(s, a))));
                discount *= mdp.gamma();
            }
            const double delta = ret - mean;
            mean += delta / static_cast<double>(e + 1);
            m2 += delta * (ret - mean);
        }
        const auto n = static_cast<double>(config.mc_episodes);
        const auto i = static_cast<Eigen::Index>(start);
        out.estimate(i) = mean;
        out.standard_error(i) = config.mc_episodes > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
    });
    return out;
}

ValueVector neumann_value_oracle(const Mdp& mdp, const Policy& policy, const OracleConfig& config) {
    require_shape(mdp, policy);
    config.validate();
    const Matrix step = mdp.gamma() * (policy_matrix(policy) * mdp.transitions());
    Vector term = policy_matrix(policy) * mdp.rewards();
    ValueVector sum = term;
    for (std::size_t i = 1; i < config.neumann_terms; ++i) {
        term = step * term;
        sum += term;
    }
    return sum;
}

double neumann_tail_bound(const Mdp& mdp, std::size_t terms) {
    return std::pow(mdp.gamma(), static_cast<double>(terms)) * mdp.value_bound();
}

void CheckReport::record(const std::string& instance, double deviation, double tolerance) {
    ++instances_run;
    if (std::isnan(deviation) || deviation > tolerance) {
        failures.push_back({instance, deviation});
        passed = false;
    }
    if (std::isnan(deviation)) {
        max_deviation = std::numeric_limits<double>::infinity();
    } else {
        max_deviation = std::max(max_deviation, deviation);
    }
}

void CheckReport::fail(const std::string& instance, double deviation) {
    ++instances_run;
    failures.push_back({instance, deviation});
    passed = false;
    if (!std::isnan(deviation)) max_deviation = std::max(max_deviation, deviation);
}

void CheckReport::merge(const CheckReport& other) {
    instances_run += other.instances_run;
    failures.insert(failures.end(), other.failures.begin(), other.failures.end());
    max_deviation = std::max(max_deviation, other.max_deviation);
    passed = passed && other.passed;
}

std::string CheckReport::to_json() const {
    using nlohmann::json;
    auto number = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    json doc;
    doc["check_name"] = check_name;
    doc["instances_run"] = instances_run;
    doc["failure_count"] = failures.size();
    doc["max_deviation"] = number(max_deviation);
    doc["passed"] = passed;
    json list = json::array();
    for (const auto& f : failures) list.push_back({{"instance", f.instance}, {"deviation", number(f.deviation)}});
    doc["failures"] = std::move(list);
    return doc.dump(2);
}

namespace {

struct SuiteSpec {
    const char* name;
    double tolerance;
    bool two_states;
    double (*check)(const Instance&, std::size_t samples);
};

// Sample counts are capped where a suite's cost grows faster than linearly.
const std::vector<SuiteSpec>& suite_table() {
    static const std::vector<SuiteSpec> table{
        {"line", 1e-9, false, [](const Instance& i, std::size_t) { return line_check(i); }},
        {"order", 1e-9, false, [](const Instance& i, std::size_t) { return order_check(i); }},
        {"rho", 1e-8, false, [](const Instance& i, std::size_t) { return rho_check(i); }},
        {"slice", 1e-9, false,
         [](const Instance& i, std::size_t n) { return slice_check(i, std::min<std::size_t>(n, 500)); }},
        {"span", 1e-8, false, [](const Instance& i, std::size_t) { return span_check(i); }},
        {"zeros", 0.0, false, [](const Instance& i, std::size_t) { return zeros_check(i); }},
        {"hull", 1e-9, true, [](const Instance& i, std::size_t n) { return hull_check(i, n); }},
        {"boundary", 1e-3, true,
         [](const Instance& i, std::size_t) {
             return boundary_deviation(i.mdp, i.mdp.n_actions() == 2 ? 200 : 30, 1000, i.seed);
         }},
        {"rank", 0.0, false,
         [](const Instance& i, std::size_t n) { return rank_check(i, std::min<std::size_t>(n, 500)); }},
        {"path", 1e-9, false, [](const Instance& i, std::size_t) { return path_check(i); }},
        {"dominance", 1e-8, false, [](const Instance& i, std::size_t n) { return dominance_check(i, n); }},
        {"smooth", 0.1, false, [](const Instance& i, std::size_t) { return smooth_check(i, 1e-5); }},
        {"bounded", 1e-8, false, [](const Instance& i, std::size_t n) { return bounded_check(i, n); }},
    };
    return table;
}

const SuiteSpec& find_suite(std::string_view name) {
    for (const auto& spec : suite_table()) {
        if (name == spec.name) return spec;
    }
    throw Error(ErrorCode::UnknownSuite, "no suite named '" + std::string(name) + "'");
}

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& spec : suite_table()) out.emplace_back(spec.name);
        return out;
    }();
    return names;
}

double suite_tolerance(std::string_view suite_name) { return find_suite(suite_name).tolerance; }

CheckReport run_suite(std::string_view suite_name, const SuiteOptions& options) {
    const SuiteSpec& spec = find_suite(suite_name);
    std::vector<Instance> instances;
    if (options.mdp) {
        if (spec.two_states && options.mdp->n_states() != 2) {
            throw Error(ErrorCode::DimensionUnsupported,
                        "suite '" + std::string(spec.name) + "' needs a two-state MDP");
        }
        for (std::size_t t = 0; t < std::max<std::size_t>(options.trials, 1); ++t) {
            instances.push_back({"given(trial=" + std::to_string(t) + ")", *options.mdp, derive_seed(options.seed, t)});
        }
    } else {
        instances = build_instances(options, spec.two_states);
    }
    const std::size_t samples = std::max<std::size_t>(options.samples, 2);
    return run_instances(spec.name, instances, options.tolerance.value_or(spec.tolerance),
                         [&](const Instance& i) { return spec.check(i, samples); });
}

CheckReport compare_oracles(const Mdp& mdp, const Policy& policy, const OracleConfig& config) {
    const ValueVector exact = value_function(mdp, policy);
    const ValueVector neumann = neumann_value_oracle(mdp, policy, config);
    const McEstimate mc = mc_value_oracle(mdp, policy, config);

    CheckReport report;
    report.check_name = "compare_oracles";
    // Deviations are reported as multiples of the allowed bound, so <= 1 passes.
    const double tail = neumann_tail_bound(mdp, config.neumann_terms);
    const double neumann_gap = max_abs(exact - neumann);
    report.record("exact_vs_neumann", tail > 0.0 ? neumann_gap / tail : (neumann_gap == 0.0 ? 0.0 : HUGE_VAL), 1.0);
    for (Eigen::Index s = 0; s < exact.size(); ++s) {
        const double allowed = 3.0 * mc.standard_error(s) + mc.truncation_bound;
        const double gap = std::abs(exact(s) - mc.estimate(s));
        // A zero allowance (zero rewards) tolerates only rounding.
        const double ratio = allowed > 0.0 ? gap / allowed : (gap <= 1e-12 ? 0.0 : HUGE_VAL);
        report.record("exact_vs_mc:s" + std::to_string(s), ratio, 1.0);
        const double nm_allowed = allowed + tail;
        const double nm_gap = std::abs(neumann(s) - mc.estimate(s));
        report.record("neumann_vs_mc:s" + std::to_string(s),
                      nm_allowed > 0.0 ? nm_gap / nm_allowed : (nm_gap <= 1e-12 ? 0.0 : HUGE_VAL), 1.0);
    }
    return report;
}

double boundary_deviation(const Mdp& mdp, std::size_t grid, std::size_t family_samples, std::uint64_t seed) {
    if (mdp.n_states() != 2) {
        throw Error(ErrorCode::DimensionUnsupported, "boundary verification is limited to two-state MDPs");
    }
    const std::size_t A = mdp.n_actions();

    // Coarse cloud: the product of per-state lattices.
    const auto rows = simplex_lattice(A, grid);
    const std::size_t n = rows.size() * rows.size();
    std::vector<Matrix> policies(n, Matrix(2, static_cast<Eigen::Index>(A)));
    std::vector<Point2> cloud(n);
    parallel_for(rows.size(), [&](std::size_t i) {
        for (std::size_t j = 0; j < rows.size(); ++j) {
            Matrix& probs = policies[i * rows.size() + j];
            probs.row(0) = rows[i].transpose();
            probs.row(1) = rows[j].transpose();
            const ValueVector v = value_function(mdp, Policy(probs));
            cloud[i * rows.size() + j] = Point2(v(0), v(1));
        }
    });

    // Angular sweep around the mean of the deterministic values, in
    // coordinates whitened by the cloud covariance. The cloud centroid is a
    // poor centre because the value map piles samples up along a few edges,
    // and whitening keeps sectors balanced when the value set is a thin
    // sliver. Both maps are affine, so boundary points stay boundary points.
    constexpr std::size_t bins = 64;
    Point2 centroid = Point2::Zero();
    const auto vertices = polytope_vertices_det(mdp);
    for (const auto& v : vertices) centroid += Point2(v.value(0), v.value(1));
    centroid /= static_cast<double>(vertices.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : cloud) cov += (p - centroid) * (p - centroid).transpose();
    cov /= static_cast<double>(n);
    cov += (1e-12 * cov.trace() + 1e-300) * Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d whiten = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).operatorInverseSqrt();
    const auto local = [&](const Point2& p) -> Point2 { return whiten * (p - centroid); };
    const auto sector_of = [&](const Point2& p) {
        const Point2 d = local(p);
        const double angle = std::atan2(d.y(), d.x()) + std::numbers::pi;
        return std::min(bins - 1, static_cast<std::size_t>(angle / (2.0 * std::numbers::pi) * bins));
    };
    // Candidates per sector, farthest first. The value map can fold, so a
    // lattice point that is only locally extreme is refined alongside the
    // others rather than trusted.
    constexpr std::size_t starts = 8;
    std::vector<std::vector<std::pair<double, std::size_t>>> candidates(bins);
    for (std::size_t i = 0; i < n; ++i) {
        candidates[sector_of(cloud[i])].emplace_back(local(cloud[i]).norm(), i);
    }
    for (auto& c : candidates) {
        const std::size_t keep = std::min(starts, c.size());
        std::partial_sort(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(keep), c.end(),
                          [](const auto& x, const auto& y) { return x.first > y.first; });
        c.resize(keep);
    }

    // Local refinement by shrinking random perturbations in policy space. A
    // point interior to the value set can always be pushed outward radially,
    // so the best refined point settles on the true boundary rather than on
    // the lattice spacing.
    std::vector<Point2> boundary(bins);
    std::vector<char> occupied(bins, 0);
    parallel_for(bins, [&](std::size_t b) {
        if (candidates[b].empty()) return;
        double sector_r = -1.0;
        for (std::size_t k = 0; k < candidates[b].size(); ++k) {
            const auto [start_r, index] = candidates[b][k];
            Matrix best = policies[index];
            Point2 best_point = cloud[index];
            double best_r = start_r;
            Rng rng(derive_seed(seed, 0xb0 + k, b));
            for (double h = 0.5; h > 1e-7; h *= 0.5) {
                for (int trial = 0; trial < 100; ++trial) {
                    Matrix probs = best;
                    bool valid = true;
                    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
                        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
                            probs(r, c) = std::max(0.0, probs(r, c) + h * rng.uniform(-1.0, 1.0));
                        }
                        const double sum = probs.row(r).sum();
                        valid = valid && sum > 0.0;
                        if (valid) probs.row(r) /= sum;
                    }
                    if (!valid) continue;
                    const ValueVector v = value_function(mdp, Policy(probs));
                    const Point2 p(v(0), v(1));
                    const double r = local(p).norm();
                    if (r > best_r && sector_of(p) == b) {
                        best = std::move(probs);
                        best_point = p;
                        best_r = r;
                    }
                }
            }
            if (best_r > sector_r) {
                sector_r = best_r;
                boundary[b] = best_point;
            }
        }
        occupied[b] = 1;
    });

    // Union of the D_{s,a} families: random members plus the deterministic
    // members, which are the family's extreme points.
    std::vector<std::vector<Point2>> families;
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            auto values = boundary_semidet_sample(mdp, s, a, family_samples, derive_seed(seed, s, a));
            for (std::size_t b = 0; b < A; ++b) {
                std::vector<std::size_t> actions(2);
                actions[s] = a;
                actions[1 - s] = b;
                values.push_back(value_function(mdp, Policy::deterministic(A, actions)));
            }
            families.push_back(family_polyline(values));
        }
    }

    double worst = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (!occupied[b]) continue;
        const Point2& p = boundary[b];
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& family : families) nearest = std::min(nearest, distance_to_polyline(p, family, false));
        worst = std::max(worst, nearest);
    }
    return worst;
}

}  // namespace vfp
