#include "vfp_cli/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vfp/dynamics.hpp"
#include "vfp/error.hpp"
#include "vfp/evaluation.hpp"
#include "vfp/geometry.hpp"
#include "vfp/mdp.hpp"
#include "vfp/random.hpp"
#include "vfp/verification.hpp"
#include "vfp/version.hpp"

namespace vfp::cli {

namespace {

using nlohmann::json;

// Thrown for command-level failures that map straight onto an exit code.
struct Failure {
    int code;
    std::string message;
};

[[noreturn]] void usage(std::string message) { throw Failure{kUsage, std::move(message)}; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) usage("cannot read '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
        usage("cannot write '" + path + "'");
    }
}

// Everything a command reads and writes, for the run manifest.
struct RunContext {
    std::vector<std::string> argv;
    json config = json::object();
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
    std::vector<std::pair<std::string, std::string>> outputs;

    std::string read_input(const std::string& path) {
        std::string bytes = read_file(path);
        inputs.emplace_back(path, fnv1a_hex(bytes));
        return bytes;
    }

    void emit(const std::string& path, const std::string& bytes) {
        write_file(path, bytes);
        outputs.emplace_back(path, fnv1a_hex(bytes));
    }

    // Manifest next to the primary output; the manifest itself is not listed.
    void write_manifest(const std::string& primary) const {
        json doc;
        doc["tool"] = "vfp";
        doc["version"] = kVersion;
        doc["argv"] = argv;
        doc["config"] = config;
        doc["seed"] = seed;
        json in = json::array();
        for (const auto& [path, digest] : inputs) in.push_back({{"path", path}, {"fnv1a64", digest}});
        json outs = json::array();
        for (const auto& [path, digest] : outputs) outs.push_back({{"path", path}, {"fnv1a64", digest}});
        doc["inputs"] = std::move(in);
        doc["outputs"] = std::move(outs);
        write_file(primary + ".manifest.json", doc.dump(2) + "\n");
    }
};

// --mdp accepts a fixture id, "example1" or a JSON document path.
Mdp resolve_mdp(const std::string& spec, RunContext& ctx) {
    if (spec == "example1") return example1_mdp();
    for (FixtureId id : all_fixtures()) {
        if (spec == fixture_name(id)) return builtin_fixture(id);
    }
    if (!std::filesystem::exists(spec)) {
        usage("'" + spec + "' is neither a fixture, example1, nor an existing file");
    }
    return load_mdp(ctx.read_input(spec));
}

Policy resolve_policy(const std::string& path, const Mdp& mdp, RunContext& ctx) {
    Policy policy = load_policy(ctx.read_input(path));
    require_shape(mdp, policy);
    return policy;
}

// Base policy for agreement constraints: a file, or a seeded random policy
// drawn from a stream disjoint from the sampling stream.
Policy base_policy(const std::optional<std::string>& path, const Mdp& mdp, std::uint64_t seed, RunContext& ctx) {
    if (path) return resolve_policy(*path, mdp, ctx);
    return random_policy(mdp, derive_seed(seed, 0xba5e));
}

std::string value_header(std::size_t n_states) {
    std::string out;
    for (std::size_t s = 0; s < n_states; ++s) {
        if (s) out += ',';
        out += "v_s" + std::to_string(s);
    }
    return out;
}

void append_values(std::string& line, const ValueVector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        line += ',';
        line += format_double(v(i));
    }
}

std::string samples_csv(const std::vector<ValueVector>& values, std::size_t n_states) {
    std::string out = value_header(n_states) + "\n";
    for (const auto& v : values) {
        std::string line;
        append_values(line, v);
        out.append(line, 1, std::string::npos);
        out += '\n';
    }
    return out;
}

std::vector<ValueVector> vertex_values(const Mdp& mdp) {
    std::vector<ValueVector> out;
    for (auto& v : polytope_vertices_det(mdp)) out.push_back(std::move(v.value));
    return out;
}

// ---------------------------------------------------------------- fixtures

struct FixtureArgs {
    std::string name;
    std::string path;
};

void add_fixtures(CLI::App& app, FixtureArgs& a, std::ostream& out, RunContext& ctx, std::function<void()>& action) {
    auto* cmd = app.add_subcommand("fixtures", "List or dump the built-in MDP fixtures");
    cmd->require_subcommand(1);
    auto* list = cmd->add_subcommand("list", "Print fixture ids with |S|, |A| and gamma");
    list->callback([&] {
        action = [&] {
            out << "id\tstates\tactions\tgamma\n";
            for (FixtureId id : all_fixtures()) {
                const Mdp mdp = builtin_fixture(id);
                out << fixture_name(id) << '\t' << mdp.n_states() << '\t' << mdp.n_actions() << '\t'
                    << format_double(mdp.gamma()) << '\n';
            }
        };
    });
    auto* dump = cmd->add_subcommand("dump", "Write a fixture as an MDP JSON document");
    dump->add_option("name", a.name, "Fixture id")->required();
    dump->add_option("--out", a.path, "Output path")->required();
    dump->callback([&] {
        action = [&] {
            const Mdp mdp = builtin_fixture(parse_fixture(a.name));
            ctx.config = {{"command", "fixtures dump"}, {"fixture", a.name}, {"out", a.path}};
            ctx.emit(a.path, dump_mdp(mdp));
            ctx.write_manifest(a.path);
        };
    });
}

// ------------------------------------------------------------------ sample

struct SampleArgs {
    std::string mdp;
    long long n = 1000;
    std::uint64_t seed = 0;
    std::vector<std::string> fix;
    std::optional<std::string> base;
    std::string out;
    std::optional<std::string> svg;
};

std::vector<std::size_t> parse_fix(const std::vector<std::string>& specs, std::size_t n_states) {
    std::set<std::size_t> states;
    for (const auto& spec : specs) {
        const auto eq = spec.find('=');
        const std::string state = spec.substr(0, eq);
        if (eq != std::string::npos && spec.substr(eq + 1) != "base") {
            usage("--fix expects <state> or <state>=base, got '" + spec + "'");
        }
        std::size_t s = 0;
        const auto [ptr, ec] = std::from_chars(state.data(), state.data() + state.size(), s);
        if (ec != std::errc() || ptr != state.data() + state.size() || s >= n_states) {
            usage("--fix state '" + state + "' is not a state of the MDP");
        }
        states.insert(s);
    }
    return {states.begin(), states.end()};
}

void add_sample(CLI::App& app, SampleArgs& a, RunContext& ctx, std::function<void()>& action) {
    auto* cmd = app.add_subcommand("sample", "Sample value functions of random policies");
    cmd->add_option("--mdp", a.mdp, "Fixture id, example1, or MDP JSON path")->required();
    cmd->add_option("--n", a.n, "Number of policies");
    cmd->add_option("--seed", a.seed, "Random seed");
    cmd->add_option("--fix", a.fix, "Pin a state to the base policy's row: <s> or <s>=base (repeatable)");
    cmd->add_option("--base", a.base, "Base policy JSON for --fix (default: seeded random policy)");
    cmd->add_option("--out", a.out, "CSV output path")->required();
    cmd->add_option("--svg", a.svg, "Optional 2-D scatter SVG (two-state MDPs only)");
    cmd->callback([&] {
        action = [&] {
            const Mdp mdp = resolve_mdp(a.mdp, ctx);
            if (a.n <= 0) usage("--n must be positive");
            if (a.svg && mdp.n_states() != 2) {
                throw Failure{kCapability, "SVG output needs a two-state MDP"};
            }
            const auto fixed = parse_fix(a.fix, mdp.n_states());
            if (a.base && fixed.empty()) usage("--base only applies together with --fix");
            std::optional<AgreementSet> agreement;
            if (!fixed.empty()) agreement = AgreementSet{base_policy(a.base, mdp, a.seed, ctx), fixed};

            const auto values = sample_values(mdp, static_cast<std::size_t>(a.n), a.seed, agreement);
            ctx.seed = a.seed;
            ctx.config = {{"command", "sample"}, {"mdp", a.mdp},  {"n", a.n},    {"seed", a.seed},
                          {"fix", fixed},        {"base", a.base ? json(*a.base) : json(nullptr)},
                          {"out", a.out},        {"svg", a.svg ? json(*a.svg) : json(nullptr)}};
            ctx.emit(a.out, samples_csv(values, mdp.n_states()));
            if (a.svg) ctx.emit(*a.svg, render_svg(values, vertex_values(mdp), {}));
            ctx.write_manifest(a.out);
        };
    });
}

// -------------------------------------------------------------------- line

struct LineArgs {
    std::string mdp;
    long long state = -1;
    std::uint64_t seed = 0;
    long long grid = 101;
    std::optional<std::string> base;
    std::string out;
};

void add_line(CLI::App& app, LineArgs& a, RunContext& ctx, std::function<void()>& action) {
    auto* cmd = app.add_subcommand("line", "Interpolation along the segment of policies differing at one state");
    cmd->add_option("--mdp", a.mdp, "Fixture id, example1, or MDP JSON path")->required();
    cmd->add_option("--state", a.state, "State whose action distribution varies")->required();
    cmd->add_option("--seed", a.seed, "Seed of the base policy");
    cmd->add_option("--grid", a.grid, "Number of mixture weights, at least 2");
    cmd->add_option("--base", a.base, "Base policy JSON (default: seeded random policy)");
    cmd->add_option("--out", a.out, "CSV output path")->required();
    cmd->callback([&] {
        action = [&] {
            const Mdp mdp = resolve_mdp(a.mdp, ctx);
            if (a.state < 0 || static_cast<std::size_t>(a.state) >= mdp.n_states()) {
                usage("--state " + std::to_string(a.state) + " is not a state of the MDP");
            }
            if (a.grid < 2) usage("--grid must be at least 2");
            const auto state = static_cast<std::size_t>(a.state);
            const Policy base = base_policy(a.base, mdp, a.seed, ctx);
            const LineSegment seg = line_segment(mdp, base, state);
            const auto curve =
                interpolation_curve(mdp, seg.pi_low, seg.pi_high, state, static_cast<std::size_t>(a.grid));

            std::string csv = "mu,rho," + value_header(mdp.n_states()) + ",endpoint_flag\n";
            for (std::size_t i = 0; i < curve.rho_samples.size(); ++i) {
                const auto [mu, rho] = curve.rho_samples[i];
                std::string line = format_double(mu) + ',' + format_double(rho);
                append_values(line, value_function(mdp, mix_policies(seg.pi_low, seg.pi_high, mu)));
                const bool endpoint = i == 0 || i + 1 == curve.rho_samples.size();
                line += endpoint ? ",1\n" : ",0\n";
                csv += line;
            }
            ctx.seed = a.seed;
            ctx.config = {{"command", "line"}, {"mdp", a.mdp}, {"state", a.state}, {"seed", a.seed},
                          {"grid", a.grid},    {"base", a.base ? json(*a.base) : json(nullptr)},
                          {"out", a.out}};
            ctx.emit(a.out, csv);
            ctx.write_manifest(a.out);
        };
    });
}

// ---------------------------------------------------------------- dynamics

struct DynamicsArgs {
    std::string mdp;
    std::string algo;
    std::string init = "interior";
    std::optional<long long> iters;
    double eta = 0.05;
    std::uint64_t seed = 0;
    std::string out;
    std::optional<std::string> svg;
    double epsilon = 0.01;
    std::optional<long long> vertex;
    std::optional<long long> boundary_state;
    std::optional<double> entropy;
    std::optional<double> damping;
    std::optional<double> stop_tol;
    std::optional<long long> population;
    std::optional<long long> elites;
    std::optional<double> init_cov;
    std::optional<double> noise;
};

std::size_t default_iterations(const std::string& algo) {
    if (algo == "vi") return 100;
    if (algo == "cem" || algo == "cemcn") return 100;
    return 2000;
}

std::string trajectory_csv(const Trajectory& traj, std::size_t n_states) {
    std::set<std::string> keys;
    for (const auto& m : traj.meta) {
        for (const auto& [k, v] : m.scalars) keys.insert(k);
    }
    std::string out = "iter," + value_header(n_states) + ",meta_step_norm";
    for (const auto& k : keys) out += ",meta_" + k;
    out += '\n';
    for (std::size_t i = 0; i < traj.points.size(); ++i) {
        const StepRecord& rec = traj.meta[i];
        std::string line = std::to_string(rec.iteration);
        append_values(line, traj.points[i]);
        line += ',' + format_double(rec.step_norm);
        for (const auto& k : keys) {
            line += ',';
            if (auto it = rec.scalars.find(k); it != rec.scalars.end()) line += format_double(it->second);
        }
        out += line + '\n';
    }
    return out;
}

void add_dynamics(CLI::App& app, DynamicsArgs& a, RunContext& ctx, std::function<void()>& action) {
    auto* cmd = app.add_subcommand("dynamics", "Trace a learning algorithm through value space");
    cmd->add_option("--mdp", a.mdp, "Fixture id, example1, or MDP JSON path")->required();
    cmd->add_option("--algo", a.algo, "Algorithm")
        ->required()
        ->check(CLI::IsMember({"vi", "pi", "pg", "entpg", "npg", "cem", "cemcn"}));
    cmd->add_option("--init", a.init, "vertex, boundary, interior, or a policy JSON path");
    cmd->add_option("--iters", a.iters, "Iterations (ignored by pi)");
    cmd->add_option("--eta", a.eta, "Step size for pg, entpg and npg (ignored otherwise)");
    cmd->add_option("--seed", a.seed, "Random seed");
    cmd->add_option("--out", a.out, "Trajectory CSV path")->required();
    cmd->add_option("--svg", a.svg, "Optional SVG of the trajectory over a polytope sample (two-state MDPs)");
    cmd->add_option("--epsilon", a.epsilon, "Smoothing of vertex and boundary initialisations");
    cmd->add_option("--vertex", a.vertex, "vertex init: index into the deterministic policies (default: optimal)");
    cmd->add_option("--boundary-state", a.boundary_state, "boundary init: the nearly deterministic state");
    cmd->add_option("--entropy", a.entropy, "entpg: entropy coefficient (default 0.1)");
    cmd->add_option("--damping", a.damping, "npg: Fisher damping (default 1e-6)");
    cmd->add_option("--stop-tol", a.stop_tol, "vi: stop once a step is below this (default 0)");
    cmd->add_option("--population", a.population, "cem/cemcn: population N (default 500)");
    cmd->add_option("--elites", a.elites, "cem/cemcn: elite count K (default 50)");
    cmd->add_option("--init-cov", a.init_cov, "cem/cemcn: initial covariance scale (default 0.1)");
    cmd->add_option("--noise", a.noise, "cemcn: constant covariance noise (default 0.05)");
    cmd->callback([&] {
        action = [&] {
            const Mdp mdp = resolve_mdp(a.mdp, ctx);
            const bool cem_like = a.algo == "cem" || a.algo == "cemcn";
            auto only = [&](bool given, bool allowed, const char* flag) {
                if (given && !allowed) usage(std::string(flag) + " does not apply to --algo " + a.algo);
            };
            only(a.entropy.has_value(), a.algo == "entpg", "--entropy");
            only(a.damping.has_value(), a.algo == "npg", "--damping");
            only(a.stop_tol.has_value(), a.algo == "vi", "--stop-tol");
            only(a.population.has_value(), cem_like, "--population");
            only(a.elites.has_value(), cem_like, "--elites");
            only(a.init_cov.has_value(), cem_like, "--init-cov");
            only(a.noise.has_value(), a.algo == "cemcn", "--noise");
            only(a.iters.has_value(), a.algo != "pi", "--iters");
            only(a.vertex.has_value(), a.init == "vertex", "--vertex");
            only(a.boundary_state.has_value(), a.init == "boundary", "--boundary-state");
            if (a.iters && *a.iters <= 0) usage("--iters must be positive");
            if (a.svg && mdp.n_states() != 2) throw Failure{kCapability, "SVG output needs a two-state MDP"};

            InitSpec init;
            init.epsilon = a.epsilon;
            if (a.init == "vertex") {
                init.kind = InitKind::NearVertex;
                if (a.vertex) {
                    if (*a.vertex < 0) usage("--vertex must be nonnegative");
                    init.vertex = static_cast<std::size_t>(*a.vertex);
                }
            } else if (a.init == "boundary") {
                init.kind = InitKind::NearBoundary;
                if (a.boundary_state) {
                    if (*a.boundary_state < 0 || static_cast<std::size_t>(*a.boundary_state) >= mdp.n_states()) {
                        usage("--boundary-state is not a state of the MDP");
                    }
                    init.boundary_state = static_cast<std::size_t>(*a.boundary_state);
                }
            } else if (a.init == "interior") {
                init.kind = InitKind::Interior;
            } else {
                init.kind = InitKind::ExplicitPolicy;
                init.policy = resolve_policy(a.init, mdp, ctx);
            }

            const std::size_t iters = a.iters ? static_cast<std::size_t>(*a.iters) : default_iterations(a.algo);
            json config = {{"command", "dynamics"}, {"mdp", a.mdp},   {"algo", a.algo}, {"init", a.init},
                           {"seed", a.seed},        {"out", a.out},   {"epsilon", a.epsilon},
                           {"svg", a.svg ? json(*a.svg) : json(nullptr)}};
            if (a.vertex) config["vertex"] = *a.vertex;
            if (a.boundary_state) config["boundary_state"] = *a.boundary_state;

            Trajectory traj;
            if (a.algo == "vi" || a.algo == "pi") {
                const ValueVector v0 = value_function(mdp, resolve_init(mdp, init, a.seed));
                if (a.algo == "vi") {
                    config["iters"] = iters;
                    config["stop_tol"] = a.stop_tol.value_or(0.0);
                    traj = run_value_iteration(mdp, v0, iters, a.stop_tol.value_or(0.0));
                } else {
                    traj = run_policy_iteration(mdp, v0);
                }
            } else if (a.algo == "pg" || a.algo == "entpg") {
                const double coeff = a.algo == "entpg" ? a.entropy.value_or(0.1) : 0.0;
                config["iters"] = iters;
                config["eta"] = a.eta;
                config["entropy"] = coeff;
                traj = run_policy_gradient(mdp, init, a.eta, iters, coeff, a.seed);
            } else if (a.algo == "npg") {
                config["iters"] = iters;
                config["eta"] = a.eta;
                config["damping"] = a.damping.value_or(1e-6);
                traj = run_npg(mdp, init, a.eta, iters, a.damping.value_or(1e-6), a.seed);
            } else {
                CemConfig cem;
                if (a.population) cem.population = static_cast<std::size_t>(std::max(0LL, *a.population));
                if (a.elites) cem.elites = static_cast<std::size_t>(std::max(0LL, *a.elites));
                if (a.init_cov) cem.init_cov_scale = *a.init_cov;
                cem.noise_scale = a.algo == "cemcn" ? a.noise.value_or(0.05) : 0.0;
                cem.iterations = iters;
                cem.seed = a.seed;
                config["iters"] = iters;
                config["population"] = cem.population;
                config["elites"] = cem.elites;
                config["init_cov"] = cem.init_cov_scale;
                config["noise"] = cem.noise_scale;
                traj = run_cem(mdp, SoftmaxParams::from_policy(resolve_init(mdp, init, a.seed)), cem);
            }

            ctx.seed = a.seed;
            ctx.config = std::move(config);
            ctx.emit(a.out, trajectory_csv(traj, mdp.n_states()));
            if (a.svg) {
                const auto cloud = sample_values(mdp, 2000, derive_seed(a.seed, 0x5f9));
                ctx.emit(*a.svg, render_svg(cloud, vertex_values(mdp), traj.points));
            }
            ctx.write_manifest(a.out);
        };
    });
}

// ------------------------------------------------------------------ verify

struct VerifyArgs {
    std::string suite;
    long long trials = 100;
    std::uint64_t seed = 1;
    long long samples = 2000;
    std::optional<std::string> mdp;
    std::string report;
};

void add_verify(CLI::App& app, VerifyArgs& a, std::ostream& out, RunContext& ctx, std::function<void()>& action,
                int& status) {
    auto* cmd = app.add_subcommand("verify", "Run property suites and write a JSON report");
    cmd->add_option("--suite", a.suite, "Suite name or 'all'")->required();
    cmd->add_option("--trials", a.trials, "Random instances per suite");
    cmd->add_option("--seed", a.seed, "Suite seed");
    cmd->add_option("--samples", a.samples, "Samples for the sampling-based suites");
    cmd->add_option("--mdp", a.mdp, "Run on this MDP only (fixture id, example1, or JSON path)");
    cmd->add_option("--report", a.report, "Report JSON path")->required();
    cmd->callback([&] {
        action = [&] {
            std::vector<std::string> suites;
            if (a.suite == "all") {
                suites = suite_names();
            } else {
                suite_tolerance(a.suite);  // throws UnknownSuite
                suites.push_back(a.suite);
            }
            if (a.trials < 0) usage("--trials must be nonnegative");
            if (a.samples <= 0) usage("--samples must be positive");
            SuiteOptions options;
            options.trials = static_cast<std::size_t>(a.trials);
            options.seed = a.seed;
            options.samples = static_cast<std::size_t>(a.samples);
            if (a.mdp) options.mdp = resolve_mdp(*a.mdp, ctx);

            bool passed = true;
            json reports = json::array();
            for (const auto& name : suites) {
                const CheckReport report = run_suite(name, options);
                passed = passed && report.passed;
                out << name << (report.passed ? " PASS" : " FAIL") << " instances=" << report.instances_run
                    << " max_deviation=" << format_double(report.max_deviation) << '\n';
                reports.push_back(json::parse(report.to_json()));
            }
            json doc = suites.size() == 1 ? reports.front() : json{{"passed", passed}, {"suites", reports}};
            ctx.seed = a.seed;
            ctx.config = {{"command", "verify"}, {"suite", a.suite},     {"trials", a.trials},
                          {"seed", a.seed},      {"samples", a.samples}, {"report", a.report},
                          {"mdp", a.mdp ? json(*a.mdp) : json(nullptr)}};
            ctx.emit(a.report, doc.dump(2) + "\n");
            ctx.write_manifest(a.report);
            status = passed ? kOk : kVerificationFailed;
        };
    });
}

// ------------------------------------------------------------------ replay

void add_replay(CLI::App& app, std::string& path, std::ostream& out, std::ostream& err, std::function<void()>& action,
                int& status) {
    auto* cmd = app.add_subcommand("replay", "Re-run a command from its manifest and compare outputs");
    cmd->add_option("manifest", path, "Manifest JSON written next to an output")->required();
    cmd->callback([&] {
        action = [&] {
            json doc;
            try {
                doc = json::parse(read_file(path));
            } catch (const json::exception& e) {
                usage("manifest '" + path + "' is not valid JSON: " + e.what());
            }
            if (!doc.contains("argv") || !doc["argv"].is_array() || !doc.contains("outputs")) {
                usage("manifest '" + path + "' lacks argv or outputs");
            }
            for (const auto& in : doc.value("inputs", json::array())) {
                const std::string p = in.at("path").get<std::string>();
                if (fnv1a_hex(read_file(p)) != in.at("fnv1a64").get<std::string>()) {
                    usage("input '" + p + "' changed since the manifest was written");
                }
            }
            const auto argv = doc["argv"].get<std::vector<std::string>>();
            if (!argv.empty() && argv.front() == "replay") usage("a manifest cannot replay a replay");
            const int code = run_cli(argv, out, err);
            if (code != kOk && code != kVerificationFailed) {
                status = code;
                return;
            }
            bool identical = true;
            for (const auto& o : doc["outputs"]) {
                const std::string p = o.at("path").get<std::string>();
                if (fnv1a_hex(read_file(p)) != o.at("fnv1a64").get<std::string>()) {
                    err << "vfp: output '" << p << "' differs from the manifest\n";
                    identical = false;
                }
            }
            out << (identical ? "replay identical\n" : "replay differs\n");
            status = identical ? code : kVerificationFailed;
        };
    });
}

int error_exit(const Error& e) {
    switch (e.code()) {
        case ErrorCode::DimensionUnsupported:
        case ErrorCode::EnumerationTooLarge:
            return kCapability;
        default:
            return kUsage;
    }
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, ptr};
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    return out;
}

std::string render_svg(const std::vector<ValueVector>& scatter, const std::vector<ValueVector>& markers,
                       const std::vector<ValueVector>& path) {
    constexpr double kSize = 600.0;
    double lo_x = std::numeric_limits<double>::infinity();
    double lo_y = lo_x;
    double hi_x = -lo_x;
    double hi_y = -lo_x;
    for (const auto* set : {&scatter, &markers, &path}) {
        for (const auto& v : *set) {
            lo_x = std::min(lo_x, v(0));
            hi_x = std::max(hi_x, v(0));
            lo_y = std::min(lo_y, v(1));
            hi_y = std::max(hi_y, v(1));
        }
    }
    if (!(lo_x <= hi_x)) lo_x = hi_x = lo_y = hi_y = 0.0;
    // Degenerate extents get a unit box so the mapping stays finite.
    if (hi_x - lo_x < 1e-12) {
        lo_x -= 0.5;
        hi_x += 0.5;
    }
    if (hi_y - lo_y < 1e-12) {
        lo_y -= 0.5;
        hi_y += 0.5;
    }
    const double mx = 0.05 * (hi_x - lo_x);
    const double my = 0.05 * (hi_y - lo_y);
    lo_x -= mx;
    hi_x += mx;
    lo_y -= my;
    hi_y += my;

    auto coord = [](double x) {
        char buf[32];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, 2);
        return std::string(buf, ptr);
    };
    auto px = [&](const ValueVector& v) { return coord((v(0) - lo_x) / (hi_x - lo_x) * kSize); };
    auto py = [&](const ValueVector& v) { return coord((hi_y - v(1)) / (hi_y - lo_y) * kSize); };

    std::string out =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"600\" height=\"600\" "
        "viewBox=\"0 0 600 600\">\n";
    out += "<g fill=\"black\">\n";
    for (const auto& v : scatter) out += "<circle cx=\"" + px(v) + "\" cy=\"" + py(v) + "\" r=\"1\"/>\n";
    out += "</g>\n";
    if (!path.empty()) {
        out += "<polyline fill=\"none\" stroke=\"blue\" points=\"";
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i) out += ' ';
            out += px(path[i]) + ',' + py(path[i]);
        }
        out += "\"/>\n";
    }
    out += "<g fill=\"red\">\n";
    for (const auto& v : markers) out += "<circle cx=\"" + px(v) + "\" cy=\"" + py(v) + "\" r=\"4\"/>\n";
    out += "</g>\n</svg>\n";
    return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Value-function polytope toolkit", "vfp"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    RunContext ctx;
    ctx.argv = args;
    std::function<void()> action;
    int status = kOk;
    FixtureArgs fixture_args;
    SampleArgs sample_args;
    LineArgs line_args;
    DynamicsArgs dynamics_args;
    VerifyArgs verify_args;
    std::string replay_path;
    add_fixtures(app, fixture_args, out, ctx, action);
    add_sample(app, sample_args, ctx, action);
    add_line(app, line_args, ctx, action);
    add_dynamics(app, dynamics_args, ctx, action);
    add_verify(app, verify_args, out, ctx, action, status);
    add_replay(app, replay_path, out, err, action, status);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (action) action();
    } catch (const Failure& f) {
        err << "vfp: " << f.message << '\n';
        return f.code;
    } catch (const Error& e) {
        err << "vfp: " << e.what() << '\n';
        return error_exit(e);
    } catch (const std::exception& e) {
        err << "vfp: " << e.what() << '\n';
        return kUsage;
    }
    return status;
}

}  // namespace vfp::cli
