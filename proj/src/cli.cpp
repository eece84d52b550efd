#include "stabilyze/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "stabilyze/io.hpp"
#include "stabilyze/measure.hpp"
#include "stabilyze/verifier.hpp"

namespace stabilyze {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const char* kUsage =
    "usage: stabilyze <subcommand> [flags]\n"
    "  subcommands: decompose build verify simulate tail density dynkin figure1\n"
    "  flags: --model FILE  --params FILE  --out DIR  --seed N  --paths N\n"
    "         --steps N  --burn-in T  --thin T  --gamma-list a,b,c  --annulus R1,R2\n";

struct Options {
    std::string sub;
    std::string model_path, params_path, out = ".";
    std::uint64_t seed = 1;
    int paths = 16;
    bool paths_set = false;
    long steps = 250000;  // nominal steps per chain: horizon T = steps * dt_max
    double burn_in = 10.0, thin = 0.1;
    std::vector<double> gammas = {0, 1, 2, 3, 4};
    double annulus_r1 = 5, annulus_r2 = 10;

    // params-file knobs
    double dt_max = 2e-3;
    int points_per_region = 300;
    double r_max = 1e6;
    int n_r = 8, n_theta = 16, bootstrap = 200;
    double plateau_tol = 0.2;
};

std::vector<double> parse_list(const std::string& s, const char* flag) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t used = 0;
        try {
            out.push_back(std::stod(s.substr(pos), &used));
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": cannot parse '" + s + "'");
        }
        pos += used;
        if (pos < s.size() && s[pos] == ',') ++pos;
    }
    if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
    return out;
}

Options parse(const std::vector<std::string>& args) {
    if (args.empty()) throw UsageError("missing subcommand");
    Options o;
    o.sub = args[0];
    for (size_t i = 1; i < args.size(); i += 2) {
        const std::string& f = args[i];
        if (i + 1 >= args.size()) throw UsageError(f + ": missing value");
        const std::string& v = args[i + 1];
        try {
            if (f == "--model")
                o.model_path = v;
            else if (f == "--params")
                o.params_path = v;
            else if (f == "--out")
                o.out = v;
            else if (f == "--seed")
                o.seed = std::stoull(v);
            else if (f == "--paths") {
                o.paths = std::stoi(v);
                o.paths_set = true;
            } else if (f == "--steps")
                o.steps = std::stol(v);
            else if (f == "--burn-in")
                o.burn_in = std::stod(v);
            else if (f == "--thin")
                o.thin = std::stod(v);
            else if (f == "--gamma-list")
                o.gammas = parse_list(v, "--gamma-list");
            else if (f == "--annulus") {
                const auto r = parse_list(v, "--annulus");
                if (r.size() != 2) throw UsageError("--annulus: expected R1,R2");
                o.annulus_r1 = r[0];
                o.annulus_r2 = r[1];
            } else
                throw UsageError("unknown flag " + f);
        } catch (const std::invalid_argument&) {
            throw UsageError(f + ": cannot parse '" + v + "'");
        } catch (const std::out_of_range&) {
            throw UsageError(f + ": value out of range '" + v + "'");
        }
    }
    return o;
}

void apply_params(Options& o, const nlohmann::json& p) {
    o.dt_max = p.value("dt_max", o.dt_max);
    o.points_per_region = p.value("points_per_region", o.points_per_region);
    o.r_max = p.value("r_max", o.r_max);
    o.n_r = p.value("n_r", o.n_r);
    o.n_theta = p.value("n_theta", o.n_theta);
    o.bootstrap = p.value("bootstrap", o.bootstrap);
    o.plateau_tol = p.value("plateau_tol", o.plateau_tol);
}

struct Run {
    Options opt;
    std::vector<std::string> args;
    std::map<std::string, std::string> input_hashes;

    std::string load_input(const std::string& path) {
        std::string content;
        try {
            content = read_file(path);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        input_hashes[path] = hex64(fnv1a64(content));
        return content;
    }

    DynamicsModel load_model() {
        if (opt.model_path.empty()) throw UsageError(opt.sub + ": --model is required");
        try {
            return DynamicsModel::from_json(nlohmann::json::parse(load_input(opt.model_path)));
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception& e) {
            throw UsageError(opt.model_path + ": " + e.what());
        }
    }

    std::string path(const std::string& name) const {
        return (std::filesystem::path(opt.out) / name).string();
    }

    void write_report(const std::string& name, const nlohmann::json& j) const {
        atomic_write(path(name), dump17(j));
    }

    void write_manifest() const {
        atomic_write(path("manifest.json"),
                     dump17(make_manifest(opt.sub, args, input_hashes, opt.seed)));
    }
};

struct Pipeline {
    DynamicsModel model;  // normalized (a = 1)
    CoordinateChain chain;
    RegionAtlas atlas;
};

Pipeline make_pipeline(const DynamicsModel& raw) {
    DynamicsModel model = normalize_leading(raw).first;
    auto gen = polar_generator(model, default_truncation(model.n));
    auto chain = build_chain(gen, model.n);
    RegionAtlas atlas(chain, default_region_params(chain));
    return {std::move(model), std::move(chain), std::move(atlas)};
}

int cmd_decompose(Run& run) {
    const auto pipe = make_pipeline(run.load_model());
    run.write_report("decompose.json",
                     {{"model", pipe.model.to_json()},
                      {"chain", pipe.chain.to_json()},
                      {"atlas", pipe.atlas.to_json()}});
    run.write_manifest();
    return 0;
}

int cmd_build(Run& run) {
    const auto pipe = make_pipeline(run.load_model());
    const auto psi = build_lyapunov(pipe.atlas);
    run.write_report("build.json",
                     {{"model", pipe.model.to_json()}, {"lyapunov", psi.to_json()}});
    run.write_manifest();
    return 0;
}

int cmd_verify(Run& run) {
    const auto pipe = make_pipeline(run.load_model());
    const auto psi = build_lyapunov(pipe.atlas);
    const auto local =
        check_local_lyapunov(psi, pipe.model, run.opt.points_per_region, run.opt.r_max);
    const auto flux = check_flux_signs(psi);
    const double sym = check_symmetry(psi);
    const bool ok = local.total_violations() == 0 && local.pair.ok &&
                    flux.all_nonpositive && sym < 1e-8;
    run.write_report("verify.json", {{"model", pipe.model.to_json()},
                                     {"local", local.to_json()},
                                     {"flux", flux.to_json()},
                                     {"symmetry_residual", sym},
                                     {"ok", ok}});
    run.write_manifest();
    return ok ? 0 : 1;
}

SampleSet sampling_run(Run& run, DynamicsModel* model_out) {
    const auto model = run.load_model();
    SimConfig cfg;
    cfg.dt_max = run.opt.dt_max;
    cfg.T = double(run.opt.steps) * run.opt.dt_max;
    cfg.seed = run.opt.seed;
    cfg.path_count = run.opt.paths;
    const auto set = invariant_samples(model, cfg, run.opt.burn_in, run.opt.thin);
    if (model_out) *model_out = model;
    return set;
}

// tail/density reuse a prior `simulate` artifact when present
SampleSet samples_for(Run& run, int* n_model) {
    const std::string bin = run.path("samples.bin");
    if (std::filesystem::exists(bin)) {
        run.input_hashes[bin] = hex64(fnv1a64(read_file(bin)));
        nlohmann::json side;
        auto set = read_samples(bin, &side);
        if (!side.contains("model"))
            throw std::runtime_error(bin + ".json: missing model entry");
        *n_model = DynamicsModel::from_json(side["model"]).n;
        return set;
    }
    DynamicsModel model;
    auto set = sampling_run(run, &model);
    *n_model = model.n;
    return set;
}

int cmd_simulate(Run& run) {
    DynamicsModel model;
    const auto set = sampling_run(run, &model);
    write_samples(run.path("samples.bin"), set, {{"model", model.to_json()}});
    run.write_report("simulate.json", set.metadata());
    run.write_manifest();
    return 0;
}

int cmd_tail(Run& run) {
    int n = 1;
    const auto set = samples_for(run, &n);
    const auto r = radii(set);
    std::vector<long> k_grid;
    for (long k = 250; k <= std::min<long>(32000, long(r.size()) / 10); k = long(k * 1.4))
        k_grid.push_back(k);
    if (k_grid.size() < 3)
        throw std::runtime_error("tail: too few samples; increase --steps or --paths");
    const auto rep = tail_exponent(r, k_grid, 2.0 * n, run.opt.plateau_tol);

    const auto moments = moment_curve(set, run.opt.gammas);
    run.write_report("tail.json", {{"samples", set.metadata()},
                                   {"tail", rep.to_json()},
                                   {"moments", moments.to_json()}});
    run.write_manifest();
    return 0;
}

int cmd_density(Run& run) {
    int n = 1;
    const auto set = samples_for(run, &n);
    const auto rep = density_annulus(set, n, run.opt.annulus_r1, run.opt.annulus_r2,
                                     run.opt.n_r, run.opt.n_theta, run.opt.seed + 1,
                                     run.opt.bootstrap);
    run.write_report("density.json", rep.to_json());
    atomic_write(run.path("density.csv"), rep.to_csv());
    run.write_manifest();
    return 0;
}

int cmd_dynkin(Run& run) {
    const long N = run.opt.paths_set ? run.opt.paths : 20000;
    const PiecewisePhi absval{0.0, [](double x) { return std::abs(x); },
                              [](double) { return 0.0; }, 2.0};
    const PiecewisePhi smooth{0.0, [](double x) { return x * x; },
                              [](double) { return 2.0; }, 0.0};
    nlohmann::json kinked = nlohmann::json::array();
    bool all_ok = true;
    for (double t : {0.5, 1.0, 2.0}) {
        const auto rep = check_dynkin(absval, 0.0, t, 1e-3, N, run.opt.seed);
        all_ok = all_ok && rep.sign_ok;
        kinked.push_back(rep.to_json());
    }
    const auto rep = check_dynkin(smooth, 0.3, 1.0, 1e-3, N, run.opt.seed);
    all_ok = all_ok && rep.sign_ok && std::abs(rep.flux) <= 2 * rep.ci_half;
    run.write_report("dynkin.json",
                     {{"absolute_value", kinked}, {"smooth", rep.to_json()}, {"ok", all_ok}});
    run.write_manifest();
    return all_ok ? 0 : 1;
}

int cmd_figure1(Run& run) {
    // bundled example: n = 3, drift z⁴ + 2i z²z̄ + 5i z², σ = 1, whose chain
    // constants are c₂ = 1/2, c₃ = 1 and whose last coordinate is
    // φ₄ = r²θ + r/2 + 1
    DynamicsModel model;
    model.n = 3;
    model.f_coeffs[{2, 1}] = {Rat(0), Rat(2)};
    model.f_coeffs[{2, 0}] = {Rat(0), Rat(5)};

    auto gen = polar_generator(model, default_truncation(3));
    auto chain = build_chain(gen, 3);
    RegionParams params = default_region_params(chain);
    params.phi_star = 10;
    params.eta_star = 5;
    params.r_star = 10 * params.phi_star * params.phi_star;
    const RegionAtlas atlas(chain, params);

    std::string csv = "curve,side,r,theta\n";
    auto add = [&](const std::string& name, int side, double r, double th) {
        csv += name + "," + std::to_string(side) + "," + fmt17(r) + "," + fmt17(th) + "\n";
    };
    const int count = 400;
    for (int a = 0; a < atlas.inner_id(); ++a) {
        const auto pts =
            atlas.boundary_samples(a, a + 1, count, params.r_star, 10 * params.r_star);
        const std::string name = "S" + std::to_string(a) + "|S" + std::to_string(a + 1);
        for (const auto& s : pts) add(name, s.side, s.r, s.theta);
    }
    for (int i = 0; i < count; ++i) {
        const double r =
            params.r_star * std::pow(10.0, double(i) / (count - 1));  // r* to 10 r*
        add("phi4_zero", 0, r, -(0.5 * r + 1) / (r * r));
    }
    atomic_write(run.path("figure1.csv"), csv);
    run.write_report("figure1.json", {{"model", model.to_json()},
                                      {"chain", chain.to_json()},
                                      {"params", params.to_json()}});
    run.write_manifest();
    return 0;
}

}  // namespace

int cli_run(const std::vector<std::string>& args) {
    try {
        Run run{parse(args), args, {}};
        if (!run.opt.params_path.empty())
            apply_params(run.opt, nlohmann::json::parse(run.load_input(run.opt.params_path)));
        std::error_code ec;
        std::filesystem::create_directories(run.opt.out, ec);

        const auto& sub = run.opt.sub;
        if (sub == "decompose") return cmd_decompose(run);
        if (sub == "build") return cmd_build(run);
        if (sub == "verify") return cmd_verify(run);
        if (sub == "simulate") return cmd_simulate(run);
        if (sub == "tail") return cmd_tail(run);
        if (sub == "density") return cmd_density(run);
        if (sub == "dynkin") return cmd_dynkin(run);
        if (sub == "figure1") return cmd_figure1(run);
        throw UsageError("unknown subcommand '" + sub + "'");
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n%s", e.what(), kUsage);
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace stabilyze
