// planar-sis: simulation, closure solvers, phase diagrams and percolation
// constants for SIS epidemics on planar Poisson point processes.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "planar_sis/io.hpp"

namespace fs = std::filesystem;
using namespace planar_sis;
using io::json;

namespace {

struct ModelOpts {
    double alpha = 1.0, beta = 1.0, gamma = 0.0, lambda = 1.0, a = 1.0;
    double mu = 0.0;  // > 0: sets a from mu = lambda pi a^2

    void add(CLI::App* app) {
        app->add_option("--alpha", alpha, "pairwise infection rate")->capture_default_str();
        app->add_option("--beta", beta, "recovery rate")->capture_default_str();
        app->add_option("--gamma", gamma, "jump rate")->capture_default_str();
        app->add_option("--lambda", lambda, "point intensity")->capture_default_str();
        auto* oa = app->add_option("--a", a, "infection radius")->capture_default_str();
        app->add_option("--mu", mu, "mean degree lambda*pi*a^2; overrides --a")->excludes(oa);
    }

    ModelParams resolve() const {
        ModelParams p{alpha, beta, gamma, lambda, a};
        if (mu > 0) p.a = std::sqrt(mu / (std::numbers::pi * lambda));
        p.validate();
        return p;
    }
};

// "lo:hi:step" or a comma list
std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
        std::vector<double> f;
        std::stringstream ss(s);
        for (std::string t; std::getline(ss, t, ':');) f.push_back(std::stod(t));
        if (f.size() != 3 || !(f[2] > 0) || f[1] < f[0]) throw ConfigError("range must be lo:hi:step with step > 0: " + s);
        auto n = static_cast<std::size_t>(std::floor((f[1] - f[0]) / f[2] + 1e-9));
        for (std::size_t k = 0; k <= n; ++k) out.push_back(f[0] + static_cast<double>(k) * f[2]);
        return out;
    }
    std::stringstream ss(s);
    for (std::string t; std::getline(ss, t, ',');)
        if (!t.empty()) out.push_back(std::stod(t));
    if (out.empty()) throw ConfigError("empty value list: " + s);
    return out;
}

InitialCondition parse_init(const std::string& kind, double p0) {
    if (kind == "all") return InitialCondition::all();
    if (kind == "single") return InitialCondition::single();
    return InitialCondition::fraction(p0);
}

struct Common {
    std::string out = ".";
    unsigned jobs = default_jobs();
    std::vector<std::string> failures;

    fs::path path(const std::string& name) const { return fs::path(out) / name; }
    void write(const std::string& name, const std::string& content) const { io::write_atomic(path(name), content); }
};

int finish(const Common& c) {
    if (c.failures.empty()) return 0;
    json j = {{"failures", c.failures}};
    c.write("failures.json", j.dump(2) + "\n");
    std::cerr << j.dump() << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SIS epidemics on planar Poisson point processes with far random-waypoint motion"};
    app.set_config("--config", "", "TOML file with option values; command-line flags take precedence");
    app.require_subcommand(1);
    Common common;
    app.add_option("--out", common.out, "output directory")->capture_default_str();
    app.add_option("--jobs", common.jobs, "worker threads (default from PLANAR_SIS_JOBS)")->capture_default_str();

    // simulate
    auto* sim = app.add_subcommand("simulate", "exact event-driven simulation on a torus");
    ModelOpts sim_m;
    sim_m.add(sim);
    double L = 40, t_max = 100, warmup = -1, interval = -1, p0 = 0.5, bin_width = -1;
    std::uint64_t seed = 1;
    std::string init = "all";
    bool skip_snapshots = false;
    sim->add_option("--L", L, "torus side")->capture_default_str();
    sim->add_option("--t-max", t_max, "time horizon")->capture_default_str();
    sim->add_option("--warmup", warmup, "discarded initial time (default min(20/beta, t_max/2))");
    sim->add_option("--snapshot-interval", interval, "time between snapshots (default 1/beta)");
    sim->add_option("--seed", seed)->capture_default_str();
    sim->add_option("--init", init, "initial condition")->check(CLI::IsMember({"all", "single", "fraction"}))->capture_default_str();
    sim->add_option("--p0", p0, "initial infected fraction for --init fraction")->capture_default_str();
    sim->add_option("--bin-width", bin_width, "PCF bin width (default a/20)");
    sim->add_flag("--skip-snapshot-csv", skip_snapshots, "do not write snapshots.csv");

    // solve
    auto* solve = app.add_subcommand("solve", "closure systems for the stationary infected fraction");
    ModelOpts sol_m;
    sol_m.add(solve);
    std::string spec = "m2bi", method = "poly", which_case = "motion";
    double c_override = 0, q_override = 0;
    GridConfig grid;
    solve->add_option("--spec", spec, "closure code")->check(CLI::IsMember(registered_closures()))->capture_default_str();
    solve->add_option("--method", method)->check(CLI::IsMember({"poly", "functional"}))->capture_default_str();
    solve->add_option("--case", which_case)->check(CLI::IsMember({"motion", "no-motion"}))->capture_default_str();
    solve->add_option("--c", c_override, "cluster pair correlation (default 1/q)");
    solve->add_option("--q", q_override, "infinite-cluster probability (default from the Lambert equation)");
    solve->add_option("--grid-h", grid.h_over_a, "grid step in units of a")->capture_default_str();
    solve->add_option("--grid-rmax", grid.rmax_over_a, "grid range in units of a")->capture_default_str();
    solve->add_option("--damping", grid.damping)->capture_default_str();
    solve->add_option("--tol", grid.tol)->capture_default_str();
    solve->add_option("--max-iter", grid.max_iter)->capture_default_str();

    // phase
    auto* phase = app.add_subcommand("phase", "critical values and (mu, beta) regions");
    phase->require_subcommand(0, 1);
    std::string ph_spec = "m2bi", mu_range, beta_range = "4.6:5.0:0.05", gamma_range = "0:20:0.1";
    double ph_alpha = 1, ph_mu = 5;
    phase->add_option("--spec", ph_spec)->check(CLI::IsMember({"m2bi", "b1i"}))->capture_default_str();
    phase->add_option("--alpha", ph_alpha)->capture_default_str();
    phase->add_option("--mu", ph_mu, "mean degree for the curves")->capture_default_str();
    phase->add_option("--mu-range", mu_range, "mu grid for the region sweep (default: --mu only)");
    phase->add_option("--beta-range", beta_range, "beta grid lo:hi:step or list")->capture_default_str();
    phase->add_option("--gamma-range", gamma_range, "gamma grid for the beta_c curve")->capture_default_str();
    auto* classify_cmd = phase->add_subcommand("classify", "region of a single (mu, beta) point");
    std::string cl_spec = "m2bi";
    double cl_mu = 5, cl_beta = 4.8, cl_alpha = 1;
    classify_cmd->add_option("--spec", cl_spec)->check(CLI::IsMember({"m2bi", "b1i"}))->capture_default_str();
    classify_cmd->add_option("--mu", cl_mu)->capture_default_str();
    classify_cmd->add_option("--beta", cl_beta)->capture_default_str();
    classify_cmd->add_option("--alpha", cl_alpha)->capture_default_str();

    // mtta
    auto* mtta = app.add_subcommand("mtta", "mean time till absorption over a parameter sweep");
    ModelOpts mt_m;
    mt_m.add(mtta);
    std::string mt_param = "gamma", mt_values = "0.5,1.5,3,8", mt_L = "20", mt_init = "all";
    std::size_t mt_reps = 10;
    double mt_cap = 1e5, mt_p0 = 0.5;
    std::uint64_t mt_seed = 1;
    mtta->add_option("--param", mt_param, "swept parameter")->check(CLI::IsMember({"gamma", "beta"}))->capture_default_str();
    mtta->add_option("--values", mt_values, "parameter grid lo:hi:step or list")->capture_default_str();
    mtta->add_option("--L", mt_L, "torus sides (list for growth in L)")->capture_default_str();
    mtta->add_option("--replications", mt_reps)->capture_default_str();
    mtta->add_option("--seed", mt_seed)->capture_default_str();
    mtta->add_option("--cap", mt_cap, "censoring time")->capture_default_str();
    mtta->add_option("--init", mt_init)->check(CLI::IsMember({"all", "single", "fraction"}))->capture_default_str();
    mtta->add_option("--p0", mt_p0)->capture_default_str();

    // percolation
    auto* perc = app.add_subcommand("percolation", "Boolean-model cluster constants q, c and pi(r)");
    ModelOpts pc_m;
    pc_m.add(perc);
    PiRecursionConfig pi_cfg;
    double uf_L = 0;
    std::uint64_t uf_seed = 1;
    perc->add_option("--grid-h", pi_cfg.h_over_a, "grid step in units of a")->capture_default_str();
    perc->add_option("--grid-rmax", pi_cfg.rmax_over_a, "grid range in units of a")->capture_default_str();
    perc->add_option("--union-find-L", uf_L, "also estimate q from a sampled configuration on this torus");
    perc->add_option("--seed", uf_seed)->capture_default_str();

    // pcf
    auto* pcf = app.add_subcommand("pcf", "pair correlation functions from a snapshot CSV");
    ModelOpts pf_m;
    pf_m.add(pcf);
    std::string snap_file;
    double pf_L = 40, pf_bin = -1, pf_rmax = -1;
    pcf->add_option("--snapshots", snap_file, "CSV with header t,id,x,y,state")->required()->check(CLI::ExistingFile);
    pcf->add_option("--L", pf_L, "torus side")->capture_default_str();
    pcf->add_option("--bin-width", pf_bin, "default a/20");
    pcf->add_option("--r-max", pf_rmax, "default 5a");

    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(common.out);
        common.write("resolved_config.toml", app.config_to_str(true, false));

        if (*sim) {
            SimConfig cfg;
            cfg.params = sim_m.resolve();
            cfg.dom = TorusDomain{L};
            cfg.seed = seed;
            cfg.t_max = t_max;
            cfg.warmup = warmup;
            cfg.snapshot_interval = interval;
            cfg.initial_condition = parse_init(init, p0);
            cfg.record_events = true;
            RunResult r = run(cfg);
            json j = io::to_json(r.summary);
            j["warmup"] = r.warmup;
            j["t_max"] = r.t_max;
            j["L"] = L;
            LittleResult lr = little_check(r);
            j["little_ratio"] = lr.available ? json(lr.ratio) : json(nullptr);
            double bw = bin_width > 0 ? bin_width : cfg.params.a / 20;
            if (!r.snapshots.empty()) {
                double rmax = std::min(5 * cfg.params.a, 0.5 * L);
                PcfEstimate est = estimate_pcf(r.snapshots, cfg.params, cfg.dom, bw, rmax);
                common.write("pcf.csv", io::pcf_csv(est));
                j["w_plateau"] = w_plateau(est, cfg.params.a);
            }
            common.write("summary.json", j.dump(2) + "\n");
            common.write("series.csv", io::series_csv(r.series));
            if (!skip_snapshots) common.write("snapshots.csv", io::snapshots_csv(r.snapshots));
            std::cout << j.dump() << "\n";
            if (r.summary.censored) common.failures.push_back("simulation censored");
        } else if (*solve) {
            ModelParams p = sol_m.resolve();
            ClosureSpec cs = closure_by_name(spec);
            bool motion = which_case == "motion";
            double q = 1, c = 1;
            std::optional<ClusterApprox> ca;
            if (!motion) {
                ca = cluster_constants(p);
                q = q_override > 0 ? q_override : ca->q;
                c = c_override > 0 ? c_override : (q > 0 ? 1 / q : 0);
                if (!(q > 0)) throw ConfigError("no infinite cluster at this mean degree; pass --q and --c");
            }
            if (method == "poly") {
                ClosureSolution s = motion ? solve_motion_poly(cs, p) : solve_no_motion_poly(cs, p, c, q);
                json j = io::to_json(s, p);
                if (!motion) j["q"] = q, j["c"] = c;
                common.write("solution.json", j.dump(2) + "\n");
                std::cout << j.dump() << "\n";
                if (s.branch == Branch::Unresolved) common.failures.push_back("polynomial system unresolved");
            } else {
                SolveReport rep;
                if (motion) {
                    rep = solve_motion(cs, p, grid);
                } else {
                    RadialFunction cr = c_override > 0 ? RadialFunction::constant(c) : ca->c_radial();
                    rep = solve_no_motion(cs, p, cr, q, grid);
                }
                json j = io::to_json(rep);
                j["spec"] = spec;
                j["params"] = io::to_json(p);
                common.write("report.json", j.dump(2) + "\n");
                if (!rep.degenerate) common.write("pcf.csv", io::pcf_csv(rep.pcf));
                std::cout << j.dump() << "\n";
                if (!rep.converged && !rep.degenerate) common.failures.push_back("functional iteration did not converge");
                if (rep.degenerate) common.failures.push_back("functional iteration collapsed to p = 0");
            }
        } else if (*phase) {
            if (*classify_cmd) {
                PhasePoint pt = classify(critical_spec(cl_spec), cl_mu, cl_beta, cl_alpha);
                json j = {{"mu", pt.mu}, {"beta", pt.beta}, {"alpha", pt.alpha}, {"region", to_string(pt.region)},
                          {"boolean_supercritical", pt.boolean_supercritical},
                          {"gamma_minus", pt.gamma_minus ? json(*pt.gamma_minus) : json(nullptr)},
                          {"gamma_plus", pt.gamma_plus ? json(*pt.gamma_plus) : json(nullptr)}};
                common.write("classify.json", j.dump(2) + "\n");
                std::cout << j.dump() << "\n";
            } else {
                CriticalSpec s = critical_spec(ph_spec);
                auto betas = parse_grid(beta_range);
                auto mus = mu_range.empty() ? std::vector<double>{ph_mu} : parse_grid(mu_range);
                auto pts = sweep(s, mus, betas, ph_alpha);
                common.write("phase.csv", io::phase_csv(pts));
                std::vector<std::pair<double, double>> gm, gp, bc;
                for (double b : betas) {
                    auto cr = criticals(s, ph_mu, b, ph_alpha);
                    if (cr.gamma_c) {
                        gm.emplace_back(b, cr.gamma_c->minus);
                        gp.emplace_back(b, cr.gamma_c->plus);
                    }
                }
                for (double g : parse_grid(gamma_range)) {
                    BetaC r = beta_c(s, ph_mu, g, ph_alpha);
                    if (r.unresolved) common.failures.push_back("beta_c unresolved at gamma=" + io::num(g));
                    else bc.emplace_back(g, r.value);
                }
                common.write("gamma_c_minus.csv", io::two_column_csv("beta", "gamma_c_minus", gm));
                common.write("gamma_c_plus.csv", io::two_column_csv("beta", "gamma_c_plus", gp));
                common.write("beta_c.csv", io::two_column_csv("gamma", "beta_c", bc));
                auto cr = criticals(s, ph_mu, betas.front(), ph_alpha);
                json j = {{"spec", ph_spec}, {"mu", ph_mu}, {"alpha", ph_alpha},
                          {"mu0", s == CriticalSpec::M2BI ? json(cr.mu0) : json(nullptr)},
                          {"beta0", cr.beta0 ? json(*cr.beta0) : json(nullptr)},
                          {"gamma0", cr.gamma0 ? json(*cr.gamma0) : json(nullptr)}};
                common.write("criticals.json", j.dump(2) + "\n");
                std::cout << j.dump() << "\n";
            }
        } else if (*mtta) {
            ModelParams base = mt_m.resolve();
            std::vector<MttaCell> cells;
            for (double side : parse_grid(mt_L))
                for (double v : parse_grid(mt_values)) {
                    MttaCell cell;
                    cell.parameter_value = v;
                    cell.config.params = base;
                    (mt_param == "gamma" ? cell.config.params.gamma : cell.config.params.beta) = v;
                    cell.config.params.validate();
                    cell.config.dom = TorusDomain{side};
                    cell.config.extinction_cap = mt_cap;
                    cell.config.initial_condition = parse_init(mt_init, mt_p0);
                    cells.push_back(cell);
                }
            auto recs = mtta_curve(cells, mt_reps, mt_seed, common.jobs);
            common.write("mtta.csv", io::mtta_csv(recs));
            std::cout << io::mtta_csv(recs);
            for (const auto& r : recs)
                if (r.censored_n > 0)
                    common.failures.push_back("censored samples at " + mt_param + "=" + io::num(r.parameter_value) +
                                              ", L=" + io::num(r.L));
        } else if (*perc) {
            ModelParams p = pc_m.resolve();
            ClusterApprox ca = cluster_constants(p, pi_cfg);
            json j = io::to_json(ca);
            j["pi_converged"] = ca.pi_converged;
            if (uf_L > 0) {
                TorusDomain dom{uf_L};
                dom.validate(p.a);
                j["q_union_find"] = estimate_q_union_find(p.lambda, p.a, dom, uf_seed);
            }
            common.write("percolation.json", j.dump(2) + "\n");
            common.write("pi.csv", io::radial_csv(ca.pi, "pi"));
            std::cout << j.dump() << "\n";
            if (!ca.pi_converged) common.failures.push_back("pi recursion did not converge");
        } else if (*pcf) {
            ModelParams p = pf_m.resolve();
            std::ifstream in(snap_file);
            auto snaps = io::read_snapshots_csv(in);
            TorusDomain dom{pf_L};
            dom.validate(p.a);
            double bw = pf_bin > 0 ? pf_bin : p.a / 20;
            PcfEstimate est = estimate_pcf(snaps, p, dom, bw, pf_rmax);
            double inf = 0, tot = 0;
            for (const auto& s : snaps) {
                inf += static_cast<double>(s.infected());
                tot += static_cast<double>(s.state.size());
            }
            double pbar = tot > 0 ? inf / tot : 0.0;
            double worst = 0;
            for (double r : check_superposition(est, pbar))
                if (std::isfinite(r)) worst = std::max(worst, std::fabs(r));
            json j = {{"snapshots", est.snapshots}, {"p", pbar}, {"w_plateau", w_plateau(est, p.a)},
                      {"superposition_max_abs", worst}, {"cross_available", est.cross_available}};
            common.write("pcf.csv", io::pcf_csv(est));
            common.write("pcf_summary.json", j.dump(2) + "\n");
            std::cout << j.dump() << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return finish(common);
}
