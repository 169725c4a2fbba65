// Command-line front end: config ingestion, experiment dispatch, and
// one-screen summaries. Exit codes: 0 success, 1 validation error, 2
// runtime/numerical error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "metapop/config.hpp"
#include "metapop/csvio.hpp"

namespace fs = std::filesystem;
using namespace metapop;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    long seed = -1;
    int threads = -1;
};

Config load_config(const CommonArgs& args) {
    Config cfg = Config::from_file(args.config_path);
    for (const auto& ov : args.overrides) cfg.apply_override(ov);
    if (args.seed >= 0) cfg.apply_override("seed = " + std::to_string(args.seed));
    if (args.threads >= 0) cfg.apply_override("threads = " + std::to_string(args.threads));
    if (!args.out_dir.empty()) cfg.apply_override("out = " + args.out_dir);
    cfg.check_keys();
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file")->required();
    cmd->add_option("--override", args.overrides, "key=value override (repeatable)");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--threads", args.threads, "worker threads (default: logical cores)");
    cmd->add_option("--out", args.out_dir, "output directory override");
}

void print_checklist(const Checklist& cl, const std::string& title) {
    std::printf("%s\n", title.c_str());
    std::printf("  %-28s %14s %14s %6s %14s\n", "inequality", "lhs", "rhs", "pass", "margin");
    for (const auto& row : cl.rows)
        std::printf("  %-28s %14s %14s %6s %14s\n", row.name.c_str(), fmt_short(row.lhs).c_str(),
                    fmt_short(row.rhs).c_str(), row.pass ? "yes" : "NO",
                    fmt_short(row.margin).c_str());
}

void write_manifest(const Config& cfg, const std::string& out_dir) {
    if (out_dir.empty()) return;
    fs::create_directories(out_dir);
    cfg.write_manifest((fs::path(out_dir) / "manifest").string(),
                       static_cast<std::uint64_t>(cfg.get_long("seed", 1)));
}

int cmd_sample(const Config& cfg) {
    ExperimentSetup s = build_experiment_setup(cfg);
    PatchSet ps = sample_patches(s.landscape, s.n, s.seed);
    std::string out = s.out_dir.empty() ? "." : s.out_dir;
    fs::create_directories(out);
    write_patches_csv((fs::path(out) / "patches.csv").string(), ps);
    write_manifest(cfg, out);
    std::printf("sampled %d patches -> %s/patches.csv\n", ps.n(), out.c_str());
    return 0;
}

int cmd_equilibrium(const Config& cfg) {
    ExperimentSetup s = build_experiment_setup(cfg);
    PatchSet ps = cfg.has("patches.file")
                      ? read_patches_csv(s.landscape, cfg.get_string("patches.file"))
                      : sample_patches(s.landscape, s.n, s.seed);
    PatchSystem sys(ps);
    CouplingMatrix cm = coupling_matrix(sys, s.f);
    FixedPointResult fp = largest_fixed_point(sys, s.f);
    std::string out = s.out_dir.empty() ? "." : s.out_dir;
    fs::create_directories(out);

    std::vector<std::string> header = {"id"};
    for (int a = 0; a < sys.dim(); ++a) header.push_back("x" + std::to_string(a + 1));
    header.push_back("p_star");
    CsvWriter w((fs::path(out) / "equilibrium.csv").string(), header);
    for (int i = 0; i < sys.n(); ++i) {
        std::vector<std::string> cells = {std::to_string(i)};
        for (int a = 0; a < sys.dim(); ++a) cells.push_back(fmt_full(sys.location(i)(a)));
        cells.push_back(fmt_full(fp.p(i)));
        w.row(cells);
    }
    CsvWriter diag((fs::path(out) / "coupling.csv").string(), {"lambda_T", "primitive", "n_edges"});
    diag.row({fmt_full(cm.lambda), cm.primitive ? "1" : "0", std::to_string(cm.n_edges)});

    // optional flow trajectory from the all-ones state, long format
    if (cfg.has("ode.horizon")) {
        OdeOptions opt;
        opt.checkpoints = static_cast<int>(cfg.get_long("ode.checkpoints", 20));
        OdeResult ode = ode_integrate(sys, s.f, Vector::Ones(sys.n()),
                                      cfg.get_double("ode.horizon"), opt);
        CsvWriter tw((fs::path(out) / "trajectory.csv").string(), {"time", "id", "p"});
        for (int c = 0; c < ode.times.size(); ++c)
            for (int i = 0; i < sys.n(); ++i)
                tw.row({fmt_full(ode.times(c)), std::to_string(i), fmt_full(ode.states(c, i))});
    }
    write_manifest(cfg, out);
    std::printf("lambda(T) = %s, primitive = %s, fixed point in %ld iterations\n",
                fmt_short(cm.lambda).c_str(), cm.primitive ? "yes" : "no", fp.iterations);
    return 0;
}

int cmd_approx(const Config& cfg) {
    ExperimentSetup s = build_experiment_setup(cfg);
    const Landscape& L = *s.landscape;
    BoundSpec spec = s.spec;
    DerivedBounds d = derive_bounds(L, s.f, spec, s.grid_step);
    if (spec.alpha2 <= 0) spec.alpha2 = 1.0 - d.eta_theta;
    validate_bound_spec(L, spec, d.eta_theta);
    UpperBoundFn p_plus = upper_bound_fn(L, s.f, spec, s.grid_step);
    LowerBoundFn p_minus = lower_bound_fn(L, s.f, spec, s.grid_step);
    Region theta = Region::ball(spec.theta_center, spec.theta_radius);

    std::string out = s.out_dir.empty() ? "." : s.out_dir;
    fs::create_directories(out);
    std::vector<std::string> header;
    for (int a = 0; a < L.dim(); ++a) header.push_back("z" + std::to_string(a + 1));
    for (const char* c : {"q1", "p_plus", "p_minus"}) header.push_back(c);
    CsvWriter w((fs::path(out) / "approx.csv").string(), header);
    BoundingBox bb = L.domain.bounding_box();
    for (const auto& z : grid_points(bb.lo, bb.hi, L.default_grid_step())) {
        if (!L.domain.contains(z)) continue;
        std::vector<std::string> cells;
        for (int a = 0; a < L.dim(); ++a) cells.push_back(fmt_full(z(a)));
        cells.push_back(fmt_full(solve_q_alpha(L, s.f, z, 1.0)));
        cells.push_back(fmt_full(p_plus(z)));
        cells.push_back(theta.contains(z) ? fmt_full(p_minus(z)) : "");
        w.row(cells);
    }
    write_manifest(cfg, out);
    std::printf("eta_theta = %s, eta_omega = %s, m = %s -> %s/approx.csv\n",
                fmt_short(d.eta_theta).c_str(), fmt_short(d.eta_omega).c_str(),
                fmt_short(d.m).c_str(), out.c_str());
    return 0;
}

int cmd_check(const Config& cfg) {
    ExperimentSetup s = build_experiment_setup(cfg);
    const Landscape& L = *s.landscape;
    validate_landscape(L);
    BoundSpec spec = s.spec;
    DerivedBounds d = derive_bounds(L, s.f, spec, s.grid_step);
    if (spec.alpha2 <= 0) spec.alpha2 = 1.0 - d.eta_theta;
    validate_bound_spec(L, spec, d.eta_theta);

    Checklist ub = check_ub_hypotheses(L, s.f, spec, s.n, &d);
    Checklist lb = check_lb_hypotheses(L, s.f, spec, &d);
    ProbBound ubp = ub_probability_bound(L, s.f, spec, s.n, &d);
    ProbBound lbp = lb_probability_bound(L, s.f, spec, s.n, &d);
    TwoSidedBound ts = two_sided_bound(L, s.f, spec, s.n, &d);

    std::printf("constants: rho_max=%s L_q=%s%s eta_theta=%s eta_omega=%s cbar=%s C4=%s m=%s\n",
                fmt_short(d.lc.rho_max).c_str(), fmt_short(d.lc.L_q).c_str(),
                d.lc.L_rho_estimated ? " (L_rho estimated)" : "", fmt_short(d.eta_theta).c_str(),
                fmt_short(d.eta_omega).c_str(), fmt_short(d.cbar_theta).c_str(),
                fmt_short(d.C4).c_str(), fmt_short(d.m).c_str());
    print_checklist(ub, "upper-bound hypotheses (branch: " + ub.branch + ")");
    print_checklist(lb, "lower-bound hypotheses");
    std::printf("probability bounds: upper %s%s, lower %s%s\n", fmt_short(ubp.value).c_str(),
                ubp.vacuous ? " (vacuous)" : "", fmt_short(lbp.value).c_str(),
                lbp.vacuous ? " (vacuous)" : "");
    if (ts.applicable)
        std::printf("two-sided: radius %s, accuracy %s, probability %s%s\n",
                    fmt_short(ts.theta_m.radius).c_str(), fmt_short(ts.accuracy).c_str(),
                    fmt_short(ts.probability.value).c_str(),
                    ts.probability.vacuous ? " (vacuous)" : "");
    else
        std::printf("two-sided: not applicable (%s)\n", ts.reason.c_str());

    if (!s.out_dir.empty()) {
        fs::create_directories(s.out_dir);
        CsvWriter w((fs::path(s.out_dir) / "checklist.csv").string(),
                    {"name", "lhs", "rhs", "pass", "margin"});
        for (const auto* cl : {&ub, &lb})
            for (const auto& row : cl->rows)
                w.row({row.name, fmt_full(row.lhs), fmt_full(row.rhs), row.pass ? "1" : "0",
                       fmt_full(row.margin)});
        write_manifest(cfg, s.out_dir);
    }
    return 0;
}

int cmd_bounds_experiment(const Config& cfg) {
    ExperimentSetup s = build_experiment_setup(cfg);
    if (s.out_dir.empty()) s.out_dir = "out";
    BoundExperimentReport rep = run_bound_experiment(s);
    write_manifest(cfg, s.out_dir);
    if (!rep.hypotheses_pass) {
        std::printf("*** HYPOTHESES FAIL: report is exploratory, bounds not guaranteed ***\n");
        for (const auto* cl : {&rep.ub_checklist, &rep.lb_checklist})
            for (const auto& row : cl->rows)
                if (!row.pass)
                    std::printf("    %-28s lhs %s > rhs %s\n", row.name.c_str(),
                                fmt_short(row.lhs).c_str(), fmt_short(row.rhs).c_str());
    }
    std::printf("upper event frequency %s (Wilson lower %s), bound %s%s\n",
                fmt_short(rep.ub_frequency).c_str(), fmt_short(rep.ub_wilson.lower).c_str(),
                fmt_short(rep.ub_bound.value).c_str(), rep.ub_bound.vacuous ? " (vacuous)" : "");
    std::printf("lower event frequency %s (Wilson lower %s), bound %s%s\n",
                fmt_short(rep.lb_frequency).c_str(), fmt_short(rep.lb_wilson.lower).c_str(),
                fmt_short(rep.lb_bound.value).c_str(), rep.lb_bound.vacuous ? " (vacuous)" : "");
    if (rep.two_sided.applicable)
        std::printf("accuracy frequency %s at band %s\n",
                    fmt_short(rep.accuracy_frequency).c_str(),
                    fmt_short(rep.two_sided.accuracy).c_str());
    else
        std::printf("two-sided region not applicable (%s)\n", rep.two_sided.reason.c_str());
    std::printf("outputs in %s\n", s.out_dir.c_str());
    return 0;
}

int cmd_scaling(const Config& cfg) {
    ScalingSetup s;
    ExperimentSetup base = build_experiment_setup(cfg);
    s.base = base.landscape;
    s.f = base.f;
    s.theta_center = base.spec.theta_center;
    s.theta_radius = base.spec.theta_radius;
    auto ns = cfg.get_longs("scaling.n_seq");
    s.n_seq.assign(ns.begin(), ns.end());
    s.r_seq = cfg.get_doubles("scaling.r_seq");
    s.gamma1 = cfg.get_double("scaling.gamma1", 0.0);
    s.gamma2 = cfg.get_double("scaling.gamma2", 0.1);
    s.c2 = cfg.get_double("scaling.c2", 0.005);
    s.replicates = static_cast<int>(cfg.get_long("scaling.replicates", 15));
    s.seed = base.seed;
    s.threads = base.threads;
    s.out_dir = base.out_dir.empty() ? "out" : base.out_dir;
    ScalingReport rep = run_scaling_experiment(s);
    write_manifest(cfg, s.out_dir);
    std::printf("%8s %10s %12s %14s %10s\n", "n", "r", "error_scale", "median_error", "ratio");
    for (const auto& pt : rep.points)
        std::printf("%8d %10s %12s %14s %10s\n", pt.schedule.n, fmt_short(pt.schedule.r).c_str(),
                    fmt_short(pt.schedule.error_scale).c_str(),
                    fmt_short(pt.median_max_error).c_str(), fmt_short(pt.error_ratio).c_str());
    return 0;
}

int cmd_concentration(const Config& cfg) {
    ConcentrationSetup s;
    s.landscape = build_landscape(cfg);
    s.n = static_cast<int>(cfg.get_long("n"));
    s.replicates = static_cast<int>(cfg.get_long("concentration.replicates", 1000));
    s.seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
    s.threads = static_cast<int>(cfg.get_long("threads", 0));
    s.out_dir = cfg.get_string("out", "out");
    s.t_grid = cfg.get_doubles("concentration.t_grid");
    std::vector<double> zflat = cfg.get_doubles("concentration.z_grid");
    int d = s.landscape->dim();
    if (zflat.size() % d != 0)
        throw std::invalid_argument("config: concentration.z_grid must list d coords per point");
    for (size_t i = 0; i + d <= zflat.size(); i += d) {
        Position z(d);
        for (int a = 0; a < d; ++a) z(a) = zflat[i + a];
        s.z_grid.push_back(z);
    }
    ConcentrationReport rep = run_concentration_experiment(s);
    write_manifest(cfg, s.out_dir);
    std::printf("%-20s %8s %12s %12s %6s\n", "z", "t", "bound", "frequency", "holds");
    for (const auto& c : rep.cells) {
        std::string zs;
        for (int a = 0; a < d; ++a) zs += (a ? " " : "") + fmt_short(c.z(a));
        std::printf("%-20s %8s %12s %12s %6s\n", zs.c_str(), fmt_short(c.t).c_str(),
                    fmt_short(c.bound).c_str(), fmt_short(c.frequency).c_str(),
                    c.holds ? "yes" : "NO");
    }
    return rep.all_hold ? 0 : 2;
}

int cmd_stochastic(const Config& cfg) {
    StochasticSetup s;
    s.landscape = build_landscape(cfg);
    s.f = build_colonization(cfg);
    auto ns = cfg.get_longs("stochastic.n_seq");
    s.n_seq.assign(ns.begin(), ns.end());
    s.t_end = cfg.get_double("stochastic.t_end", 50.0);
    s.window = cfg.get_double("stochastic.window", 10.0);
    s.replicates = static_cast<int>(cfg.get_long("stochastic.replicates", 8));
    s.seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
    s.threads = static_cast<int>(cfg.get_long("threads", 0));
    s.out_dir = cfg.get_string("out", "out");
    StochasticReport rep = run_stochastic_comparison(s);

    // event list of the first replicate at the first size (stream-identical
    // to the one used inside the experiment)
    if (!s.n_seq.empty()) {
        int n0 = s.n_seq.front();
        std::uint64_t rs = replicate_seed(s.seed, 0);
        PatchSet ps = sample_patches(s.landscape, n0, rs);
        PatchSystem sys(ps);
        FixedPointResult fp = largest_fixed_point(sys, s.f);
        CounterRng init = CounterRng::keyed({rs, 0x1717ull});
        IntVector x0(n0);
        for (int i = 0; i < n0; ++i) x0(i) = init.uniform() < fp.p(i) ? 1 : 0;
        CounterRng ev = CounterRng::keyed({rs, 0x2727ull});
        CtmcTrajectory tr = ctmc_simulate(sys, s.f, x0, s.t_end, ev);
        CsvWriter w((fs::path(s.out_dir) / "events.csv").string(),
                    {"time", "patch_id", "new_state"});
        for (const auto& e : tr.events)
            w.row({fmt_full(e.time), std::to_string(e.patch), std::to_string(e.new_state)});
    }

    write_manifest(cfg, s.out_dir);
    std::printf("%8s %18s %18s %8s\n", "n", "population dev", "sup deviation", "extinct");
    for (const auto& pt : rep.points)
        std::printf("%8d %18s %18s %8d\n", pt.n, fmt_short(pt.population_deviation).c_str(),
                    fmt_short(pt.mean_sup_deviation).c_str(), pt.extinct_replicates);
    return 0;
}

int cmd_report(const Config& cfg) {
    ExperimentSetup s = build_experiment_setup(cfg);
    if (s.out_dir.empty())
        throw std::invalid_argument("report: requires out = directory with experiment outputs");
    int mismatches = verify_bound_experiment_outputs(s);
    std::printf("re-derived event flags from persisted equilibria: %d mismatching replicates\n",
                mismatches);
    return mismatches == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite metapopulation equilibria, local approximation bounds, and their "
                 "Monte Carlo verification"};
    app.require_subcommand(1);

    CommonArgs args;
    int (*handler)(const Config&) = nullptr;

    struct Sub {
        const char* name;
        const char* desc;
        int (*fn)(const Config&);
    };
    const Sub subs[] = {
        {"sample", "sample patch locations", cmd_sample},
        {"equilibrium", "compute the deterministic equilibrium", cmd_equilibrium},
        {"approx", "tabulate q1 and the envelopes on a grid", cmd_approx},
        {"check", "evaluate hypothesis checklists and constants", cmd_check},
        {"bounds-experiment", "replicate envelope verification experiment", cmd_bounds_experiment},
        {"scaling", "shrinking-radius scaling study", cmd_scaling},
        {"concentration", "empirical-measure deviation tails", cmd_concentration},
        {"stochastic", "stochastic occupancy vs deterministic equilibrium", cmd_stochastic},
        {"report", "re-derive event flags from persisted outputs", cmd_report},
    };
    for (const auto& sub : subs) {
        CLI::App* c = app.add_subcommand(sub.name, sub.desc);
        add_common(c, args);
        c->callback([&handler, fn = sub.fn]() { handler = fn; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg = load_config(args);
        return handler(cfg);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 2;
    }
}
