#include "metapop/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "metapop/csvio.hpp"
#include "metapop/rng.hpp"

namespace metapop {

void parallel_for(int count, int threads, const std::function<void(int)>& task) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

WilsonInterval wilson_interval(long k, long n) {
    const double z = 1.959963984540054;  // 97.5% normal quantile
    if (n <= 0) return {};
    double p = double(k) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    WilsonInterval w{std::max(0.0, center - half), std::min(1.0, center + half)};
    if (k == 0) w.lower = 0.0;
    if (k == n) w.upper = 1.0;
    return w;
}

std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
    return CounterRng::keyed({seed, 0x5eedull, static_cast<std::uint64_t>(replicate)}).next_u64();
}

static void write_equilibrium_csv(const std::string& path, const PatchSet& ps, const Vector& p) {
    const int d = static_cast<int>(ps.locations.cols());
    std::vector<std::string> header = {"id"};
    for (int a = 0; a < d; ++a) header.push_back("x" + std::to_string(a + 1));
    header.push_back("p_star");
    CsvWriter w(path, header);
    for (int i = 0; i < ps.n(); ++i) {
        std::vector<std::string> cells = {std::to_string(i)};
        for (int a = 0; a < d; ++a) cells.push_back(fmt_full(ps.locations(i, a)));
        cells.push_back(fmt_full(p(i)));
        w.row(cells);
    }
}

static void write_checklist_csv(const std::string& path, const Checklist& ub,
                                const Checklist& lb) {
    CsvWriter w(path, {"name", "lhs", "rhs", "pass", "margin"});
    auto dump = [&](const std::string& prefix, const Checklist& cl) {
        for (const auto& row : cl.rows)
            w.row({prefix + row.name, fmt_full(row.lhs), fmt_full(row.rhs),
                   row.pass ? "1" : "0", fmt_full(row.margin)});
    };
    dump("ub.", ub);
    dump("lb.", lb);
}

BoundExperimentReport run_bound_experiment(const ExperimentSetup& setup) {
    const Landscape& L = *setup.landscape;
    BoundExperimentReport rep;

    BoundSpec spec = setup.spec;
    rep.derived = derive_bounds(L, setup.f, spec, setup.grid_step);
    if (spec.alpha2 <= 0) spec.alpha2 = 1.0 - rep.derived.eta_theta;  // two-sided default
    validate_bound_spec(L, spec, rep.derived.eta_theta);
    setup.f.validate();

    rep.ub_checklist = check_ub_hypotheses(L, setup.f, spec, setup.n, &rep.derived);
    rep.lb_checklist = check_lb_hypotheses(L, setup.f, spec, &rep.derived);
    rep.hypotheses_pass = rep.ub_checklist.all_pass && rep.lb_checklist.all_pass;
    rep.ub_bound = ub_probability_bound(L, setup.f, spec, setup.n, &rep.derived);
    rep.lb_bound = lb_probability_bound(L, setup.f, spec, setup.n, &rep.derived);
    rep.two_sided = two_sided_bound(L, setup.f, spec, setup.n, &rep.derived);

    double h = setup.grid_step > 0 ? setup.grid_step : L.default_grid_step();
    UpperBoundFn p_plus(QGrid(L, setup.f, spec.alpha1, h, rep.derived.lc.L_q), 1.0 - spec.alpha2);
    QGrid q_bp(L, setup.f, spec.beta_prime, h, rep.derived.lc.L_q);
    LowerBoundFn p_minus(std::move(q_bp), spec.theta_center, spec.theta_radius, rep.derived.m);
    QGrid q_one(L, setup.f, 1.0, h, rep.derived.lc.L_q);

    const Region theta = Region::ball(spec.theta_center, spec.theta_radius);
    const Region theta_m = rep.two_sided.applicable ? rep.two_sided.theta_m
                                                    : Region::ball(spec.theta_center, 0.0);

    rep.replicates.resize(setup.replicates);
    std::vector<Vector> equilibria(setup.persist_equilibria ? setup.replicates : 0);
    std::vector<PatchSet> patch_sets(setup.persist_equilibria ? setup.replicates : 0);

    parallel_for(setup.replicates, setup.threads, [&](int k) {
        auto t0 = std::chrono::steady_clock::now();
        ReplicateRecord rec;
        rec.replicate = k;
        rec.seed = replicate_seed(setup.seed, k);
        PatchSet ps = sample_patches(setup.landscape, setup.n, rec.seed);
        PatchSystem sys(ps);
        if (setup.record_coupling) {
            CouplingMatrix cm = coupling_matrix(sys, setup.f);
            rec.lambda = cm.lambda;
            rec.primitive = cm.primitive;
        }
        FixedPointResult fp = largest_fixed_point(sys, setup.f);
        rec.fp_iterations = fp.iterations;

        bool ub = true, lb = true;
        double max_err = 0;
        int in_tm = 0;
        for (int i = 0; i < sys.n(); ++i) {
            Position z = sys.location(i);
            if (fp.p(i) > p_plus(z)) ub = false;
            if (theta.contains(z) && fp.p(i) < p_minus(z)) lb = false;
            if (theta_m.radius > 0 && theta_m.contains(z)) {
                ++in_tm;
                max_err = std::max(max_err, std::abs(fp.p(i) - q_one(z)));
            }
        }
        rec.ub_holds = ub;
        rec.lb_holds = lb;
        rec.max_interior_error = max_err;
        rec.patches_in_theta_m = in_tm;
        rec.runtime_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.replicates[k] = rec;
        if (setup.persist_equilibria) {
            equilibria[k] = fp.p;
            patch_sets[k] = std::move(ps);
        }
    });

    long ub_count = 0, lb_count = 0, acc_count = 0;
    for (const auto& r : rep.replicates) {
        ub_count += r.ub_holds;
        lb_count += r.lb_holds;
        acc_count += (!rep.two_sided.applicable || r.max_interior_error <= rep.two_sided.accuracy);
    }
    const long R = setup.replicates;
    rep.ub_frequency = double(ub_count) / R;
    rep.lb_frequency = double(lb_count) / R;
    rep.accuracy_frequency = double(acc_count) / R;
    rep.ub_wilson = wilson_interval(ub_count, R);
    rep.lb_wilson = wilson_interval(lb_count, R);
    rep.accuracy_wilson = wilson_interval(acc_count, R);

    if (!setup.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(setup.out_dir);
        auto path = [&](const std::string& name) { return (fs::path(setup.out_dir) / name).string(); };

        write_checklist_csv(path("checklist.csv"), rep.ub_checklist, rep.lb_checklist);

        CsvWriter reps(path("replicates.csv"),
                       {"replicate", "seed", "lambda_T", "primitive", "ub_holds", "lb_holds",
                        "max_interior_error", "patches_in_theta_m", "fp_iterations"});
        for (const auto& r : rep.replicates)
            reps.row({std::to_string(r.replicate), std::to_string(r.seed), fmt_full(r.lambda),
                      r.primitive ? "1" : "0", r.ub_holds ? "1" : "0", r.lb_holds ? "1" : "0",
                      fmt_full(r.max_interior_error), std::to_string(r.patches_in_theta_m),
                      std::to_string(r.fp_iterations)});

        CsvWriter agg(path("report.csv"), {"name", "value"});
        agg.row({"n", std::to_string(setup.n)});
        agg.row({"replicates", std::to_string(setup.replicates)});
        agg.row({"hypotheses_pass", rep.hypotheses_pass ? "1" : "0"});
        agg.row({"ub_probability_bound", fmt_full(rep.ub_bound.value)});
        agg.row({"ub_bound_vacuous", rep.ub_bound.vacuous ? "1" : "0"});
        agg.row({"lb_probability_bound", fmt_full(rep.lb_bound.value)});
        agg.row({"lb_bound_vacuous", rep.lb_bound.vacuous ? "1" : "0"});
        agg.row({"two_sided_applicable", rep.two_sided.applicable ? "1" : "0"});
        agg.row({"two_sided_accuracy", fmt_full(rep.two_sided.accuracy)});
        agg.row({"two_sided_probability", fmt_full(rep.two_sided.probability.value)});
        agg.row({"ub_frequency", fmt_full(rep.ub_frequency)});
        agg.row({"ub_wilson_lower", fmt_full(rep.ub_wilson.lower)});
        agg.row({"lb_frequency", fmt_full(rep.lb_frequency)});
        agg.row({"lb_wilson_lower", fmt_full(rep.lb_wilson.lower)});
        agg.row({"accuracy_frequency", fmt_full(rep.accuracy_frequency)});
        agg.row({"accuracy_wilson_lower", fmt_full(rep.accuracy_wilson.lower)});
        agg.row({"eta_theta", fmt_full(rep.derived.eta_theta)});
        agg.row({"eta_omega", fmt_full(rep.derived.eta_omega)});
        agg.row({"cbar_theta", fmt_full(rep.derived.cbar_theta)});
        agg.row({"C4", fmt_full(rep.derived.C4)});
        agg.row({"m", fmt_full(rep.derived.m)});
        agg.row({"alpha2_used", fmt_full(spec.alpha2)});

        if (setup.persist_equilibria) {
            for (int k = 0; k < setup.replicates; ++k)
                write_equilibrium_csv(path("equilibrium_" + std::to_string(k) + ".csv"),
                                      patch_sets[k], equilibria[k]);
        }
    }
    return rep;
}

ScalingReport run_scaling_experiment(const ScalingSetup& setup) {
    const Landscape& base = *setup.base;
    std::vector<double> phi;
    for (int n : setup.n_seq) phi.push_back(std::log(double(n)));

    // constant-eta choice: the boundary viability level does not move with r
    Landscape first = base;
    first.r = setup.r_seq.front();
    double eta_omega = eta(first, setup.f, Region::whole_domain());

    ScalingReport out;
    out.schedule = scaling_schedule(setup.n_seq, setup.r_seq, phi, setup.gamma1, setup.gamma2,
                                       setup.c2, eta_omega, first, setup.f, setup.theta_radius);

    for (size_t k = 0; k < setup.n_seq.size(); ++k) {
        const SchedulePoint& sp = out.schedule.points[k];
        auto L = std::make_shared<Landscape>(base);
        L->r = sp.r;

        LandscapeConstants lc = landscape_constants(*L, setup.f);
        QGrid q_one(*L, setup.f, 1.0, L->default_grid_step(), lc.L_q);
        double w = sp.excluded_width;
        Region inner = Region::ball(setup.theta_center, std::max(0.0, setup.theta_radius - w));

        std::vector<double> errs(setup.replicates);
        parallel_for(setup.replicates, setup.threads, [&](int rix) {
            PatchSet ps = sample_patches(L, sp.n, replicate_seed(setup.seed + k, rix));
            PatchSystem sys(ps);
            FixedPointResult fp = largest_fixed_point(sys, setup.f);
            double max_err = 0;
            for (int i = 0; i < sys.n(); ++i) {
                Position z = sys.location(i);
                if (inner.contains(z))
                    max_err = std::max(max_err, std::abs(fp.p(i) - q_one(z)));
            }
            errs[rix] = max_err;
        });
        std::sort(errs.begin(), errs.end());
        ScalingPoint pt;
        pt.schedule = sp;
        pt.replicates_used = setup.replicates;
        pt.median_max_error = errs[errs.size() / 2];
        pt.error_ratio = pt.median_max_error / sp.error_scale;
        pt.excluded_fraction =
            1.0 - std::pow(std::max(0.0, setup.theta_radius - w) / setup.theta_radius,
                           base.dim());
        out.points.push_back(pt);
    }

    if (!setup.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(setup.out_dir);
        CsvWriter w((fs::path(setup.out_dir) / "scaling.csv").string(),
                    {"n", "r", "phi", "alpha1", "beta", "beta_prime", "m", "error_scale",
                     "median_max_error", "error_ratio", "excluded_fraction", "growth_ok"});
        for (const auto& pt : out.points)
            w.row({std::to_string(pt.schedule.n), fmt_full(pt.schedule.r), fmt_full(pt.schedule.phi),
                   fmt_full(pt.schedule.alpha1), fmt_full(pt.schedule.beta),
                   fmt_full(pt.schedule.beta_prime), fmt_full(pt.schedule.m),
                   fmt_full(pt.schedule.error_scale), fmt_full(pt.median_max_error),
                   fmt_full(pt.error_ratio), fmt_full(pt.excluded_fraction),
                   pt.schedule.growth_ok ? "1" : "0"});
    }
    return out;
}

ConcentrationReport run_concentration_experiment(const ConcentrationSetup& setup) {
    const Landscape& L = *setup.landscape;
    const int d = L.dim();
    const double H = L.emigration.upper;
    LandscapeConstants lc{};
    lc.C2 = 1.0 / (3.0 * L.kernel.c_max * L.kernel.c_max * L.density.upper * unit_ball_volume(d));
    const double dens = (setup.n - 1) * std::pow(L.r, d) / L.area;

    double t_cap = H * L.kernel.c_max * L.density.upper * unit_ball_volume(d);
    for (double t : setup.t_grid)
        if (t > t_cap + 1e-12)
            throw std::invalid_argument("concentration: t exceeds H c_max sigma_max v_d");

    std::vector<double> rho_z;
    for (const auto& z : setup.z_grid) rho_z.push_back(rho(L, z));

    const size_t Z = setup.z_grid.size(), T = setup.t_grid.size();
    std::vector<std::vector<long>> counts(setup.replicates,
                                          std::vector<long>(Z * T, 0));
    const double rdinv = std::pow(L.r, -d);
    parallel_for(setup.replicates, setup.threads, [&](int k) {
        PatchSet ps = sample_patches(setup.landscape, setup.n, replicate_seed(setup.seed, k));
        for (size_t zi = 0; zi < Z; ++zi) {
            const Position& z = setup.z_grid[zi];
            double acc = 0;
            // patch n-1 is the excluded one
            for (int j = 0; j + 1 < setup.n; ++j) {
                Position y = ps.locations.row(j);
                double dist = (z - y).norm();
                if (dist >= L.r) continue;
                acc += L.emigration(y) * rdinv * L.kernel(z, dist / L.r);
            }
            acc *= L.area / (setup.n - 1);
            double dev = std::abs(acc - rho_z[zi]);
            for (size_t ti = 0; ti < T; ++ti)
                if (dev >= setup.t_grid[ti]) counts[k][zi * T + ti] = 1;
        }
    });

    ConcentrationReport out;
    for (size_t zi = 0; zi < Z; ++zi) {
        for (size_t ti = 0; ti < T; ++ti) {
            long c = 0;
            for (int k = 0; k < setup.replicates; ++k) c += counts[k][zi * T + ti];
            ConcentrationCell cell;
            cell.z = setup.z_grid[zi];
            cell.t = setup.t_grid[ti];
            double ratio = setup.t_grid[ti] / H;
            cell.bound = 2.0 * std::exp(-lc.C2 * dens * ratio * ratio);
            cell.frequency = double(c) / setup.replicates;
            cell.wilson_upper = wilson_interval(c, setup.replicates).upper;
            cell.holds = cell.wilson_upper <= std::min(cell.bound, 1.0) ||
                         cell.bound >= 1.0;
            out.all_hold = out.all_hold && cell.holds;
            out.cells.push_back(cell);
        }
    }

    if (!setup.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(setup.out_dir);
        std::vector<std::string> header;
        for (int a = 0; a < d; ++a) header.push_back("z" + std::to_string(a + 1));
        for (const char* s : {"t", "bound", "frequency", "wilson_upper", "holds"})
            header.push_back(s);
        CsvWriter w((fs::path(setup.out_dir) / "concentration.csv").string(), header);
        for (const auto& cell : out.cells) {
            std::vector<std::string> cells;
            for (int a = 0; a < d; ++a) cells.push_back(fmt_full(cell.z(a)));
            cells.push_back(fmt_full(cell.t));
            cells.push_back(fmt_full(cell.bound));
            cells.push_back(fmt_full(cell.frequency));
            cells.push_back(fmt_full(cell.wilson_upper));
            cells.push_back(cell.holds ? "1" : "0");
            w.row(cells);
        }
    }
    return out;
}

StochasticReport run_stochastic_comparison(const StochasticSetup& setup) {
    StochasticReport out;
    for (size_t k = 0; k < setup.n_seq.size(); ++k) {
        const int n = setup.n_seq[k];
        std::vector<double> sups(setup.replicates, 0.0), pops(setup.replicates, 0.0);
        std::vector<int> extinct(setup.replicates, 0);
        parallel_for(setup.replicates, setup.threads, [&](int rix) {
            std::uint64_t rs = replicate_seed(setup.seed + 1000 * k, rix);
            PatchSet ps = sample_patches(setup.landscape, n, rs);
            PatchSystem sys(ps);
            FixedPointResult fp = largest_fixed_point(sys, setup.f);
            CounterRng init = CounterRng::keyed({rs, 0x1717ull});
            IntVector x0(n);
            for (int i = 0; i < n; ++i) x0(i) = init.uniform() < fp.p(i) ? 1 : 0;
            CounterRng ev = CounterRng::keyed({rs, 0x2727ull});
            CtmcTrajectory traj = ctmc_simulate(sys, setup.f, x0, setup.t_end, ev);
            OccupancyStats stats =
                occupancy_statistics(traj, n, setup.t_end - setup.window);
            if (stats.extinct) {
                extinct[rix] = 1;
                sups[rix] = 1.0;
                pops[rix] = 1.0;
                return;
            }
            double sup = 0, pop = 0;
            for (int i = 0; i < n; ++i) {
                double dev = stats.mean(i) - fp.p(i);
                sup = std::max(sup, std::abs(dev));
                pop += dev;
            }
            sups[rix] = sup;
            pops[rix] = std::abs(pop / n);
        });
        StochasticPoint pt;
        pt.n = n;
        for (int rix = 0; rix < setup.replicates; ++rix) {
            pt.mean_sup_deviation += sups[rix];
            pt.population_deviation += pops[rix];
            pt.extinct_replicates += extinct[rix];
        }
        pt.mean_sup_deviation /= setup.replicates;
        pt.population_deviation /= setup.replicates;
        out.points.push_back(pt);
    }

    if (!setup.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(setup.out_dir);
        CsvWriter w((fs::path(setup.out_dir) / "stochastic.csv").string(),
                    {"n", "population_deviation", "mean_sup_deviation", "extinct_replicates"});
        for (const auto& pt : out.points)
            w.row({std::to_string(pt.n), fmt_full(pt.population_deviation),
                   fmt_full(pt.mean_sup_deviation), std::to_string(pt.extinct_replicates)});
    }
    return out;
}

int verify_bound_experiment_outputs(const ExperimentSetup& setup) {
    namespace fs = std::filesystem;
    const Landscape& L = *setup.landscape;
    BoundSpec spec = setup.spec;
    DerivedBounds derived = derive_bounds(L, setup.f, spec, setup.grid_step);
    if (spec.alpha2 <= 0) spec.alpha2 = 1.0 - derived.eta_theta;

    double h = setup.grid_step > 0 ? setup.grid_step : L.default_grid_step();
    UpperBoundFn p_plus(QGrid(L, setup.f, spec.alpha1, h, derived.lc.L_q), 1.0 - spec.alpha2);
    QGrid q_bp(L, setup.f, spec.beta_prime, h, derived.lc.L_q);
    LowerBoundFn p_minus(std::move(q_bp), spec.theta_center, spec.theta_radius, derived.m);
    Region theta = Region::ball(spec.theta_center, spec.theta_radius);

    CsvTable reps = read_csv((fs::path(setup.out_dir) / "replicates.csv").string());
    int c_rep = reps.column("replicate"), c_ub = reps.column("ub_holds"),
        c_lb = reps.column("lb_holds");
    int mismatches = 0;
    for (const auto& row : reps.rows) {
        int k = std::stoi(row[c_rep]);
        CsvTable eq =
            read_csv((fs::path(setup.out_dir) / ("equilibrium_" + std::to_string(k) + ".csv"))
                         .string());
        int c_p = eq.column("p_star");
        bool ub = true, lb = true;
        for (const auto& er : eq.rows) {
            Position z(L.dim());
            for (int a = 0; a < L.dim(); ++a) z(a) = std::stod(er[eq.column("x" + std::to_string(a + 1))]);
            double p = std::stod(er[c_p]);
            if (p > p_plus(z)) ub = false;
            if (theta.contains(z) && p < p_minus(z)) lb = false;
        }
        if ((row[c_ub] == "1") != ub || (row[c_lb] == "1") != lb) ++mismatches;
    }
    return mismatches;
}

}  // namespace metapop
