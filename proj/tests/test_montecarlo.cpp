#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "metapop/config.hpp"
#include "metapop/csvio.hpp"
#include "metapop/montecarlo.hpp"

using namespace metapop;
namespace fs = std::filesystem;

namespace {

std::string small_config_text(const std::string& out) {
    std::ostringstream os;
    os << "dimension = 1\n"
       << "domain.kind = box\n"
       << "domain.lo = 0\n"
       << "domain.hi = 1\n"
       << "e.kind = constant\n"
       << "e.params = 0.04\n"
       << "a.kind = constant\n"
       << "a.params = 1.0\n"
       << "sigma.kind = constant\n"
       << "sigma.params = 1.0\n"
       << "kernel.kind = uniform\n"
       << "kernel.params = 0.04\n"
       << "r = 0.02\n"
       << "rho.lipschitz = 0.0\n"
       << "f.kind = saturating\n"
       << "theta.center = 0.5\n"
       << "theta.radius = 0.45\n"
       << "alpha1 = 0.60\n"
       << "alpha2 = auto\n"
       << "beta = 1.015\n"
       << "beta_prime = 1.22\n"
       << "n = 300\n"
       << "replicates = 6\n"
       << "seed = 17\n";
    if (!out.empty()) os << "out = " << out << "\n";
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("wilson interval brackets the point estimate and stays in [0,1]") {
    WilsonInterval w = wilson_interval(50, 100);
    CHECK(w.lower < 0.5);
    CHECK(w.upper > 0.5);
    CHECK(wilson_interval(0, 100).lower == 0.0);
    CHECK(wilson_interval(37, 100).lower <= 0.37);

    CHECK(wilson_interval(100, 100).upper == 1.0);
    CHECK(wilson_interval(0, 100).upper < 0.05);
}

TEST_CASE("config: parsing, overrides, unknown keys, invariant names") {
    Config cfg = Config::from_string(small_config_text("x"));
    CHECK_NOTHROW(cfg.check_keys());
    CHECK(cfg.get_long("n") == 300);
    cfg.apply_override("n = 123");
    CHECK(cfg.get_long("n") == 123);

    Config bad = Config::from_string("nonsense.key = 1\n");
    CHECK_THROWS_AS(bad.check_keys(), std::invalid_argument);

    Config inv = Config::from_string(small_config_text("x"));
    inv.apply_override("alpha2 = 0.9");  // above alpha1 = 0.6
    try {
        build_experiment_setup(inv);
        FAIL("expected invariant violation");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("alpha2 <= alpha1") != std::string::npos);
    }

    CHECK_THROWS(Config::from_string("just a line without equals\n"));
}

TEST_CASE("run_bound_experiment: record shape, frequencies, persisted outputs") {
    fs::path out = fs::temp_directory_path() / "metapop_test_bexp";
    fs::remove_all(out);
    Config cfg = Config::from_string(small_config_text(out.string()));
    ExperimentSetup setup = build_experiment_setup(cfg);
    BoundExperimentReport rep = run_bound_experiment(setup);

    CHECK(int(rep.replicates.size()) == setup.replicates);
    CHECK(rep.ub_frequency >= 0.0);
    CHECK(rep.ub_frequency <= 1.0);
    CHECK(rep.lb_frequency >= 0.0);
    CHECK(rep.lb_frequency <= 1.0);
    // the smoke geometry deliberately breaks some aspect inequalities: the
    // run proceeds but carries the flag
    CHECK_FALSE(rep.hypotheses_pass);

    for (const auto& r : rep.replicates) CHECK(r.lambda > 0);

    CHECK(fs::exists(out / "report.csv"));
    CHECK(fs::exists(out / "replicates.csv"));
    CHECK(fs::exists(out / "checklist.csv"));
    CHECK(fs::exists(out / "equilibrium_0.csv"));

    // every claimed flag is re-derivable from the persisted equilibria
    CHECK(verify_bound_experiment_outputs(setup) == 0);

    CsvTable reps = read_csv((out / "replicates.csv").string());
    CHECK(long(reps.rows.size()) == setup.replicates);
    fs::remove_all(out);
}

TEST_CASE("experiment outputs are bit-identical across thread counts and reruns") {
    fs::path out1 = fs::temp_directory_path() / "metapop_thr1";
    fs::path out4 = fs::temp_directory_path() / "metapop_thr4";
    fs::remove_all(out1);
    fs::remove_all(out4);

    Config cfg1 = Config::from_string(small_config_text(out1.string()));
    cfg1.apply_override("threads = 1");
    Config cfg4 = Config::from_string(small_config_text(out4.string()));
    cfg4.apply_override("threads = 4");

    run_bound_experiment(build_experiment_setup(cfg1));
    run_bound_experiment(build_experiment_setup(cfg4));

    for (const char* name : {"report.csv", "replicates.csv", "checklist.csv",
                             "equilibrium_0.csv", "equilibrium_5.csv"})
        CHECK(slurp(out1 / name) == slurp(out4 / name));
    fs::remove_all(out1);
    fs::remove_all(out4);
}

TEST_CASE("lower envelope event concentrates as n grows at fixed geometry") {
    // Same geometry as the reference configuration. The equilibrium spread
    // across patches falls like 1/sqrt(n r) (measured: sd 0.091 at n=5000,
    // 0.049 at n=16000, 0.026 at n=48000 for this landscape), so the
    // all-patches lower event crosses from routinely violated to nearly
    // certain once the minimum clears the q_{beta'} plateau, around n=5e4.
    Config cfg = Config::from_string(small_config_text(""));
    cfg.apply_override("r = 0.0026");
    cfg.apply_override("theta.radius = 0.49");
    cfg.apply_override("n = 48000");
    cfg.apply_override("replicates = 5");
    cfg.apply_override("seed = 23");
    cfg.apply_override("threads = 4");
    ExperimentSetup setup = build_experiment_setup(cfg);
    setup.persist_equilibria = false;
    setup.record_coupling = false;  // the slow spectral diagnostic adds nothing here
    BoundExperimentReport low = [&] {
        ExperimentSetup s = setup;
        s.n = 5000;
        s.replicates = 4;
        return run_bound_experiment(s);
    }();
    BoundExperimentReport rep = run_bound_experiment(setup);
    CHECK(rep.hypotheses_pass);
    CHECK(rep.ub_frequency >= 0.9);
    CHECK(rep.lb_frequency >= 0.6);
    CHECK(rep.lb_frequency > low.lb_frequency);  // the event sharpens with n
}

TEST_CASE("concentration experiment: bounds honored, t = 0 is the trivial cell") {
    auto lo = Position(1);
    lo << 0.0;
    auto hi = Position(1);
    hi << 1.0;
    auto L = std::make_shared<Landscape>(make_landscape(
        Domain::box(lo, hi), ScalarField::constant(0.2), ScalarField::constant(1.0),
        ScalarField::constant(1.0), Kernel::uniform(0.5), 0.1, {}, 0.0));
    ConcentrationSetup s;
    s.landscape = L;
    s.n = 400;
    s.replicates = 400;
    s.seed = 2;
    s.t_grid = {0.0, 0.2, 0.3};
    Position z(1);
    z << 0.5;
    s.z_grid = {z};
    ConcentrationReport rep = run_concentration_experiment(s);
    REQUIRE(rep.cells.size() == 3);
    CHECK(rep.cells[0].frequency == 1.0);   // t = 0: every deviation counts
    CHECK(rep.cells[0].bound >= 1.0);       // and the bound is vacuous
    CHECK(rep.cells[0].holds);
    CHECK(rep.all_hold);

    // frequency decreases with n at fixed t
    ConcentrationSetup s2 = s;
    s2.n = 1600;
    ConcentrationReport rep2 = run_concentration_experiment(s2);
    CHECK(rep2.cells[1].frequency <= rep.cells[1].frequency);

    ConcentrationSetup bad = s;
    bad.t_grid = {2.0};  // beyond H c_max sigma_max v_d
    CHECK_THROWS(run_concentration_experiment(bad));
}

TEST_CASE("stochastic comparison: deviation shrinks with n; zero horizon is zero") {
    auto lo = Position(1);
    lo << 0.0;
    auto hi = Position(1);
    hi << 1.0;
    auto L = std::make_shared<Landscape>(make_landscape(
        Domain::box(lo, hi), ScalarField::constant(0.1), ScalarField::constant(1.0),
        ScalarField::constant(1.0), Kernel::uniform(0.3), 0.1, {}, 0.0));
    StochasticSetup s;
    s.landscape = L;
    s.f = ColonizationFunction::saturating();
    s.n_seq = {150, 900};
    s.t_end = 60;
    s.window = 20;
    s.replicates = 6;
    s.seed = 12;
    StochasticReport rep = run_stochastic_comparison(s);
    REQUIRE(rep.points.size() == 2);
    CHECK(rep.points[1].population_deviation < rep.points[0].population_deviation);
    CHECK(rep.points[0].extinct_replicates == 0);

    // zero-length averaging window at the start of the run
    CounterRng rng = CounterRng::keyed({77});
    PatchSet ps = sample_patches(L, 50, 4);
    PatchSystem sys(ps);
    CtmcTrajectory tr = ctmc_simulate(sys, s.f, IntVector::Ones(50), 1e-9, rng);
    OccupancyStats st = occupancy_statistics(tr, 50, 0.0);
    for (int i = 0; i < 50; ++i) CHECK(st.mean(i) == 1.0);
}

TEST_CASE("scaling experiment: error medians fall along the schedule") {
    auto lo = Position(1);
    lo << 0.0;
    auto hi = Position(1);
    hi << 1.0;
    auto L = std::make_shared<Landscape>(make_landscape(
        Domain::box(lo, hi), ScalarField::constant(0.1), ScalarField::constant(1.0),
        ScalarField::constant(1.0), Kernel::uniform(0.15), 0.015, {}, 0.0));
    ScalingSetup s;
    s.base = L;
    s.f = ColonizationFunction::saturating();
    Position c(1);
    c << 0.5;
    s.theta_center = c;
    s.theta_radius = 0.45;
    s.n_seq = {400, 1600};
    s.r_seq = {0.02, 0.01};
    s.replicates = 9;
    s.seed = 21;
    ScalingReport rep = run_scaling_experiment(s);
    REQUIRE(rep.points.size() == 2);
    CHECK(rep.points[1].median_max_error < rep.points[0].median_max_error);
    CHECK(rep.points[1].excluded_fraction < rep.points[0].excluded_fraction);
}
