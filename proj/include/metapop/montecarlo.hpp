#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "metapop/bounds.hpp"
#include "metapop/dynamics.hpp"
#include "metapop/patches.hpp"
#include "metapop/stochastic.hpp"

namespace metapop {

// Runs tasks 0..count-1 on the given number of threads. Work is pulled from
// an atomic counter; each task writes only its own slot, so results do not
// depend on the schedule.
void parallel_for(int count, int threads, const std::function<void(int)>& task);

struct WilsonInterval {
    double lower = 0, upper = 1;
};

// 95% Wilson score interval for k successes out of n.
WilsonInterval wilson_interval(long k, long n);

// Stream key of a replicate within an experiment.
std::uint64_t replicate_seed(std::uint64_t seed, int replicate);

struct ExperimentSetup {
    std::shared_ptr<const Landscape> landscape;
    ColonizationFunction f;
    BoundSpec spec;
    int n = 0;
    int replicates = 1;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: hardware concurrency
    std::string out_dir;
    bool persist_equilibria = true;
    bool record_coupling = true;  // per-replicate lambda(T) and primitivity
    double grid_step = -1;  // q-grid spacing; <0: landscape default (r/8)
};

struct ReplicateRecord {
    int replicate = 0;
    std::uint64_t seed = 0;
    double lambda = 0;
    bool primitive = false;
    bool ub_holds = false;
    bool lb_holds = false;
    double max_interior_error = 0;  // max over patches in Theta_m of |p* - q1|
    int patches_in_theta_m = 0;
    long fp_iterations = 0;
    double runtime_s = 0;
};

struct BoundExperimentReport {
    std::vector<ReplicateRecord> replicates;
    Checklist ub_checklist;
    Checklist lb_checklist;
    bool hypotheses_pass = false;
    ProbBound ub_bound, lb_bound;
    TwoSidedBound two_sided;
    double ub_frequency = 0, lb_frequency = 0, accuracy_frequency = 0;
    WilsonInterval ub_wilson, lb_wilson, accuracy_wilson;
    DerivedBounds derived;
};

// For each replicate: sample a landscape realization, compute the largest
// fixed point, test the envelope events and the interior accuracy, then
// aggregate empirical frequencies against the probability bounds.
BoundExperimentReport run_bound_experiment(const ExperimentSetup& setup);

struct ScalingPoint {
    SchedulePoint schedule;
    double median_max_error = 0;   // median over replicates of max interior error
    double error_ratio = 0;        // median / error_scale
    double excluded_fraction = 0;  // volume fraction of Theta within the excluded rim
    int replicates_used = 0;
};

struct ScalingSetup {
    std::shared_ptr<const Landscape> base;  // geometry and fields; r varies per point
    ColonizationFunction f;
    Position theta_center;
    double theta_radius = 0;
    std::vector<int> n_seq;
    std::vector<double> r_seq;
    double gamma1 = 0, gamma2 = 0.1, c2 = 0.005;
    int replicates = 15;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out_dir;
};

struct ScalingReport {
    ScheduleResult schedule;
    std::vector<ScalingPoint> points;
};

ScalingReport run_scaling_experiment(const ScalingSetup& setup);

struct ConcentrationSetup {
    std::shared_ptr<const Landscape> landscape;
    int n = 0;
    int replicates = 1000;
    std::uint64_t seed = 1;
    int threads = 0;
    std::vector<double> t_grid;
    std::vector<Position> z_grid;
    std::string out_dir;
};

struct ConcentrationCell {
    Position z;
    double t = 0;
    double bound = 0;       // 2 exp(-C2 ((n-1) r^d / A) (t/H)^2)
    double frequency = 0;   // empirical tail frequency of the deviation
    double wilson_upper = 0;
    bool holds = false;     // wilson_upper <= min(bound, 1)
};

struct ConcentrationReport {
    std::vector<ConcentrationCell> cells;
    bool all_hold = true;
};

// Empirical check of the deviation tail of the kernel-weighted empirical
// measure (weight h = a) against its exponential bound, patch n excluded.
ConcentrationReport run_concentration_experiment(const ConcentrationSetup& setup);

struct StochasticSetup {
    std::shared_ptr<const Landscape> landscape;
    ColonizationFunction f;
    std::vector<int> n_seq;
    double t_end = 50;
    double window = 10;     // trailing window for time-averaged occupancy
    int replicates = 8;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out_dir;
};

struct StochasticPoint {
    int n = 0;
    // |(1/n) sum_i (window-averaged occupancy_i - p*_i)|, averaged over
    // replicates: the scale that contracts as the patch density grows.
    double population_deviation = 0;
    // sup_i |window-averaged occupancy_i - p*_i|, averaged over replicates;
    // reported alongside (extreme-value statistics keep it from shrinking).
    double mean_sup_deviation = 0;
    int extinct_replicates = 0;
};

struct StochasticReport {
    std::vector<StochasticPoint> points;
};

// CTMC started at Bernoulli(p*) occupancy; deviation of window-averaged
// occupancy from the deterministic equilibrium, by system size.
StochasticReport run_stochastic_comparison(const StochasticSetup& setup);

// Re-derives the event flags of a bound experiment from the persisted
// equilibrium files and compares them with replicates.csv. Returns the number
// of mismatching replicate rows (0 when the report is reproducible).
int verify_bound_experiment_outputs(const ExperimentSetup& setup);

}  // namespace metapop
