#pragma once

#include <vector>

#include "metapop/patches.hpp"
#include "metapop/rng.hpp"
#include "metapop/types.hpp"

namespace metapop {

struct OccupancyState {
    IntVector x;   // components in {0,1}
    double time = 0;
};

// One synchronous step of the discrete-time occupancy chain: an occupied
// patch survives with probability 1 - e(z_i); an empty one is colonized with
// probability f(S_i(X)). Requires f(S_i(X)) <= 1 for every patch; throws a
// model-validity error naming the first offender otherwise. Consumes exactly
// n uniforms from the stream, in patch order.
OccupancyState discrete_chain_step(const PatchSystem& sys, const ColonizationFunction& f,
                                   const OccupancyState& state, CounterRng& rng);

struct EventRecord {
    double time;
    int patch;
    int new_state;
};

struct CtmcTrajectory {
    IntVector initial;
    std::vector<EventRecord> events;
    double t_end = 0;
    bool extinct = false;
    double extinction_time = -1;
    double max_total_rate = 0;
};

// Exact event-driven simulation of the continuous-time chain: empty patches
// flip on at rate f(S_i(X)), occupied ones flip off at rate e(z_i). Rates are
// kept in a Fenwick tree for O(log n) selection; after each flip only patches
// within r of the flipped patch have their rate recomputed. Each event
// consumes two uniforms from the stream (waiting time, selection).
CtmcTrajectory ctmc_simulate(const PatchSystem& sys, const ColonizationFunction& f,
                             const IntVector& x0, double t_end, CounterRng& rng);

struct OccupancyStats {
    Vector mean;               // time-weighted occupancy per patch on [burn_in, t_end]
    bool extinct = false;
    bool extinct_before_burn_in = false;
    double window = 0;         // length of the averaging window actually used
};

OccupancyStats occupancy_statistics(const CtmcTrajectory& traj, int n, double burn_in);

}  // namespace metapop
