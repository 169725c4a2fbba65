#include "metapop/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace metapop {

OccupancyState discrete_chain_step(const PatchSystem& sys, const ColonizationFunction& f,
                                   const OccupancyState& state, CounterRng& rng) {
    const int n = sys.n();
    Vector xd(n);
    for (int i = 0; i < n; ++i) xd(i) = state.x(i);
    Vector s = sys.migration(xd);
    for (int i = 0; i < n; ++i) {
        if (f(s(i)) > 1.0)
            throw std::runtime_error("discrete_chain_step: colonization probability f(S_" +
                                     std::to_string(i) + ") exceeds 1; model invalid");
    }
    OccupancyState next;
    next.x.resize(n);
    next.time = state.time + 1;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        if (state.x(i))
            next.x(i) = u < 1.0 - sys.extinction()(i) ? 1 : 0;
        else
            next.x(i) = u < f(s(i)) ? 1 : 0;
    }
    return next;
}

namespace {

// Fenwick tree over nonnegative per-patch rates; supports point updates,
// total, and prefix search for inverse-CDF sampling.
class RateTree {
  public:
    explicit RateTree(int n) : n_(n), tree_(n + 1, 0.0), rates_(n, 0.0) {}

    void set(int i, double rate) {
        double delta = rate - rates_[i];
        rates_[i] = rate;
        for (int k = i + 1; k <= n_; k += k & -k) tree_[k] += delta;
    }

    double rate(int i) const { return rates_[i]; }

    double total() const {
        double t = 0;
        for (int k = n_; k > 0; k -= k & -k) t += tree_[k];
        return t;
    }

    // Smallest i with prefix sum > target.
    int find(double target) const {
        int pos = 0;
        int log = 1;
        while ((1 << log) <= n_) ++log;
        for (int step = 1 << (log - 1); step > 0; step >>= 1) {
            int next = pos + step;
            if (next <= n_ && tree_[next] <= target) {
                target -= tree_[next];
                pos = next;
            }
        }
        return std::min(pos, n_ - 1);
    }

    // Rebuild totals from current rates (guards against drift accumulation).
    void rebuild() {
        std::fill(tree_.begin(), tree_.end(), 0.0);
        for (int i = 0; i < n_; ++i)
            for (int k = i + 1; k <= n_; k += k & -k) tree_[k] += rates_[i];
    }

  private:
    int n_;
    std::vector<double> tree_;
    std::vector<double> rates_;
};

}  // namespace

CtmcTrajectory ctmc_simulate(const PatchSystem& sys, const ColonizationFunction& f,
                             const IntVector& x0, double t_end, CounterRng& rng) {
    if (!(t_end > 0)) throw std::invalid_argument("ctmc_simulate: t_end must be positive");
    const int n = sys.n();
    CtmcTrajectory traj;
    traj.initial = x0;
    traj.t_end = t_end;

    std::vector<int> x(n);
    int occupied = 0;
    for (int i = 0; i < n; ++i) {
        x[i] = x0(i) ? 1 : 0;
        occupied += x[i];
    }

    Vector xd(n);
    for (int i = 0; i < n; ++i) xd(i) = x[i];
    Vector s = sys.migration(xd);

    RateTree rates(n);
    auto patch_rate = [&](int i) { return x[i] ? sys.extinction()(i) : f(s(i)); };
    for (int i = 0; i < n; ++i) rates.set(i, patch_rate(i));

    const auto& off = sys.neighbor_offsets();
    const auto& cols = sys.neighbor_cols();
    const auto& w = sys.neighbor_weights();

    double t = 0;
    long since_rebuild = 0;
    for (;;) {
        if (occupied == 0) {
            traj.extinct = true;
            traj.extinction_time = t;
            break;
        }
        double total = rates.total();
        traj.max_total_rate = std::max(traj.max_total_rate, total);
        if (total <= 0) break;
        double wait = rng.exponential(total);
        double select = rng.uniform() * total;
        if (t + wait > t_end) break;
        t += wait;
        int i = rates.find(select);

        int new_state = x[i] ? 0 : 1;
        x[i] = new_state;
        occupied += new_state ? 1 : -1;
        traj.events.push_back({t, i, new_state});

        // S_j changes only for patches j coupled to i. The weight of i in
        // S_j is the entry w(j,i); by construction the neighbor relation is
        // symmetric, so scan i's row and use each neighbor's own row entry.
        double sign = new_state ? 1.0 : -1.0;
        for (int k = off[i]; k < off[i + 1]; ++k) {
            int j = cols[k];
            // locate w(j,i) in row j (columns are sorted)
            const int* beg = cols.data() + off[j];
            const int* end = cols.data() + off[j + 1];
            const int* it = std::lower_bound(beg, end, i);
            if (it != end && *it == i) {
                s(j) += sign * w[it - cols.data()];
                if (!x[j]) rates.set(j, f(s(j)));
            }
        }
        rates.set(i, patch_rate(i));

        if (++since_rebuild >= 1000000) {
            for (int j = 0; j < n; ++j) xd(j) = x[j];
            s = sys.migration(xd);
            for (int j = 0; j < n; ++j) rates.set(j, patch_rate(j));
            rates.rebuild();
            since_rebuild = 0;
        }
    }
    return traj;
}

OccupancyStats occupancy_statistics(const CtmcTrajectory& traj, int n, double burn_in) {
    if (burn_in >= traj.t_end)
        throw std::invalid_argument("occupancy_statistics: trajectory shorter than burn_in");
    OccupancyStats out;
    out.extinct = traj.extinct;
    out.extinct_before_burn_in = traj.extinct && traj.extinction_time <= burn_in;

    // Means are accumulated up to extinction when it happens earlier than t_end.
    double horizon = traj.extinct ? std::max(traj.extinction_time, burn_in) : traj.t_end;
    double window = horizon - burn_in;
    out.window = std::max(window, 0.0);
    out.mean = Vector::Zero(n);
    if (out.window <= 0) return out;

    std::vector<int> x(n);
    std::vector<double> since(n, burn_in);
    for (int i = 0; i < n; ++i) x[i] = traj.initial(i) ? 1 : 0;
    for (const auto& ev : traj.events) {
        if (ev.time <= burn_in) {
            x[ev.patch] = ev.new_state;
            continue;
        }
        if (ev.time > horizon) break;
        int i = ev.patch;
        if (x[i]) out.mean(i) += ev.time - since[i];
        since[i] = ev.time;
        x[i] = ev.new_state;
    }
    for (int i = 0; i < n; ++i)
        if (x[i]) out.mean(i) += horizon - since[i];
    out.mean /= out.window;
    return out;
}

}  // namespace metapop
