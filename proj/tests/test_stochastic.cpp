#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>

#include "metapop/dynamics.hpp"
#include "metapop/stochastic.hpp"
#include "oracles.hpp"

using namespace metapop;

namespace {

Position pos1(double x) {
    Position p(1);
    p << x;
    return p;
}

std::shared_ptr<const Landscape> flat_line(double r, double c0, double e0) {
    Domain dom = Domain::box(pos1(0.0), pos1(1.0));
    return std::make_shared<Landscape>(
        make_landscape(dom, ScalarField::constant(e0), ScalarField::constant(1.0),
                       ScalarField::constant(1.0), Kernel::uniform(c0), r, {}, 0.0));
}

PatchSystem system_at(std::shared_ptr<const Landscape> L, const Matrix& locations) {
    PatchSet ps;
    ps.landscape = std::move(L);
    ps.locations = locations;
    ps.seed = 0;
    return PatchSystem(ps);
}

PatchSystem three_colocated(double r = 0.2, double c0 = 0.6, double e0 = 0.1) {
    Matrix loc = Matrix::Constant(3, 1, 0.5);
    return system_at(flat_line(r, c0, e0), loc);
}

// Quasi-stationary occupancy of a tiny chain from the dense generator:
// left Perron eigenvector of the generator restricted to transient states.
Vector qsd_occupancy_oracle(const PatchSystem& sys, const ColonizationFunction& f) {
    const int n = sys.n();
    const int S = 1 << n;
    Matrix Q = Matrix::Zero(S, S);
    for (int s = 1; s < S; ++s) {
        Vector x(n);
        for (int i = 0; i < n; ++i) x(i) = (s >> i) & 1;
        for (int i = 0; i < n; ++i) {
            double rate;
            int target;
            if ((s >> i) & 1) {
                rate = sys.extinction()(i);
                target = s & ~(1 << i);
            } else {
                rate = f(sys.migration_pressure(x, i));
                target = s | (1 << i);
            }
            Q(s, target) += rate;
            Q(s, s) -= rate;
        }
    }
    Matrix QT = Q.block(1, 1, S - 1, S - 1);  // absorbing state 0 removed
    Eigen::EigenSolver<Matrix> es(QT.transpose());
    int best = 0;
    for (int i = 1; i < S - 1; ++i)
        if (es.eigenvalues()(i).real() > es.eigenvalues()(best).real()) best = i;
    Vector alpha = es.eigenvectors().col(best).real();
    if (alpha.sum() < 0) alpha = -alpha;
    alpha /= alpha.sum();
    Vector occ = Vector::Zero(n);
    for (int s = 1; s < S; ++s)
        for (int i = 0; i < n; ++i)
            if ((s >> i) & 1) occ(i) += alpha(s - 1);
    return occ;
}

}  // namespace

TEST_CASE("discrete_chain_step: absorbing extinction and survival frequency") {
    PatchSystem sys = three_colocated();
    ColonizationFunction f = ColonizationFunction::saturating();

    OccupancyState dead;
    dead.x = IntVector::Zero(3);
    CounterRng rng = CounterRng::keyed({1});
    for (int k = 0; k < 50; ++k) {
        dead = discrete_chain_step(sys, f, dead, rng);
        CHECK(dead.x.cwiseAbs().maxCoeff() == 0);
    }

    // single occupied patch with e = 0.3: survival frequency -> 0.7
    PatchSystem lone = system_at(flat_line(0.2, 0.6, 0.3), Matrix::Constant(2, 1, 0.5));
    long survived = 0;
    const int trials = 100000;
    for (int k = 0; k < trials; ++k) {
        OccupancyState st;
        st.x = IntVector::Zero(2);
        st.x(0) = 1;
        CounterRng r2 = CounterRng::keyed({7u, std::uint64_t(k)});
        OccupancyState nx = discrete_chain_step(lone, f, st, r2);
        survived += nx.x(0);
    }
    double se = std::sqrt(0.3 * 0.7 / trials);
    CHECK(std::abs(double(survived) / trials - 0.7) < 3 * se);
}

TEST_CASE("discrete_chain_step: one-step distribution matches exhaustive enumeration") {
    PatchSystem two = system_at(flat_line(0.2, 0.6, 0.25), Matrix::Constant(2, 1, 0.5));
    ColonizationFunction f = ColonizationFunction::saturating();

    OccupancyState st;
    st.x = IntVector::Zero(2);
    st.x(0) = 1;
    Vector xd(2);
    xd << 1, 0;
    double p1 = 1.0 - 0.25;                            // patch 0 survives
    double p2 = f(two.migration_pressure(xd, 1));      // patch 1 colonized
    double want[4] = {(1 - p1) * (1 - p2), p1 * (1 - p2), (1 - p1) * p2, p1 * p2};

    const int trials = 100000;
    long counts[4] = {0};
    for (int k = 0; k < trials; ++k) {
        CounterRng r2 = CounterRng::keyed({13u, std::uint64_t(k)});
        OccupancyState nx = discrete_chain_step(two, f, st, r2);
        ++counts[nx.x(0) + 2 * nx.x(1)];
    }
    for (int o = 0; o < 4; ++o) {
        double se = std::sqrt(want[o] * (1 - want[o]) / trials);
        CHECK(std::abs(double(counts[o]) / trials - want[o]) < 4 * se + 1e-9);
    }

    // linear f with oversized pressure would break the probability reading
    ColonizationFunction lin = ColonizationFunction::linear();
    PatchSystem hot = system_at(flat_line(0.05, 2.0, 0.25), Matrix::Constant(2, 1, 0.5));
    OccupancyState one;
    one.x = IntVector::Zero(2);
    one.x(0) = 1;
    CounterRng r3 = CounterRng::keyed({5});
    CHECK_THROWS(discrete_chain_step(hot, lin, one, r3));
}

TEST_CASE("ctmc_simulate: absorbing zero and the exponential first event") {
    PatchSystem sys = three_colocated();
    ColonizationFunction f = ColonizationFunction::saturating();

    CounterRng rng = CounterRng::keyed({3});
    CtmcTrajectory silent = ctmc_simulate(sys, f, IntVector::Zero(3), 100.0, rng);
    CHECK(silent.events.empty());
    CHECK(silent.extinct);

    // all occupied: the first event is one of the extinctions, Exp(sum e_i)
    double acc = 0;
    const int runs = 100000;
    for (int k = 0; k < runs; ++k) {
        CounterRng r2 = CounterRng::keyed({17u, std::uint64_t(k)});
        CtmcTrajectory tr = ctmc_simulate(sys, f, IntVector::Ones(3), 60.0, r2);
        REQUIRE_FALSE(tr.events.empty());
        acc += tr.events.front().time;
    }
    double mean = acc / runs;
    double want = 1.0 / 0.3;
    double se = want / std::sqrt(double(runs));
    CHECK(std::abs(mean - want) < 3 * se);
}

TEST_CASE("ctmc_simulate: event rate stays below the global rate cap") {
    PatchSystem sys = three_colocated();
    ColonizationFunction f = ColonizationFunction::saturating();
    double s_max = sys.migration(Vector::Ones(3)).maxCoeff();
    double cap = 3 * (sys.landscape().extinction.upper + f(s_max));
    CounterRng rng = CounterRng::keyed({23});
    CtmcTrajectory tr = ctmc_simulate(sys, f, IntVector::Ones(3), 500.0, rng);
    CHECK(tr.max_total_rate <= cap * (1 + 1e-12));
}

TEST_CASE("ctmc time averages approach the dense-generator quasi-stationary value") {
    // extinction must stay rare over the horizon for the conditioned average
    PatchSystem sys = three_colocated(0.2, 0.5, 0.05);
    ColonizationFunction f = ColonizationFunction::saturating();
    Vector want = qsd_occupancy_oracle(sys, f);

    Vector acc = Vector::Zero(3);
    double weight = 0;
    const int runs = 60;
    for (int k = 0; k < runs; ++k) {
        CounterRng rng = CounterRng::keyed({29u, std::uint64_t(k)});
        CtmcTrajectory tr = ctmc_simulate(sys, f, IntVector::Ones(3), 600.0, rng);
        OccupancyStats st = occupancy_statistics(tr, 3, 100.0);
        if (st.extinct) continue;  // conditioned on survival
        acc += st.mean * st.window;
        weight += st.window;
    }
    REQUIRE(weight > 0);
    Vector got = acc / weight;
    for (int i = 0; i < 3; ++i) CHECK(std::abs(got(i) - want(i)) < 0.05);
}

TEST_CASE("occupancy_statistics: constant, extinguished, and alternating runs") {
    CtmcTrajectory full;
    full.initial = IntVector::Ones(2);
    full.t_end = 10.0;
    OccupancyStats st = occupancy_statistics(full, 2, 1.0);
    CHECK(st.mean(0) == doctest::Approx(1.0));
    CHECK(st.mean(1) == doctest::Approx(1.0));
    CHECK_FALSE(st.extinct);

    CtmcTrajectory gone;
    gone.initial = IntVector::Ones(1);
    gone.t_end = 10.0;
    gone.extinct = true;
    gone.extinction_time = 2.0;
    gone.events.push_back({2.0, 0, 0});
    OccupancyStats stg = occupancy_statistics(gone, 1, 1.0);
    CHECK(stg.extinct);
    CHECK_FALSE(stg.extinct_before_burn_in);
    CHECK(stg.mean(0) == doctest::Approx(1.0));  // occupied on [1, 2], window ends at extinction

    OccupancyStats early = occupancy_statistics(gone, 1, 5.0);
    CHECK(early.extinct_before_burn_in);
    CHECK(early.window == 0.0);

    // alternating: on over [0,1] and [2,3], horizon 4
    CtmcTrajectory alt;
    alt.initial = IntVector::Ones(1);
    alt.t_end = 4.0;
    alt.events = {{1.0, 0, 0}, {2.0, 0, 1}, {3.0, 0, 0}};
    OccupancyStats sta = occupancy_statistics(alt, 1, 0.0);
    CHECK(sta.mean(0) == doctest::Approx(0.5).epsilon(1e-12));
    OccupancyStats stb = occupancy_statistics(alt, 1, 0.5);
    CHECK(stb.mean(0) == doctest::Approx(1.5 / 3.5).epsilon(1e-12));
    CHECK_THROWS(occupancy_statistics(alt, 1, 5.0));
}

TEST_CASE("ctmc trajectories are reproducible for a fixed stream") {
    PatchSystem sys = three_colocated();
    ColonizationFunction f = ColonizationFunction::saturating();
    CounterRng a = CounterRng::keyed({99, 1});
    CounterRng b = CounterRng::keyed({99, 1});
    CtmcTrajectory ta = ctmc_simulate(sys, f, IntVector::Ones(3), 50.0, a);
    CtmcTrajectory tb = ctmc_simulate(sys, f, IntVector::Ones(3), 50.0, b);
    REQUIRE(ta.events.size() == tb.events.size());
    for (size_t k = 0; k < ta.events.size(); ++k) {
        CHECK(ta.events[k].time == tb.events[k].time);
        CHECK(ta.events[k].patch == tb.events[k].patch);
        CHECK(ta.events[k].new_state == tb.events[k].new_state);
    }
}
