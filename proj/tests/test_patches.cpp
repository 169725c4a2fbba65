#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "metapop/patches.hpp"
#include "metapop/rng.hpp"
#include "oracles.hpp"

using namespace metapop;

namespace {

Position pos1(double x) {
    Position p(1);
    p << x;
    return p;
}

Position pos2(double x, double y) {
    Position p(2);
    p << x, y;
    return p;
}

std::shared_ptr<const Landscape> flat_square(double r, double c0 = 1.0, double e0 = 0.2) {
    Domain dom = Domain::box(pos2(0, 0), pos2(1, 1));
    return std::make_shared<Landscape>(
        make_landscape(dom, ScalarField::constant(e0), ScalarField::constant(1.0),
                       ScalarField::constant(1.0), Kernel::uniform(c0), r, {}, 0.0));
}

std::shared_ptr<const Landscape> flat_line(double r, double c0, double e0) {
    Domain dom = Domain::box(pos1(0.0), pos1(1.0));
    return std::make_shared<Landscape>(
        make_landscape(dom, ScalarField::constant(e0), ScalarField::constant(1.0),
                       ScalarField::constant(1.0), Kernel::uniform(c0), r, {}, 0.0));
}

// PatchSystem over hand-placed locations.
PatchSystem system_at(std::shared_ptr<const Landscape> L, const Matrix& locations) {
    PatchSet ps;
    ps.landscape = std::move(L);
    ps.locations = locations;
    ps.seed = 0;
    return PatchSystem(ps);
}

}  // namespace

TEST_CASE("sample_patches: uniform density passes a chi-square test on a 4x4 partition") {
    auto L = flat_square(0.1);
    const int n = 100000;
    PatchSet ps = sample_patches(L, n, 42);
    long counts[16] = {0};
    for (int i = 0; i < n; ++i) {
        int cx = std::min(3, int(ps.locations(i, 0) * 4));
        int cy = std::min(3, int(ps.locations(i, 1) * 4));
        ++counts[4 * cx + cy];
    }
    double expect = n / 16.0, stat = 0;
    for (long c : counts) stat += (c - expect) * (c - expect) / expect;
    // 0.999 quantile of chi-square with 15 degrees of freedom
    CHECK(stat < 37.69729821835383);
}

TEST_CASE("sample_patches: density ratio shows up in cell occupation") {
    // sigma twice as large on the left half: left fraction -> 2/3
    Domain dom = Domain::box(pos2(0, 0), pos2(1, 1));
    ScalarField sigma = ScalarField::custom(
        [](const Position& z) { return z(0) < 0.5 ? 2.0 : 1.0; }, 1.0, 2.0, 1e9);
    auto L = std::make_shared<Landscape>(
        make_landscape(dom, ScalarField::constant(0.2), ScalarField::constant(1.0), sigma,
                       Kernel::uniform(1.0), 0.1, {}, 0.0));
    const int n = 100000;
    PatchSet ps = sample_patches(L, n, 7);
    long left = 0;
    for (int i = 0; i < n; ++i) left += ps.locations(i, 0) < 0.5;
    double p = 2.0 / 3.0, se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(double(left) / n - p) < 3 * se);
}

TEST_CASE("sample_patches: fixed seed reproduces the location list exactly") {
    auto L = flat_square(0.1);
    PatchSet a = sample_patches(L, 500, 99);
    PatchSet b = sample_patches(L, 500, 99);
    CHECK((a.locations - b.locations).cwiseAbs().maxCoeff() == 0.0);
    PatchSet c = sample_patches(L, 500, 100);
    CHECK((a.locations - c.locations).cwiseAbs().maxCoeff() > 0.0);
    CHECK_THROWS(sample_patches(L, 1, 1));
}

TEST_CASE("patch sets round-trip through CSV") {
    auto L = flat_square(0.1);
    PatchSet ps = sample_patches(L, 60, 5);
    std::string path = "patches_roundtrip_test.csv";
    write_patches_csv(path, ps);
    PatchSet back = read_patches_csv(L, path);
    REQUIRE(back.n() == ps.n());
    CHECK((back.locations - ps.locations).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());

    // points outside the habitat are rejected on import
    std::ofstream bad("patches_bad_test.csv");
    bad << "id,x1,x2\n0,2.5,0.5\n";
    bad.close();
    CHECK_THROWS(read_patches_csv(L, "patches_bad_test.csv"));
    std::remove("patches_bad_test.csv");
}

TEST_CASE("migration_pressure: empty sum, co-located pair, naive-loop oracle") {
    auto L = flat_square(0.25);
    const int d = 2;

    Matrix two(2, 2);
    two << 0.5, 0.5, 0.5, 0.5;  // co-located patches
    PatchSystem pair = system_at(L, two);
    Vector x0 = Vector::Zero(2);
    CHECK(pair.migration_pressure(x0, 0) == 0.0);
    Vector x(2);
    x << 0.0, 1.0;
    // single-term sum: (A/(n-1)) a c(0) r^-d with A = 1, a = 1, c(0) = 1
    CHECK(pair.migration_pressure(x, 0) ==
          doctest::Approx(L->area * std::pow(L->r, -d)).epsilon(1e-14));
    CHECK_THROWS_AS(pair.migration_pressure(x, 5), std::out_of_range);

    PatchSet ps = sample_patches(L, 50, 3);
    PatchSystem sys(ps);
    CounterRng rng = CounterRng::keyed({1, 2});
    Vector xr(50);
    for (int i = 0; i < 50; ++i) xr(i) = rng.uniform();
    for (int i = 0; i < 50; ++i) {
        double got = sys.migration_pressure(xr, i);
        double want = oracles::migration_oracle(sys, xr, i);
        CHECK(got == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("leading eigenvalue: small closed forms and charpoly oracle") {
    Matrix T1(2, 2);
    T1 << 0, 2, 2, 0;
    CHECK(leading_eigenvalue_dense(T1) == doctest::Approx(2.0).epsilon(1e-10));

    Matrix T2(2, 2);
    T2 << 0, 1, 4, 0;
    CHECK(leading_eigenvalue_dense(T2) == doctest::Approx(2.0).epsilon(1e-10));

    CounterRng rng = CounterRng::keyed({2024});
    for (int rep = 0; rep < 10; ++rep) {
        Matrix T = Matrix::Zero(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                if (i != j) T(i, j) = rng.uniform();
        double lam = leading_eigenvalue_dense(T);
        CHECK(lam == doctest::Approx(oracles::perron_root_charpoly(T)).epsilon(1e-8));
    }
}

TEST_CASE("coupling_matrix: entries, eigenvalue and flags on a sampled system") {
    auto L = flat_square(0.35, 1.0, 0.25);
    PatchSet ps = sample_patches(L, 40, 11);
    PatchSystem sys(ps);
    ColonizationFunction f = ColonizationFunction::saturating();
    CouplingMatrix cm = coupling_matrix(sys, f);

    Matrix T = cm.dense(sys.n());
    for (int i = 0; i < sys.n(); ++i) CHECK(T(i, i) == 0.0);
    // entry check against the definition
    for (int i = 0; i < sys.n(); ++i) {
        for (int j = 0; j < sys.n(); ++j) {
            if (i == j) continue;
            double dist = (sys.location(i) - sys.location(j)).norm();
            double want = dist < L->r
                              ? f.L_f * (L->area / (sys.n() - 1)) *
                                    L->emigration(sys.location(j)) * std::pow(L->r, -2) *
                                    L->kernel(sys.location(i), dist / L->r) /
                                    L->extinction(sys.location(i))
                              : 0.0;
            CHECK(T(i, j) == doctest::Approx(want).epsilon(1e-13));
        }
    }
    CHECK(cm.lambda == doctest::Approx(oracles::rightmost_eigenvalue(T)).epsilon(1e-8));

    // position-independent a and c: sparsity pattern is symmetric
    for (int i = 0; i < sys.n(); ++i)
        for (int j = 0; j < sys.n(); ++j) CHECK((T(i, j) > 0) == (T(j, i) > 0));

    // relabeling invariance: reverse patch order
    Matrix rev = ps.locations.colwise().reverse().eval();
    PatchSystem sys2 = system_at(L, rev);
    CouplingMatrix cm2 = coupling_matrix(sys2, f);
    CHECK(cm2.lambda == doctest::Approx(cm.lambda).epsilon(1e-9));
}

TEST_CASE("is_primitive: triangle, split clusters, and the path-graph power oracle") {
    auto L = flat_square(0.1);

    Matrix tri(3, 2);
    tri << 0.50, 0.50, 0.55, 0.50, 0.52, 0.55;
    PatchSystem t = system_at(L, tri);
    CHECK(is_primitive(t).primitive);

    Matrix split(4, 2);
    split << 0.1, 0.1, 0.15, 0.1, 0.8, 0.8, 0.85, 0.8;
    PatchSystem s = system_at(L, split);
    PrimitivityCertificate cert = is_primitive(s);
    CHECK_FALSE(cert.connected);
    CHECK_FALSE(cert.primitive);

    // path graph z_k = (0.9 r k, 0.5): connected, bipartite, no triangle
    Matrix path(6, 2);
    for (int k = 0; k < 6; ++k) {
        path(k, 0) = 0.02 + 0.9 * L->r * k;
        path(k, 1) = 0.5;
    }
    PatchSystem p = system_at(L, path);
    PrimitivityCertificate pc = is_primitive(p);
    CHECK(pc.connected);
    CHECK_FALSE(pc.primitive);
    ColonizationFunction f = ColonizationFunction::linear();
    Matrix T = coupling_matrix(p, f).dense(6);
    CHECK(oracles::primitive_by_powers(T) == pc.primitive);

    // triangle case agrees with the power oracle as well
    Matrix Tt = coupling_matrix(t, ColonizationFunction::linear()).dense(3);
    CHECK(oracles::primitive_by_powers(Tt));
}

TEST_CASE("primitivity_probability_bound: formula value, monotonicity, gate") {
    auto L = flat_line(0.15, 0.05, 0.2);
    PrimitivityBound b200 = primitivity_probability_bound(*L, 200);
    CHECK(b200.applicable);
    // independent arithmetic for the displayed expression
    double mass = min_local_mass(*L, L->r / 3.0);
    double by_hand = 1.0 - double(b200.covering) * std::exp(-200.0 * mass);
    CHECK(b200.value == doctest::Approx(by_hand).epsilon(1e-12));

    PrimitivityBound b400 = primitivity_probability_bound(*L, 400);
    PrimitivityBound b800 = primitivity_probability_bound(*L, 800);
    CHECK(b400.value > b200.value);
    CHECK(b800.value > b400.value);
    CHECK(b800.value <= 1.0);

    PrimitivityBound small = primitivity_probability_bound(*L, 5);
    CHECK_FALSE(small.applicable);
}

TEST_CASE("empirical measure concentration obeys the exponential tail bound") {
    // d = 1 keeps this cheap: n = 500, R = 1000 replicates, h = a.
    auto L = flat_line(0.1, 0.5, 0.2);
    const int n = 500, R = 1000;
    const double H = L->emigration.upper;
    const double C2 = 1.0 / (3.0 * L->kernel.c_max * L->kernel.c_max * L->density.upper * 2.0);
    const double dens = (n - 1) * L->r / L->area;

    std::vector<Position> zs = {pos1(0.3), pos1(0.7)};
    std::vector<double> rho_z;
    for (const auto& z : zs) rho_z.push_back(rho(*L, z));
    // t on a grid with t/H <= c_max sigma_max v_d = 1.0
    std::vector<double> ts = {0.15, 0.25, 0.35};
    for (double t : ts) CHECK(t / H <= L->kernel.c_max * L->density.upper * 2.0);

    std::vector<std::vector<long>> tail(zs.size(), std::vector<long>(ts.size(), 0));
    for (int rep = 0; rep < R; ++rep) {
        PatchSet ps = sample_patches(L, n, 1000 + rep);
        for (size_t zi = 0; zi < zs.size(); ++zi) {
            double acc = 0;
            for (int j = 0; j + 1 < n; ++j) {  // empirical measure excluding patch n-1
                double dist = std::abs(ps.locations(j, 0) - zs[zi](0));
                if (dist >= L->r) continue;
                acc += L->emigration(ps.locations.row(j)) / L->r *
                       L->kernel(zs[zi], dist / L->r);
            }
            acc *= L->area / (n - 1);
            double dev = std::abs(acc - rho_z[zi]);
            for (size_t ti = 0; ti < ts.size(); ++ti)
                if (dev >= ts[ti]) ++tail[zi][ti];
        }
    }
    for (size_t zi = 0; zi < zs.size(); ++zi) {
        for (size_t ti = 0; ti < ts.size(); ++ti) {
            double bound = 2.0 * std::exp(-C2 * dens * (ts[ti] / H) * (ts[ti] / H));
            CHECK(double(tail[zi][ti]) / R <= std::min(bound, 1.0) + 1e-12);
        }
    }
}
