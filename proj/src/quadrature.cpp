#include "metapop/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace metapop {

static GaussRule compute_gauss_legendre(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    // Newton iteration on P_n, starting from the Chebyshev-like estimate.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

BallRule ball_rule(const Position& center, double radius, int radial, int angular) {
    const int d = static_cast<int>(center.size());
    if (d < 1 || d > 3) throw std::invalid_argument("ball_rule: dimension must be 1, 2 or 3");
    if (radius <= 0) throw std::invalid_argument("ball_rule: radius must be positive");

    const GaussRule& gr = gauss_legendre(radial);
    BallRule rule;

    if (d == 1) {
        rule.points.resize(2 * radial, 1);
        rule.weights.resize(2 * radial);
        rule.radial_frac.resize(2 * radial);
        for (int i = 0; i < radial; ++i) {
            double s = 0.5 * (gr.nodes[i] + 1.0);           // in (0,1)
            double w = 0.5 * gr.weights[i] * radius;        // ds scaled to [0, r]
            rule.points(2 * i, 0) = center(0) - radius * s;
            rule.points(2 * i + 1, 0) = center(0) + radius * s;
            rule.weights[2 * i] = w;
            rule.weights[2 * i + 1] = w;
            rule.radial_frac[2 * i] = s;
            rule.radial_frac[2 * i + 1] = s;
        }
        return rule;
    }

    if (d == 2) {
        const int m = angular;
        rule.points.resize(radial * m, 2);
        rule.weights.resize(radial * m);
        rule.radial_frac.resize(radial * m);
        int k = 0;
        for (int i = 0; i < radial; ++i) {
            double s = 0.5 * (gr.nodes[i] + 1.0);
            double wr = 0.5 * gr.weights[i] * s;            // s ds on [0,1]
            for (int j = 0; j < m; ++j) {
                double th = 2.0 * kPi * (j + 0.5) / m;
                rule.points(k, 0) = center(0) + radius * s * std::cos(th);
                rule.points(k, 1) = center(1) + radius * s * std::sin(th);
                rule.weights[k] = radius * radius * wr * (2.0 * kPi / m);
                rule.radial_frac[k] = s;
                ++k;
            }
        }
        return rule;
    }

    // d == 3: radial GL x GL in mu = cos(polar) x uniform azimuth.
    const int nmu = std::max(4, angular / 4);
    const int nphi = angular;
    const GaussRule& gmu = gauss_legendre(nmu);
    rule.points.resize(radial * nmu * nphi, 3);
    rule.weights.resize(radial * nmu * nphi);
    rule.radial_frac.resize(radial * nmu * nphi);
    int k = 0;
    for (int i = 0; i < radial; ++i) {
        double s = 0.5 * (gr.nodes[i] + 1.0);
        double wr = 0.5 * gr.weights[i] * s * s;
        for (int a = 0; a < nmu; ++a) {
            double mu = gmu.nodes[a];
            double smu = std::sqrt(std::max(0.0, 1.0 - mu * mu));
            for (int j = 0; j < nphi; ++j) {
                double ph = 2.0 * kPi * (j + 0.5) / nphi;
                rule.points(k, 0) = center(0) + radius * s * smu * std::cos(ph);
                rule.points(k, 1) = center(1) + radius * s * smu * std::sin(ph);
                rule.points(k, 2) = center(2) + radius * s * mu;
                rule.weights[k] = radius * radius * radius * wr * gmu.weights[a] * (2.0 * kPi / nphi);
                rule.radial_frac[k] = s;
                ++k;
            }
        }
    }
    return rule;
}

BoxRule box_rule(const Position& lo, const Position& hi, int pts_per_axis) {
    const int d = static_cast<int>(lo.size());
    const GaussRule& gr = gauss_legendre(pts_per_axis);
    int total = 1;
    for (int a = 0; a < d; ++a) total *= pts_per_axis;
    BoxRule rule;
    rule.points.resize(total, d);
    rule.weights.resize(total);
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        double w = 1.0;
        for (int a = 0; a < d; ++a) {
            int i = rem % pts_per_axis;
            rem /= pts_per_axis;
            double half = 0.5 * (hi(a) - lo(a));
            rule.points(idx, a) = lo(a) + half * (gr.nodes[i] + 1.0);
            w *= half * gr.weights[i];
        }
        rule.weights[idx] = w;
    }
    return rule;
}

double integrate_1d(const std::function<double(double)>& g, double a, double b, int n) {
    const GaussRule& gr = gauss_legendre(n);
    double half = 0.5 * (b - a);
    double mid = 0.5 * (a + b);
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += gr.weights[i] * g(mid + half * gr.nodes[i]);
    return acc * half;
}

}  // namespace metapop
