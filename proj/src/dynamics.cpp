#include "metapop/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metapop {

Vector En_apply(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p) {
    Vector s = sys.migration(p);
    Vector out(sys.n());
    for (int i = 0; i < sys.n(); ++i) {
        double v = f(s(i));
        out(i) = v / (sys.extinction()(i) + v);
    }
    return out;
}

Vector En_restricted_apply(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p,
                           const Region& theta, double beta) {
    if (beta < 1.0) throw std::invalid_argument("En_restricted_apply: beta must be >= 1");
    std::vector<char> mask(sys.n());
    for (int i = 0; i < sys.n(); ++i) mask[i] = theta.contains(sys.location(i)) ? 1 : 0;
    Vector s = sys.migration_masked(p, mask);
    Vector out(sys.n());
    for (int i = 0; i < sys.n(); ++i) {
        double v = f(s(i));
        out(i) = v / (beta * sys.extinction()(i) + v);
    }
    return out;
}

FixedPointResult largest_fixed_point(const PatchSystem& sys, const ColonizationFunction& f,
                                     double tol, long max_iter) {
    if (!(tol > 0)) throw std::invalid_argument("largest_fixed_point: tol must be positive");
    FixedPointResult res;
    Vector p = Vector::Ones(sys.n());
    for (long it = 0; it < max_iter; ++it) {
        Vector q = En_apply(sys, f, p);
        double step = 0;
        for (int i = 0; i < sys.n(); ++i) {
            double d = p(i) - q(i);
            if (d < -1e-12)
                throw std::runtime_error("largest_fixed_point: non-monotone iterate (numerical)");
            step = std::max(step, std::abs(d));
        }
        p = q;
        res.iterations = it + 1;
        if (step < tol) {
            res.converged = true;
            res.residual = step;
            res.p = std::move(p);
            return res;
        }
        res.residual = step;
    }
    res.p = std::move(p);
    throw std::runtime_error("largest_fixed_point: not converged after max_iter, residual " +
                             std::to_string(res.residual));
}

StepResult discrete_step(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p) {
    Vector s = sys.migration(p);
    StepResult out;
    out.p.resize(sys.n());
    for (int i = 0; i < sys.n(); ++i) {
        double v = p(i) + f(s(i)) * (1.0 - p(i)) - sys.extinction()(i) * p(i);
        if (v < 0.0 || v > 1.0) {
            ++out.clamped;
            v = std::clamp(v, 0.0, 1.0);
        }
        out.p(i) = v;
    }
    return out;
}

namespace {

Vector field(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p) {
    Vector s = sys.migration(p);
    Vector dp(sys.n());
    for (int i = 0; i < sys.n(); ++i)
        dp(i) = f(s(i)) * (1.0 - p(i)) - sys.extinction()(i) * p(i);
    return dp;
}

// Dormand-Prince 5(4) coefficients.
const double kA21 = 1.0 / 5;
const double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
const double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
const double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
             kA54 = -212.0 / 729;
const double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
             kA65 = -5103.0 / 18656;
const double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192, kB5 = -2187.0 / 6784,
             kB6 = 11.0 / 84;
const double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920, kE5 = -17253.0 / 339200,
             kE6 = 22.0 / 525, kE7 = -1.0 / 40;

}  // namespace

OdeResult ode_integrate(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p0,
                        double t_end, const OdeOptions& opt) {
    if (!(t_end >= 0)) throw std::invalid_argument("ode_integrate: t_end must be nonnegative");
    OdeResult out;
    const int n = sys.n();
    Vector p = p0;

    std::vector<double> check_times;
    for (int c = 1; c <= opt.checkpoints; ++c) check_times.push_back(t_end * c / (opt.checkpoints + 1));
    check_times.push_back(t_end);
    out.times.resize(check_times.size());
    out.states.resize(check_times.size(), n);

    double t = 0;
    size_t next_check = 0;
    Vector k1 = field(sys, f, p);
    // initial step from the rate scale
    double rate = std::max(1e-12, k1.cwiseAbs().maxCoeff());
    double h = std::min(t_end > 0 ? t_end : 1.0, 0.1 / std::max(rate, sys.extinction().maxCoeff()));
    if (h <= 0) h = 1e-3;

    while (next_check < check_times.size()) {
        double target = check_times[next_check];
        if (t >= target) {
            out.times(next_check) = target;
            out.states.row(next_check) = p.transpose();
            ++next_check;
            continue;
        }
        bool clipped_to_target = false;
        if (t + h >= target) {
            h = target - t;
            clipped_to_target = true;
        }
        if (h < 1e-14 * std::max(1.0, t)) throw std::runtime_error("ode_integrate: step underflow");

        Vector k2 = field(sys, f, p + h * kA21 * k1);
        Vector k3 = field(sys, f, p + h * (kA31 * k1 + kA32 * k2));
        Vector k4 = field(sys, f, p + h * (kA41 * k1 + kA42 * k2 + kA43 * k3));
        Vector k5 = field(sys, f, p + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4));
        Vector k6 = field(sys, f, p + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
        Vector p_new = p + h * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
        Vector k7 = field(sys, f, p_new);
        Vector err_v = h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);

        double err = 0;
        for (int i = 0; i < n; ++i) {
            double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(p(i)), std::abs(p_new(i)));
            err = std::max(err, std::abs(err_v(i)) / sc);
        }

        if (err <= 1.0) {
            t = clipped_to_target ? target : t + h;
            for (int i = 0; i < n; ++i) {
                if (p_new(i) < 0.0 || p_new(i) > 1.0) {
                    if (p_new(i) < -10 * opt.abs_tol || p_new(i) > 1.0 + 10 * opt.abs_tol)
                        throw std::runtime_error("ode_integrate: invariant region violated");
                    p_new(i) = std::clamp(p_new(i), 0.0, 1.0);
                    ++out.clamped;
                }
            }
            p = std::move(p_new);
            k1 = std::move(k7);  // FSAL
            ++out.steps;
            if (out.steps > opt.max_steps) throw std::runtime_error("ode_integrate: max steps exceeded");
        }
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::clamp(fac, 0.2, 5.0);
    }
    out.p = p;
    out.ok = true;
    return out;
}

Matrix jacobian(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p) {
    const int n = sys.n();
    Vector s = sys.migration(p);
    Matrix J = Matrix::Zero(n, n);
    const auto& off = sys.neighbor_offsets();
    const auto& cols = sys.neighbor_cols();
    const auto& w = sys.neighbor_weights();
    for (int i = 0; i < n; ++i) {
        J(i, i) = -(f(s(i)) + sys.extinction()(i));
        double g = f.fprime(s(i)) * (1.0 - p(i));
        for (int k = off[i]; k < off[i + 1]; ++k) J(i, cols[k]) = g * w[k];
    }
    return J;
}

ResponseTimeSandwich response_time_sandwich(const PatchSystem& sys, const ColonizationFunction& f,
                                            const Vector& p_lower, const Vector& p_upper) {
    for (int i = 0; i < sys.n(); ++i)
        if (p_lower(i) > p_upper(i) + 1e-12)
            throw std::invalid_argument("response_time_sandwich: p_lower must be <= p_upper");

    Vector s_up = sys.migration(p_upper);
    double c5 = 0;
    for (int i = 0; i < sys.n(); ++i)
        c5 = std::max(c5, f(s_up(i)) + sys.extinction()(i));
    c5 += 1.0;

    auto shifted_leading = [&](const Vector& p) {
        Matrix J = jacobian(sys, f, p);
        for (int i = 0; i < sys.n(); ++i) J(i, i) += c5;
        return leading_eigenvalue_dense(J) - c5;
    };

    ResponseTimeSandwich out;
    out.lambda_lo = shifted_leading(p_upper);
    out.lambda_hi = shifted_leading(p_lower);
    out.certified = is_primitive(sys).connected;  // positive diagonal: connected => primitive
    return out;
}

}  // namespace metapop
