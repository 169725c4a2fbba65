#pragma once

#include <vector>

#include "metapop/patches.hpp"
#include "metapop/types.hpp"

namespace metapop {

// One application of the equilibrium operator:
// E(p)_i = f(S_i(p)) / (e(z_i) + f(S_i(p))).
Vector En_apply(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p);

// Restricted, damped variant: the migration sum keeps only patches inside
// theta, and the extinction rate is inflated by beta >= 1.
Vector En_restricted_apply(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p,
                           const Region& theta, double beta);

struct FixedPointResult {
    Vector p;
    long iterations = 0;
    double residual = 0;  // sup-norm of the last step
    bool converged = false;
};

// Largest fixed point of E: iterate downward from the all-ones vector. The
// iterate sequence is componentwise nonincreasing (asserted each step, since
// E is monotone); stops when the sup-norm step drops below tol.
FixedPointResult largest_fixed_point(const PatchSystem& sys, const ColonizationFunction& f,
                                     double tol = 1e-10, long max_iter = 1000000);

struct StepResult {
    Vector p;
    int clamped = 0;  // components clipped back into [0,1]
};

// One step of the discrete-time occupancy map
// p_i' = p_i + f(S_i(p)) (1 - p_i) - e(z_i) p_i, clamped to [0,1].
// Interpreting the increments as probabilities requires f(S_i)+e <= 1; this
// is not enforced, but clamping is counted so violations surface in reports.
StepResult discrete_step(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p);

struct OdeOptions {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    long max_steps = 50000000;
    int checkpoints = 0;  // additionally record this many evenly spaced states
};

struct OdeResult {
    Vector p;            // state at t_end
    Vector times;        // checkpoint times (incl. t_end)
    Matrix states;       // one row per checkpoint
    long steps = 0;
    int clamped = 0;
    bool ok = false;
};

// dp_i/dt = f(S_i(p)) (1 - p_i) - e(z_i) p_i, integrated with an adaptive
// embedded Dormand-Prince 5(4) scheme. [0,1]^n is invariant for the flow;
// overshoot beyond the step tolerance is clipped and counted.
OdeResult ode_integrate(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p0,
                        double t_end, const OdeOptions& opt = {});

// Jacobian of the vector field at p:
// diagonal -(f(S_i(p)) + e(z_i)),
// off-diagonal f'(S_i(p)) (1 - p_i) (A/(n-1)) a(z_j) c(z_i, z_j; r).
Matrix jacobian(const PatchSystem& sys, const ColonizationFunction& f, const Vector& p);

struct ResponseTimeSandwich {
    double lambda_lo = 0;  // leading eigenvalue of J(p_upper)
    double lambda_hi = 0;  // leading eigenvalue of J(p_lower)
    bool certified = false;  // shifted matrices primitive (coupling graph connected)
};

// Bracket for the leading eigenvalue of J(p*) given componentwise bounds
// p_lower <= p* <= p_upper: shift by C5 > max_i f(S_i(p_upper)) + e(z_i) to
// make the matrices nonnegative, then order their Perron roots.
ResponseTimeSandwich response_time_sandwich(const PatchSystem& sys, const ColonizationFunction& f,
                                            const Vector& p_lower, const Vector& p_upper);

}  // namespace metapop
