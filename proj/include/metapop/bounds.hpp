#pragma once

#include <string>
#include <vector>

#include "metapop/landscape.hpp"
#include "metapop/types.hpp"

namespace metapop {

// Parameters of the envelope construction around a ball Theta = B(x, t).
// m < 0 means "derive the ramp slope from the constants" (see ramp_slope).
struct BoundSpec {
    Position theta_center;
    double theta_radius = 0;
    double alpha1 = 0;  // upper envelope level, in (1/2, 1)
    double alpha2 = 0;  // upper envelope floor parameter, 1/2 < alpha2 <= alpha1
    double beta = 0;    // damping for the lower construction, > 1
    double beta_prime = 0;  // in (beta, 1 + eta_theta / 2)
    double m = -1;
};

// Everything the checkers and probability bounds consume, derived once.
struct DerivedBounds {
    LandscapeConstants lc;
    double eta_theta = 0;
    double eta_omega = 0;
    double cbar_theta = 0;
    double C4 = 0;
    double m = 0;          // ramp slope actually used
    double theta2 = 0;     // min(cbar/(4 c_max), 1/sqrt(2))
    double theta1_uniform = 0;
    double theta1_local = 0;
    double mr_uniform = 0;
    double mr_local = 0;
    double beta_prime_uniform = 0;  // 1/(2(1-eta)) + beta/2
};

// q_alpha(z): the largest solution of x = f(x rho(z)) / (alpha e(z) + f(x rho(z))).
double solve_q_alpha(const Landscape& L, const ColonizationFunction& f, const Position& z,
                     double alpha);

// Memoized q_alpha over a tensor grid with multilinear interpolation.
// Outside the habitat the value is 0. The interpolation error budget is
// L_q * spacing, recorded at construction.
class QGrid {
  public:
    QGrid(const Landscape& L, const ColonizationFunction& f, double alpha, double spacing,
          double L_q);
    double operator()(const Position& z) const;
    double spacing() const { return h_; }
    double interp_error_budget() const { return budget_; }

  private:
    int d_;
    Position lo_;
    double h_;
    double budget_;
    std::vector<int> counts_;
    std::vector<double> steps_;   // actual per-axis spacing (<= h)
    std::vector<double> values_;
    long index(const std::vector<int>& idx) const;
};

// Validates the spec against the landscape (alpha/beta ranges, Theta inside
// the domain). Throws naming the violated invariant.
void validate_bound_spec(const Landscape& L, const BoundSpec& spec, double eta_theta);

DerivedBounds derive_bounds(const Landscape& L, const ColonizationFunction& f,
                            const BoundSpec& spec, double grid_step = -1);

// Ramp slope of the boundary wedge in the lower envelope:
// m = e_min^2 eta (beta' - beta) / (4 r rho_max^2 L_f (C1 rho_max + L_f)).
double ramp_slope(const Landscape& L, const ColonizationFunction& f, const BoundSpec& spec,
                  double eta_theta, const LandscapeConstants& lc);

// Pointwise upper envelope p+(z) = q_{alpha1}(z) v (1 - alpha2).
class UpperBoundFn {
  public:
    UpperBoundFn(QGrid q, double floor) : q_(std::move(q)), floor_(floor) {}
    double operator()(const Position& z) const { return std::max(q_(z), floor_); }
    const QGrid& grid() const { return q_; }

  private:
    QGrid q_;
    double floor_;
};

// Pointwise lower envelope on Theta: p-(z) = min(m (t - |z-x|), q_{beta'}(z)).
// Throws std::domain_error outside Theta.
class LowerBoundFn {
  public:
    LowerBoundFn(QGrid q, Position center, double t, double m)
        : q_(std::move(q)), x_(std::move(center)), t_(t), m_(m) {}
    double operator()(const Position& z) const;
    double m() const { return m_; }

  private:
    QGrid q_;
    Position x_;
    double t_, m_;
};

UpperBoundFn upper_bound_fn(const Landscape& L, const ColonizationFunction& f,
                            const BoundSpec& spec, double grid_step = -1);
LowerBoundFn lower_bound_fn(const Landscape& L, const ColonizationFunction& f,
                            const BoundSpec& spec, double grid_step = -1);

struct CheckRow {
    std::string name;
    double lhs = 0;
    double rhs = 0;
    bool pass = false;
    double margin = 0;  // rhs - lhs; nonnegative when the row passes
};

struct Checklist {
    std::vector<CheckRow> rows;
    bool all_pass = true;
    std::string branch;  // "viable" or "nowhere-viable" for the upper check

    void add(const std::string& name, double lhs, double rhs);
    const CheckRow* find(const std::string& name) const;
};

// Upper-bound hypotheses: patch count vs covering number, the Lipschitz
// margin inequality, and which viability branch applies.
Checklist check_ub_hypotheses(const Landscape& L, const ColonizationFunction& f,
                              const BoundSpec& spec, int n, const DerivedBounds* derived = nullptr);

// Lower-bound hypotheses: the eta/beta preconditions, the five explicit
// inequalities of the construction, and the wedge inequalities evaluated
// under both parameter recipes (uniform floor and local ramp).
Checklist check_lb_hypotheses(const Landscape& L, const ColonizationFunction& f,
                              const BoundSpec& spec, const DerivedBounds* derived = nullptr);

double constant_C4(const Landscape& L, const ColonizationFunction& f, const Region& region);

struct ProbBound {
    double value = 0;
    bool vacuous = false;  // value <= 0; reported raw, never clamped
};

ProbBound ub_probability_bound(const Landscape& L, const ColonizationFunction& f,
                               const BoundSpec& spec, int n, const DerivedBounds* derived = nullptr);
ProbBound lb_probability_bound(const Landscape& L, const ColonizationFunction& f,
                               const BoundSpec& spec, int n, const DerivedBounds* derived = nullptr);

struct TwoSidedBound {
    bool applicable = false;   // requires t > r + 1/m (and alpha2 = 1 - eta)
    std::string reason;
    Region theta_m;            // inner ball B(x, t - 1/m)
    double accuracy = 0;       // (beta' - alpha1) / alpha1
    ProbBound probability;
};

TwoSidedBound two_sided_bound(const Landscape& L, const ColonizationFunction& f,
                              const BoundSpec& spec, int n, const DerivedBounds* derived = nullptr);

// Per-n parameter schedule for the shrinking-radius limit: given r_n and
// phi_n sequences, emits the standard choices 1-alpha2 = eta, 1-alpha1 =
// beta - 1 = beta' - beta = r_n^(1-gamma1) phi_n, the ramp slope, the
// predicted error scale and the excluded boundary width.
struct SchedulePoint {
    int n = 0;
    double r = 0, phi = 0;
    double alpha1 = 0, alpha2 = 0, beta = 0, beta_prime = 0, m = 0;
    double error_scale = 0;     // r^(1-gamma1) phi
    double excluded_width = 0;  // t / phi
    bool growth_ok = true;      // r^(2(1+gamma1)) phi^2 M >= c2 (log n)^(1+gamma2)
    bool ranges_ok = true;      // alpha/beta parameters admissible
};

struct ScheduleResult {
    std::vector<SchedulePoint> points;
    bool phi_increasing = true;
    bool scale_decreasing = true;  // r^(1-2 gamma1) phi decreasing along the sequence
};

ScheduleResult scaling_schedule(const std::vector<int>& n_seq, const std::vector<double>& r_seq,
                                   const std::vector<double>& phi_seq, double gamma1, double gamma2,
                                   double c2, double eta_omega, const Landscape& L,
                                   const ColonizationFunction& f, double theta_radius);

}  // namespace metapop
