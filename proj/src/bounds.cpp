#include "metapop/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metapop {

double solve_q_alpha(const Landscape& L, const ColonizationFunction& f, const Position& z,
                     double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("solve_q_alpha: alpha must be positive");
    return solve_equilibrium_root(f, rho(L, z), alpha * L.extinction(z));
}

QGrid::QGrid(const Landscape& L, const ColonizationFunction& f, double alpha, double spacing,
             double L_q) {
    d_ = L.dim();
    h_ = spacing > 0 ? spacing : L.default_grid_step();
    budget_ = L_q * h_;
    BoundingBox bb = L.domain.bounding_box();
    lo_ = bb.lo;
    counts_.resize(d_);
    steps_.resize(d_);
    long total = 1;
    for (int a = 0; a < d_; ++a) {
        counts_[a] = std::max(2, static_cast<int>(std::ceil((bb.hi(a) - bb.lo(a)) / h_)) + 1);
        steps_[a] = (bb.hi(a) - bb.lo(a)) / (counts_[a] - 1);
        total *= counts_[a];
    }
    values_.resize(total);

    // Nodes outside the habitat are evaluated at their projection into it, so
    // every stored value is a genuine equilibrium level of a nearby point and
    // interpolation near the boundary stays within the error budget.
    auto project = [&](Position z) {
        if (L.domain.contains(z)) return z;
        if (L.domain.kind() == Domain::Kind::Box) {
            for (int a = 0; a < d_; ++a)
                z(a) = std::clamp(z(a), L.domain.box_lo()(a), L.domain.box_hi()(a));
            return z;
        }
        const Matrix& c = L.domain.ball_centers();
        const Vector& t = L.domain.ball_radii();
        int best = 0;
        double best_gap = std::numeric_limits<double>::infinity();
        for (int i = 0; i < c.rows(); ++i) {
            double gap = (z - c.row(i)).norm() - t(i);
            if (gap < best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        Position dir = z - c.row(best);
        double len = dir.norm();
        if (len == 0) return Position(c.row(best));
        return Position(c.row(best) + dir * (t(best) / len) * (1.0 - 1e-12));
    };

    for (long k = 0; k < total; ++k) {
        Position z(d_);
        long rem = k;
        for (int a = 0; a < d_; ++a) {
            int i = rem % counts_[a];
            rem /= counts_[a];
            z(a) = lo_(a) + steps_[a] * i;
        }
        values_[k] = solve_q_alpha(L, f, project(z), alpha);
    }
}

long QGrid::index(const std::vector<int>& idx) const {
    long k = 0, stride = 1;
    for (int a = 0; a < d_; ++a) {
        k += stride * idx[a];
        stride *= counts_[a];
    }
    return k;
}

double QGrid::operator()(const Position& z) const {
    std::vector<int> base(d_);
    std::vector<double> frac(d_);
    for (int a = 0; a < d_; ++a) {
        double pos = std::clamp((z(a) - lo_(a)) / steps_[a], 0.0, double(counts_[a] - 1));
        int i = std::min(static_cast<int>(pos), counts_[a] - 2);
        base[a] = i;
        frac[a] = pos - i;
    }
    double acc = 0;
    for (int corner = 0; corner < (1 << d_); ++corner) {
        double w = 1;
        std::vector<int> idx(d_);
        for (int a = 0; a < d_; ++a) {
            int bit = (corner >> a) & 1;
            idx[a] = base[a] + bit;
            w *= bit ? frac[a] : 1.0 - frac[a];
        }
        if (w > 0) acc += w * values_[index(idx)];
    }
    return acc;
}

void validate_bound_spec(const Landscape& L, const BoundSpec& spec, double eta_theta) {
    if (!(spec.alpha2 > 0.5)) throw std::invalid_argument("bound spec: requires alpha2 > 1/2");
    if (!(spec.alpha2 <= spec.alpha1))
        throw std::invalid_argument("bound spec: requires alpha2 <= alpha1");
    if (!(spec.alpha1 < 1.0)) throw std::invalid_argument("bound spec: requires alpha1 < 1");
    if (!(spec.beta > 1.0)) throw std::invalid_argument("bound spec: requires beta > 1");
    if (!(spec.beta < spec.beta_prime))
        throw std::invalid_argument("bound spec: requires beta < beta_prime");
    if (!(spec.beta_prime < 1.0 + eta_theta / 2.0))
        throw std::invalid_argument("bound spec: requires beta_prime < 1 + eta_theta/2");
    if (!(spec.theta_radius > 0))
        throw std::invalid_argument("bound spec: theta radius must be positive");

    // Theta must lie inside the habitat.
    const Position& x = spec.theta_center;
    const double t = spec.theta_radius;
    if (L.domain.kind() == Domain::Kind::Box) {
        for (int a = 0; a < L.dim(); ++a)
            if (x(a) - t < L.domain.box_lo()(a) - 1e-12 || x(a) + t > L.domain.box_hi()(a) + 1e-12)
                throw std::invalid_argument("bound spec: theta ball extends outside the habitat");
    } else {
        // dense boundary sample (conservative containment test)
        const int d = L.dim();
        int m = d == 1 ? 2 : (d == 2 ? 256 : 1024);
        for (int k = 0; k < m; ++k) {
            Position dir(d);
            if (d == 1) {
                dir(0) = k == 0 ? -1.0 : 1.0;
            } else if (d == 2) {
                double th = 2 * kPi * k / m;
                dir << std::cos(th), std::sin(th);
            } else {
                double u = -1.0 + 2.0 * (k + 0.5) / m;
                double th = kPi * (1 + std::sqrt(5.0)) * k;
                double s = std::sqrt(std::max(0.0, 1 - u * u));
                dir << s * std::cos(th), s * std::sin(th), u;
            }
            if (!L.domain.contains(x + t * dir))
                throw std::invalid_argument("bound spec: theta ball extends outside the habitat");
        }
    }
}

double ramp_slope(const Landscape& L, const ColonizationFunction& f, const BoundSpec& spec,
                  double eta_theta, const LandscapeConstants& lc) {
    if (!(spec.beta_prime > spec.beta)) throw std::invalid_argument("ramp_slope: beta' must exceed beta");
    if (!(eta_theta > 0)) throw std::invalid_argument("ramp_slope: eta_theta must be positive");
    double e = L.extinction.lower;
    return e * e * eta_theta * (spec.beta_prime - spec.beta) /
           (4.0 * L.r * lc.rho_max * lc.rho_max * f.L_f * (f.C1 * lc.rho_max + f.L_f));
}

DerivedBounds derive_bounds(const Landscape& L, const ColonizationFunction& f,
                            const BoundSpec& spec, double grid_step) {
    DerivedBounds d;
    d.lc = landscape_constants(L, f);
    Region theta = Region::ball(spec.theta_center, spec.theta_radius);
    d.eta_theta = eta(L, f, theta, grid_step);
    d.eta_omega = eta(L, f, Region::whole_domain(), grid_step);
    d.cbar_theta = c_bar(L, theta, grid_step);
    d.C4 = constant_C4(L, f, theta);
    d.theta2 = std::min(d.cbar_theta / (4.0 * L.kernel.c_max), 1.0 / std::sqrt(2.0));

    const double e = L.extinction.lower;
    const double rho_m = d.lc.rho_max;
    const double denom32 = 32.0 * f.L_f * rho_m * rho_m * (f.C1 * rho_m + f.L_f);
    d.mr_uniform = d.eta_theta * d.eta_theta * e * e / denom32;
    d.theta1_uniform = d.eta_theta > 0 ? 4.0 * f.L_f * rho_m / (d.eta_theta * e) : 0.0;
    if (spec.beta_prime > spec.beta) {
        d.mr_local = e * e * d.eta_theta * (spec.beta_prime - spec.beta) /
                     (4.0 * rho_m * rho_m * f.L_f * (f.C1 * rho_m + f.L_f));
        d.theta1_local = f.L_f * rho_m / (e * (spec.beta_prime - spec.beta));
    }
    if (d.eta_theta < 1.0)
        d.beta_prime_uniform = 1.0 / (2.0 * (1.0 - d.eta_theta)) + spec.beta / 2.0;
    d.m = spec.m > 0 ? spec.m : (d.eta_theta > 0 && spec.beta_prime > spec.beta
                                     ? ramp_slope(L, f, spec, d.eta_theta, d.lc)
                                     : 0.0);
    return d;
}

UpperBoundFn upper_bound_fn(const Landscape& L, const ColonizationFunction& f,
                            const BoundSpec& spec, double grid_step) {
    LandscapeConstants lc = landscape_constants(L, f);
    QGrid q(L, f, spec.alpha1, grid_step > 0 ? grid_step : L.default_grid_step(), lc.L_q);
    return UpperBoundFn(std::move(q), 1.0 - spec.alpha2);
}

double LowerBoundFn::operator()(const Position& z) const {
    double dist_to_edge = t_ - (z - x_).norm();
    if (dist_to_edge < -1e-12) throw std::domain_error("lower bound: point outside theta");
    return std::min(m_ * std::max(dist_to_edge, 0.0), q_(z));
}

LowerBoundFn lower_bound_fn(const Landscape& L, const ColonizationFunction& f,
                            const BoundSpec& spec, double grid_step) {
    DerivedBounds d = derive_bounds(L, f, spec, grid_step);
    if (!(d.eta_theta > 0))
        throw std::invalid_argument("lower_bound_fn: requires eta_theta > 0");
    QGrid q(L, f, spec.beta_prime, grid_step > 0 ? grid_step : L.default_grid_step(), d.lc.L_q);
    return LowerBoundFn(std::move(q), spec.theta_center, spec.theta_radius, d.m);
}

void Checklist::add(const std::string& name, double lhs, double rhs) {
    CheckRow row;
    row.name = name;
    row.lhs = lhs;
    row.rhs = rhs;
    row.margin = rhs - lhs;
    // Relative slack admits rows that hold with equality by construction.
    row.pass = lhs <= rhs + 1e-12 * std::max(std::abs(lhs), std::abs(rhs));
    rows.push_back(row);
    all_pass = all_pass && row.pass;
}

const CheckRow* Checklist::find(const std::string& name) const {
    for (const auto& r : rows)
        if (r.name == name) return &r;
    return nullptr;
}

Checklist check_ub_hypotheses(const Landscape& L, const ColonizationFunction& f,
                              const BoundSpec& spec, int n, const DerivedBounds* derived) {
    DerivedBounds local;
    if (!derived) {
        local = derive_bounds(L, f, spec);
        derived = &local;
    }
    const auto& d = *derived;
    Checklist cl;
    double ratio = f.L_f * d.lc.rho_max / L.extinction.lower;
    cl.branch = ratio > 0.5 ? "viable" : "nowhere-viable";

    int N = covering_number(L, L.r / 3.0);
    cl.add("patch_count_vs_covering", 2.0 * N + 1.0, static_cast<double>(n));
    cl.add("upper_lipschitz_margin", 2.0 * f.L_f * d.lc.L_q * L.r * d.lc.rho_max,
           L.extinction.lower * (1.0 - spec.alpha1) *
               std::max(spec.alpha1 * d.eta_omega, 1.0 - spec.alpha2));
    return cl;
}

static void wedge_rows(Checklist& cl, const std::string& tag, const Landscape& L,
                       const ColonizationFunction& f, const DerivedBounds& d, double beta,
                       double beta_prime, double theta1, double mr, double t) {
    const double e = L.extinction.lower;
    const double rho_m = d.lc.rho_max;
    const double r = L.r;
    const double eta_t = d.eta_theta;
    const int dim = L.dim();

    cl.add("wedge_reach[" + tag + "]", (1.0 + theta1) * mr, beta_prime * eta_t + 1.0 - beta_prime);
    cl.add("wedge_slope[" + tag + "]", f.L_f * rho_m * std::max(mr, d.lc.L_q * r),
           (beta_prime - beta) * e * theta1 * mr);
    cl.add("wedge_budget[" + tag + "]",
           f.L_f * (d.lc.C3 + rho_m / t) * r / d.theta2 +
               rho_m * (f.C1 * rho_m + f.L_f) * theta1 * mr,
           e * (beta * eta_t + 1.0 - beta));
    cl.add("wedge_aspect[" + tag + "]", r / t, std::min(d.theta2, 1.0 / (2.0 * (2.0 + theta1))));
    cl.add("wedge_flux[" + tag + "]", (d.lc.C3 + rho_m / t) * r,
           L.emigration.lower * d.lc.v_dminus1 * L.density.lower *
               (d.cbar_theta - 2.0 * L.kernel.c_max * d.theta2) *
               std::pow(1.0 - d.theta2 * d.theta2, (dim - 1) / 2.0));
}

Checklist check_lb_hypotheses(const Landscape& L, const ColonizationFunction& f,
                              const BoundSpec& spec, const DerivedBounds* derived) {
    DerivedBounds local;
    if (!derived) {
        local = derive_bounds(L, f, spec);
        derived = &local;
    }
    const auto& d = *derived;
    Checklist cl;
    const double e = L.extinction.lower;
    const double rho_m = d.lc.rho_max;
    const double r = L.r;
    const double t = spec.theta_radius;
    const double eta_t = d.eta_theta;

    cl.add("eta_theta_positive", 1e-300, eta_t);
    cl.add("beta_above_one", 1.0, spec.beta);
    cl.add("beta_chain", spec.beta, spec.beta_prime);
    cl.add("beta_prime_cap", spec.beta_prime, 1.0 + eta_t / 2.0);
    cl.add("viability_ratio", 0.5, f.L_f * rho_m / e);

    // Explicit inequalities of the lower construction.
    const double denom32 = 32.0 * f.L_f * rho_m * rho_m * (f.C1 * rho_m + f.L_f);
    cl.add("uniform_lipschitz", d.lc.L_q * r, eta_t * eta_t * e * e / denom32);
    cl.add("uniform_aspect", r / t,
           std::min({d.cbar_theta / (4.0 * L.kernel.c_max), 1.0 / std::sqrt(2.0),
                     eta_t * e / (8.0 * f.L_f * rho_m + 4.0 * eta_t * e)}));
    cl.add("uniform_boundary_mass", (d.lc.C3 + rho_m / t) * r,
           std::min(L.emigration.lower * L.density.lower * d.cbar_theta * d.lc.v_dminus1 *
                        std::pow(2.0, -(L.dim() + 3) / 2.0),
                    (eta_t * e / (4.0 * f.L_f)) * d.theta2));
    cl.add("local_lipschitz", d.lc.L_q * r, d.mr_local);
    cl.add("local_aspect", r / t, e * (spec.beta_prime - spec.beta) / (6.0 * f.L_f * rho_m));

    // Wedge inequalities under the two parameter recipes.
    wedge_rows(cl, "uniform", L, f, d, spec.beta, d.beta_prime_uniform, d.theta1_uniform,
               d.mr_uniform, t);
    wedge_rows(cl, "local", L, f, d, spec.beta, spec.beta_prime, d.theta1_local, d.mr_local, t);
    return cl;
}

double constant_C4(const Landscape& L, const ColonizationFunction& f, const Region& region) {
    LandscapeConstants lc = landscape_constants(L, f);
    double cbar = c_bar(L, region);
    const int d = L.dim();
    double first = std::min(1.0, f(L.emigration.lower * L.density.lower) /
                                     (std::pow(2.0, (d + 1) / 2.0) * L.extinction.upper));
    double second = std::min(cbar / (4.0 * L.kernel.c_max), 1.0 / std::sqrt(2.0));
    double e = L.extinction.lower;
    return first * second * e * e /
           (32.0 * f.L_f * lc.rho_max * lc.rho_max * (f.C1 * lc.rho_max + f.L_f));
}

ProbBound ub_probability_bound(const Landscape& L, const ColonizationFunction& f,
                               const BoundSpec& spec, int n, const DerivedBounds* derived) {
    DerivedBounds local;
    if (!derived) {
        local = derive_bounds(L, f, spec);
        derived = &local;
    }
    const auto& d = *derived;
    const double e = L.extinction.lower;
    const double a = L.emigration.upper;
    const double dens = (n - 1) * std::pow(L.r, L.dim()) / L.area;
    double exponent;
    if (f.L_f * d.lc.rho_max / e > 0.5) {
        double num = e * e * (1.0 - spec.alpha1) * (1.0 - spec.alpha1);
        exponent = d.lc.C2 * dens * num / (16.0 * a * a * f.L_f * f.L_f);
    } else {
        double ratio = d.lc.rho_max / (2.0 * a);
        exponent = d.lc.C2 * dens * ratio * ratio;
    }
    double mass = min_local_mass(L, L.r / 3.0);
    ProbBound out;
    out.value = 1.0 - 2.0 * n * std::exp(-exponent) - 0.5 * n * std::exp(-double(n) * mass);
    out.vacuous = out.value <= 0;
    return out;
}

ProbBound lb_probability_bound(const Landscape& L, const ColonizationFunction& f,
                               const BoundSpec& spec, int n, const DerivedBounds* derived) {
    DerivedBounds local;
    if (!derived) {
        local = derive_bounds(L, f, spec);
        derived = &local;
    }
    const auto& d = *derived;
    const double e = L.extinction.lower;
    const double a = L.emigration.upper;
    const double dens = (n - 1) * std::pow(L.r, L.dim()) / L.area;
    double num = d.C4 * d.C4 * e * e * std::pow(d.eta_theta, 4.0) * (spec.beta - 1.0) *
                 (spec.beta - 1.0);
    double exponent = d.lc.C2 * dens * num / (a * a * f.L_f * f.L_f);
    ProbBound out;
    out.value = 1.0 - 2.0 * n * std::exp(-exponent);
    out.vacuous = out.value <= 0;
    return out;
}

TwoSidedBound two_sided_bound(const Landscape& L, const ColonizationFunction& f,
                              const BoundSpec& spec, int n, const DerivedBounds* derived) {
    DerivedBounds local;
    if (!derived) {
        local = derive_bounds(L, f, spec);
        derived = &local;
    }
    const auto& d = *derived;
    TwoSidedBound out;
    if (std::abs(spec.alpha2 - (1.0 - d.eta_theta)) > 1e-9) {
        out.reason = "requires alpha2 = 1 - eta_theta";
        return out;
    }
    if (!(d.m > 0) || !(spec.theta_radius > L.r + 1.0 / d.m)) {
        out.reason = "requires t > r + 1/m";
        return out;
    }
    out.applicable = true;
    out.theta_m = Region::ball(spec.theta_center, spec.theta_radius - 1.0 / d.m);
    out.accuracy = (spec.beta_prime - spec.alpha1) / spec.alpha1;

    const double e = L.extinction.lower;
    const double a = L.emigration.upper;
    const double dens = (n - 1) * std::pow(L.r, L.dim()) / L.area;
    double factor = d.lc.C2 * dens * e * e / (a * a * f.L_f * f.L_f);
    double inner = std::min(d.C4 * d.C4 * std::pow(d.eta_theta, 4.0) * (spec.beta - 1.0) *
                                (spec.beta - 1.0),
                            (1.0 - spec.alpha1) * (1.0 - spec.alpha1) / 16.0);
    double second;
    if (L.domain.r_smooth(L.r)) {
        second = r_smooth_constant(L.dim()) * L.density.lower * n * std::pow(L.r, L.dim()) / L.area;
    } else {
        second = n * min_local_mass(L, L.r / 3.0);
    }
    out.probability.value =
        1.0 - 4.0 * n * std::exp(-factor * inner) - 0.5 * n * std::exp(-second);
    out.probability.vacuous = out.probability.value <= 0;
    return out;
}

ScheduleResult scaling_schedule(const std::vector<int>& n_seq, const std::vector<double>& r_seq,
                                   const std::vector<double>& phi_seq, double gamma1, double gamma2,
                                   double c2, double eta_omega, const Landscape& L,
                                   const ColonizationFunction& f, double theta_radius) {
    if (!(gamma1 >= 0 && gamma1 < 0.5))
        throw std::invalid_argument("scaling_schedule: gamma1 must lie in [0, 1/2)");
    if (n_seq.size() != r_seq.size() || n_seq.size() != phi_seq.size())
        throw std::invalid_argument("scaling_schedule: sequences must have equal length");
    LandscapeConstants lc = landscape_constants(L, f);
    const double e = L.extinction.lower;
    ScheduleResult out;
    double prev_phi = -1, prev_scale = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < n_seq.size(); ++k) {
        SchedulePoint p;
        p.n = n_seq[k];
        p.r = r_seq[k];
        p.phi = phi_seq[k];
        double s = std::pow(p.r, 1.0 - gamma1) * p.phi;
        p.error_scale = s;
        p.alpha2 = 1.0 - eta_omega;
        p.alpha1 = 1.0 - s;
        p.beta = 1.0 + s;
        p.beta_prime = 1.0 + 2.0 * s;
        p.m = e * e * eta_omega * s /
              (4.0 * p.r * lc.rho_max * lc.rho_max * f.L_f * (f.C1 * lc.rho_max + f.L_f));
        p.excluded_width = theta_radius / p.phi;
        double M = p.n * std::pow(p.r, L.dim()) / L.area;
        p.growth_ok = std::pow(p.r, 2.0 * (1.0 + gamma1)) * p.phi * p.phi * M >=
                      c2 * std::pow(std::log(double(p.n)), 1.0 + gamma2);
        p.ranges_ok = p.alpha2 > 0.5 && p.alpha2 <= p.alpha1 && p.alpha1 < 1.0 && p.beta > 1.0 &&
                      p.beta < p.beta_prime && p.beta_prime < 1.0 + eta_omega / 2.0;
        if (prev_phi >= 0) {
            out.phi_increasing = out.phi_increasing && p.phi > prev_phi;
            double scale = std::pow(p.r, 1.0 - 2.0 * gamma1) * p.phi;
            out.scale_decreasing = out.scale_decreasing && scale < prev_scale;
            prev_scale = scale;
        } else {
            prev_scale = std::pow(p.r, 1.0 - 2.0 * gamma1) * p.phi;
        }
        prev_phi = p.phi;
        out.points.push_back(p);
    }
    return out;
}

}  // namespace metapop
