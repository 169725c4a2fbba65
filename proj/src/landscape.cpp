#include "metapop/landscape.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "metapop/quadrature.hpp"

namespace metapop {

static double domain_volume_integral(const Landscape& L, const ScalarField& field) {
    BoundingBox bb = L.domain.bounding_box();
    BoxRule rule = box_rule(bb.lo, bb.hi, L.quad.volume);
    double acc = 0;
    for (int k = 0; k < rule.weights.size(); ++k) {
        Position y = rule.points.row(k);
        if (L.domain.contains(y)) acc += rule.weights[k] * field(y);
    }
    return acc;
}

Landscape make_landscape(Domain domain, ScalarField e, ScalarField a, ScalarField sigma,
                         Kernel kernel, double r, QuadratureSpec quad,
                         std::optional<double> declared_rho_lipschitz) {
    if (!(r > 0)) throw std::invalid_argument("landscape: dispersal radius must be positive");
    if (!(e.lower > 0) || !(a.lower > 0) || !(sigma.lower > 0))
        throw std::invalid_argument("landscape: e, a, sigma must have positive lower bounds");
    Landscape L;
    L.domain = std::move(domain);
    L.extinction = std::move(e);
    L.emigration = std::move(a);
    L.density = std::move(sigma);
    L.kernel = std::move(kernel);
    L.r = r;
    L.quad = quad;
    L.declared_rho_lipschitz = declared_rho_lipschitz;
    L.area = domain_volume_integral(L, L.density);
    if (!(L.area > 0)) throw std::invalid_argument("landscape: habitat volume must be positive");
    return L;
}

void validate_landscape(const Landscape& L, double grid_step) {
    double h = grid_step > 0 ? grid_step : L.default_grid_step();
    BoundingBox bb = L.domain.bounding_box();
    std::vector<Position> pts = grid_points(bb.lo, bb.hi, h);

    struct Item {
        const char* name;
        const ScalarField* f;
    };
    const Item items[] = {{"e", &L.extinction}, {"a", &L.emigration}, {"sigma", &L.density}};

    Position prev;
    bool have_prev = false;
    for (const auto& z : pts) {
        if (!L.domain.contains(z)) continue;
        for (const auto& it : items) {
            double v = (*it.f)(z);
            if (v < it.f->lower - 1e-12 || v > it.f->upper + 1e-12)
                throw std::invalid_argument(std::string("landscape: declared bounds violated for ") + it.name);
        }
        for (double u : {1.0, 1.0 + 1e-9, 1.25, 2.0}) {
            if (L.kernel(z, u) != 0.0)
                throw std::invalid_argument("landscape: kernel support must vanish for u >= 1");
        }
        for (double u : {0.0, 0.25, 0.5, 0.9, 0.999}) {
            double c = L.kernel(z, u);
            if (!(c > 0)) throw std::invalid_argument("landscape: kernel must be positive on [0,1)");
            if (c > L.kernel.c_max + 1e-12)
                throw std::invalid_argument("landscape: kernel exceeds declared c_max");
        }
        if (have_prev) {
            double dist = (z - prev).norm();
            if (dist > 0) {
                for (const auto& it : items) {
                    double dv = std::abs((*it.f)(z) - (*it.f)(prev));
                    if (dv > it.f->lipschitz * dist * (1.0 + 1e-9) + 1e-12)
                        throw std::invalid_argument(
                            std::string("landscape: declared Lipschitz constant violated for ") + it.name);
                }
            }
        }
        prev = z;
        have_prev = true;
    }
}

double rho(const Landscape& L, const Position& z) {
    if (!L.domain.contains(z)) throw std::domain_error("rho: point outside the habitat");
    const int d = L.dim();
    BallRule rule = ball_rule(z, L.r, L.quad.radial, L.quad.angular);
    double rdinv = std::pow(L.r, -d);
    double acc = 0;
    for (int k = 0; k < rule.weights.size(); ++k) {
        Position y = rule.points.row(k);
        if (!L.domain.contains(y)) continue;
        double c = L.kernel(z, rule.radial_frac[k]);
        if (c == 0.0) continue;
        acc += rule.weights[k] * L.emigration(y) * c * L.density(y);
    }
    return acc * rdinv;
}

double estimate_L_rho(const Landscape& L, double grid_step) {
    if (!(grid_step > 0) || grid_step >= L.r / 4)
        throw std::invalid_argument("estimate_L_rho: grid_step must be in (0, r/4)");
    BoundingBox bb = L.domain.bounding_box();
    for (int a = 0; a < L.dim(); ++a)
        if (bb.hi(a) - bb.lo(a) <= 2 * L.r)
            throw std::domain_error("estimate_L_rho: domain too small for an interior grid");

    // Interior grid: dispersal balls clear of the boundary, so the estimate
    // measures landscape variation rather than clipping transients.
    std::vector<Position> pts = grid_points(bb.lo, bb.hi, grid_step);
    std::vector<Position> interior;
    std::vector<double> vals;
    for (const auto& z : pts) {
        if (L.domain.contains(z) && L.domain.interior_margin(z) >= L.r) {
            interior.push_back(z);
            vals.push_back(rho(L, z));
        }
    }
    if (interior.size() < 2) throw std::domain_error("estimate_L_rho: interior grid is empty");

    double best = 0;
    for (size_t i = 0; i < interior.size(); ++i) {
        for (size_t j = i + 1; j < interior.size(); ++j) {
            double dist = (interior[i] - interior[j]).norm();
            if (dist <= 0 || dist > 2.5 * grid_step * std::sqrt(double(L.dim()))) continue;
            best = std::max(best, std::abs(vals[i] - vals[j]) / dist);
        }
    }
    return best;
}

static std::vector<Position> region_grid(const Landscape& L, const Region& region, double h) {
    BoundingBox bb = L.domain.bounding_box();
    Position lo = bb.lo, hi = bb.hi;
    if (!region.whole) {
        for (int a = 0; a < L.dim(); ++a) {
            lo(a) = std::max(lo(a), region.center(a) - region.radius);
            hi(a) = std::min(hi(a), region.center(a) + region.radius);
        }
    }
    std::vector<Position> pts;
    for (const auto& z : grid_points(lo, hi, h))
        if (L.domain.contains(z) && region.contains(z)) pts.push_back(z);
    if (pts.empty()) throw std::domain_error("region grid is empty");
    return pts;
}

double eta(const Landscape& L, const ColonizationFunction& f, const Region& region,
           double grid_step, double alpha) {
    double h = grid_step > 0 ? grid_step : L.default_grid_step();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& z : region_grid(L, region, h)) {
        double q = solve_equilibrium_root(f, rho(L, z), alpha * L.extinction(z));
        best = std::min(best, q);
        if (best == 0.0) break;
    }
    return best;
}

double c_bar(const Landscape& L, const Region& region, double grid_step) {
    double h = grid_step > 0 ? grid_step : std::max(L.default_grid_step(), 0.02 * L.r);
    const int d = L.dim();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& z : region_grid(L, region, h)) {
        double v = integrate_1d([&](double u) { return L.kernel(z, u) * std::pow(u, d); }, 0.0, 1.0, 128);
        best = std::min(best, v);
        if (!L.kernel.position_dependent) break;  // profile identical at every z
    }
    return best;
}

namespace {

// Regular lattice centered on the bounding box; index tuples are mapped to
// flat offsets in row-major order.
struct Lattice {
    Position origin;  // coordinate of index 0 along each axis
    double pitch;
    std::vector<long> dims;
    long total = 1;

    Lattice(const BoundingBox& bb, double pitch_, double margin) : pitch(pitch_) {
        const int d = static_cast<int>(bb.lo.size());
        origin.resize(d);
        dims.resize(d);
        for (int a = 0; a < d; ++a) {
            double lo = bb.lo(a) - margin, hi = bb.hi(a) + margin;
            double mid = 0.5 * (lo + hi);
            long half = static_cast<long>(std::ceil((hi - mid) / pitch));
            dims[a] = 2 * half + 1;
            origin(a) = mid - half * pitch;
            total *= dims[a];
        }
    }

    Position point(long k) const {
        const int d = static_cast<int>(origin.size());
        Position p(d);
        for (int a = 0; a < d; ++a) {
            p(a) = origin(a) + (k % dims[a]) * pitch;
            k /= dims[a];
        }
        return p;
    }
};

}  // namespace

int covering_number(const Landscape& L, double radius) {
    if (!(radius > 0)) throw std::invalid_argument("covering_number: radius must be positive");
    const int d = L.dim();
    const double sqd = std::sqrt(double(d));
    BoundingBox bb = L.domain.bounding_box();

    // Coverage is certified on a fine lattice: any point of the domain lies
    // in the cube of some fine lattice point, so covering the fine points
    // at radius reduced by the half-diagonal covers the whole domain. The
    // returned count is therefore never below the true covering number.
    const double fine = radius / (4.0 * sqd);
    const double slack = 0.5 * fine * sqd;  // = radius / 8
    const double reach = radius - slack;

    Lattice fine_lat(bb, fine, 0.5 * fine);
    if (fine_lat.total > 4000000) {
        // Large instance: disjoint cells of side 2*radius/sqrt(d) meeting the
        // domain; each is contained in the ball around its center.
        Lattice cells(bb, 2.0 * radius / sqd, 0.0);
        long count = 0;
        Position half = Position::Constant(d, radius / sqd);
        for (long k = 0; k < cells.total; ++k) {
            Position c = cells.point(k);
            if (L.domain.intersects_cube(c - half, c + half)) ++count;
        }
        return static_cast<int>(std::max(1L, count));
    }

    // fine points whose cube meets the domain
    std::vector<long> fine_ids;
    Position fhalf = Position::Constant(d, 0.5 * fine);
    for (long k = 0; k < fine_lat.total; ++k) {
        Position p = fine_lat.point(k);
        if (L.domain.intersects_cube(p - fhalf, p + fhalf)) fine_ids.push_back(k);
    }
    if (fine_ids.empty()) return 1;
    std::unordered_map<long, int> fine_index;
    fine_index.reserve(fine_ids.size());
    for (size_t i = 0; i < fine_ids.size(); ++i) fine_index[fine_ids[i]] = static_cast<int>(i);

    // candidate centers on the documented pitch (radius / sqrt(d)), i.e.
    // every 4th fine lattice point per axis
    std::vector<long> cand_ids;
    {
        std::vector<long> rem(d);
        for (long k = 0; k < fine_lat.total; ++k) {
            long kk = k;
            bool coarse = true;
            for (int a = 0; a < d; ++a) {
                if ((kk % fine_lat.dims[a]) % 4 != 0) {
                    coarse = false;
                    break;
                }
                kk /= fine_lat.dims[a];
            }
            if (coarse) cand_ids.push_back(k);
        }
    }

    // stencil of fine-lattice offsets within the reduced radius
    std::vector<std::vector<long>> stencil_tuples;
    {
        int w = static_cast<int>(std::floor(reach / fine));
        std::vector<long> tup(d, 0);
        std::function<void(int)> rec = [&](int axis) {
            if (axis == d) {
                double norm2 = 0;
                for (int a = 0; a < d; ++a) norm2 += double(tup[a]) * tup[a];
                if (norm2 * fine * fine <= reach * reach) stencil_tuples.push_back(tup);
                return;
            }
            for (int v = -w; v <= w; ++v) {
                tup[axis] = v;
                rec(axis + 1);
            }
        };
        rec(0);
    }

    auto covered_by = [&](long cand) {
        std::vector<int> covered;
        std::vector<long> base(d);
        long kk = cand;
        for (int a = 0; a < d; ++a) {
            base[a] = kk % fine_lat.dims[a];
            kk /= fine_lat.dims[a];
        }
        for (const auto& tup : stencil_tuples) {
            long id = 0, stride = 1;
            bool ok = true;
            for (int a = 0; a < d; ++a) {
                long idx = base[a] + tup[a];
                if (idx < 0 || idx >= fine_lat.dims[a]) {
                    ok = false;
                    break;
                }
                id += stride * idx;
                stride *= fine_lat.dims[a];
            }
            if (!ok) continue;
            auto it = fine_index.find(id);
            if (it != fine_index.end()) covered.push_back(it->second);
        }
        return covered;
    };

    std::vector<char> covered(fine_ids.size(), 0);
    long remaining = static_cast<long>(fine_ids.size());
    int count = 0;
    while (remaining > 0) {
        long best = -1;
        int best_gain = -1;
        for (long cand : cand_ids) {
            int gain = 0;
            for (int j : covered_by(cand))
                if (!covered[j]) ++gain;
            if (gain > best_gain) {
                best_gain = gain;
                best = cand;
            }
        }
        if (best_gain <= 0)
            throw std::runtime_error("covering_number: candidate lattice cannot cover the domain");
        for (int j : covered_by(best)) {
            if (!covered[j]) {
                covered[j] = 1;
                --remaining;
            }
        }
        ++count;
    }
    return count;
}

double min_local_mass(const Landscape& L, double radius, double grid_step) {
    double h = grid_step > 0 ? grid_step : L.r / 4;
    BoundingBox bb = L.domain.bounding_box();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& z : grid_points(bb.lo, bb.hi, h)) {
        if (!L.domain.contains(z)) continue;
        BallRule rule = ball_rule(z, radius, L.quad.radial, L.quad.angular);
        double acc = 0;
        for (int k = 0; k < rule.weights.size(); ++k) {
            Position y = rule.points.row(k);
            if (L.domain.contains(y)) acc += rule.weights[k] * L.density(y);
        }
        best = std::min(best, acc);
    }
    return best / L.area;
}

double r_smooth_constant(int d) {
    // Lens of balls with radii rho = 1/3 and R = 1 at center distance 1,
    // in units of r^d; see the header note for why this is the minimizer.
    const double rho_ = 1.0 / 3.0, R = 1.0, D = 1.0;
    if (d == 1) return 1.0 / 3.0;
    double d1 = (D * D + rho_ * rho_ - R * R) / (2 * D);
    double d2 = D - d1;
    if (d == 2) {
        return rho_ * rho_ * std::acos(d1 / rho_) - d1 * std::sqrt(rho_ * rho_ - d1 * d1) +
               R * R * std::acos(d2 / R) - d2 * std::sqrt(R * R - d2 * d2);
    }
    if (d == 3) {
        double h1 = rho_ - d1, h2 = R - d2;
        return kPi / 3.0 * (h1 * h1 * (3 * rho_ - h1) + h2 * h2 * (3 * R - h2));
    }
    throw std::invalid_argument("r_smooth_constant: d must be 1, 2 or 3");
}

RSmoothExponent r_smooth_exponent(const Landscape& L, int n) {
    if (!L.domain.r_smooth(L.r))
        throw std::invalid_argument("r_smooth_exponent: domain is not r-smooth");
    RSmoothExponent out;
    out.c_d = r_smooth_constant(L.dim());
    out.grid_value = n * min_local_mass(L, L.r / 3.0);
    out.analytic_value = out.c_d * L.density.lower * n * std::pow(L.r, L.dim()) / L.area;
    return out;
}

LandscapeConstants landscape_constants(const Landscape& L, const ColonizationFunction& f) {
    LandscapeConstants k{};
    const int d = L.dim();
    k.v_d = unit_ball_volume(d);
    k.v_dminus1 = unit_ball_volume(d - 1);
    k.rho_max = L.emigration.upper * L.kernel.c_max * L.density.upper * k.v_d;
    if (L.declared_rho_lipschitz) {
        k.L_rho = *L.declared_rho_lipschitz;
        k.L_rho_estimated = false;
    } else {
        k.L_rho = estimate_L_rho(L, L.r / 8.0);
        k.L_rho_estimated = true;
    }
    k.L_q = std::sqrt(double(d)) / L.extinction.lower *
            (2.0 * f.L_f * k.L_rho + L.extinction.lipschitz);
    k.C2 = 1.0 / (3.0 * L.kernel.c_max * L.kernel.c_max * L.density.upper * k.v_d);
    k.C3 = k.v_d * L.kernel.c_max *
           (L.emigration.upper * L.density.lipschitz + L.density.upper * L.emigration.lipschitz);
    return k;
}

}  // namespace metapop
