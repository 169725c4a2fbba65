#include "metapop/patches.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "metapop/csvio.hpp"
#include "metapop/rng.hpp"

namespace metapop {

PatchSet sample_patches(std::shared_ptr<const Landscape> landscape, int n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("sample_patches: need n >= 2");
    const Landscape& L = *landscape;
    BoundingBox bb = L.domain.bounding_box();
    const int d = L.dim();
    const double sigma_max = L.density.upper;
    constexpr long kMaxAttempts = 40000000;  // acceptance rate 1e-6 exhausts this

    PatchSet ps;
    ps.landscape = std::move(landscape);
    ps.seed = seed;
    ps.locations.resize(n, d);
    for (int i = 0; i < n; ++i) {
        CounterRng rng = CounterRng::keyed({seed, static_cast<std::uint64_t>(i)});
        long attempt = 0;
        for (;;) {
            if (++attempt > kMaxAttempts)
                throw std::invalid_argument(
                    "sample_patches: acceptance rate below 1e-6; check sigma bounds");
            Position y(d);
            for (int a = 0; a < d; ++a) y(a) = rng.uniform(bb.lo(a), bb.hi(a));
            double u = rng.uniform();
            if (!L.domain.contains(y)) continue;
            if (u * sigma_max <= L.density(y)) {
                ps.locations.row(i) = y;
                break;
            }
        }
    }
    return ps;
}

void write_patches_csv(const std::string& path, const PatchSet& patches) {
    const int d = static_cast<int>(patches.locations.cols());
    std::vector<std::string> header = {"id"};
    for (int a = 0; a < d; ++a) header.push_back("x" + std::to_string(a + 1));
    CsvWriter w(path, header);
    for (int i = 0; i < patches.n(); ++i) {
        std::vector<std::string> cells = {std::to_string(i)};
        for (int a = 0; a < d; ++a) cells.push_back(fmt_full(patches.locations(i, a)));
        w.row(cells);
    }
}

PatchSet read_patches_csv(std::shared_ptr<const Landscape> landscape, const std::string& path) {
    CsvTable table = read_csv(path);
    const int d = landscape->dim();
    std::vector<int> cols(d);
    for (int a = 0; a < d; ++a) cols[a] = table.column("x" + std::to_string(a + 1));
    PatchSet ps;
    ps.locations.resize(table.rows.size(), d);
    for (size_t i = 0; i < table.rows.size(); ++i)
        for (int a = 0; a < d; ++a) ps.locations(i, a) = std::stod(table.rows[i][cols[a]]);
    for (int i = 0; i < ps.locations.rows(); ++i)
        if (!landscape->domain.contains(ps.locations.row(i)))
            throw std::invalid_argument("read_patches_csv: patch " + std::to_string(i) +
                                        " lies outside the habitat");
    ps.landscape = std::move(landscape);
    return ps;
}

namespace {

// Uniform spatial hash with cell size r over the bounding box.
class SpatialHash {
  public:
    SpatialHash(const Matrix& pts, const BoundingBox& bb, double cell) : pts_(pts), cell_(cell) {
        d_ = static_cast<int>(pts.cols());
        lo_ = bb.lo;
        for (int a = 0; a < d_; ++a)
            dims_[a] = std::max(1L, static_cast<long>(std::floor((bb.hi(a) - bb.lo(a)) / cell)) + 1);
        long total = 1;
        for (int a = 0; a < d_; ++a) total *= dims_[a];
        cells_.resize(total);
        for (int i = 0; i < pts.rows(); ++i) cells_[index_of(pts.row(i))].push_back(i);
    }

    template <typename F>
    void for_neighbors(const Position& z, F&& visit) const {
        long c[3] = {0, 0, 0};
        for (int a = 0; a < d_; ++a)
            c[a] = std::clamp(static_cast<long>(std::floor((z(a) - lo_(a)) / cell_)), 0L, dims_[a] - 1);
        long span[3][2];
        for (int a = 0; a < 3; ++a) {
            span[a][0] = a < d_ ? std::max(0L, c[a] - 1) : 0;
            span[a][1] = a < d_ ? std::min(dims_[a] - 1, c[a] + 1) : 0;
        }
        for (long x = span[0][0]; x <= span[0][1]; ++x)
            for (long y = span[1][0]; y <= span[1][1]; ++y)
                for (long w = span[2][0]; w <= span[2][1]; ++w) {
                    long idx = x;
                    if (d_ > 1) idx += dims_[0] * y;
                    if (d_ > 2) idx += dims_[0] * dims_[1] * w;
                    for (int j : cells_[idx]) visit(j);
                }
    }

  private:
    long index_of(const Position& z) const {
        long idx = 0, stride = 1;
        for (int a = 0; a < d_; ++a) {
            long c = std::clamp(static_cast<long>(std::floor((z(a) - lo_(a)) / cell_)), 0L, dims_[a] - 1);
            idx += stride * c;
            stride *= dims_[a];
        }
        return idx;
    }

    const Matrix& pts_;
    double cell_;
    int d_;
    Position lo_;
    long dims_[3] = {1, 1, 1};
    std::vector<std::vector<int>> cells_;
};

}  // namespace

PatchSystem::PatchSystem(PatchSet patches) : patches_(std::move(patches)) {
    const Landscape& L = *patches_.landscape;
    n_ = patches_.n();
    d_ = L.dim();
    if (n_ < 2) throw std::invalid_argument("PatchSystem: need n >= 2");
    const double r = L.r;
    const double scale = L.area / (n_ - 1);
    const double rdinv = std::pow(r, -d_);

    e_.resize(n_);
    a_.resize(n_);
    for (int i = 0; i < n_; ++i) {
        Position z = patches_.locations.row(i);
        e_(i) = L.extinction(z);
        a_(i) = L.emigration(z);
    }

    SpatialHash hash(patches_.locations, L.domain.bounding_box(), r);
    offsets_.assign(n_ + 1, 0);
    std::vector<std::vector<std::pair<int, double>>> rows(n_);
    for (int i = 0; i < n_; ++i) {
        Position zi = patches_.locations.row(i);
        hash.for_neighbors(zi, [&](int j) {
            if (j == i) return;
            double dist = (zi - patches_.locations.row(j)).norm();
            if (dist >= r) return;  // half-open support: ties carry zero weight
            double c = L.kernel(zi, dist / r);
            if (c <= 0) return;
            rows[i].emplace_back(j, scale * a_(j) * rdinv * c);
        });
        std::sort(rows[i].begin(), rows[i].end());
    }
    for (int i = 0; i < n_; ++i) offsets_[i + 1] = offsets_[i] + static_cast<int>(rows[i].size());
    cols_.resize(offsets_[n_]);
    weights_.resize(offsets_[n_]);
    for (int i = 0; i < n_; ++i) {
        int k = offsets_[i];
        for (auto& [j, w] : rows[i]) {
            cols_[k] = j;
            weights_[k] = w;
            ++k;
        }
    }
}

double PatchSystem::migration_pressure(const Vector& x, int i) const {
    if (i < 0 || i >= n_) throw std::out_of_range("migration_pressure: patch index");
    double acc = 0;
    for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) acc += weights_[k] * x(cols_[k]);
    return acc;
}

Vector PatchSystem::migration(const Vector& x) const {
    Vector s(n_);
    for (int i = 0; i < n_; ++i) {
        double acc = 0;
        for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) acc += weights_[k] * x(cols_[k]);
        s(i) = acc;
    }
    return s;
}

Vector PatchSystem::migration_masked(const Vector& x, const std::vector<char>& mask) const {
    Vector s(n_);
    for (int i = 0; i < n_; ++i) {
        double acc = 0;
        for (int k = offsets_[i]; k < offsets_[i + 1]; ++k)
            if (mask[cols_[k]]) acc += weights_[k] * x(cols_[k]);
        s(i) = acc;
    }
    return s;
}

static double power_iteration(int n, const std::vector<int>& offsets, const std::vector<int>& cols,
                              const std::vector<double>& values, double shift, double tol,
                              long max_iter, bool& converged, CounterRng* rng) {
    Vector v = Vector::Ones(n);
    if (rng)
        for (int i = 0; i < n; ++i) v(i) = 0.5 + rng->uniform();
    v /= v.sum();
    double lambda = 0, prev = -1;
    converged = false;
    for (long it = 0; it < max_iter; ++it) {
        Vector w(n);
        for (int i = 0; i < n; ++i) {
            double acc = shift * v(i);
            for (int k = offsets[i]; k < offsets[i + 1]; ++k) acc += values[k] * v(cols[k]);
            w(i) = acc;
        }
        double norm = w.sum();  // nonnegative iterates: l1 norm
        if (norm <= 0) {
            converged = true;
            return -shift;  // zero matrix
        }
        lambda = norm;
        v = w / norm;
        if (it > 2 && std::abs(lambda - prev) <= tol * std::max(1.0, std::abs(lambda))) {
            converged = true;
            break;
        }
        prev = lambda;
    }
    return lambda - shift;
}

double leading_eigenvalue_csr(int n, const std::vector<int>& offsets, const std::vector<int>& cols,
                              const std::vector<double>& values, double tol, long max_iter) {
    double max_row = 0;
    for (int i = 0; i < n; ++i) {
        double s = 0;
        for (int k = offsets[i]; k < offsets[i + 1]; ++k) s += values[k];
        max_row = std::max(max_row, s);
    }
    if (max_row == 0) return 0;

    bool ok = false;
    double lam = power_iteration(n, offsets, cols, values, 0.0, tol, max_iter, ok, nullptr);
    if (ok) return lam;
    // Restarts with a diagonal shift: breaks oscillation from eigenvalues of
    // matching modulus (e.g. near-bipartite coupling graphs).
    CounterRng rng = CounterRng::keyed({0xabcdefull, static_cast<std::uint64_t>(n)});
    for (int restart = 0; restart < 4; ++restart) {
        double shift = max_row * (restart + 1) / 2.0;
        lam = power_iteration(n, offsets, cols, values, shift, tol, max_iter, ok,
                              restart == 0 ? nullptr : &rng);
        if (ok) return lam;
    }
    throw std::runtime_error("leading_eigenvalue: power iteration failed after max restarts (n=" +
                             std::to_string(n) + ", max row sum=" + std::to_string(max_row) + ")");
}

double leading_eigenvalue_dense(const Matrix& T, double tol, long max_iter) {
    const int n = static_cast<int>(T.rows());
    std::vector<int> offsets(n + 1, 0), cols;
    std::vector<double> values;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (T(i, j) != 0.0) {
                cols.push_back(j);
                values.push_back(T(i, j));
            }
        }
        offsets[i + 1] = static_cast<int>(cols.size());
    }
    return leading_eigenvalue_csr(n, offsets, cols, values, tol, max_iter);
}

Matrix CouplingMatrix::dense(int n) const {
    Matrix T = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = offsets[i]; k < offsets[i + 1]; ++k) T(i, cols[k]) = values[k];
    return T;
}

CouplingMatrix coupling_matrix(const PatchSystem& sys, const ColonizationFunction& f) {
    CouplingMatrix cm;
    cm.offsets = sys.neighbor_offsets();
    cm.cols = sys.neighbor_cols();
    cm.values.resize(cm.cols.size());
    const auto& w = sys.neighbor_weights();
    for (int i = 0; i < sys.n(); ++i)
        for (int k = cm.offsets[i]; k < cm.offsets[i + 1]; ++k)
            cm.values[k] = f.L_f * w[k] / sys.extinction()(i);
    cm.n_edges = sys.edge_count();
    cm.lambda = leading_eigenvalue_csr(sys.n(), cm.offsets, cm.cols, cm.values);
    PrimitivityCertificate cert = is_primitive(sys);
    cm.irreducible = cert.connected;
    cm.primitive = cert.primitive;
    return cm;
}

PrimitivityCertificate is_primitive(const PatchSystem& sys) {
    PrimitivityCertificate cert;
    const int n = sys.n();
    const auto& off = sys.neighbor_offsets();
    const auto& cols = sys.neighbor_cols();

    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int visited = 1;
    while (!q.empty()) {
        int i = q.front();
        q.pop();
        for (int k = off[i]; k < off[i + 1]; ++k) {
            int j = cols[k];
            if (!seen[j]) {
                seen[j] = 1;
                ++visited;
                q.push(j);
            }
        }
    }
    cert.connected = (visited == n);

    const double r = sys.landscape().r;
    for (int i = 0; i < n && !cert.has_triangle; ++i) {
        for (int k = off[i]; k < off[i + 1] && !cert.has_triangle; ++k) {
            int j = cols[k];
            if (j < i) continue;
            for (int k2 = k + 1; k2 < off[i + 1]; ++k2) {
                int l = cols[k2];
                if (l < i) continue;
                if ((sys.location(j) - sys.location(l)).norm() < r) {
                    cert.has_triangle = true;
                    break;
                }
            }
        }
    }
    cert.primitive = cert.connected && cert.has_triangle;
    return cert;
}

PrimitivityBound primitivity_probability_bound(const Landscape& L, int n) {
    PrimitivityBound out;
    out.covering = covering_number(L, L.r / 3.0);
    if (n <= 2 * out.covering) {
        out.applicable = false;
        return out;
    }
    out.applicable = true;
    double mass = min_local_mass(L, L.r / 3.0);
    out.value = 1.0 - out.covering * std::exp(-double(n) * mass);
    return out;
}

}  // namespace metapop
