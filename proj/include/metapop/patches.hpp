#pragma once

#include <memory>
#include <vector>

#include "metapop/colonization.hpp"
#include "metapop/landscape.hpp"
#include "metapop/types.hpp"

namespace metapop {

// Sampled patch locations: n i.i.d. draws from density sigma/A, by rejection
// against sigma_max over the bounding box. Draw i uses a counter-based stream
// keyed by (seed, i), so results are identical under any parallel schedule.
struct PatchSet {
    std::shared_ptr<const Landscape> landscape;
    Matrix locations;  // n x d
    std::uint64_t seed = 0;
    int n() const { return static_cast<int>(locations.rows()); }
};

PatchSet sample_patches(std::shared_ptr<const Landscape> landscape, int n, std::uint64_t seed);

// Round-trip of patch locations through CSV (columns id, x1..xd).
void write_patches_csv(const std::string& path, const PatchSet& patches);
PatchSet read_patches_csv(std::shared_ptr<const Landscape> landscape, const std::string& path);

// Patch set with derived coupling structure. Neighbor pairs (strictly within
// distance r; the kernel support is half-open, so ties carry zero weight) are
// found with a uniform spatial hash of cell size r and stored in CSR form
// with weights w(i,j) = (A/(n-1)) a(z_j) r^{-d} c_{z_i}(|z_i - z_j|/r).
// Immutable after construction; all queries are const.
class PatchSystem {
  public:
    explicit PatchSystem(PatchSet patches);

    int n() const { return n_; }
    int dim() const { return d_; }
    const PatchSet& patches() const { return patches_; }
    const Landscape& landscape() const { return *patches_.landscape; }
    Position location(int i) const { return patches_.locations.row(i); }
    const Vector& extinction() const { return e_; }
    const Vector& emigration_weight() const { return a_; }

    // S_i(x) = sum over neighbors of w(i,j) x_j.
    double migration_pressure(const Vector& x, int i) const;
    Vector migration(const Vector& x) const;
    // Sum restricted to patches j with mask[j] != 0.
    Vector migration_masked(const Vector& x, const std::vector<char>& mask) const;

    int degree(int i) const { return offsets_[i + 1] - offsets_[i]; }
    long edge_count() const { return static_cast<long>(cols_.size()) / 2; }
    const std::vector<int>& neighbor_offsets() const { return offsets_; }
    const std::vector<int>& neighbor_cols() const { return cols_; }
    const std::vector<double>& neighbor_weights() const { return weights_; }

  private:
    PatchSet patches_;
    int n_ = 0, d_ = 0;
    Vector e_, a_;
    std::vector<int> offsets_;      // CSR row offsets, size n+1
    std::vector<int> cols_;
    std::vector<double> weights_;
};

// Leading (Perron) eigenvalue of a nonnegative matrix in CSR form by power
// iteration to the given tolerance, restarting with a diagonal shift when the
// unshifted iteration stalls or oscillates. Throws after max restarts.
double leading_eigenvalue_csr(int n, const std::vector<int>& offsets, const std::vector<int>& cols,
                              const std::vector<double>& values, double tol = 1e-10,
                              long max_iter = 200000);
double leading_eigenvalue_dense(const Matrix& T, double tol = 1e-10, long max_iter = 200000);

struct CouplingMatrix {
    // T(i,j) = f'(0) (A/(n-1)) a(z_j) c(z_i, z_j; r) / e(z_i), zero diagonal.
    std::vector<int> offsets, cols;
    std::vector<double> values;
    double lambda = 0;
    bool irreducible = false;
    bool primitive = false;
    long n_edges = 0;
    Matrix dense(int n) const;
};

CouplingMatrix coupling_matrix(const PatchSystem& sys, const ColonizationFunction& f);

struct PrimitivityCertificate {
    bool connected = false;
    bool has_triangle = false;  // three patches mutually within r
    bool primitive = false;     // connected && has_triangle (sufficient)
};

PrimitivityCertificate is_primitive(const PatchSystem& sys);

struct PrimitivityBound {
    bool applicable = false;  // requires n > 2 N(Omega, r/3)
    double value = 0;         // 1 - N exp(-n min_z A^{-1} int 1(|y-z|<=r/3) sigma dy)
    int covering = 0;
};

PrimitivityBound primitivity_probability_bound(const Landscape& L, int n);

}  // namespace metapop
