#ifndef GAPSTAB_OPERATORS_HPP
#define GAPSTAB_OPERATORS_HPP

#include <memory>
#include <string>

#include "gapstab/lattice.hpp"

namespace gapstab {

/// The simulated finite volume: a region of a lattice graph with one tensor
/// factor per site. Index convention, fixed project-wide: sites of a factor
/// are sorted ascending and the tensor index is mixed-radix little-endian
/// over that order (first site varies fastest).
class AmbientVolume {
 public:
  AmbientVolume(std::shared_ptr<const LatticeGraph> graph, Region region, int uniform_site_dim,
                long long dim_cap = (1LL << 22));
  AmbientVolume(std::shared_ptr<const LatticeGraph> graph, Region region,
                std::vector<int> site_dims, long long dim_cap = (1LL << 22));

  const LatticeGraph& graph() const { return *graph_; }
  std::shared_ptr<const LatticeGraph> graph_ptr() const { return graph_; }
  const Region& region() const { return region_; }
  long long dim() const { return dim_; }
  int site_dim(Site x) const;
  long long factor_dim(const Region& r) const;

 private:
  std::shared_ptr<const LatticeGraph> graph_;
  Region region_;
  std::vector<int> dims_;  // aligned with region_.sites
  long long dim_ = 1;
};

using AmbientPtr = std::shared_ptr<const AmbientVolume>;

/// Mixed-radix little-endian indexer for the tensor factor of a site list.
struct FactorIndexer {
  std::vector<Site> sites;
  std::vector<int> dims;
  std::vector<long long> strides;
  long long dim = 1;

  FactorIndexer() = default;
  FactorIndexer(const AmbientVolume& amb, const Region& r);
  int position_of(Site x) const;  // -1 when absent
};

/// A complex matrix living on the tensor factor of its support region.
/// Values are immutable after construction; all algebra returns new values.
class LocalOperator {
 public:
  LocalOperator() = default;
  LocalOperator(AmbientPtr ambient, Region support, Matrix m);

  static LocalOperator zero(AmbientPtr ambient, Region support);
  static LocalOperator identity(AmbientPtr ambient, Region support);

  const Matrix& matrix() const { return mat_; }
  const Region& support() const { return support_; }
  const AmbientPtr& ambient() const { return ambient_; }
  long long dim() const { return mat_.rows(); }
  bool empty() const { return !ambient_; }

  bool is_hermitian(double tol = 1e-12) const;

 private:
  AmbientPtr ambient_;
  Region support_;
  Matrix mat_;
};

LocalOperator embed(const LocalOperator& a, const Region& target);
LocalOperator operator+(const LocalOperator& a, const LocalOperator& b);
LocalOperator operator-(const LocalOperator& a, const LocalOperator& b);
LocalOperator operator*(const LocalOperator& a, const LocalOperator& b);
LocalOperator operator*(cdouble s, const LocalOperator& a);
LocalOperator operator*(double s, const LocalOperator& a);
LocalOperator adjoint(const LocalOperator& a);
LocalOperator commutator(const LocalOperator& a, const LocalOperator& b);

/// Conditional expectation onto region X: normalized partial trace over
/// supp(A) \ X, re-embedded with support X intersect supp(A). Linear, unital,
/// norm-non-increasing, and a projection on operator space.
LocalOperator conditional_expectation(const LocalOperator& a, const Region& X);

/// Telescoping localizer anchored at ball b_x(k):
///   n == k     -> Pi_{b_x(k)}(A)
///   n >= k + 1 -> Pi_{b_x(n)}(A) - Pi_{b_x(n-1)}(A)
LocalOperator delta_layer(const LocalOperator& a, Site x, int k, int n);

double operator_norm(const LocalOperator& a);
double frobenius_norm(const LocalOperator& a);
cdouble trace_of(const LocalOperator& a);

/// Smallest region the operator acts on, up to tolerance: site y is dropped
/// when the partial trace over y reproduces the operator within tol.
Region tight_support(const LocalOperator& a, double tol = 1e-12);

// Dense operator file format: "GSOP" magic, site list, per-site dims, then
// row-major interleaved re/im doubles of the support-factor matrix.
void save_operator(const std::string& path, const LocalOperator& a);
LocalOperator load_operator(const std::string& path, const AmbientPtr& ambient);

/// Haar-random unitary on the factor of a region (QR of a Ginibre matrix).
Matrix haar_unitary(long long dim, Rng& rng);

/// Random Hermitian matrix with unit operator norm.
Matrix random_hermitian(long long dim, Rng& rng);

}  // namespace gapstab

#endif
