#ifndef GAPSTAB_SPECTRAL_HPP
#define GAPSTAB_SPECTRAL_HPP

#include "gapstab/models.hpp"

namespace gapstab {

/// Eigenvalues ascending plus orthonormal eigenvectors of a Hermitian
/// operator, with certification of residuals and orthonormality.
struct SpectralData {
  RealVector values;
  Matrix vectors;
  bool complete = false;  // full spectrum vs lowest-k slice
  Region support;
  AmbientPtr ambient;
  double norm_bound = 0.0;
  double max_residual = 0.0;   // max |Hv - lambda v|
  double ortho_defect = 0.0;   // |V*V - I|_max
  std::uint64_t fingerprint = 0;
};

/// Low-level Hermitian solve with a real-symmetric fast path.
void hermitian_eig(const Matrix& h, RealVector& values, Matrix& vectors);

SpectralData diagonalize(const LocalOperator& h, long long max_dense_dim = 4096,
                         bool certify = true);

struct LanczosOptions {
  double tol = 1e-11;          // residual tolerance relative to norm scale
  int max_iter = 600;
  int max_restarts = 128;
  std::uint64_t seed = 0x5eed;
  double norm_scale = 1.0;     // scale for the convergence test (callers supply |H|)
};

struct LanczosResult {
  RealVector values;    // ascending
  Matrix vectors;
  RealVector residuals; // certified |Hv - lambda v|
};

/// Lowest eigenpairs by restarted Lanczos with full reorthogonalization and
/// deflation of converged vectors, so degenerate multiplicities resolve.
/// The predicate sees the sorted converged values and stops the iteration.
LanczosResult lanczos_collect(const LinearMap& h,
                              const std::function<bool(const std::vector<double>&)>& done,
                              const LanczosOptions& opts);

LanczosResult lanczos_lowest(const LinearMap& h, int k, const LanczosOptions& opts);

SpectralData diagonalize_lowest(const LocalOperator& h, int k, const LanczosOptions& opts);

struct GapReport {
  double ground_energy = 0.0;
  long long multiplicity = 0;
  double gap = 0.0;
  bool gap_defined = false;    // false when the spectrum is one cluster
  bool ambiguous = false;      // cluster/rest separation below 10x tolerance
};

/// Cluster the spectrum at the bottom and report the gap above the ground
/// cluster. kernel_tol is the absolute clustering width.
GapReport gap_above_ground(const SpectralData& spec, double kernel_tol);

long long kernel_dimension(const SpectralData& spec, double kernel_tol);

struct LocalGapReport {
  struct Row {
    int n = 0;
    double gamma_n = 0.0;
    double threshold = 0.0;  // gamma1 n^{-alpha} when inputs given
    long long shapes = 0;
    bool pass = true;
  };
  std::vector<Row> rows;
  double fitted_gamma1 = 0.0;
  double fitted_alpha = 0.0;
  bool overall = true;
};

/// Measured local gaps gamma(n) of H_{Lambda(x,n)} over the partition
/// family's region map, deduplicated by translation class on homogeneous
/// models. When (gamma1, alpha) are supplied each scale is checked against
/// gamma1 n^{-alpha}; the tightest admissible pair is fitted either way.
LocalGapReport certify_local_gaps(const FrustrationFreeModel& model,
                                  const SeparatingPartitionFamily& family,
                                  std::optional<double> gamma1 = std::nullopt,
                                  std::optional<double> alpha = std::nullopt);

}  // namespace gapstab

#endif
