#ifndef GAPSTAB_MODELS_HPP
#define GAPSTAB_MODELS_HPP

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "gapstab/decay.hpp"
#include "gapstab/operators.hpp"

namespace gapstab {

/// Matrix-free Hermitian action on the tensor factor of a region.
struct LinearMap {
  long long dim = 0;
  std::function<void(const Vector&, Vector&)> apply;
  double norm_bound = 0.0;  // rigorous upper bound on the operator norm
};

/// Decay metadata for an anchored interaction: |Phi(x,n)| <= strength e^{-a n^theta}.
struct DecayMeta {
  double strength = 0.0;
  double a = 1.0;
  double theta = 1.0;
};

/// Map (x, n) -> Hermitian term supported in b_x(n). Terms with n below the
/// declared range are rejected (regrouping happens at construction time).
class AnchoredInteraction {
 public:
  explicit AnchoredInteraction(int range = 0) : range_(range) {}

  void add_term(Site x, int n, LocalOperator op, double hermiticity_tol = 1e-12);
  void set_decay(DecayMeta m) { decay_ = m; }

  int range() const { return range_; }
  const std::optional<DecayMeta>& decay() const { return decay_; }
  const std::map<std::pair<Site, int>, LocalOperator>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  AnchoredTermNorms term_norms() const;
  double sup_term_norm() const;

  struct Verification {
    bool hermitian = true;
    bool supports_ok = true;
    bool decay_ok = true;     // vacuous when no metadata
    double worst_decay_excess = 0.0;
  };
  Verification verify() const;

 private:
  int range_;
  std::map<std::pair<Site, int>, LocalOperator> terms_;
  std::optional<DecayMeta> decay_;
};

/// V_Lambda: sum of the anchored terms whose balls fit inside the region.
LocalOperator assemble_perturbation(const AnchoredInteraction& phi, const Region& lambda,
                                    const AmbientPtr& ambient);

struct SolverOptions {
  long long max_dense_dim = 4096;
  long long dense_kernel_dim = 1024;  // below this, kernels come from a full solve
  double lanczos_tol = 1e-11;
  int lanczos_max_iter = 600;
  int max_restarts = 128;
  int max_kernel_rank = 256;
  std::uint64_t seed = 0x5eed;
};

/// Kernel of a finite-volume Hamiltonian as an isometry on the volume's
/// tensor factor. full_space marks the no-terms case H = 0.
struct GroundSpace {
  Region volume;
  Matrix Q;          // factor_dim x rank isometry (empty when full_space)
  bool full_space = false;
  double min_eigenvalue = 0.0;
  double gap_above = std::numeric_limits<double>::infinity();
  long long factor_dim = 0;
  long long rank() const { return full_space ? factor_dim : Q.cols(); }
};

struct FfCertification {
  bool terms_psd = true;
  double worst_term_min_eig = 0.0;
  struct Row {
    Region volume;
    double min_spec = 0.0;
    long long kernel_dim = 0;
    bool pass = false;
  };
  std::vector<Row> rows;
  bool overall = true;
};

/// Finite-range, uniformly bounded, frustration-free interaction eta = {h_x}
/// realized on an ambient volume, plus the finite-volume Hamiltonians,
/// kernels and projectors it generates.
class FrustrationFreeModel {
 public:
  FrustrationFreeModel(AmbientPtr ambient, std::vector<std::pair<Site, LocalOperator>> terms,
                       int range, std::string name, bool homogeneous);

  const AmbientPtr& ambient() const { return ambient_; }
  const std::string& name() const { return name_; }
  int range() const { return range_; }
  double eta_inf() const { return eta_inf_; }
  bool homogeneous() const { return homogeneous_; }
  const std::vector<std::pair<Site, LocalOperator>>& terms() const { return terms_; }

  SolverOptions& solver() { return solver_; }
  const SolverOptions& solver() const { return solver_; }

  /// Indices of terms with supp(h_x) inside the region.
  std::vector<std::size_t> terms_in(const Region& volume) const;

  LocalOperator assemble_hamiltonian(const Region& volume) const;
  LinearMap hamiltonian_map(const Region& volume) const;
  double hamiltonian_norm_bound(const Region& volume) const;

  /// Relative kernel tolerance 1e-10 (1 + |H_volume|).
  double kernel_tol(const Region& volume) const;

  const GroundSpace& ground_space(const Region& volume) const;
  LocalOperator ground_projector(const Region& volume) const;

  /// |P_volume P_inner - P_volume| for nested inner <= volume, computed via
  /// kernel isometries (never materializes ambient-size projectors).
  double nesting_residual(const Region& volume, const Region& inner) const;

  FfCertification certify_frustration_free(const std::vector<Region>& volumes) const;

  /// eta viewed as an anchored interaction (the n = R slice).
  AnchoredInteraction as_anchored() const;

 private:
  AmbientPtr ambient_;
  std::vector<std::pair<Site, LocalOperator>> terms_;
  std::vector<double> term_norms_;
  int range_;
  double eta_inf_ = 0.0;
  std::string name_;
  bool homogeneous_;
  SolverOptions solver_;
  mutable std::map<std::string, GroundSpace> shape_cache_;
  mutable std::map<std::vector<Site>, GroundSpace> exact_cache_;
};

// Built-in model zoo ------------------------------------------------------

struct ZooParams {
  double lambda = 2.0;  // deformation of the ising projector variant
  long long dim_cap = (1LL << 22);
};

std::vector<std::string> zoo_names();

/// paramagnet | aklt_open | aklt_periodic | ising_projector. The aklt and
/// ising names require a 1-d graph whose boundary matches (open/periodic).
FrustrationFreeModel model_zoo(const std::string& name,
                               std::shared_ptr<const LatticeGraph> graph,
                               const ZooParams& params = {});

/// Custom model from operator files anchored at given sites.
FrustrationFreeModel custom_model(AmbientPtr ambient,
                                  const std::vector<std::pair<Site, std::string>>& term_files,
                                  int range);

// single-site operator library (d = 2 Pauli, d = 3 spin-1)
Matrix site_operator(const std::string& name, int d);

}  // namespace gapstab

#endif
