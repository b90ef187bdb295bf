#ifndef GAPSTAB_STABILITY_HPP
#define GAPSTAB_STABILITY_HPP

#include "gapstab/ltqo.hpp"

namespace gapstab {

/// H(Lambda, s) = H_ambient + s V_Lambda on the s-grid, with cached dense
/// spectral data per requested s.
class PerturbedFamily {
 public:
  PerturbedFamily(const FrustrationFreeModel& model, Region lambda,
                  const AnchoredInteraction& phi, long long max_dense_dim = 4096);

  const FrustrationFreeModel& model() const { return *model_; }
  const Region& lambda() const { return lambda_; }
  const AnchoredInteraction& phi() const { return *phi_; }
  const LocalOperator& h0() const { return h0_; }
  const LocalOperator& v() const { return v_; }
  double v_norm() const { return v_norm_; }
  double kernel_tol() const { return kernel_tol_; }

  const SpectralData& at(double s) const;
  double ground_energy(double s) const { return at(s).values[0]; }
  GapReport gap_report(double s) const;

  /// |E(s) - E(s0)| <= |V| |s - s0| checked row to row on a grid.
  bool energy_continuous(const std::vector<double>& grid, double slack = 1e-9) const;

 private:
  const FrustrationFreeModel* model_;
  Region lambda_;
  const AnchoredInteraction* phi_;
  LocalOperator h0_, v_;
  double v_norm_ = 0.0;
  double kernel_tol_ = 0.0;
  long long max_dense_;
  mutable std::map<std::uint64_t, SpectralData> cache_;
};

/// D(Lambda, s): the G-weighted perturbation in the H(Lambda,s) eigenbasis;
/// self-adjoint by the parity of the weight profile.
LocalOperator flow_generator(const PerturbedFamily& fam, double s, const GapWeightPair& pair);

struct FlowOptions {
  int substeps_per_interval = 4;
  int max_halvings = 6;
  double transport_tol = 1e-8;  // residual budget per grid node
};

struct SpectralFlowState {
  std::vector<double> nodes;
  std::vector<Matrix> u;  // unitary at each node; u[0] = identity
  std::vector<int> substeps_used;
  std::vector<bool> transport_checkable;  // ground multiplicity 1 at the node
  double max_unitarity_defect = 0.0;
  double max_transport_residual = 0.0;  // over checkable nodes

  const Matrix& at(double s) const;
};

/// Fourth-order fixed-step integration of u' = -i D(s) u with polar
/// re-unitarization each step; substeps double until the transported ground
/// projector matches the directly diagonalized one at each node.
SpectralFlowState integrate_flow(const PerturbedFamily& fam, const GapWeightPair& pair,
                                 const std::vector<double>& grid, const FlowOptions& opts = {});

/// max over checkable nodes of |u P(0) u* - P(s)|.
double transport_check(const SpectralFlowState& flow, const PerturbedFamily& fam);

/// W(Lambda, s) = u* (H0 + sV) u - H0 - E(s).
LocalOperator dressed_w(const PerturbedFamily& fam, const SpectralFlowState& flow, double s);

/// K1(A) = u* F_s(A) u - F_0(A) and K2(A) = s u* F_s(A) u.
std::pair<LocalOperator, LocalOperator> k_maps(const PerturbedFamily& fam,
                                               const SpectralFlowState& flow, double s,
                                               const LocalOperator& a, const GapWeightPair& pair);

struct DressedInteraction {
  double s = 0.0;
  double e_s = 0.0;
  LocalOperator w;
  std::map<std::pair<Site, int>, LocalOperator> phi1;
  std::map<std::pair<Site, int>, LocalOperator> phi2;
  std::map<std::pair<Site, int>, double> g_lambda;  // |Phi1(x,m)| / s

  double recon1_residual = 0.0;     // |sum Phi1 - (W + E)|
  double recon2_residual = 0.0;     // |sum Phi2 - W|
  double annihilation_max = 0.0;    // max |Phi2(x,m) P_{b_x(m)}|
  double omega_w = 0.0;             // |<Omega, W Omega>|
  double ground_commutator = 0.0;   // max_x |[Phi1(x), P_Omega]|
  double en_orthogonality = 0.0;    // worst nesting residual among the E_n
  double shape_ratio_max = 0.0;     // measured phi2 norms vs the bound shape

  std::vector<double> g2_envelope;  // n -> sup_x |Phi2(x,n,s)| / (2 s)

  double g1_of(Site x, int m) const;  // sum_{n >= m} g_lambda(x, n)
};

/// Dressed-perturbation split: anchored terms Phi1(x,m,s) built from
/// telescoping localizers of K1(h_x) and K2(Phi(x,k)).
DressedInteraction decompose_phi1(const PerturbedFamily& fam, const SpectralFlowState& flow,
                                  double s, const GapWeightPair& pair, double recon_tol = 1e-7);

/// Second stage: ground-annihilated terms Phi2 = Theta1 + Theta2 from the
/// layer projector family E_n; fills the envelopes and residuals.
void decompose_phi2(DressedInteraction& dressed, const PerturbedFamily& fam,
                    const LtqoEstimate* ltqo, double recon_tol = 1e-6);

struct BetaBreakdown {
  double beta = 0.0;
  bool empirical = true;
  struct Shell {
    int n = 0;
    double weight = 0.0, g = 0.0, gamma = 0.0, term = 0.0;
  };
  std::vector<Shell> shells;
  double tail_hi = 0.0;
};

/// beta = sum_{n >= R} weight(n) G(n) / gamma(n) with weight(n) = c n^zeta
/// for n >= 1 and the single scale-zero partition class otherwise.
BetaBreakdown form_bound_beta(const std::vector<double>& g_env, const std::vector<double>& gamma_n,
                              double c, double zeta, int range);

/// Same shell sum for a closed-form envelope with gamma(n) >= gamma1 n^{-alpha}
/// and a rigorous tail past the horizon.
BetaBreakdown form_bound_beta_analytic(const DecayFunction& g, double gamma1, double alpha,
                                       double c, double zeta, int range, long horizon);

/// (min spec(beta H0 - W), min spec(beta H0 + W)); both nonnegative within
/// tolerance iff |<psi, W psi>| <= beta <psi, H0 psi>.
std::pair<double, double> verify_form_bound(const LocalOperator& h0, const LocalOperator& w,
                                            double beta);

struct StabilityVerdict {
  double gamma0 = 0.0;
  double gamma_request = 0.0;
  double beta = 0.0;
  double s0 = 0.0;
  bool s0_infinite = false;
  struct Row {
    double s = 0.0, energy = 0.0, gap = 0.0, bound = 0.0;
    long long multiplicity = 0;
    bool inside = false;             // |s| <= s0
    bool outside_hypothesis = false; // at/after a ground-multiplicity jump
    bool pass = true;
  };
  std::vector<Row> rows;
  bool overall = true;
};

StabilityVerdict stability_sweep(const PerturbedFamily& fam, double beta, double gamma_request,
                                 const std::vector<double>& grid, double slack = 1e-8);

std::vector<double> make_sweep_grid(double s_max, int points);

}  // namespace gapstab

#endif
