#ifndef GAPSTAB_FLOW_HPP
#define GAPSTAB_FLOW_HPP

#include "gapstab/spectral.hpp"

namespace gapstab {

/// Gap-filtering weight pair. The frequency profile w_hat is real, even,
/// supported in [-gamma, gamma] with w_hat(0) = 1; its partner
/// W_hat(xi) = (1 - w_hat(xi)) / (i xi) satisfies W_hat(xi) = 1/(i xi)
/// exactly outside the support and i xi W_hat + w_hat = 1 everywhere.
/// Fourier convention, fixed project-wide: w_hat(xi) = int e^{i t xi} w(t) dt.
class GapWeightPair {
 public:
  static GapWeightPair bump(double gamma);
  /// Tabulated even profile on [0, gamma]: samples of w_hat at uniform xi.
  static GapWeightPair from_table(double gamma, std::vector<double> samples);

  double gamma() const { return gamma_; }
  double w_hat(double xi) const;
  cdouble W_hat(double xi) const;

  // time-domain evaluations (quadrature of the closed-form profile)
  double w_time(double t) const;
  double W_time(double t) const;

  double W_l1() const;        // int |W(t)| dt, numeric
  double W_t_moment() const;  // int |t W(t)| dt, numeric

 private:
  GapWeightPair() = default;
  double profile(double u) const;  // shape on |u| < 1
  void ensure_quadrature() const;

  double gamma_ = 1.0;
  bool tabulated_ = false;
  std::vector<double> table_;
  mutable std::vector<double> nodes_, weights_;  // Gauss-Legendre on [0,1]
  mutable double w_l1_ = -1.0, w_t_moment_ = -1.0;
};

/// Heisenberg conjugation tau_t(A) = e^{itH} A e^{-itH} evaluated in the
/// eigenbasis of the generating Hamiltonian.
LocalOperator evolve(const SpectralData& spec, const LocalOperator& a, double t);

enum class WeightKind { F, G };

/// Weighted integral operator evaluated spectrally: in the eigenbasis the
/// (j,k) entry of A is multiplied by w_hat(E_j - E_k) (F) or
/// W_hat(E_j - E_k) (G).
LocalOperator weighted_op(const SpectralData& spec, const LocalOperator& a, WeightKind kind,
                          const GapWeightPair& pair);

/// Gamma_t = e^{itH0} e^{-itHs}; unitary, equals the identity at t = 0.
LocalOperator interaction_picture_unitary(const SpectralData& spec0, const SpectralData& spec_s,
                                          double t);

/// Centered-difference residual |dGamma/dt + i tau_t^0(sV) Gamma|.
double interaction_picture_residual(const SpectralData& spec0, const SpectralData& spec_s,
                                    const LocalOperator& sv, double t, double dt = 1e-4);

struct FGroundCommutationReport {
  double worst = 0.0;
  double gap = 0.0;
  bool gap_below_gamma = false;  // hypothesis of the identity fails
};

/// max over random Hermitian probes of |[F(A), |Omega><Omega|]| for the
/// ground state of the spectral data (unique ground state required).
FGroundCommutationReport check_F_ground_commutation(const SpectralData& spec,
                                                    const GapWeightPair& pair, int nprobes,
                                                    std::uint64_t seed, double kernel_tol);

struct LrProfile {
  struct Point {
    int distance = 0;
    double t = 0.0;
    double comm_norm = 0.0;
  };
  std::vector<Point> table;
  bool fit_ok = false;
  double mu = 0.0;
  double velocity = 0.0;
  double log_c = 0.0;       // sup-calibrated envelope constant
  double fit_spread = 0.0;  // gap between the LSQ intercept and the envelope
  int envelope_violations = 0;
};

/// Commutator growth table t -> |[tau_t(A), B_d]| over probe operators at
/// several distances, with a least-squares fit of
/// log |[..]| ~ log c + mu (v |t| - d) over unsaturated positive entries and
/// a sup-calibrated envelope at the fitted slopes.
LrProfile lr_commutator_profile(const SpectralData& spec, const LocalOperator& a,
                                const std::vector<std::pair<int, LocalOperator>>& probes,
                                const std::vector<double>& times);

/// Same profile under the model's ambient dynamics; probe distances are
/// taken from the graph metric between the supports.
LrProfile lr_commutator_profile(const FrustrationFreeModel& model, const LocalOperator& a,
                                const std::vector<LocalOperator>& probes,
                                const std::vector<double>& times);

}  // namespace gapstab

#endif
