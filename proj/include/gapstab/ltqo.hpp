#ifndef GAPSTAB_LTQO_HPP
#define GAPSTAB_LTQO_HPP

#include "gapstab/flow.hpp"

namespace gapstab {

struct ProbeSpec {
  bool full_basis = true;   // complete Hermitian operator basis when it fits
  int random_samples = 64;  // used above the cap or when full_basis = false
  long long basis_cap = 4096;
  std::uint64_t seed = 0x9d0be5;
};

/// max over unit-norm probes A on b_x(k) of
///   |P_{b_x(m)} A P_{b_x(m)} - omega0(A) P_{b_x(m)}| / (1+k)^nu.
/// The probe set is finite, so the value is a certified lower bound of the
/// true supremum. omega0 is the ambient kernel state unless a reference
/// vector is supplied.
double ltqo_deviation(const FrustrationFreeModel& model, Site x, int k, int m,
                      const ProbeSpec& probes, const Vector* reference = nullptr);

struct LtqoEstimate {
  struct Row {
    Site x = 0;
    int k = 0, m = 0;
    double deviation = 0.0;
  };
  std::vector<Row> rows;
  int excluded_points = 0;         // boundary-contaminated grid points left out
  bool monotone_in_m = true;       // per (x,k), 1e-12 slack
  std::vector<double> raw_by_r;    // r = m-k -> max deviation
  std::vector<double> envelope;    // monotone non-increasing envelope of raw
  bool envelope_adjusted = false;  // raw table was not monotone
  bool fit_ok = false;
  double fit_c = 0.0, fit_q = 0.0;  // envelope ~ c e^{-q r}
  MomentCheck moment;
};

struct LtqoGrid {
  std::vector<Site> centers;  // empty = all sites
  int k_max = 1;
  int m_max = 3;
};

struct EnvelopeFit {
  std::vector<double> envelope;  // monotone non-increasing
  bool adjusted = false;         // raw table was not monotone
  bool ok = false;
  double c = 0.0, q = 0.0;  // envelope ~ c e^{-q r}
};

/// Monotone envelope of a raw deviation table plus a least-squares
/// exponential fit over its strictly positive entries.
EnvelopeFit fit_envelope(const std::vector<double>& raw);

/// Full deviation scan: grid over (x, k <= m), boundary-touching balls
/// excluded, envelope extraction, exponential fit, and the moment verdict at
/// the given (zeta, alpha, nu).
LtqoEstimate ltqo_scan(const FrustrationFreeModel& model, const LtqoGrid& grid,
                       const ProbeSpec& probes, double zeta, double alpha, double nu);

/// Decay function view of the measured envelope: the exponential fit when it
/// exists, otherwise the tabulated envelope.
DecayFunction ltqo_envelope_function(const LtqoEstimate& est);

/// Worst slack of
///   | |A P_{b_x(n)}| - |A P_Omega| | <= |A| sqrt((1+m)^nu G0hat(n-m))
/// over sampled probes A on b_x(m); negative slack means the bound holds.
double indistinguishability_check(const FrustrationFreeModel& model, Site x, int k, int m, int n,
                                  const LtqoEstimate& est, const ProbeSpec& probes);

}  // namespace gapstab

#endif
