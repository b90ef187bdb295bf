#ifndef GAPSTAB_DECAY_HPP
#define GAPSTAB_DECAY_HPP

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gapstab/lattice.hpp"

namespace gapstab {

/// Non-increasing positive weight evaluated at integer lattice distances.
/// Only the stretched-exponential family
///     g(r) = A (1+r)^{-zeta} e^{-a r^theta}
/// carries rigorous tail bounds; tabulated/custom functions yield interval
/// answers with an unknown (flagged) tail.
class DecayFunction {
 public:
  enum class Family { StretchedExp, Table, Custom };

  static DecayFunction stretched_exp(double zeta, double a, double theta, double amplitude = 1.0);
  static DecayFunction exponential(double rate, double amplitude = 1.0);
  static DecayFunction table(std::vector<double> values);
  static DecayFunction custom(std::function<double(int)> f);

  double operator()(int r) const;
  Family family() const { return family_; }
  bool analytic_tail() const { return family_ != Family::Custom; }

  // Parameters of the stretched family (zero defaults otherwise).
  double zeta() const { return zeta_; }
  double rate() const { return a_; }
  double theta() const { return theta_; }
  double amplitude() const { return amplitude_; }

  /// Rigorous upper bound on sum_{n >= from} (n+1)^mu g(eps n), or +inf when
  /// no bound is available at this tail start. Exact zero for tables past
  /// their horizon.
  double tail_bound(double mu, double eps, long from) const;

  /// Point check of monotonicity over [0, horizon].
  bool check_nonincreasing(int horizon, double slack = 1e-12) const;

 private:
  Family family_ = Family::Custom;
  double zeta_ = 0.0, a_ = 0.0, theta_ = 1.0, amplitude_ = 1.0;
  std::vector<double> table_;
  std::function<double(int)> fn_;
};

struct FFunctionCertificate {
  bool certifiable = false;   // false when g vanishes at a realized distance
  double uniform_sum = 0.0;   // sup_x sum_y g(d(x,y)), exact on the graph
  double conv_constant = 0.0; // minimal C with sum_z g(xz) g(zy) <= C g(xy)
};

FFunctionCertificate certify_f_function(const LatticeGraph& g, const DecayFunction& f);

/// Anchored term norms (anchor, radius, |term|): the view decay_calculus
/// needs of an interaction without owning operator payloads.
struct AnchoredTermNorms {
  struct Entry {
    Site x;
    int n;
    double norm;
  };
  std::vector<Entry> entries;
};

/// sup over site pairs of F(d(x,y))^{-1} sum over anchored balls containing
/// both of the term norms. Exact on the finite graph.
double interaction_f_norm(const AnchoredTermNorms& phi, const DecayFunction& f,
                          const LatticeGraph& g);

struct MomentTable {
  double mu = 0.0, eps = 1.0;
  long horizon = 0;
  std::vector<double> partial;  // partial[r] = sum_{n=r}^{horizon} (n+1)^mu f(eps n)
  double tail_hi = 0.0;         // rigorous bound on the remainder past horizon
  bool tail_rigorous = false;   // false => "unbounded tail" warning
};

MomentTable moment(const DecayFunction& f, double mu, double eps, long horizon, int r_max = 0);

struct MomentCheck {
  enum class Verdict { Pass, PassEmpirical, Fail, Indeterminate };
  Verdict verdict = Verdict::Indeterminate;
  std::vector<double> partial_sums;
  double total_hi = std::numeric_limits<double>::infinity();
  std::string note;
  bool passed() const {
    return verdict == Verdict::Pass || verdict == Verdict::PassEmpirical;
  }
};

/// Convergence check of sum_{n>=1} n^{zeta+alpha+nu/2} sqrt(G0(n)).
MomentCheck ltqo_moment_check(const DecayFunction& G0, double zeta, double alpha, double nu,
                              long horizon = 2000, double budget = 1e12);

}  // namespace gapstab

#endif
