#include "gapstab/flow.hpp"

#include <algorithm>
#include <cmath>

namespace gapstab {

namespace {

// Gauss-Legendre nodes/weights on [0, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[static_cast<std::size_t>(i)] = 0.5 * (x + 1.0);
    weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace

GapWeightPair GapWeightPair::bump(double gamma) {
  if (gamma <= 0) throw domain_error("weight pair: gamma must be positive");
  GapWeightPair p;
  p.gamma_ = gamma;
  return p;
}

GapWeightPair GapWeightPair::from_table(double gamma, std::vector<double> samples) {
  if (gamma <= 0) throw domain_error("weight pair: gamma must be positive");
  if (samples.size() < 2 || std::abs(samples.front() - 1.0) > 1e-12)
    throw domain_error("weight pair: table must start at w_hat(0) = 1");
  GapWeightPair p;
  p.gamma_ = gamma;
  p.tabulated_ = true;
  p.table_ = std::move(samples);
  return p;
}

double GapWeightPair::profile(double u) const {
  double au = std::abs(u);
  if (au >= 1.0) return 0.0;
  if (!tabulated_) return std::exp(1.0 - 1.0 / (1.0 - u * u));
  double pos = au * static_cast<double>(table_.size() - 1);
  auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= table_.size()) return table_.back();
  double f = pos - static_cast<double>(i);
  return (1.0 - f) * table_[i] + f * table_[i + 1];
}

double GapWeightPair::w_hat(double xi) const { return profile(xi / gamma_); }

cdouble GapWeightPair::W_hat(double xi) const {
  double axi = std::abs(xi);
  if (axi < 1e-7 * gamma_) {
    if (!tabulated_) {
      // bump profile: (1 - w_hat(xi))/xi = xi/gamma^2 + O(xi^3)
      return cdouble(0.0, -xi / (gamma_ * gamma_));
    }
    double h = 1e-4 * gamma_;
    return cdouble(0.0, -(1.0 - w_hat(h)) / (h * h) * xi);
  }
  return cdouble(0.0, -(1.0 - w_hat(xi)) / xi);
}

void GapWeightPair::ensure_quadrature() const {
  if (nodes_.empty()) gauss_legendre(1024, nodes_, weights_);
}

double GapWeightPair::w_time(double t) const {
  // w(t) = (1/2pi) int_{-g}^{g} cos(t xi) w_hat(xi) d xi  (even profile)
  ensure_quadrature();
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double xi = gamma_ * nodes_[i];
    acc += weights_[i] * std::cos(t * xi) * w_hat(xi);
  }
  return gamma_ * acc / M_PI;
}

double GapWeightPair::W_time(double t) const {
  // W(t) = -sgn(t)/2 + (1/2pi) int_{-g}^{g} w_hat(xi) sin(t xi)/xi d xi
  if (t == 0.0) return 0.0;
  ensure_quadrature();
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double xi = gamma_ * nodes_[i];
    acc += weights_[i] * w_hat(xi) * std::sin(t * xi) / xi;
  }
  double sgn = t > 0 ? 1.0 : -1.0;
  return -0.5 * sgn + gamma_ * acc / M_PI;
}

double GapWeightPair::W_l1() const {
  if (w_l1_ < 0) {
    // |W| decays faster than any polynomial; trapezoid out to t gamma = 600
    const double tmax = 600.0 / gamma_;
    const int n = 12000;
    const double dt = tmax / n;
    CompensatedSum s;
    for (int i = 0; i <= n; ++i) {
      double t = i * dt;
      double v = std::abs(W_time(t));
      s.add((i == 0 || i == n) ? 0.5 * v * dt : v * dt);
    }
    w_l1_ = 2.0 * s.value();
  }
  return w_l1_;
}

double GapWeightPair::W_t_moment() const {
  if (w_t_moment_ < 0) {
    const double tmax = 600.0 / gamma_;
    const int n = 12000;
    const double dt = tmax / n;
    CompensatedSum s;
    for (int i = 0; i <= n; ++i) {
      double t = i * dt;
      double v = t * std::abs(W_time(t));
      s.add((i == 0 || i == n) ? 0.5 * v * dt : v * dt);
    }
    w_t_moment_ = 2.0 * s.value();
  }
  return w_t_moment_;
}

namespace {

Matrix to_eigenbasis(const SpectralData& spec, const LocalOperator& a) {
  LocalOperator ea = embed(a, spec.support);
  return spec.vectors.adjoint() * ea.matrix() * spec.vectors;
}

LocalOperator from_eigenbasis(const SpectralData& spec, const Matrix& tilde) {
  return LocalOperator(spec.ambient, spec.support, spec.vectors * tilde * spec.vectors.adjoint());
}

}  // namespace

LocalOperator evolve(const SpectralData& spec, const LocalOperator& a, double t) {
  if (!spec.complete) throw domain_error("evolve: full spectral data required");
  Matrix tilde = to_eigenbasis(spec, a);
  const long long d = tilde.rows();
  for (long long j = 0; j < d; ++j)
    for (long long k = 0; k < d; ++k)
      tilde(j, k) *= std::exp(cdouble(0.0, t * (spec.values[j] - spec.values[k])));
  return from_eigenbasis(spec, tilde);
}

LocalOperator weighted_op(const SpectralData& spec, const LocalOperator& a, WeightKind kind,
                          const GapWeightPair& pair) {
  if (!spec.complete) throw domain_error("weighted_op: full spectral data required");
  Matrix tilde = to_eigenbasis(spec, a);
  const long long d = tilde.rows();
  for (long long j = 0; j < d; ++j)
    for (long long k = 0; k < d; ++k) {
      double xi = spec.values[j] - spec.values[k];
      tilde(j, k) *= kind == WeightKind::F ? cdouble(pair.w_hat(xi)) : pair.W_hat(xi);
    }
  return from_eigenbasis(spec, tilde);
}

LocalOperator interaction_picture_unitary(const SpectralData& spec0, const SpectralData& spec_s,
                                          double t) {
  if (!(spec0.support == spec_s.support))
    throw domain_error("interaction picture: spectral data on different volumes");
  const long long d = spec0.vectors.rows();
  Vector ph0(d), phs(d);
  for (long long j = 0; j < d; ++j) {
    ph0[j] = std::exp(cdouble(0.0, t * spec0.values[j]));
    phs[j] = std::exp(cdouble(0.0, -t * spec_s.values[j]));
  }
  Matrix u = (spec0.vectors * ph0.asDiagonal() * spec0.vectors.adjoint()) *
             (spec_s.vectors * phs.asDiagonal() * spec_s.vectors.adjoint());
  return LocalOperator(spec0.ambient, spec0.support, std::move(u));
}

double interaction_picture_residual(const SpectralData& spec0, const SpectralData& spec_s,
                                    const LocalOperator& sv, double t, double dt) {
  LocalOperator gp = interaction_picture_unitary(spec0, spec_s, t + dt);
  LocalOperator gm = interaction_picture_unitary(spec0, spec_s, t - dt);
  Matrix deriv = (gp.matrix() - gm.matrix()) / (2.0 * dt);
  LocalOperator g = interaction_picture_unitary(spec0, spec_s, t);
  LocalOperator tv = evolve(spec0, sv, t);
  Matrix rhs = cdouble(0.0, 1.0) * embed(tv, spec0.support).matrix() * g.matrix();
  return (deriv + rhs).cwiseAbs().maxCoeff();
}

FGroundCommutationReport check_F_ground_commutation(const SpectralData& spec,
                                                    const GapWeightPair& pair, int nprobes,
                                                    std::uint64_t seed, double kernel_tol) {
  FGroundCommutationReport rep;
  auto gaprep = gap_above_ground(spec, kernel_tol);
  if (gaprep.multiplicity != 1)
    throw domain_error("F ground commutation: ground state not unique");
  rep.gap = gaprep.gap_defined ? gaprep.gap : std::numeric_limits<double>::infinity();
  rep.gap_below_gamma = rep.gap < pair.gamma();
  const long long d = spec.vectors.rows();
  Matrix omega = spec.vectors.col(0) * spec.vectors.col(0).adjoint();
  LocalOperator pomega(spec.ambient, spec.support, std::move(omega));
  Rng rng(seed);
  for (int p = 0; p < nprobes; ++p) {
    LocalOperator a(spec.ambient, spec.support, random_hermitian(d, rng));
    LocalOperator fa = weighted_op(spec, a, WeightKind::F, pair);
    rep.worst = std::max(rep.worst, operator_norm(commutator(fa, pomega)));
  }
  return rep;
}

namespace {

// largest singular value of the implicitly applied commutator
// C v = (tau A)(B v) - B((tau A) v), via power iteration on C* C
double commutator_norm_implicit(const Matrix& ta, const Matrix& b, Rng& rng) {
  const long long d = ta.rows();
  Vector v(d);
  for (long long i = 0; i < d; ++i) v[i] = rng.gaussian_c();
  v /= v.norm();
  auto apply_c = [&](const Vector& x, Vector& out) {
    out.noalias() = ta * (b * x);
    out.noalias() -= b * (ta * x);
  };
  auto apply_ct = [&](const Vector& x, Vector& out) {
    out.noalias() = b.adjoint() * (ta.adjoint() * x);
    out.noalias() -= ta.adjoint() * (b.adjoint() * x);
  };
  double sigma = 0.0;
  Vector cv(d), w(d);
  for (int it = 0; it < 120; ++it) {
    apply_c(v, cv);
    apply_ct(cv, w);
    double nw = w.norm();
    if (nw < 1e-28) return 0.0;
    w /= nw;
    double next = std::sqrt(nw);
    if (it > 10 && std::abs(next - sigma) <= 1e-6 * (next + 1e-30)) {
      sigma = next;
      break;
    }
    sigma = next;
    v = w;
  }
  return sigma;
}

}  // namespace

LrProfile lr_commutator_profile(const FrustrationFreeModel& model, const LocalOperator& a,
                                const std::vector<LocalOperator>& probes,
                                const std::vector<double>& times) {
  const auto& amb = *model.ambient();
  SpectralData spec = diagonalize(model.assemble_hamiltonian(amb.region()),
                                  model.solver().max_dense_dim);
  std::vector<std::pair<int, LocalOperator>> tagged;
  for (const auto& b : probes) {
    if (!region_intersection(a.support(), b.support()).empty())
      throw domain_error("lr profile: probe supports must be disjoint");
    tagged.emplace_back(amb.graph().distance(a.support(), b.support()), b);
  }
  return lr_commutator_profile(spec, a, tagged, times);
}

LrProfile lr_commutator_profile(const SpectralData& spec, const LocalOperator& a,
                                const std::vector<std::pair<int, LocalOperator>>& probes,
                                const std::vector<double>& times) {
  LrProfile out;
  Matrix atil = to_eigenbasis(spec, a);
  const long long d = atil.rows();
  double na = operator_norm(a);
  Rng rng(0xc0117);
  std::vector<std::pair<int, Matrix>> btil;
  std::vector<double> nb;
  for (const auto& [dist, b] : probes) {
    btil.emplace_back(dist, to_eigenbasis(spec, b));
    nb.push_back(operator_norm(b));
  }
  for (double t : times) {
    Matrix ta = atil;
    for (long long j = 0; j < d; ++j)
      for (long long k = 0; k < d; ++k)
        ta(j, k) *= std::exp(cdouble(0.0, t * (spec.values[j] - spec.values[k])));
    for (std::size_t p = 0; p < btil.size(); ++p) {
      LrProfile::Point pt;
      pt.distance = btil[p].first;
      pt.t = t;
      pt.comm_norm = commutator_norm_implicit(ta, btil[p].second, rng);
      out.table.push_back(pt);
    }
  }
  // fit log C ~ log c + mu (v |t| - d) on positive, unsaturated entries
  std::vector<double> fd, ft, fl;
  for (std::size_t p = 0; p < btil.size(); ++p) {
    double sat = 2.0 * na * nb[p];
    for (const auto& pt : out.table)
      if (pt.distance == btil[p].first && pt.comm_norm > 1e-12 && pt.comm_norm < 0.5 * sat) {
        fd.push_back(pt.distance);
        ft.push_back(std::abs(pt.t));
        fl.push_back(std::log(pt.comm_norm));
      }
  }
  if (fd.size() >= 4) {
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < fd.size(); ++i) {
      Eigen::Vector3d row(1.0, fd[i], ft[i]);
      ata += row * row.transpose();
      atb += row * fl[i];
    }
    Eigen::Vector3d coef = ata.ldlt().solve(atb);
    double mu = -coef[1];
    if (mu > 1e-9 && coef[2] > 0) {
      out.fit_ok = true;
      out.mu = mu;
      out.velocity = coef[2] / mu;
      // raise the intercept until every measured point sits on or below the line
      double cstar = -std::numeric_limits<double>::infinity();
      for (const auto& pt : out.table)
        if (pt.comm_norm > 1e-12)
          cstar = std::max(cstar, std::log(pt.comm_norm) -
                                      out.mu * (out.velocity * std::abs(pt.t) - pt.distance));
      out.log_c = cstar;
      out.fit_spread = cstar - coef[0];
      for (const auto& pt : out.table)
        if (pt.comm_norm >
            std::exp(out.log_c + out.mu * (out.velocity * std::abs(pt.t) - pt.distance)) *
                    (1.0 + 1e-9) +
                1e-300)
          out.envelope_violations++;
    }
  }
  return out;
}

}  // namespace gapstab
