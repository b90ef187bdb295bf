#include "gapstab/ltqo.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace gapstab {

namespace {

// offsets for applying an operator on a sub-factor of a larger factor
struct SubMap {
  std::vector<long long> sub_off, rest_off;
  long long sub_dim = 1;
};

SubMap sub_map(const AmbientVolume& amb, const Region& whole, const Region& part) {
  FactorIndexer fi(amb, whole), pi(amb, part), ri(amb, region_difference(whole, part));
  SubMap sm;
  sm.sub_dim = pi.dim;
  std::vector<long long> sp(pi.sites.size()), sr(ri.sites.size());
  for (std::size_t k = 0; k < pi.sites.size(); ++k)
    sp[k] = fi.strides[static_cast<std::size_t>(fi.position_of(pi.sites[k]))];
  for (std::size_t k = 0; k < ri.sites.size(); ++k)
    sr[k] = fi.strides[static_cast<std::size_t>(fi.position_of(ri.sites[k]))];
  sm.sub_off.resize(static_cast<std::size_t>(pi.dim));
  sm.rest_off.resize(static_cast<std::size_t>(ri.dim));
  for (long long idx = 0; idx < pi.dim; ++idx) {
    long long rem = idx, o = 0;
    for (std::size_t k = 0; k < pi.dims.size(); ++k) {
      o += (rem % pi.dims[k]) * sp[k];
      rem /= pi.dims[k];
    }
    sm.sub_off[static_cast<std::size_t>(idx)] = o;
  }
  for (long long idx = 0; idx < ri.dim; ++idx) {
    long long rem = idx, o = 0;
    for (std::size_t k = 0; k < ri.dims.size(); ++k) {
      o += (rem % ri.dims[k]) * sr[k];
      rem /= ri.dims[k];
    }
    sm.rest_off[static_cast<std::size_t>(idx)] = o;
  }
  return sm;
}

void apply_on_subfactor(const Matrix& op, const SubMap& sm, const Vector& in, Vector& out) {
  out.setZero(in.size());
  const long long ds = sm.sub_dim;
  for (long long rest : sm.rest_off)
    for (long long i = 0; i < ds; ++i) {
      cdouble acc = 0.0;
      for (long long j = 0; j < ds; ++j)
        acc += op(i, j) * in[rest + sm.sub_off[static_cast<std::size_t>(j)]];
      out[rest + sm.sub_off[static_cast<std::size_t>(i)]] = acc;
    }
}

// Hermitian operator basis of a d-dimensional factor, every element of unit
// operator norm: {e_ii}, {e_ij + e_ji}, {i(e_ij - e_ji)}.
std::vector<Matrix> hermitian_basis(long long d) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(d * d));
  for (long long i = 0; i < d; ++i) {
    Matrix m = Matrix::Zero(d, d);
    m(i, i) = 1.0;
    out.push_back(std::move(m));
  }
  for (long long i = 0; i < d; ++i)
    for (long long j = i + 1; j < d; ++j) {
      Matrix m = Matrix::Zero(d, d);
      m(i, j) = m(j, i) = 1.0;
      out.push_back(std::move(m));
      Matrix y = Matrix::Zero(d, d);
      y(i, j) = cdouble(0.0, 1.0);
      y(j, i) = cdouble(0.0, -1.0);
      out.push_back(std::move(y));
    }
  return out;
}

std::vector<Matrix> probe_set(long long d, const ProbeSpec& spec) {
  std::vector<Matrix> out;
  if (spec.full_basis && d * d <= spec.basis_cap) {
    out = hermitian_basis(d);
  } else {
    Rng rng(spec.seed);
    out.reserve(static_cast<std::size_t>(spec.random_samples));
    for (int i = 0; i < spec.random_samples; ++i) out.push_back(random_hermitian(d, rng));
  }
  out.push_back(Matrix::Identity(d, d));  // contributes zero deviation exactly
  return out;
}

Vector ambient_reference(const FrustrationFreeModel& model, const Vector* reference) {
  if (reference) return *reference;
  const GroundSpace& gs = model.ground_space(model.ambient()->region());
  if (gs.full_space || gs.rank() != 1)
    throw domain_error("ltqo: ambient kernel is not one-dimensional and no reference given");
  return gs.Q.col(0);
}

bool ball_touches_boundary(const LatticeGraph& g, Site x, int m) {
  auto c = g.coords(x);
  for (int a = 0; a < g.nu(); ++a) {
    if (g.periodic()[a]) {
      if (2 * m + 1 >= g.dims()[a]) return true;  // ball wraps the whole axis
    } else {
      if (c[a] - m < 0 || c[a] + m >= g.dims()[a]) return true;
    }
  }
  return false;
}

}  // namespace

double ltqo_deviation(const FrustrationFreeModel& model, Site x, int k, int m,
                      const ProbeSpec& probes, const Vector* reference) {
  if (k > m || k < 0) throw domain_error("ltqo: need 0 <= k <= m");
  const auto& amb = *model.ambient();
  const auto& g = amb.graph();
  Region bk = region_intersection(g.ball(x, k), amb.region());
  Region bm = region_intersection(g.ball(x, m), amb.region());
  Vector omega = ambient_reference(model, reference);

  const GroundSpace& gs = model.ground_space(bm);
  long long dm = amb.factor_dim(bm);
  Matrix q;
  if (gs.full_space)
    q = Matrix::Identity(dm, dm);
  else
    q = gs.Q;
  long long r = q.cols();

  SubMap in_ball = sub_map(amb, bm, bk);
  SubMap in_ambient = sub_map(amb, amb.region(), bk);
  long long dk = amb.factor_dim(bk);

  double worst = 0.0;
  Vector col(dm), acol(dm), aomega(omega.size());
  for (const Matrix& a : probe_set(dk, probes)) {
    // omega0(A)
    apply_on_subfactor(a, in_ambient, omega, aomega);
    cdouble w0 = omega.dot(aomega);
    // Q* (A ox id) Q - w0 I, as an r x r Hermitian problem
    Matrix reduced(r, r);
    for (long long c = 0; c < r; ++c) {
      col = q.col(c);
      apply_on_subfactor(a, in_ball, col, acol);
      reduced.col(c) = q.adjoint() * acol;
    }
    reduced -= w0 * Matrix::Identity(r, r);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (reduced + reduced.adjoint()),
                                             Eigen::EigenvaluesOnly);
    double dev = es.eigenvalues().size() ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
    worst = std::max(worst, dev);
  }
  return worst / std::pow(1.0 + k, static_cast<double>(g.nu()));
}

LtqoEstimate ltqo_scan(const FrustrationFreeModel& model, const LtqoGrid& grid,
                       const ProbeSpec& probes, double zeta, double alpha, double nu) {
  LtqoEstimate est;
  const auto& g = model.ambient()->graph();
  std::vector<Site> centers = grid.centers;
  if (centers.empty()) centers = model.ambient()->region().sites;

  for (Site x : centers)
    for (int k = 0; k <= grid.k_max; ++k)
      for (int m = k; m <= grid.m_max; ++m) {
        if (ball_touches_boundary(g, x, m)) {
          est.excluded_points++;
          continue;
        }
        LtqoEstimate::Row row;
        row.x = x;
        row.k = k;
        row.m = m;
        row.deviation = ltqo_deviation(model, x, k, m, probes);
        est.rows.push_back(row);
      }

  // monotonicity in m at fixed (x, k)
  for (const auto& a : est.rows)
    for (const auto& b : est.rows)
      if (a.x == b.x && a.k == b.k && b.m == a.m + 1 && b.deviation > a.deviation + 1e-12)
        est.monotone_in_m = false;

  int r_max = -1;
  for (const auto& row : est.rows) r_max = std::max(r_max, row.m - row.k);
  if (r_max >= 0) {
    est.raw_by_r.assign(static_cast<std::size_t>(r_max) + 1, 0.0);
    for (const auto& row : est.rows) {
      auto r = static_cast<std::size_t>(row.m - row.k);
      est.raw_by_r[r] = std::max(est.raw_by_r[r], row.deviation);
    }
    EnvelopeFit fit = fit_envelope(est.raw_by_r);
    est.envelope = std::move(fit.envelope);
    est.envelope_adjusted = fit.adjusted;
    est.fit_ok = fit.ok;
    est.fit_c = fit.c;
    est.fit_q = fit.q;
  }

  if (est.fit_ok) {
    est.moment = ltqo_moment_check(DecayFunction::exponential(est.fit_q, est.fit_c), zeta, alpha, nu);
  } else if (est.envelope.empty() ||
             *std::max_element(est.envelope.begin(), est.envelope.end()) <= 1e-14) {
    est.moment = ltqo_moment_check(DecayFunction::table({}), zeta, alpha, nu);
  } else {
    est.moment.verdict = MomentCheck::Verdict::Indeterminate;
    est.moment.note = "no usable envelope fit";
  }
  return est;
}

EnvelopeFit fit_envelope(const std::vector<double>& raw) {
  EnvelopeFit fit;
  fit.envelope = raw;
  for (int r = static_cast<int>(raw.size()) - 2; r >= 0; --r)
    fit.envelope[static_cast<std::size_t>(r)] = std::max(
        fit.envelope[static_cast<std::size_t>(r)], fit.envelope[static_cast<std::size_t>(r) + 1]);
  for (std::size_t r = 0; r < raw.size(); ++r)
    if (fit.envelope[r] > raw[r] + 1e-15) fit.adjusted = true;
  std::vector<double> xs, ys;
  for (std::size_t r = 0; r < fit.envelope.size(); ++r)
    if (fit.envelope[r] > 1e-14) {
      xs.push_back(static_cast<double>(r));
      ys.push_back(std::log(fit.envelope[r]));
    }
  if (xs.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    double n = static_cast<double>(xs.size());
    double denom = n * sxx - sx * sx;
    if (denom > 0) {
      double slope = (n * sxy - sx * sy) / denom;
      double icept = (sy - slope * sx) / n;
      fit.q = -slope;
      fit.c = std::exp(icept);
      fit.ok = fit.q > 0;
    }
  }
  return fit;
}

DecayFunction ltqo_envelope_function(const LtqoEstimate& est) {
  if (est.fit_ok) return DecayFunction::exponential(est.fit_q, est.fit_c);
  return DecayFunction::table(est.envelope);
}

double indistinguishability_check(const FrustrationFreeModel& model, Site x, int k, int m, int n,
                                  const LtqoEstimate& est, const ProbeSpec& probes) {
  if (!(k <= m && m <= n)) throw domain_error("indistinguishability: need k <= m <= n");
  const auto& amb = *model.ambient();
  const auto& g = amb.graph();
  Region bm = region_intersection(g.ball(x, m), amb.region());
  Region bn = region_intersection(g.ball(x, n), amb.region());
  Vector omega = ambient_reference(model, nullptr);

  const GroundSpace& gs = model.ground_space(bn);
  long long dn = amb.factor_dim(bn);
  Matrix q = gs.full_space ? Matrix::Identity(dn, dn) : gs.Q;

  // envelope value at r = n - m, extended flat past the measured range
  double g0 = 0.0;
  if (!est.envelope.empty()) {
    auto r = static_cast<std::size_t>(n - m);
    g0 = r < est.envelope.size() ? est.envelope[r] : est.envelope.back();
  }
  double bound_coeff = std::sqrt(std::pow(1.0 + m, static_cast<double>(g.nu())) * g0);

  SubMap in_bn = sub_map(amb, bn, bm);
  SubMap in_amb = sub_map(amb, amb.region(), bm);
  long long dm = amb.factor_dim(bm);

  double worst = -std::numeric_limits<double>::infinity();
  Vector tmp(dn), aomega(omega.size());
  std::vector<Matrix> set = probe_set(dm, probes);
  set.push_back(Matrix::Identity(dm, dm));
  for (const Matrix& a : set) {
    Matrix aq(dn, q.cols());
    for (long long c = 0; c < q.cols(); ++c) {
      apply_on_subfactor(a, in_bn, q.col(c), tmp);
      aq.col(c) = tmp;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(aq.adjoint() * aq, Eigen::EigenvaluesOnly);
    double norm_apn = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    apply_on_subfactor(a, in_amb, omega, aomega);
    double norm_apo = aomega.norm();
    Eigen::SelfAdjointEigenSolver<Matrix> na(a, Eigen::EigenvaluesOnly);
    double an = na.eigenvalues().cwiseAbs().maxCoeff();
    worst = std::max(worst, std::abs(norm_apn - norm_apo) - an * bound_coeff);
  }
  return worst;
}

}  // namespace gapstab
