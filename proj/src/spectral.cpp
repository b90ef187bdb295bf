#include "gapstab/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace gapstab {

void hermitian_eig(const Matrix& h, RealVector& values, Matrix& vectors) {
  double scale = h.size() ? h.cwiseAbs().maxCoeff() : 0.0;
  bool real = true;
  for (long long j = 0; j < h.cols() && real; ++j)
    for (long long i = 0; i < h.rows(); ++i)
      if (std::abs(h(i, j).imag()) > 1e-14 * (1.0 + scale)) {
        real = false;
        break;
      }
  if (real) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(h.real());
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    values = es.eigenvalues();
    vectors = es.eigenvectors().cast<cdouble>();
    return;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  values = es.eigenvalues();
  vectors = es.eigenvectors();
}

SpectralData diagonalize(const LocalOperator& h, long long max_dense_dim, bool certify) {
  if (h.dim() > max_dense_dim) throw domain_error("diagonalize: dense dimension cap exceeded");
  if (!h.is_hermitian(1e-12)) throw domain_error("diagonalize: operator is not Hermitian");
  SpectralData out;
  hermitian_eig(h.matrix(), out.values, out.vectors);
  out.complete = true;
  out.support = h.support();
  out.ambient = h.ambient();
  out.norm_bound = out.values.size() ? out.values.cwiseAbs().maxCoeff() : 0.0;
  const Matrix& m = h.matrix();
  out.fingerprint = fnv1a(m.data(), sizeof(cdouble) * static_cast<std::size_t>(m.size()));
  if (certify) {
    // full certification up to 512; sampled columns (low end + strides) above
    const long long d = m.rows();
    std::vector<long long> cols;
    if (d <= 512) {
      for (long long j = 0; j < d; ++j) cols.push_back(j);
    } else {
      for (long long j = 0; j < 64; ++j) cols.push_back(j);
      for (long long j = 64; j < d; j += std::max<long long>(1, d / 64)) cols.push_back(j);
      cols.push_back(d - 1);
    }
    for (long long j : cols) {
      Vector r = m * out.vectors.col(j) - out.values[j] * out.vectors.col(j);
      out.max_residual = std::max(out.max_residual, r.norm());
    }
    Matrix g = out.vectors.adjoint() * out.vectors;
    out.ortho_defect = (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
    if (out.max_residual > 1e-9 * (1.0 + out.norm_bound))
      throw std::runtime_error("diagonalize: residual certification failed");
  }
  return out;
}

LanczosResult lanczos_collect(const LinearMap& h,
                              const std::function<bool(const std::vector<double>&)>& done,
                              const LanczosOptions& opts) {
  const long long n = h.dim;
  const double scale = std::max(1.0, opts.norm_scale);
  std::vector<Vector> conv;
  std::vector<double> vals;  // harvest order: each restart yields the lowest remaining pair

  Rng rng(opts.seed);
  auto orth_against = [&](Vector& v, const std::vector<Vector>& basis) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= b.dot(v) * b;
  };

  int restarts = 0;
  while (!done(vals) && static_cast<long long>(conv.size()) < n) {
    if (++restarts > opts.max_restarts)
      throw std::runtime_error("lanczos: no convergence after max restarts");

    Vector v(n);
    for (long long i = 0; i < n; ++i) v[i] = rng.gaussian_c();
    orth_against(v, conv);
    double nv = v.norm();
    if (nv < 1e-12) continue;
    v /= nv;

    std::vector<Vector> basis{v};
    std::vector<double> alpha, beta;
    Vector w(n);
    bool harvested = false;

    int jmax = static_cast<int>(std::min<long long>(opts.max_iter, n - conv.size()));
    for (int j = 0; j < jmax && !harvested; ++j) {
      h.apply(basis.back(), w);
      double a = std::real(basis.back().dot(w));
      w -= a * basis.back();
      if (j > 0) w -= beta.back() * basis[basis.size() - 2];
      // full reorthogonalization; deflated directions are projected out last
      // so they cannot regrow from the spectral edge
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : conv) w -= b.dot(w) * b;
        for (const auto& b : basis) w -= b.dot(w) * b;
      }
      alpha.push_back(a);
      double bnorm = w.norm();
      bool invariant = bnorm < 1e-13 * scale;
      bool check = invariant || j == jmax - 1 || (j >= 7 && (j % 8) == 7);
      if (check) {
        int m = static_cast<int>(alpha.size());
        Eigen::Map<const RealVector> diag(alpha.data(), m);
        RealVector sub = RealVector::Zero(std::max(m - 1, 0));
        for (int i = 0; i + 1 < m; ++i) sub[i] = beta[static_cast<std::size_t>(i)];
        Eigen::SelfAdjointEigenSolver<RealMatrix> es;
        es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        const RealVector& theta = es.eigenvalues();
        const RealMatrix& s = es.eigenvectors();
        // Only the lowest Ritz pair is extracted per restart; deflated
        // restarts then walk the spectrum upward, which keeps degenerate
        // clusters and the collection order sound.
        double est0 = invariant ? 0.0 : std::abs(bnorm * s(m - 1, 0));
        if (est0 <= opts.tol * scale) {
          Vector rv = Vector::Zero(n);
          for (int i = 0; i < m; ++i) rv += s(i, 0) * basis[static_cast<std::size_t>(i)];
          orth_against(rv, conv);
          double rn = rv.norm();
          if (rn >= 1e-8) {
            rv /= rn;
            Vector hv(n);
            h.apply(rv, hv);
            double lam = std::real(rv.dot(hv));
            double res = (hv - lam * rv).norm();
            if (res <= 10 * opts.tol * scale) {
              conv.push_back(rv);
              vals.push_back(lam);
              harvested = true;
            }
          } else {
            break;  // stale Ritz direction: restart with a fresh vector
          }
          (void)theta;
        } else if (invariant) {
          harvested = true;
        }
      }
      if (!harvested) {
        if (invariant) break;
        beta.push_back(bnorm);
        basis.push_back(w / bnorm);
      }
    }
  }

  std::vector<std::size_t> order(vals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
  LanczosResult out;
  out.values.resize(static_cast<long long>(vals.size()));
  out.residuals.resize(static_cast<long long>(vals.size()));
  out.vectors.resize(n, static_cast<long long>(vals.size()));
  Vector w(n);
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.values[static_cast<long long>(i)] = vals[order[i]];
    out.vectors.col(static_cast<long long>(i)) = conv[order[i]];
    h.apply(conv[order[i]], w);
    out.residuals[static_cast<long long>(i)] = (w - vals[order[i]] * conv[order[i]]).norm();
  }
  return out;
}

LanczosResult lanczos_lowest(const LinearMap& h, int k, const LanczosOptions& opts) {
  if (k < 1) throw domain_error("lanczos: k must be >= 1");
  auto done = [k](const std::vector<double>& vals) {
    return static_cast<int>(vals.size()) >= k;
  };
  LanczosResult res = lanczos_collect(h, done, opts);
  if (res.values.size() > k) {
    LanczosResult trimmed;
    trimmed.values = res.values.head(k);
    trimmed.residuals = res.residuals.head(k);
    trimmed.vectors = res.vectors.leftCols(k);
    return trimmed;
  }
  return res;
}

SpectralData diagonalize_lowest(const LocalOperator& h, int k, const LanczosOptions& opts) {
  if (k < 2) throw domain_error("diagonalize_lowest: k must be >= 2");
  if (!h.is_hermitian(1e-12)) throw domain_error("diagonalize_lowest: operator is not Hermitian");
  LinearMap map;
  map.dim = h.dim();
  const Matrix& m = h.matrix();
  map.apply = [&m](const Vector& in, Vector& out) { out.noalias() = m * in; };
  LanczosOptions lo = opts;
  if (lo.norm_scale <= 1.0) lo.norm_scale = std::max(1.0, frobenius_norm(h));
  map.norm_bound = lo.norm_scale;
  LanczosResult res = lanczos_lowest(map, k, lo);
  SpectralData out;
  out.values = res.values;
  out.vectors = res.vectors;
  out.complete = false;
  out.support = h.support();
  out.ambient = h.ambient();
  out.norm_bound = lo.norm_scale;
  out.max_residual = res.residuals.size() ? res.residuals.maxCoeff() : 0.0;
  Matrix g = res.vectors.adjoint() * res.vectors;
  out.ortho_defect = (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  out.fingerprint = fnv1a(m.data(), sizeof(cdouble) * static_cast<std::size_t>(m.size()));
  return out;
}

GapReport gap_above_ground(const SpectralData& spec, double kernel_tol) {
  if (spec.values.size() == 0) throw domain_error("gap: empty spectrum");
  GapReport rep;
  rep.ground_energy = spec.values[0];
  long long i = 0;
  while (i < spec.values.size() && spec.values[i] - rep.ground_energy <= kernel_tol) ++i;
  rep.multiplicity = i;
  if (i == spec.values.size()) {
    if (!spec.complete)
      throw domain_error("gap: partial spectrum exhausted by the ground cluster");
    rep.gap_defined = false;  // spectrum is a single cluster
    return rep;
  }
  rep.gap = spec.values[i] - rep.ground_energy;
  rep.gap_defined = true;
  rep.ambiguous = rep.gap < 10.0 * kernel_tol;
  return rep;
}

long long kernel_dimension(const SpectralData& spec, double kernel_tol) {
  return gap_above_ground(spec, kernel_tol).multiplicity;
}

LocalGapReport certify_local_gaps(const FrustrationFreeModel& model,
                                  const SeparatingPartitionFamily& family,
                                  std::optional<double> gamma1, std::optional<double> alpha) {
  LocalGapReport rep;
  const auto& amb = *model.ambient();
  const int r0 = std::max(model.range(), 0);
  for (const auto& scale : family.scales) {
    int n = scale.n;
    if (n < r0) continue;
    LocalGapReport::Row row;
    row.n = n;
    double gmin = std::numeric_limits<double>::infinity();
    std::set<std::string> seen;
    for (const auto& cls : scale.classes) {
      for (Site x : cls) {
        Region lam = region_intersection(family.region_of(x, n), amb.region());
        if (lam.empty()) continue;
        std::ostringstream key;
        for (Site s : lam.sites) key << s << ',';
        if (!seen.insert(key.str()).second) continue;
        const GroundSpace& gs = model.ground_space(lam);
        if (gs.full_space) continue;
        gmin = std::min(gmin, gs.gap_above);
        row.shapes++;
      }
    }
    if (!std::isfinite(gmin)) continue;
    row.gamma_n = gmin;
    if (gamma1 && alpha) {
      row.threshold =
          n == 0 ? (*alpha == 0.0 ? *gamma1 : 0.0) : *gamma1 * std::pow(double(n), -*alpha);
      row.pass = row.gamma_n >= row.threshold - 1e-12;
    }
    rep.overall = rep.overall && row.pass;
    rep.rows.push_back(row);
  }
  std::vector<double> ln, lg;
  for (const auto& row : rep.rows)
    if (row.n >= 1 && row.gamma_n > 0) {
      ln.push_back(std::log(double(row.n)));
      lg.push_back(std::log(row.gamma_n));
    }
  if (ln.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ln.size(); ++i) {
      sx += ln[i];
      sy += lg[i];
      sxx += ln[i] * ln[i];
      sxy += ln[i] * lg[i];
    }
    double m = static_cast<double>(ln.size());
    double denom = m * sxx - sx * sx;
    double slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
    rep.fitted_alpha = std::max(0.0, -slope);
  }
  double g1 = std::numeric_limits<double>::infinity();
  for (const auto& row : rep.rows) {
    if (row.n >= 1)
      g1 = std::min(g1, row.gamma_n * std::pow(double(row.n), rep.fitted_alpha));
    else if (rep.fitted_alpha == 0.0)
      g1 = std::min(g1, row.gamma_n);
  }
  rep.fitted_gamma1 = std::isfinite(g1) ? g1 : 0.0;
  return rep;
}

}  // namespace gapstab
