#include "gapstab/stability.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

namespace gapstab {

namespace {

std::uint64_t key_of(double s) {
  std::uint64_t k;
  std::memcpy(&k, &s, sizeof k);
  return k;
}

Matrix ground_projector_matrix(const SpectralData& spec, double kernel_tol) {
  long long r = 0;
  while (r < spec.values.size() && spec.values[r] - spec.values[0] <= kernel_tol) ++r;
  return spec.vectors.leftCols(r) * spec.vectors.leftCols(r).adjoint();
}

double opnorm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double opnorm_hermitian(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().size() ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

PerturbedFamily::PerturbedFamily(const FrustrationFreeModel& model, Region lambda,
                                 const AnchoredInteraction& phi, long long max_dense_dim)
    : model_(&model),
      lambda_(std::move(lambda)),
      phi_(&phi),
      h0_(model.assemble_hamiltonian(model.ambient()->region())),
      v_(embed(assemble_perturbation(phi, lambda_, model.ambient()), model.ambient()->region())),
      max_dense_(max_dense_dim) {
  if (!model.ambient()->region().contains(lambda_))
    throw domain_error("perturbed family: lambda outside ambient volume");
  v_norm_ = operator_norm(v_);
  kernel_tol_ = model.kernel_tol(model.ambient()->region());
}

const SpectralData& PerturbedFamily::at(double s) const {
  auto it = cache_.find(key_of(s));
  if (it != cache_.end()) return it->second;
  LocalOperator h = s == 0.0 ? h0_ : h0_ + s * v_;
  SpectralData spec = diagonalize(h, max_dense_);
  return cache_.emplace(key_of(s), std::move(spec)).first->second;
}

GapReport PerturbedFamily::gap_report(double s) const {
  return gap_above_ground(at(s), kernel_tol_);
}

bool PerturbedFamily::energy_continuous(const std::vector<double>& grid, double slack) const {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double lhs = std::abs(ground_energy(grid[i]) - ground_energy(grid[i - 1]));
    if (lhs > v_norm_ * std::abs(grid[i] - grid[i - 1]) + slack) return false;
  }
  return true;
}

LocalOperator flow_generator(const PerturbedFamily& fam, double s, const GapWeightPair& pair) {
  LocalOperator d = weighted_op(fam.at(s), fam.v(), WeightKind::G, pair);
  Matrix m = 0.5 * (d.matrix() + d.matrix().adjoint());
  double defect = (d.matrix() - d.matrix().adjoint()).cwiseAbs().maxCoeff();
  if (defect > 1e-10 * (1.0 + m.cwiseAbs().maxCoeff()))
    throw std::runtime_error("flow generator: self-adjointness residual too large");
  return LocalOperator(d.ambient(), d.support(), std::move(m));
}

const Matrix& SpectralFlowState::at(double s) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (std::abs(nodes[i] - s) <= 1e-12 * (1.0 + std::abs(s))) return u[i];
  throw domain_error("flow state: requested s is not a grid node");
}

SpectralFlowState integrate_flow(const PerturbedFamily& fam, const GapWeightPair& pair,
                                 const std::vector<double>& grid, const FlowOptions& opts) {
  if (grid.empty() || grid.front() != 0.0)
    throw domain_error("integrate_flow: grid must start at 0");
  const long long d = fam.h0().dim();
  SpectralFlowState st;
  st.nodes = grid;
  st.u.push_back(Matrix::Identity(d, d));
  st.substeps_used.push_back(0);

  std::map<std::uint64_t, Matrix> dcache;
  auto gen = [&](double s) -> const Matrix& {
    auto it = dcache.find(key_of(s));
    if (it != dcache.end()) return it->second;
    Matrix m = flow_generator(fam, s, pair).matrix();
    return dcache.emplace(key_of(s), std::move(m)).first->second;
  };

  auto mult_at = [&](double s) { return fam.gap_report(s).multiplicity; };
  bool mult0_one = mult_at(0.0) == 1;
  st.transport_checkable.push_back(mult0_one);
  Matrix p0;
  if (mult0_one) p0 = ground_projector_matrix(fam.at(0.0), fam.kernel_tol());

  const cdouble mi(0.0, -1.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double a = grid[i - 1], b = grid[i];
    bool checkable = mult0_one && mult_at(b) == 1;
    st.transport_checkable.push_back(checkable);
    Matrix target;
    if (checkable) target = ground_projector_matrix(fam.at(b), fam.kernel_tol());

    int nsub = opts.substeps_per_interval;
    Matrix u_next;
    double best_res = std::numeric_limits<double>::infinity();
    for (int attempt = 0;; ++attempt) {
      Matrix u = st.u[i - 1];
      double h = (b - a) / nsub;
      for (int step = 0; step < nsub; ++step) {
        double s0 = a + step * h;
        const Matrix& d1 = gen(s0);
        const Matrix& d2 = gen(s0 + 0.5 * h);
        const Matrix& d3 = gen(s0 + h);
        Matrix k1 = mi * (d1 * u);
        Matrix k2 = mi * (d2 * (u + 0.5 * h * k1));
        Matrix k3 = mi * (d2 * (u + 0.5 * h * k2));
        Matrix k4 = mi * (d3 * (u + h * k3));
        u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        // polar re-unitarization: unitarity drift, not truncation, is the
        // failure mode that corrupts the decomposition downstream
        Eigen::JacobiSVD<Matrix> svd(u, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Matrix uu = svd.matrixU() * svd.matrixV().adjoint();
        st.max_unitarity_defect =
            std::max(st.max_unitarity_defect,
                     (u - uu).cwiseAbs().maxCoeff());
        u = std::move(uu);
      }
      if (!checkable) {
        u_next = std::move(u);
        break;
      }
      double res = opnorm_hermitian(u * p0 * u.adjoint() - target);
      if (res <= opts.transport_tol || attempt >= opts.max_halvings) {
        if (res > opts.transport_tol)
          throw std::runtime_error(
              "integrate_flow: transport residual did not converge after max halvings");
        u_next = std::move(u);
        best_res = res;
        break;
      }
      nsub *= 2;
    }
    if (checkable) st.max_transport_residual = std::max(st.max_transport_residual, best_res);
    st.substeps_used.push_back(nsub);
    st.u.push_back(std::move(u_next));
  }
  return st;
}

double transport_check(const SpectralFlowState& flow, const PerturbedFamily& fam) {
  double worst = 0.0;
  bool base = flow.transport_checkable.empty() || flow.transport_checkable[0];
  if (!base) return worst;
  Matrix p0 = ground_projector_matrix(fam.at(0.0), fam.kernel_tol());
  for (std::size_t i = 0; i < flow.nodes.size(); ++i) {
    if (!flow.transport_checkable[i]) continue;
    Matrix ps = ground_projector_matrix(fam.at(flow.nodes[i]), fam.kernel_tol());
    worst = std::max(worst, opnorm_hermitian(flow.u[i] * p0 * flow.u[i].adjoint() - ps));
  }
  return worst;
}

LocalOperator dressed_w(const PerturbedFamily& fam, const SpectralFlowState& flow, double s) {
  const Matrix& u = flow.at(s);
  Matrix hs = fam.h0().matrix() + s * fam.v().matrix();
  double e = fam.ground_energy(s);
  Matrix w = u.adjoint() * hs * u - fam.h0().matrix();
  w -= e * Matrix::Identity(w.rows(), w.cols());
  w = 0.5 * (w + w.adjoint());
  return LocalOperator(fam.h0().ambient(), fam.h0().support(), std::move(w));
}

std::pair<LocalOperator, LocalOperator> k_maps(const PerturbedFamily& fam,
                                               const SpectralFlowState& flow, double s,
                                               const LocalOperator& a, const GapWeightPair& pair) {
  const Matrix& u = flow.at(s);
  LocalOperator fs = weighted_op(fam.at(s), a, WeightKind::F, pair);
  LocalOperator f0 = weighted_op(fam.at(0.0), a, WeightKind::F, pair);
  Matrix dressed = u.adjoint() * fs.matrix() * u;
  Matrix k1 = dressed - f0.matrix();
  Matrix k2 = s * dressed;
  const Region& supp = fam.h0().support();
  return {LocalOperator(fam.h0().ambient(), supp, std::move(k1)),
          LocalOperator(fam.h0().ambient(), supp, std::move(k2))};
}

double DressedInteraction::g1_of(Site x, int m) const {
  double sum = 0.0;
  for (const auto& [key, g] : g_lambda)
    if (key.first == x && key.second >= m) sum += g;
  return sum;
}

DressedInteraction decompose_phi1(const PerturbedFamily& fam, const SpectralFlowState& flow,
                                  double s, const GapWeightPair& pair, double recon_tol) {
  if (s == 0.0) throw domain_error("decompose: calibration s must be nonzero");
  DressedInteraction out;
  out.s = s;
  out.e_s = fam.ground_energy(s);
  out.w = dressed_w(fam, flow, s);

  const auto& model = fam.model();
  const auto& amb = *model.ambient();
  const auto& g = amb.graph();
  const Region& all = amb.region();
  const int range = std::max(model.range(), 0);

  // anchors: every eta term plus every perturbation anchor inside Lambda
  std::set<Site> anchors;
  for (const auto& [x, h] : model.terms()) anchors.insert(x);
  for (const auto& [key, op] : fam.phi().terms())
    if (fam.lambda().contains(key.first)) anchors.insert(key.first);

  Matrix recon = Matrix::Zero(all.size() ? fam.h0().dim() : 0, fam.h0().dim());
  for (Site x : anchors) {
    // K1 over the unperturbed term at x
    LocalOperator k1x;
    for (const auto& [ax, h] : model.terms())
      if (ax == x) {
        auto [k1, k2] = k_maps(fam, flow, s, embed(h, all), pair);
        k1x = k1x.empty() ? k1 : k1x + k1;
      }
    // K2 over the anchored perturbation terms at x whose balls fit Lambda
    std::map<int, LocalOperator> k2xk;
    for (const auto& [key, op] : fam.phi().terms()) {
      if (key.first != x || !fam.lambda().contains(x)) continue;
      Region ball = region_intersection(g.ball(x, key.second), all);
      if (!fam.lambda().contains(ball)) continue;
      auto [k1, k2] = k_maps(fam, flow, s, embed(op, all), pair);
      k2xk.emplace(key.second, std::move(k2));
    }
    if (k1x.empty() && k2xk.empty()) continue;

    int mx = g.covering_radius(x);
    for (int m = range; m <= mx; ++m) {
      LocalOperator term;
      if (!k1x.empty()) term = delta_layer(k1x, x, range, m);
      for (const auto& [k, k2] : k2xk)
        if (k <= m) {
          LocalOperator dl = delta_layer(k2, x, k, m);
          term = term.empty() ? dl : term + dl;
        }
      if (term.empty()) continue;
      Matrix tm = 0.5 * (term.matrix() + term.matrix().adjoint());
      term = LocalOperator(term.ambient(), term.support(), std::move(tm));
      recon += embed(term, all).matrix();
      out.g_lambda[{x, m}] = operator_norm(term) / std::abs(s);
      out.phi1.emplace(std::make_pair(x, m), std::move(term));
    }
  }

  Matrix target = out.w.matrix();
  target += out.e_s * Matrix::Identity(target.rows(), target.cols());
  out.recon1_residual = opnorm_hermitian(recon - target);
  if (out.recon1_residual > recon_tol)
    throw std::runtime_error("decompose_phi1: reconstruction residual " +
                             std::to_string(out.recon1_residual) + " above tolerance");

  // <Omega, W Omega> and the ground-projector commutator of the x-sums
  const GroundSpace& gs = model.ground_space(all);
  if (!gs.full_space && gs.rank() == 1) {
    Vector omega = gs.Q.col(0);
    out.omega_w = std::abs(omega.dot(out.w.matrix() * omega));
    Matrix pom = omega * omega.adjoint();
    for (Site x : anchors) {
      Matrix xsum = Matrix::Zero(target.rows(), target.cols());
      bool any = false;
      for (const auto& [key, op] : out.phi1)
        if (key.first == x) {
          xsum += embed(op, all).matrix();
          any = true;
        }
      if (any)
        out.ground_commutator =
            std::max(out.ground_commutator, opnorm(xsum * pom - pom * xsum));
    }
  }
  return out;
}

void decompose_phi2(DressedInteraction& dressed, const PerturbedFamily& fam,
                    const LtqoEstimate* ltqo, double recon_tol) {
  const auto& model = fam.model();
  const auto& amb = *model.ambient();
  const auto& g = amb.graph();
  const Region& all = amb.region();
  const int range = std::max(model.range(), 0);
  const double s = dressed.s;

  const GroundSpace& gs = model.ground_space(all);
  if (gs.full_space || gs.rank() != 1)
    throw domain_error("decompose_phi2: ambient kernel must be one-dimensional");
  Vector omega = gs.Q.col(0);
  Matrix pomega = omega * omega.adjoint();
  const long long d = fam.h0().dim();
  Matrix id = Matrix::Identity(d, d);

  std::set<Site> anchors;
  for (const auto& [key, op] : dressed.phi1) anchors.insert(key.first);

  Matrix recon = Matrix::Zero(d, d);
  for (Site x : anchors) {
    int mx = g.covering_radius(x);
    // omega-centered dressed terms, embedded once
    std::map<int, Matrix> phiw;
    for (const auto& [key, op] : dressed.phi1) {
      if (key.first != x) continue;
      Matrix full = embed(op, all).matrix();
      cdouble w0 = omega.dot(full * omega);
      full -= w0 * id;
      phiw.emplace(key.second, std::move(full));
    }
    // ball kernel projectors; balls at or past the covering radius carry the
    // ambient projector
    auto proj_at = [&](int n) -> Matrix {
      if (n >= mx) return pomega;
      Region ball = region_intersection(g.ball(x, n), all);
      return embed(model.ground_projector(ball), all).matrix();
    };
    for (int n = range; n < mx; ++n) {
      Region outer = region_intersection(g.ball(x, n + 1), all);
      Region inner = region_intersection(g.ball(x, n), all);
      dressed.en_orthogonality =
          std::max(dressed.en_orthogonality, model.nesting_residual(outer, inner));
    }
    if (dressed.en_orthogonality > 1e-8)
      throw std::runtime_error("decompose_phi2: layer projector family lost orthogonality");

    std::map<int, Matrix> phi2x;
    Matrix p_prev = proj_at(range);  // P_R
    // Theta1 terms at m = 2k
    for (const auto& [k, pw] : phiw) {
      int m2 = 2 * k;
      Matrix p2k = proj_at(m2);
      Matrix th1 = (id - p2k) * pw * (id - p2k);
      auto it = phi2x.find(m2);
      if (it == phi2x.end())
        phi2x.emplace(m2, std::move(th1));
      else
        it->second += th1;
    }
    // Theta2 terms for m > 2 R, truncated at the covering radius
    for (int m = 2 * range + 1; m <= mx; ++m) {
      Matrix pm = proj_at(m);
      Matrix pm1 = proj_at(m - 1);
      Matrix em = pm1 - pm;
      Matrix acc = Matrix::Zero(d, d);
      bool any = false;
      int kmax = (m + 1) / 2 - 1;  // k <= ceil(m/2) - 1
      for (const auto& [k, pw] : phiw) {
        if (k < range || k > kmax) continue;
        acc += em * pw * (id - pm1) + (id - pm) * pw * em;
        any = true;
      }
      if (!any) continue;
      auto it = phi2x.find(m);
      if (it == phi2x.end())
        phi2x.emplace(m, std::move(acc));
      else
        it->second += acc;
    }
    for (auto& [m, mat] : phi2x) {
      mat = 0.5 * (mat + mat.adjoint());
      recon += mat;
      Matrix pm = proj_at(m);
      dressed.annihilation_max = std::max(dressed.annihilation_max, opnorm(mat * pm));
      LocalOperator op(fam.h0().ambient(), all, mat);
      LocalOperator reduced = conditional_expectation(op, region_intersection(g.ball(x, m), all));
      dressed.phi2.emplace(std::make_pair(x, m), std::move(reduced));
    }
  }

  dressed.recon2_residual = opnorm_hermitian(recon - dressed.w.matrix());
  if (dressed.recon2_residual > recon_tol)
    throw std::runtime_error("decompose_phi2: reconstruction residual " +
                             std::to_string(dressed.recon2_residual) + " above tolerance");

  // envelopes and the bound-shape tabulation
  int max_shell = 0;
  for (const auto& [key, op] : dressed.phi2) max_shell = std::max(max_shell, key.second);
  dressed.g2_envelope.assign(static_cast<std::size_t>(max_shell) + 1, 0.0);
  DecayFunction g0 = ltqo ? ltqo_envelope_function(*ltqo) : DecayFunction::table({});
  std::size_t g0_len = ltqo ? ltqo->envelope.size() : 0;
  for (const auto& [key, op] : dressed.phi2) {
    auto [x, m] = key;
    double norm = operator_norm(op);
    double env = norm / (2.0 * std::abs(s));
    auto& slot = dressed.g2_envelope[static_cast<std::size_t>(m)];
    slot = std::max(slot, env);
    // bound-shape denominator with the measured tables
    int half = (m + 1) / 2;
    double g0v = 0.0;
    if (ltqo && g0_len > 0)
      g0v = static_cast<std::size_t>(half) < g0_len
                ? ltqo->envelope[static_cast<std::size_t>(half)]
                : ltqo->envelope.back();
    double nu = static_cast<double>(g.nu());
    double shape = dressed.g_lambda.count({x, half}) ? dressed.g_lambda.at({x, half}) : 0.0;
    shape += 2.0 * dressed.g1_of(x, m + 1);
    shape += 2.0 * dressed.g1_of(x, range) * std::sqrt(std::pow(1.0 + m, nu) * g0v);
    if (shape > 1e-14)
      dressed.shape_ratio_max = std::max(dressed.shape_ratio_max, env / shape);
  }
}

BetaBreakdown form_bound_beta(const std::vector<double>& g_env, const std::vector<double>& gamma_n,
                              double c, double zeta, int range) {
  BetaBreakdown out;
  CompensatedSum acc;
  for (std::size_t n = static_cast<std::size_t>(std::max(range, 0)); n < g_env.size(); ++n) {
    if (g_env[n] <= 0.0) continue;
    if (n >= gamma_n.size() || gamma_n[n] <= 0.0)
      throw domain_error("form_bound_beta: missing or non-positive local gap at shell " +
                         std::to_string(n));
    BetaBreakdown::Shell sh;
    sh.n = static_cast<int>(n);
    sh.weight = n == 0 ? 1.0 : c * std::pow(static_cast<double>(n), zeta);
    sh.g = g_env[n];
    sh.gamma = gamma_n[n];
    sh.term = sh.weight * sh.g / sh.gamma;
    acc.add(sh.term);
    out.shells.push_back(sh);
  }
  out.beta = acc.value();
  out.empirical = true;
  return out;
}

BetaBreakdown form_bound_beta_analytic(const DecayFunction& g, double gamma1, double alpha,
                                       double c, double zeta, int range, long horizon) {
  if (gamma1 <= 0) throw domain_error("form_bound_beta: gamma1 must be positive");
  BetaBreakdown out;
  CompensatedSum acc;
  for (long n = std::max(range, 0); n <= horizon; ++n) {
    double gv = g(static_cast<int>(n));
    if (gv == 0.0) continue;
    BetaBreakdown::Shell sh;
    sh.n = static_cast<int>(n);
    sh.weight = n == 0 ? 1.0 : c * std::pow(static_cast<double>(n), zeta);
    sh.gamma = gamma1 * std::pow(static_cast<double>(std::max(n, 1L)), -alpha);
    sh.g = gv;
    sh.term = sh.weight * sh.g / sh.gamma;
    acc.add(sh.term);
    out.shells.push_back(sh);
  }
  // tail: c n^zeta G(n) / (gamma1 n^-alpha) <= (c/gamma1) n^{zeta+alpha} G(n)
  double tail = g.tail_bound(zeta + alpha, 1.0, horizon + 1);
  out.tail_hi = std::isfinite(tail) ? c / gamma1 * tail : 0.0;
  out.empirical = !std::isfinite(tail);
  out.beta = acc.value() + out.tail_hi;
  return out;
}

std::pair<double, double> verify_form_bound(const LocalOperator& h0, const LocalOperator& w,
                                            double beta) {
  Matrix minus = beta * h0.matrix() - w.matrix();
  Matrix plus = beta * h0.matrix() + w.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> em(0.5 * (minus + minus.adjoint()),
                                           Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> ep(0.5 * (plus + plus.adjoint()), Eigen::EigenvaluesOnly);
  return {em.eigenvalues().minCoeff(), ep.eigenvalues().minCoeff()};
}

StabilityVerdict stability_sweep(const PerturbedFamily& fam, double beta, double gamma_request,
                                 const std::vector<double>& grid, double slack) {
  StabilityVerdict v;
  v.beta = beta;
  v.gamma_request = gamma_request;
  auto rep0 = fam.gap_report(0.0);
  if (!rep0.gap_defined) throw domain_error("stability sweep: ungapped reference spectrum");
  v.gamma0 = rep0.gap;
  if (gamma_request >= v.gamma0)
    throw domain_error("stability sweep: requested gamma must be below gamma0");
  if (beta <= 1e-300) {
    v.s0_infinite = true;
    v.s0 = std::numeric_limits<double>::infinity();
  } else {
    v.s0 = (v.gamma0 - gamma_request) / (beta * v.gamma0);
  }

  bool jumped = false;
  for (double s : grid) {
    StabilityVerdict::Row row;
    row.s = s;
    auto rep = fam.gap_report(s);
    row.energy = rep.ground_energy;
    row.multiplicity = rep.multiplicity;
    row.gap = rep.gap_defined ? rep.gap : 0.0;
    row.bound = v.gamma0 - std::abs(s) * beta * v.gamma0;
    row.inside = std::abs(s) <= v.s0 * (1.0 + 1e-12);
    if (row.multiplicity != 1) jumped = true;
    row.outside_hypothesis = jumped;
    if (row.inside && !row.outside_hypothesis)
      row.pass = rep.gap_defined && row.gap >= row.bound - slack;
    v.overall = v.overall && row.pass;
    v.rows.push_back(row);
  }
  return v;
}

std::vector<double> make_sweep_grid(double s_max, int points) {
  if (points < 2 || s_max <= 0) return {0.0};
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = s_max * i / (points - 1);
  return g;
}

}  // namespace gapstab
