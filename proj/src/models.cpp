#include "gapstab/models.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <sstream>

#include "gapstab/spectral.hpp"

namespace gapstab {

void AnchoredInteraction::add_term(Site x, int n, LocalOperator op, double hermiticity_tol) {
  if (n < range_) throw domain_error("anchored: term radius below interaction range");
  const auto& amb = *op.ambient();
  Region ball = region_intersection(amb.graph().ball(x, n), amb.region());
  if (!ball.contains(op.support()))
    throw domain_error("anchored: term support escapes its ball");
  if (!op.is_hermitian(hermiticity_tol)) throw domain_error("anchored: term not Hermitian");
  auto key = std::make_pair(x, n);
  if (terms_.count(key)) {
    terms_.at(key) = terms_.at(key) + op;
  } else {
    terms_.emplace(key, std::move(op));
  }
}

AnchoredTermNorms AnchoredInteraction::term_norms() const {
  AnchoredTermNorms out;
  for (const auto& [key, op] : terms_)
    out.entries.push_back({key.first, key.second, operator_norm(op)});
  return out;
}

double AnchoredInteraction::sup_term_norm() const {
  double m = 0.0;
  for (const auto& [key, op] : terms_) m = std::max(m, operator_norm(op));
  return m;
}

AnchoredInteraction::Verification AnchoredInteraction::verify() const {
  Verification v;
  for (const auto& [key, op] : terms_) {
    if (!op.is_hermitian(1e-12)) v.hermitian = false;
    const auto& amb = *op.ambient();
    Region ball = region_intersection(amb.graph().ball(key.first, key.second), amb.region());
    if (!ball.contains(op.support())) v.supports_ok = false;
    if (decay_) {
      double bound = decay_->strength *
                     std::exp(-decay_->a * std::pow(double(key.second), decay_->theta));
      double excess = operator_norm(op) - bound;
      if (excess > 1e-12) {
        v.decay_ok = false;
        v.worst_decay_excess = std::max(v.worst_decay_excess, excess);
      }
    }
  }
  return v;
}

LocalOperator assemble_perturbation(const AnchoredInteraction& phi, const Region& lambda,
                                    const AmbientPtr& ambient) {
  if (!ambient->region().contains(lambda))
    throw domain_error("perturbation: region outside ambient volume");
  LocalOperator v = LocalOperator::zero(ambient, lambda);
  const auto& g = ambient->graph();
  for (const auto& [key, op] : phi.terms()) {
    auto [x, n] = key;
    if (!lambda.contains(x)) continue;
    Region ball = region_intersection(g.ball(x, n), ambient->region());
    if (!lambda.contains(ball)) continue;
    v = v + embed(op, lambda);
  }
  return v;
}

FrustrationFreeModel::FrustrationFreeModel(AmbientPtr ambient,
                                           std::vector<std::pair<Site, LocalOperator>> terms,
                                           int range, std::string name, bool homogeneous)
    : ambient_(std::move(ambient)),
      terms_(std::move(terms)),
      range_(range),
      name_(std::move(name)),
      homogeneous_(homogeneous) {
  const auto& g = ambient_->graph();
  for (const auto& [x, h] : terms_) {
    Region ball = region_intersection(g.ball(x, range_), ambient_->region());
    if (!ball.contains(h.support()))
      throw domain_error("model: term support escapes interaction radius");
    if (!h.is_hermitian(1e-12)) throw domain_error("model: term not Hermitian");
    double n = operator_norm(h);
    term_norms_.push_back(n);
    eta_inf_ = std::max(eta_inf_, n);
  }
}

std::vector<std::size_t> FrustrationFreeModel::terms_in(const Region& volume) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < terms_.size(); ++i)
    if (volume.contains(terms_[i].second.support())) out.push_back(i);
  return out;
}

LocalOperator FrustrationFreeModel::assemble_hamiltonian(const Region& volume) const {
  LocalOperator h = LocalOperator::zero(ambient_, volume);
  for (std::size_t i : terms_in(volume)) h = h + embed(terms_[i].second, volume);
  return h;
}

double FrustrationFreeModel::hamiltonian_norm_bound(const Region& volume) const {
  double b = 0.0;
  for (std::size_t i : terms_in(volume)) b += term_norms_[i];
  return b;
}

double FrustrationFreeModel::kernel_tol(const Region& volume) const {
  return 1e-10 * (1.0 + hamiltonian_norm_bound(volume));
}

LinearMap FrustrationFreeModel::hamiltonian_map(const Region& volume) const {
  struct TermAction {
    Matrix m;
    std::vector<long long> sub_off;   // offsets of the term factor inside the volume factor
    std::vector<long long> rest_off;
  };
  auto actions = std::make_shared<std::vector<TermAction>>();
  FactorIndexer fi(*ambient_, volume);
  for (std::size_t i : terms_in(volume)) {
    const LocalOperator& h = terms_[i].second;
    FactorIndexer si(*ambient_, h.support());
    FactorIndexer ri(*ambient_, region_difference(volume, h.support()));
    TermAction a;
    a.m = h.matrix();
    a.sub_off.resize(static_cast<std::size_t>(si.dim));
    a.rest_off.resize(static_cast<std::size_t>(ri.dim));
    // replicate the project-wide little-endian layout
    std::vector<long long> stride_sub(si.sites.size()), stride_rest(ri.sites.size());
    for (std::size_t k = 0; k < si.sites.size(); ++k)
      stride_sub[k] = fi.strides[static_cast<std::size_t>(fi.position_of(si.sites[k]))];
    for (std::size_t k = 0; k < ri.sites.size(); ++k)
      stride_rest[k] = fi.strides[static_cast<std::size_t>(fi.position_of(ri.sites[k]))];
    for (long long idx = 0; idx < si.dim; ++idx) {
      long long rem = idx, o = 0;
      for (std::size_t k = 0; k < si.dims.size(); ++k) {
        o += (rem % si.dims[k]) * stride_sub[k];
        rem /= si.dims[k];
      }
      a.sub_off[static_cast<std::size_t>(idx)] = o;
    }
    for (long long idx = 0; idx < ri.dim; ++idx) {
      long long rem = idx, o = 0;
      for (std::size_t k = 0; k < ri.dims.size(); ++k) {
        o += (rem % ri.dims[k]) * stride_rest[k];
        rem /= ri.dims[k];
      }
      a.rest_off[static_cast<std::size_t>(idx)] = o;
    }
    actions->push_back(std::move(a));
  }
  LinearMap map;
  map.dim = fi.dim;
  map.norm_bound = hamiltonian_norm_bound(volume);
  map.apply = [actions](const Vector& in, Vector& out) {
    out.setZero(in.size());
    for (const auto& a : *actions) {
      const long long ds = a.m.rows();
      for (long long rest : a.rest_off) {
        for (long long i = 0; i < ds; ++i) {
          cdouble acc = 0.0;
          for (long long j = 0; j < ds; ++j)
            acc += a.m(i, j) * in[rest + a.sub_off[static_cast<std::size_t>(j)]];
          out[rest + a.sub_off[static_cast<std::size_t>(i)]] += acc;
        }
      }
    }
  };
  return map;
}

namespace {

// Canonical representative of a region under lattice translations (per-axis
// wrap on periodic axes). Homogeneous models have identical Hamiltonians on
// translates, up to the factor-index relabeling returned alongside.
struct CanonicalShape {
  std::string key;
  std::vector<int> shift;  // original coords = canonical coords + shift
  Region canonical;
};

CanonicalShape canonical_translate(const LatticeGraph& g, const Region& r) {
  const int nu = g.nu();
  std::vector<std::vector<int>> coords;
  coords.reserve(r.size());
  std::vector<int> mins(nu, 1 << 30);
  for (Site s : r.sites) {
    coords.push_back(g.coords(s));
    for (int a = 0; a < nu; ++a) mins[a] = std::min(mins[a], coords.back()[a]);
  }
  auto serialize = [&](const std::vector<int>& shift, std::vector<std::vector<int>>& out) {
    out.clear();
    out.reserve(coords.size());
    for (const auto& c : coords) {
      std::vector<int> t(nu);
      for (int a = 0; a < nu; ++a) {
        int v = c[a] - shift[a];
        if (g.periodic()[a]) {
          v %= g.dims()[a];
          if (v < 0) v += g.dims()[a];
        }
        t[a] = v;
      }
      out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end());
  };
  // candidate shifts: align each member site at the origin on periodic axes;
  // non-periodic axes always shift by the minimum coordinate
  std::vector<std::vector<int>> best;
  std::vector<int> best_shift;
  for (const auto& c : coords) {
    std::vector<int> shift(nu);
    for (int a = 0; a < nu; ++a) shift[a] = g.periodic()[a] ? c[a] : mins[a];
    std::vector<std::vector<int>> t;
    serialize(shift, t);
    if (best.empty() || t < best) {
      best = std::move(t);
      best_shift = std::move(shift);
    }
  }
  CanonicalShape out;
  out.shift = best_shift;
  std::ostringstream os;
  std::vector<Site> csites;
  for (const auto& t : best) {
    csites.push_back(g.site_at(t));
    for (int v : t) os << v << ',';
    os << ';';
  }
  out.key = os.str();
  out.canonical = Region(std::move(csites));
  return out;
}

// Index permutation of a factor under a site bijection (dims must agree).
std::vector<long long> factor_permutation(const AmbientVolume& amb, const Region& from,
                                          const Region& to,
                                          const std::function<Site(Site)>& site_map) {
  FactorIndexer fi(amb, from), ti(amb, to);
  std::vector<long long> target_stride(fi.sites.size());
  for (std::size_t k = 0; k < fi.sites.size(); ++k) {
    Site m = site_map(fi.sites[k]);
    int p = ti.position_of(m);
    if (p < 0 || ti.dims[static_cast<std::size_t>(p)] != fi.dims[k])
      throw domain_error("factor permutation: inconsistent site map");
    target_stride[k] = ti.strides[static_cast<std::size_t>(p)];
  }
  std::vector<long long> perm(static_cast<std::size_t>(fi.dim));
  for (long long idx = 0; idx < fi.dim; ++idx) {
    long long rem = idx, o = 0;
    for (std::size_t k = 0; k < fi.dims.size(); ++k) {
      o += (rem % fi.dims[k]) * target_stride[k];
      rem /= fi.dims[k];
    }
    perm[static_cast<std::size_t>(idx)] = o;
  }
  return perm;
}

GroundSpace solve_ground_space(const FrustrationFreeModel& model, const Region& volume) {
  const auto& opts = model.solver();
  GroundSpace gs;
  gs.volume = volume;
  gs.factor_dim = model.ambient()->factor_dim(volume);
  auto idx = model.terms_in(volume);
  if (idx.empty()) {
    gs.full_space = true;
    gs.min_eigenvalue = 0.0;
    return gs;
  }
  const double tol = model.kernel_tol(volume);
  if (gs.factor_dim <= opts.dense_kernel_dim) {
    LocalOperator h = model.assemble_hamiltonian(volume);
    RealVector vals;
    Matrix vecs;
    hermitian_eig(h.matrix(), vals, vecs);
    gs.min_eigenvalue = vals[0];
    long long r = 0;
    while (r < vals.size() && vals[r] <= tol) ++r;
    if (r == 0) throw domain_error("ground space: kernel empty (frustration-freeness violated)");
    gs.Q = vecs.leftCols(r);
    gs.gap_above = r < vals.size() ? vals[r] : std::numeric_limits<double>::infinity();
    return gs;
  }
  LinearMap map = model.hamiltonian_map(volume);
  LanczosOptions lo;
  lo.tol = opts.lanczos_tol;
  lo.max_iter = opts.lanczos_max_iter;
  lo.max_restarts = opts.max_restarts;
  lo.seed = opts.seed;
  lo.norm_scale = std::max(1.0, map.norm_bound);
  auto done = [&](const std::vector<double>& vals) {
    if (!vals.empty() && vals.back() > tol) return true;  // gap found
    return static_cast<int>(vals.size()) > opts.max_kernel_rank;
  };
  LanczosResult res = lanczos_collect(map, done, lo);
  long long r = 0;
  while (r < res.values.size() && res.values[r] <= tol) ++r;
  if (r == 0) throw domain_error("ground space: kernel empty (frustration-freeness violated)");
  if (r == res.values.size())
    throw domain_error("ground space: kernel rank exceeded the configured cap");
  gs.min_eigenvalue = res.values[0];
  gs.Q = res.vectors.leftCols(r);
  gs.gap_above = res.values[r];
  return gs;
}

}  // namespace

const GroundSpace& FrustrationFreeModel::ground_space(const Region& volume) const {
  if (!ambient_->region().contains(volume))
    throw domain_error("ground space: volume outside ambient");
  if (!homogeneous_) {
    auto it = exact_cache_.find(volume.sites);
    if (it != exact_cache_.end()) return it->second;
    return exact_cache_.emplace(volume.sites, solve_ground_space(*this, volume)).first->second;
  }
  const auto& g = ambient_->graph();
  auto shape = canonical_translate(g, volume);
  auto it = shape_cache_.find(shape.key);
  if (it == shape_cache_.end()) {
    it = shape_cache_.emplace(shape.key, solve_ground_space(*this, shape.canonical)).first;
  }
  const GroundSpace& base = it->second;
  if (base.volume == volume) return base;
  // translate the cached kernel isometry onto this volume
  auto cached = exact_cache_.find(volume.sites);
  if (cached != exact_cache_.end()) return cached->second;
  GroundSpace gs;
  gs.volume = volume;
  gs.factor_dim = base.factor_dim;
  gs.full_space = base.full_space;
  gs.min_eigenvalue = base.min_eigenvalue;
  gs.gap_above = base.gap_above;
  if (!base.full_space) {
    auto site_map = [&](Site c) {
      auto t = g.coords(c);
      for (int a = 0; a < g.nu(); ++a) t[a] += shape.shift[a];
      return g.site_at(t);
    };
    auto perm = factor_permutation(*ambient_, base.volume, volume, site_map);
    gs.Q = Matrix(base.Q.rows(), base.Q.cols());
    for (long long i = 0; i < base.Q.rows(); ++i)
      gs.Q.row(perm[static_cast<std::size_t>(i)]) = base.Q.row(i);
  }
  return exact_cache_.emplace(volume.sites, std::move(gs)).first->second;
}

LocalOperator FrustrationFreeModel::ground_projector(const Region& volume) const {
  const GroundSpace& gs = ground_space(volume);
  if (gs.full_space) return LocalOperator::identity(ambient_, volume);
  return LocalOperator(ambient_, volume, gs.Q * gs.Q.adjoint());
}

double FrustrationFreeModel::nesting_residual(const Region& volume, const Region& inner) const {
  if (!volume.contains(inner)) throw domain_error("nesting: inner volume not contained");
  const GroundSpace& gs = ground_space(volume);
  const GroundSpace& gs0 = ground_space(inner);
  if (gs0.full_space) return 0.0;
  if (gs.full_space)
    throw domain_error("nesting: outer volume has no terms but inner does");  // unreachable
  // |P P0 - P| = sqrt(lambda_max(I - Q* P0 Q))
  FactorIndexer fi(*ambient_, volume);
  FactorIndexer ki(*ambient_, inner);
  FactorIndexer ri(*ambient_, region_difference(volume, inner));
  std::vector<long long> koff(static_cast<std::size_t>(ki.dim)),
      roff(static_cast<std::size_t>(ri.dim));
  {
    std::vector<long long> sk(ki.sites.size()), sr(ri.sites.size());
    for (std::size_t k = 0; k < ki.sites.size(); ++k)
      sk[k] = fi.strides[static_cast<std::size_t>(fi.position_of(ki.sites[k]))];
    for (std::size_t k = 0; k < ri.sites.size(); ++k)
      sr[k] = fi.strides[static_cast<std::size_t>(fi.position_of(ri.sites[k]))];
    for (long long idx = 0; idx < ki.dim; ++idx) {
      long long rem = idx, o = 0;
      for (std::size_t k = 0; k < ki.dims.size(); ++k) {
        o += (rem % ki.dims[k]) * sk[k];
        rem /= ki.dims[k];
      }
      koff[static_cast<std::size_t>(idx)] = o;
    }
    for (long long idx = 0; idx < ri.dim; ++idx) {
      long long rem = idx, o = 0;
      for (std::size_t k = 0; k < ri.dims.size(); ++k) {
        o += (rem % ri.dims[k]) * sr[k];
        rem /= ri.dims[k];
      }
      roff[static_cast<std::size_t>(idx)] = o;
    }
  }
  const Matrix& q = gs.Q;
  const Matrix& q0 = gs0.Q;
  Matrix pq(q.rows(), q.cols());
  Vector sub(ki.dim), proj(ki.dim);
  for (long long c = 0; c < q.cols(); ++c) {
    for (long long t = 0; t < ri.dim; ++t) {
      long long base = roff[static_cast<std::size_t>(t)];
      for (long long i = 0; i < ki.dim; ++i) sub[i] = q(base + koff[static_cast<std::size_t>(i)], c);
      proj.noalias() = q0 * (q0.adjoint() * sub);
      for (long long i = 0; i < ki.dim; ++i) pq(base + koff[static_cast<std::size_t>(i)], c) = proj[i];
    }
  }
  // |P P0 - P| = sigma_max(P0 Q - Q): subtract before norming so exact
  // nesting is not drowned by squared rounding noise
  Matrix w = pq - q;
  Eigen::SelfAdjointEigenSolver<Matrix> es(w.adjoint() * w, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

FfCertification FrustrationFreeModel::certify_frustration_free(
    const std::vector<Region>& volumes) const {
  FfCertification cert;
  for (const auto& [x, h] : terms_) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix(), Eigen::EigenvaluesOnly);
    double mn = es.eigenvalues().minCoeff();
    cert.worst_term_min_eig = std::min(cert.worst_term_min_eig, mn);
    if (mn < -1e-12) cert.terms_psd = false;
  }
  cert.overall = cert.terms_psd;
  for (const auto& v : volumes) {
    FfCertification::Row row;
    row.volume = v;
    try {
      const GroundSpace& gs = ground_space(v);
      row.min_spec = gs.min_eigenvalue;
      row.kernel_dim = gs.rank();
      row.pass = std::abs(gs.min_eigenvalue) <= 1e-10;
    } catch (const domain_error&) {
      row.pass = false;  // empty kernel within tolerance
      row.min_spec = std::numeric_limits<double>::quiet_NaN();
    }
    cert.overall = cert.overall && row.pass;
    cert.rows.push_back(std::move(row));
  }
  return cert;
}

AnchoredInteraction FrustrationFreeModel::as_anchored() const {
  AnchoredInteraction eta(range_);
  for (const auto& [x, h] : terms_) eta.add_term(x, range_, h);
  return eta;
}

// -------------------------------------------------------------------------
// zoo

Matrix site_operator(const std::string& name, int d) {
  const cdouble i01(0.0, 1.0);
  if (d == 2) {
    Matrix m = Matrix::Zero(2, 2);
    if (name == "sx") {
      m(0, 1) = 1;
      m(1, 0) = 1;
    } else if (name == "sy") {
      m(0, 1) = -i01;
      m(1, 0) = i01;
    } else if (name == "sz") {
      m(0, 0) = 1;
      m(1, 1) = -1;
    } else if (name == "down_projector") {
      m(1, 1) = 1;
    } else {
      throw domain_error("site_operator: unknown qubit operator " + name);
    }
    return m;
  }
  if (d == 3) {
    // spin-1, basis (m = +1, 0, -1)
    const double r2 = std::sqrt(2.0);
    Matrix sp = Matrix::Zero(3, 3);
    sp(0, 1) = r2;
    sp(1, 2) = r2;
    Matrix sm = sp.adjoint();
    if (name == "sx") return 0.5 * (sp + sm);
    if (name == "sy") return -0.5 * i01 * (sp - sm);
    if (name == "sz") {
      Matrix m = Matrix::Zero(3, 3);
      m(0, 0) = 1;
      m(2, 2) = -1;
      return m;
    }
    throw domain_error("site_operator: unknown spin-1 operator " + name);
  }
  throw domain_error("site_operator: unsupported site dimension");
}

namespace {

// Two-site Hermitian term given in the physical (left, right) ordering,
// mapped onto the sorted-support factor layout.
LocalOperator two_site_term(const AmbientPtr& amb, Site left, Site right, const Matrix& phys) {
  Region supp({left, right});
  FactorIndexer fi(*amb, supp);
  int dl = amb->site_dim(left), dr = amb->site_dim(right);
  if (phys.rows() != dl * dr) throw domain_error("two_site_term: matrix size mismatch");
  long long sl = fi.strides[static_cast<std::size_t>(fi.position_of(left))];
  long long sr = fi.strides[static_cast<std::size_t>(fi.position_of(right))];
  Matrix m = Matrix::Zero(fi.dim, fi.dim);
  for (int l = 0; l < dl; ++l)
    for (int r = 0; r < dr; ++r)
      for (int l2 = 0; l2 < dl; ++l2)
        for (int r2 = 0; r2 < dr; ++r2)
          m(l * sl + r * sr, l2 * sl + r2 * sr) = phys(l + dl * r, l2 + dl * r2);
  return LocalOperator(amb, supp, std::move(m));
}

Matrix aklt_bond() {
  // projector onto total spin 2 of two spin-1 sites, from the Casimir
  // C = (S1+S2)^2 with eigenvalues {0, 2, 6}: P = C(C-2)/24
  Matrix sx = site_operator("sx", 3), sy = site_operator("sy", 3), sz = site_operator("sz", 3);
  Matrix id3 = Matrix::Identity(3, 3);
  auto kron = [](const Matrix& a, const Matrix& b) {
    // little-endian physical ordering: index = i_left + d_left * i_right
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long long ib = 0; ib < b.rows(); ++ib)
      for (long long jb = 0; jb < b.cols(); ++jb)
        out.block(ib * a.rows(), jb * a.cols(), a.rows(), a.cols()) = b(ib, jb) * a;
    return out;
  };
  Matrix c = 4.0 * Matrix::Identity(9, 9) +
             2.0 * (kron(sx, sx) + kron(sy, sy) + kron(sz, sz));
  Matrix p = c * (c - 2.0 * Matrix::Identity(9, 9)) / 24.0;
  double idem = (p * p - p).cwiseAbs().maxCoeff();
  if (idem > 1e-12) throw std::runtime_error("aklt bond projector failed idempotency check");
  return p;
}

Matrix ising_projector_bond(double lambda) {
  // |phi><phi| with phi = (|01> - lambda |10>) / sqrt(1 + lambda^2) in the
  // physical (left, right) little-endian basis index l + 2 r
  Eigen::Vector4cd phi = Eigen::Vector4cd::Zero();
  double norm = std::sqrt(1.0 + lambda * lambda);
  phi(2) = 1.0 / norm;        // |0>_l |1>_r
  phi(1) = -lambda / norm;    // |1>_l |0>_r
  return phi * phi.adjoint();
}

void require_ring_or_chain(const LatticeGraph& g, bool periodic, const std::string& name) {
  if (g.nu() != 1) throw domain_error(name + ": needs a one-dimensional lattice");
  if (g.periodic()[0] != periodic)
    throw domain_error(name + ": lattice boundary does not match the model variant");
}

}  // namespace

std::vector<std::string> zoo_names() {
  return {"paramagnet", "aklt_open", "aklt_periodic", "ising_projector"};
}

FrustrationFreeModel model_zoo(const std::string& name,
                               std::shared_ptr<const LatticeGraph> graph,
                               const ZooParams& params) {
  if (name == "paramagnet") {
    auto amb = std::make_shared<AmbientVolume>(graph, graph->all_sites(), 2, params.dim_cap);
    std::vector<std::pair<Site, LocalOperator>> terms;
    Matrix h = site_operator("down_projector", 2);
    for (Site x = 0; x < graph->num_sites(); ++x)
      terms.emplace_back(x, LocalOperator(amb, Region({x}), h));
    return FrustrationFreeModel(amb, std::move(terms), 0, name, true);
  }
  if (name == "aklt_open" || name == "aklt_periodic") {
    bool periodic = name == "aklt_periodic";
    require_ring_or_chain(*graph, periodic, name);
    int n = graph->num_sites();
    if (n < 2) throw domain_error(name + ": needs at least two sites");
    auto amb = std::make_shared<AmbientVolume>(graph, graph->all_sites(), 3, params.dim_cap);
    Matrix bond = aklt_bond();
    std::vector<std::pair<Site, LocalOperator>> terms;
    int bonds = periodic ? n : n - 1;
    for (int x = 0; x < bonds; ++x)
      terms.emplace_back(x, two_site_term(amb, x, (x + 1) % n, bond));
    return FrustrationFreeModel(amb, std::move(terms), 1, name, true);
  }
  if (name == "ising_projector") {
    if (graph->nu() != 1) throw domain_error("ising_projector: needs a one-dimensional lattice");
    int n = graph->num_sites();
    if (n < 2) throw domain_error("ising_projector: needs at least two sites");
    auto amb = std::make_shared<AmbientVolume>(graph, graph->all_sites(), 2, params.dim_cap);
    Matrix bond = ising_projector_bond(params.lambda);
    std::vector<std::pair<Site, LocalOperator>> terms;
    int bonds = graph->periodic()[0] ? n : n - 1;
    for (int x = 0; x < bonds; ++x)
      terms.emplace_back(x, two_site_term(amb, x, (x + 1) % n, bond));
    return FrustrationFreeModel(amb, std::move(terms), 1, name, true);
  }
  throw domain_error("model_zoo: unknown model " + name);
}

FrustrationFreeModel custom_model(AmbientPtr ambient,
                                  const std::vector<std::pair<Site, std::string>>& term_files,
                                  int range) {
  std::vector<std::pair<Site, LocalOperator>> terms;
  for (const auto& [x, path] : term_files) terms.emplace_back(x, load_operator(path, ambient));
  return FrustrationFreeModel(std::move(ambient), std::move(terms), range, "custom", false);
}

}  // namespace gapstab
