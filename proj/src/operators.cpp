#include "gapstab/operators.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace gapstab {

AmbientVolume::AmbientVolume(std::shared_ptr<const LatticeGraph> graph, Region region,
                             int uniform_site_dim, long long dim_cap)
    : AmbientVolume(std::move(graph), region,
                    std::vector<int>(region.size(), uniform_site_dim), dim_cap) {}

AmbientVolume::AmbientVolume(std::shared_ptr<const LatticeGraph> graph, Region region,
                             std::vector<int> site_dims, long long dim_cap)
    : graph_(std::move(graph)), region_(std::move(region)), dims_(std::move(site_dims)) {
  if (!graph_) throw domain_error("ambient: null graph");
  if (dims_.size() != region_.size()) throw domain_error("ambient: dims/region mismatch");
  for (Site x : region_.sites)
    if (x < 0 || x >= graph_->num_sites()) throw domain_error("ambient: site outside graph");
  for (int d : dims_) {
    if (d < 2) throw domain_error("ambient: site dimension must be >= 2");
    dim_ *= d;
    if (dim_ > dim_cap) throw domain_error("ambient: dimension cap exceeded");
  }
}

int AmbientVolume::site_dim(Site x) const {
  auto it = std::lower_bound(region_.sites.begin(), region_.sites.end(), x);
  if (it == region_.sites.end() || *it != x) throw domain_error("ambient: site not in volume");
  return dims_[static_cast<std::size_t>(it - region_.sites.begin())];
}

long long AmbientVolume::factor_dim(const Region& r) const {
  long long d = 1;
  for (Site x : r.sites) d *= site_dim(x);
  return d;
}

FactorIndexer::FactorIndexer(const AmbientVolume& amb, const Region& r) {
  sites = r.sites;  // Region keeps sites sorted
  dims.reserve(sites.size());
  strides.reserve(sites.size());
  for (Site x : sites) {
    strides.push_back(dim);
    int d = amb.site_dim(x);
    dims.push_back(d);
    dim *= d;
  }
}

int FactorIndexer::position_of(Site x) const {
  auto it = std::lower_bound(sites.begin(), sites.end(), x);
  if (it == sites.end() || *it != x) return -1;
  return static_cast<int>(it - sites.begin());
}

LocalOperator::LocalOperator(AmbientPtr ambient, Region support, Matrix m)
    : ambient_(std::move(ambient)), support_(std::move(support)), mat_(std::move(m)) {
  if (!ambient_) throw domain_error("operator: null ambient");
  if (!ambient_->region().contains(support_))
    throw domain_error("operator: support outside ambient volume");
  long long d = ambient_->factor_dim(support_);
  if (mat_.rows() != d || mat_.cols() != d)
    throw domain_error("operator: matrix shape does not match support factor");
}

LocalOperator LocalOperator::zero(AmbientPtr ambient, Region support) {
  long long d = ambient->factor_dim(support);
  return LocalOperator(std::move(ambient), std::move(support), Matrix::Zero(d, d));
}

LocalOperator LocalOperator::identity(AmbientPtr ambient, Region support) {
  long long d = ambient->factor_dim(support);
  return LocalOperator(std::move(ambient), std::move(support), Matrix::Identity(d, d));
}

bool LocalOperator::is_hermitian(double tol) const {
  return (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() <= tol * (1.0 + mat_.cwiseAbs().maxCoeff());
}

namespace {

void require_same_ambient(const LocalOperator& a, const LocalOperator& b) {
  if (a.ambient().get() != b.ambient().get())
    throw domain_error("operator: ambient volume mismatch");
}

// offsets of each source-factor index inside the target factor
std::vector<long long> sub_offsets(const FactorIndexer& target, const FactorIndexer& source) {
  std::vector<long long> stride_in_target(source.sites.size());
  for (std::size_t i = 0; i < source.sites.size(); ++i) {
    int p = target.position_of(source.sites[i]);
    if (p < 0) throw domain_error("operator: source site missing from target factor");
    stride_in_target[i] = target.strides[static_cast<std::size_t>(p)];
  }
  std::vector<long long> off(static_cast<std::size_t>(source.dim));
  for (long long idx = 0; idx < source.dim; ++idx) {
    long long rem = idx, o = 0;
    for (std::size_t i = 0; i < source.dims.size(); ++i) {
      o += (rem % source.dims[i]) * stride_in_target[i];
      rem /= source.dims[i];
    }
    off[static_cast<std::size_t>(idx)] = o;
  }
  return off;
}

}  // namespace

LocalOperator embed(const LocalOperator& a, const Region& target) {
  if (a.support() == target) return a;
  if (!target.contains(a.support()))
    throw domain_error("embed: target does not contain operator support");
  const auto& amb = *a.ambient();
  FactorIndexer ti(amb, target), si(amb, a.support());
  Region rest = region_difference(target, a.support());
  FactorIndexer ri(amb, rest);
  auto soff = sub_offsets(ti, si);
  auto roff = sub_offsets(ti, ri);
  Matrix out = Matrix::Zero(ti.dim, ti.dim);
  const Matrix& m = a.matrix();
  for (long long t = 0; t < ri.dim; ++t) {
    long long base = roff[static_cast<std::size_t>(t)];
    for (long long j = 0; j < si.dim; ++j) {
      long long cj = base + soff[static_cast<std::size_t>(j)];
      for (long long i = 0; i < si.dim; ++i)
        out(base + soff[static_cast<std::size_t>(i)], cj) = m(i, j);
    }
  }
  return LocalOperator(a.ambient(), target, std::move(out));
}

LocalOperator operator+(const LocalOperator& a, const LocalOperator& b) {
  require_same_ambient(a, b);
  Region u = region_union(a.support(), b.support());
  LocalOperator ea = embed(a, u), eb = embed(b, u);
  return LocalOperator(a.ambient(), u, ea.matrix() + eb.matrix());
}

LocalOperator operator-(const LocalOperator& a, const LocalOperator& b) {
  require_same_ambient(a, b);
  Region u = region_union(a.support(), b.support());
  LocalOperator ea = embed(a, u), eb = embed(b, u);
  return LocalOperator(a.ambient(), u, ea.matrix() - eb.matrix());
}

LocalOperator operator*(const LocalOperator& a, const LocalOperator& b) {
  require_same_ambient(a, b);
  Region u = region_union(a.support(), b.support());
  LocalOperator ea = embed(a, u), eb = embed(b, u);
  return LocalOperator(a.ambient(), u, ea.matrix() * eb.matrix());
}

LocalOperator operator*(cdouble s, const LocalOperator& a) {
  return LocalOperator(a.ambient(), a.support(), s * a.matrix());
}
LocalOperator operator*(double s, const LocalOperator& a) {
  return LocalOperator(a.ambient(), a.support(), s * a.matrix());
}

LocalOperator adjoint(const LocalOperator& a) {
  return LocalOperator(a.ambient(), a.support(), a.matrix().adjoint());
}

LocalOperator commutator(const LocalOperator& a, const LocalOperator& b) {
  require_same_ambient(a, b);
  Region u = region_union(a.support(), b.support());
  LocalOperator ea = embed(a, u), eb = embed(b, u);
  return LocalOperator(a.ambient(), u, ea.matrix() * eb.matrix() - eb.matrix() * ea.matrix());
}

LocalOperator conditional_expectation(const LocalOperator& a, const Region& X) {
  const auto& amb = *a.ambient();
  if (!amb.region().contains(X))
    throw domain_error("conditional_expectation: region outside ambient volume");
  Region keep = region_intersection(X, a.support());
  if (keep == a.support()) return a;
  Region traced = region_difference(a.support(), keep);
  FactorIndexer si(amb, a.support()), ki(amb, keep), tri(amb, traced);
  auto koff = sub_offsets(si, ki);
  auto troff = sub_offsets(si, tri);
  Matrix out = Matrix::Zero(ki.dim, ki.dim);
  const Matrix& m = a.matrix();
  for (long long t = 0; t < tri.dim; ++t) {
    long long base = troff[static_cast<std::size_t>(t)];
    for (long long j = 0; j < ki.dim; ++j) {
      long long cj = base + koff[static_cast<std::size_t>(j)];
      for (long long i = 0; i < ki.dim; ++i)
        out(i, j) += m(base + koff[static_cast<std::size_t>(i)], cj);
    }
  }
  out /= static_cast<double>(tri.dim);
  return LocalOperator(a.ambient(), keep, std::move(out));
}

LocalOperator delta_layer(const LocalOperator& a, Site x, int k, int n) {
  if (n < k) throw domain_error("delta_layer: layer index below base radius");
  const auto& amb = *a.ambient();
  const auto& g = amb.graph();
  Region bn = region_intersection(g.ball(x, n), amb.region());
  if (n == k) return conditional_expectation(a, bn);
  Region bprev = region_intersection(g.ball(x, n - 1), amb.region());
  return conditional_expectation(a, bn) - conditional_expectation(a, bprev);
}

double operator_norm(const LocalOperator& a) {
  if (a.dim() == 0) return 0.0;
  if (a.is_hermitian(1e-13)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Matrix aa = a.matrix().adjoint() * a.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> es(aa, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double frobenius_norm(const LocalOperator& a) { return a.matrix().norm(); }

cdouble trace_of(const LocalOperator& a) { return a.matrix().trace(); }

Region tight_support(const LocalOperator& a, double tol) {
  LocalOperator cur = a;
  double scale = operator_norm(a);
  for (Site y : a.support().sites) {
    Region without = region_difference(cur.support(), Region({y}));
    if (without.empty()) continue;
    LocalOperator pi = conditional_expectation(cur, without);
    if (operator_norm(cur - embed(pi, cur.support())) <= tol * (1.0 + scale)) cur = pi;
  }
  return cur.support();
}

void save_operator(const std::string& path, const LocalOperator& a) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_operator: cannot open " + path);
  f.write("GSOP", 4);
  std::uint32_t ns = static_cast<std::uint32_t>(a.support().size());
  f.write(reinterpret_cast<const char*>(&ns), sizeof ns);
  for (Site x : a.support().sites) {
    std::int64_t s = x;
    f.write(reinterpret_cast<const char*>(&s), sizeof s);
  }
  for (Site x : a.support().sites) {
    std::int32_t d = a.ambient()->site_dim(x);
    f.write(reinterpret_cast<const char*>(&d), sizeof d);
  }
  const Matrix& m = a.matrix();
  for (long long i = 0; i < m.rows(); ++i)
    for (long long j = 0; j < m.cols(); ++j) {
      double re = m(i, j).real(), im = m(i, j).imag();
      f.write(reinterpret_cast<const char*>(&re), sizeof re);
      f.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
  if (!f) throw std::runtime_error("save_operator: write failed for " + path);
}

LocalOperator load_operator(const std::string& path, const AmbientPtr& ambient) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_operator: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "GSOP", 4) != 0)
    throw std::runtime_error("load_operator: bad magic in " + path);
  std::uint32_t ns = 0;
  f.read(reinterpret_cast<char*>(&ns), sizeof ns);
  std::vector<Site> sites(ns);
  for (auto& x : sites) {
    std::int64_t s;
    f.read(reinterpret_cast<char*>(&s), sizeof s);
    x = static_cast<Site>(s);
  }
  long long dim = 1;
  for (std::uint32_t i = 0; i < ns; ++i) {
    std::int32_t d;
    f.read(reinterpret_cast<char*>(&d), sizeof d);
    Site x = sites[i];
    if (ambient->site_dim(x) != d)
      throw std::runtime_error("load_operator: site dimension mismatch in " + path);
    dim *= d;
  }
  Matrix m(dim, dim);
  for (long long i = 0; i < dim; ++i)
    for (long long j = 0; j < dim; ++j) {
      double re, im;
      f.read(reinterpret_cast<char*>(&re), sizeof re);
      f.read(reinterpret_cast<char*>(&im), sizeof im);
      m(i, j) = cdouble(re, im);
    }
  if (!f) throw std::runtime_error("load_operator: truncated file " + path);
  return LocalOperator(ambient, Region(std::move(sites)), std::move(m));
}

Matrix haar_unitary(long long dim, Rng& rng) {
  Matrix g(dim, dim);
  for (long long i = 0; i < dim; ++i)
    for (long long j = 0; j < dim; ++j) g(i, j) = rng.gaussian_c();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  // fix the phase convention so the sample does not depend on QR internals
  Matrix r = q.adjoint() * g;
  for (long long j = 0; j < dim; ++j) {
    cdouble d = r(j, j);
    double ad = std::abs(d);
    if (ad > 0) q.col(j) *= d / ad;
  }
  return q;
}

Matrix random_hermitian(long long dim, Rng& rng) {
  Matrix g(dim, dim);
  for (long long i = 0; i < dim; ++i)
    for (long long j = 0; j < dim; ++j) g(i, j) = rng.gaussian_c();
  Matrix h = 0.5 * (g + g.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  double n = es.eigenvalues().cwiseAbs().maxCoeff();
  if (n > 0) h /= n;
  return h;
}

}  // namespace gapstab
