#include "gapstab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gapstab {

Region::Region(std::vector<Site> s) : sites(std::move(s)) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
}

bool Region::contains(Site x) const {
  return std::binary_search(sites.begin(), sites.end(), x);
}

bool Region::contains(const Region& other) const {
  return std::includes(sites.begin(), sites.end(), other.sites.begin(), other.sites.end());
}

Region region_union(const Region& a, const Region& b) {
  std::vector<Site> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.sites.begin(), a.sites.end(), b.sites.begin(), b.sites.end(),
                 std::back_inserter(out));
  Region r;
  r.sites = std::move(out);
  return r;
}

Region region_intersection(const Region& a, const Region& b) {
  std::vector<Site> out;
  std::set_intersection(a.sites.begin(), a.sites.end(), b.sites.begin(), b.sites.end(),
                        std::back_inserter(out));
  Region r;
  r.sites = std::move(out);
  return r;
}

Region region_difference(const Region& a, const Region& b) {
  std::vector<Site> out;
  std::set_difference(a.sites.begin(), a.sites.end(), b.sites.begin(), b.sites.end(),
                      std::back_inserter(out));
  Region r;
  r.sites = std::move(out);
  return r;
}

LatticeGraph::LatticeGraph(std::vector<int> dims, std::vector<bool> periodic)
    : dims_(std::move(dims)), periodic_(std::move(periodic)) {
  if (dims_.empty()) throw domain_error("lattice: empty dimension list");
  if (dims_.size() != periodic_.size())
    throw domain_error("lattice: dims/periodic size mismatch");
  num_sites_ = 1;
  strides_.resize(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i] < 1) throw domain_error("lattice: axis length must be >= 1");
    strides_[i] = num_sites_;
    num_sites_ *= dims_[i];
  }
}

LatticeGraph LatticeGraph::chain(int length) {
  return LatticeGraph({length}, {false});
}
LatticeGraph LatticeGraph::box(std::vector<int> dims) {
  std::size_t n = dims.size();
  return LatticeGraph(std::move(dims), std::vector<bool>(n, false));
}
LatticeGraph LatticeGraph::torus(std::vector<int> dims) {
  std::size_t n = dims.size();
  return LatticeGraph(std::move(dims), std::vector<bool>(n, true));
}
LatticeGraph LatticeGraph::zv(std::vector<int> dims, std::vector<bool> periodic) {
  return LatticeGraph(std::move(dims), std::move(periodic));
}

std::vector<int> LatticeGraph::coords(Site x) const {
  if (x < 0 || x >= num_sites_) throw domain_error("lattice: unknown site");
  std::vector<int> c(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    c[i] = (x / strides_[i]) % dims_[i];
  }
  return c;
}

Site LatticeGraph::site_at(const std::vector<int>& c) const {
  if (c.size() != dims_.size()) throw domain_error("lattice: bad coordinate arity");
  int x = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    int ci = c[i];
    if (periodic_[i]) {
      ci %= dims_[i];
      if (ci < 0) ci += dims_[i];
    } else if (ci < 0 || ci >= dims_[i]) {
      throw domain_error("lattice: coordinate out of range");
    }
    x += ci * strides_[i];
  }
  return x;
}

int LatticeGraph::axis_distance(int a, int b, int axis) const {
  int d = std::abs(a - b);
  if (periodic_[axis]) d = std::min(d, dims_[axis] - d);
  return d;
}

int LatticeGraph::distance(Site x, Site y) const {
  auto cx = coords(x), cy = coords(y);
  int d = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) d += axis_distance(cx[i], cy[i], static_cast<int>(i));
  return d;
}

int LatticeGraph::linf_distance(Site x, Site y) const {
  auto cx = coords(x), cy = coords(y);
  int d = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i)
    d = std::max(d, axis_distance(cx[i], cy[i], static_cast<int>(i)));
  return d;
}

int LatticeGraph::distance(const Region& a, const Region& b) const {
  if (a.empty() || b.empty()) throw domain_error("lattice: distance of empty region");
  int best = diameter();
  for (Site x : a.sites)
    for (Site y : b.sites) best = std::min(best, distance(x, y));
  return best;
}

int LatticeGraph::diameter() const {
  int d = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i)
    d += periodic_[i] ? dims_[i] / 2 : dims_[i] - 1;
  return d;
}

Region LatticeGraph::all_sites() const {
  std::vector<Site> s(num_sites_);
  for (int i = 0; i < num_sites_; ++i) s[i] = i;
  Region r;
  r.sites = std::move(s);
  return r;
}

Region LatticeGraph::ball(Site x, int n) const {
  if (x < 0 || x >= num_sites_) throw domain_error("lattice: unknown site");
  if (n < 0) throw domain_error("lattice: negative radius");
  std::vector<Site> out;
  for (Site y = 0; y < num_sites_; ++y)
    if (distance(x, y) <= n) out.push_back(y);
  Region r;
  r.sites = std::move(out);
  return r;
}

Region LatticeGraph::linf_ball(Site x, int n) const {
  if (x < 0 || x >= num_sites_) throw domain_error("lattice: unknown site");
  if (n < 0) throw domain_error("lattice: negative radius");
  std::vector<Site> out;
  for (Site y = 0; y < num_sites_; ++y)
    if (linf_distance(x, y) <= n) out.push_back(y);
  Region r;
  r.sites = std::move(out);
  return r;
}

Region LatticeGraph::inflate(const Region& r, int n) const {
  if (r.empty()) throw domain_error("lattice: inflate of empty region");
  Region out;
  for (Site x : r.sites) out = region_union(out, ball(x, n));
  return out;
}

int LatticeGraph::covering_radius(Site x) const {
  int m = 0;
  for (Site y = 0; y < num_sites_; ++y) m = std::max(m, distance(x, y));
  return m;
}

double LatticeGraph::kappa() const {
  if (!kappa_) {
    double k = 0.0;
    int dmax = std::max(1, diameter());
    for (Site x = 0; x < num_sites_; ++x) {
      std::vector<int> counts(dmax + 1, 0);
      for (Site y = 0; y < num_sites_; ++y) {
        int d = distance(x, y);
        if (d <= dmax) counts[d]++;
      }
      int cum = counts[0];
      for (int n = 1; n <= dmax; ++n) {
        cum += counts[n];
        k = std::max(k, cum / std::pow(static_cast<double>(n), nu()));
      }
    }
    kappa_ = k;
  }
  return *kappa_;
}

void LatticeGraph::override_kappa(double k) {
  if (k < kappa()) throw domain_error("lattice: kappa override below tight value");
  kappa_ = k;
}

LatticeGraph::MetricCheck LatticeGraph::certify_metric() const {
  MetricCheck m;
  m.identity = m.symmetric = m.triangle = true;
  const int N = num_sites_;
  std::vector<std::vector<int>> d(N, std::vector<int>(N));
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y) d[x][y] = distance(x, y);
  for (int x = 0; x < N && m.identity; ++x)
    for (int y = 0; y < N; ++y)
      if ((d[x][y] == 0) != (x == y)) {
        m.identity = false;
        break;
      }
  for (int x = 0; x < N && m.symmetric; ++x)
    for (int y = x + 1; y < N; ++y)
      if (d[x][y] != d[y][x]) {
        m.symmetric = false;
        break;
      }
  for (int x = 0; x < N && m.triangle; ++x)
    for (int z = 0; z < N && m.triangle; ++z)
      for (int y = 0; y < N; ++y)
        if (d[x][y] > d[x][z] + d[z][y]) {
          m.triangle = false;
          break;
        }
  return m;
}

std::vector<double> LatticeGraph::regularity_table(int n_max) const {
  std::vector<double> out;
  for (int n = 1; n <= n_max; ++n) {
    std::size_t worst = 0;
    for (Site x = 0; x < num_sites_; ++x) worst = std::max(worst, ball(x, n).size());
    out.push_back(static_cast<double>(worst) / std::pow(static_cast<double>(n), nu()));
  }
  return out;
}

int max_partition_scale(const LatticeGraph& g) {
  int best = -1;
  for (int n = 0;; ++n) {
    bool ok = true;
    for (std::size_t i = 0; i < g.dims().size(); ++i) {
      int L = g.dims()[i], w = 2 * n + 1;
      if (L < w || (g.periodic()[i] && L % w != 0)) ok = false;
    }
    if (!ok) break;
    best = n;
  }
  return best;
}

SeparatingPartitionFamily separating_partition_zv(const LatticeGraph& g, int n_max) {
  if (n_max < 0) throw domain_error("partition: negative scale");
  if (n_max > max_partition_scale(g))
    throw domain_error("partition: scale too large for this lattice");
  SeparatingPartitionFamily fam;
  const int nu = g.nu();
  for (int n = 0; n <= n_max; ++n) {
    SeparatingPartitionFamily::Scale sc;
    sc.n = n;
    const int w = 2 * n + 1;
    // residue tuple -> class index
    std::vector<int> key_of(g.num_sites());
    int nkeys = 1;
    for (int i = 0; i < nu; ++i) nkeys *= w;
    std::vector<std::vector<Site>> classes(nkeys);
    for (Site x = 0; x < g.num_sites(); ++x) {
      auto c = g.coords(x);
      int key = 0;
      for (int i = 0; i < nu; ++i) key = key * w + (c[i] % w);
      classes[key].push_back(x);
    }
    for (auto& cl : classes)
      if (!cl.empty()) sc.classes.push_back(std::move(cl));
    fam.scales.push_back(std::move(sc));
  }
  fam.zeta = nu;
  double c = 0.0;
  for (const auto& sc : fam.scales)
    if (sc.n >= 1)
      c = std::max(c, static_cast<double>(sc.classes.size()) /
                          std::pow(static_cast<double>(sc.n), fam.zeta));
  if (c == 0.0) c = 1.0;
  fam.c = c;
  fam.region_of = [&g](Site x, int n) { return g.linf_ball(x, n); };
  return fam;
}

SeparatingPartitionFamily extended_partition_family(const LatticeGraph& g, int n_max) {
  int residue_max = std::min(n_max, max_partition_scale(g));
  SeparatingPartitionFamily fam = separating_partition_zv(g, std::max(residue_max, 0));
  for (int n = residue_max + 1; n <= n_max; ++n) {
    SeparatingPartitionFamily::Scale sc;
    sc.n = n;
    for (Site x = 0; x < g.num_sites(); ++x) sc.classes.push_back({x});
    fam.scales.push_back(std::move(sc));
  }
  double c = 0.0;
  for (const auto& sc : fam.scales)
    if (sc.n >= 1)
      c = std::max(c, static_cast<double>(sc.classes.size()) /
                          std::pow(static_cast<double>(sc.n), fam.zeta));
  fam.c = std::max(c, 1.0);
  return fam;
}

SeparationCertificate verify_separation(const SeparatingPartitionFamily& fam,
                                        const LatticeGraph& g) {
  SeparationCertificate cert;
  double fitted_c = 0.0;
  for (const auto& sc : fam.scales) {
    SeparationCertificate::Row row;
    row.n = sc.n;
    row.class_count = sc.classes.size();

    std::vector<char> seen(g.num_sites(), 0);
    std::size_t total = 0;
    bool disjoint = true;
    for (const auto& cl : sc.classes)
      for (Site x : cl) {
        if (seen[x]) disjoint = false;
        seen[x] = 1;
        ++total;
      }
    row.is_partition = disjoint && total == static_cast<std::size_t>(g.num_sites());

    row.growth_ok =
        sc.n == 0 ||
        static_cast<double>(sc.classes.size()) <=
            fam.c * std::pow(static_cast<double>(sc.n), fam.zeta) + 1e-12;
    if (sc.n >= 1)
      fitted_c = std::max(fitted_c, static_cast<double>(sc.classes.size()) /
                                        std::pow(static_cast<double>(sc.n), fam.zeta));

    row.separated = true;
    row.anchored = true;
    for (const auto& cl : sc.classes) {
      std::vector<Region> regions;
      regions.reserve(cl.size());
      for (Site x : cl) {
        Region lam = fam.region_of(x, sc.n);
        if (!lam.contains(g.ball(x, sc.n))) row.anchored = false;
        regions.push_back(std::move(lam));
      }
      for (std::size_t i = 0; i < regions.size() && row.separated; ++i)
        for (std::size_t j = i + 1; j < regions.size(); ++j)
          if (!region_intersection(regions[i], regions[j]).empty()) {
            row.separated = false;
            break;
          }
      if (!row.separated && !row.anchored) break;
    }

    cert.overall = cert.overall && row.pass();
    cert.rows.push_back(row);
  }
  cert.fitted_c = fitted_c;
  return cert;
}

}  // namespace gapstab
