#ifndef GAPSTAB_LATTICE_HPP
#define GAPSTAB_LATTICE_HPP

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "gapstab/common.hpp"

namespace gapstab {

using Site = int;

/// A finite set of sites, kept sorted and unique. All region algebra stays
/// inside the parent graph's site range.
struct Region {
  std::vector<Site> sites;

  Region() = default;
  explicit Region(std::vector<Site> s);

  std::size_t size() const { return sites.size(); }
  bool empty() const { return sites.empty(); }
  bool contains(Site x) const;
  bool contains(const Region& other) const;
  bool operator==(const Region& o) const { return sites == o.sites; }
};

Region region_union(const Region& a, const Region& b);
Region region_intersection(const Region& a, const Region& b);
Region region_difference(const Region& a, const Region& b);

/// Finite chunk of Z^nu with the graph (l1) metric, open or periodic per
/// axis. Regularity data |b_x(n)| <= kappa n^nu is computed tight on the
/// realized balls; kappa may be overridden upward.
class LatticeGraph {
 public:
  static LatticeGraph chain(int length);
  static LatticeGraph box(std::vector<int> dims);
  static LatticeGraph torus(std::vector<int> dims);
  static LatticeGraph zv(std::vector<int> dims, std::vector<bool> periodic);

  int num_sites() const { return num_sites_; }
  int nu() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<bool>& periodic() const { return periodic_; }

  int distance(Site x, Site y) const;
  int linf_distance(Site x, Site y) const;
  int distance(const Region& a, const Region& b) const;
  int diameter() const;

  std::vector<int> coords(Site x) const;
  Site site_at(const std::vector<int>& c) const;
  Region all_sites() const;

  Region ball(Site x, int n) const;
  Region inflate(const Region& r, int n) const;
  Region linf_ball(Site x, int n) const;

  /// Smallest n with ball(x, n) = all sites.
  int covering_radius(Site x) const;

  double kappa() const;
  void override_kappa(double k);

  struct MetricCheck {
    bool identity = false, symmetric = false, triangle = false;
    bool pass() const { return identity && symmetric && triangle; }
  };
  MetricCheck certify_metric() const;

  /// max over sites and 1 <= n <= diameter of |b_x(n)| / n^nu, and the
  /// per-n table used by ball-growth reports.
  std::vector<double> regularity_table(int n_max) const;

 private:
  LatticeGraph(std::vector<int> dims, std::vector<bool> periodic);
  int axis_distance(int a, int b, int axis) const;

  std::vector<int> dims_;
  std::vector<bool> periodic_;
  std::vector<int> strides_;
  int num_sites_ = 0;
  mutable std::optional<double> kappa_;
};

/// Partition of the sites at each scale n together with the region family
/// Lambda(x,n); same-class regions must be pairwise disjoint and anchored
/// by b_x(n) <= Lambda(x,n).
struct SeparatingPartitionFamily {
  struct Scale {
    int n = 0;
    std::vector<std::vector<Site>> classes;
  };
  std::vector<Scale> scales;  // indexed by n = 0..n_max
  double c = 0.0;             // growth constants: |I_n| <= c n^zeta for n >= 1
  double zeta = 0.0;
  std::function<Region(Site, int)> region_of;  // Lambda(x,n)

  int n_max() const { return scales.empty() ? -1 : scales.back().n; }
};

/// Largest scale for which the residue-class construction is valid on this
/// graph (every axis length >= 2n+1; periodic axes additionally need
/// (2n+1) | L so classes do not wrap into each other).
int max_partition_scale(const LatticeGraph& g);

/// Residue-class partition of a Z^nu box or torus: class of x at scale n is
/// the tuple (x_j mod 2n+1); Lambda(x,n) is the linf ball of radius n.
SeparatingPartitionFamily separating_partition_zv(const LatticeGraph& g, int n_max);

/// Residue classes up to the largest valid scale, then singleton classes
/// (|I_n| = |Gamma|, trivially separated) for the remaining scales. The
/// growth bound for the singleton scales still has to pass verification.
SeparatingPartitionFamily extended_partition_family(const LatticeGraph& g, int n_max);

struct SeparationCertificate {
  struct Row {
    int n = 0;
    std::size_t class_count = 0;
    bool is_partition = false;
    bool growth_ok = false;
    bool separated = false;
    bool anchored = false;
    bool pass() const { return is_partition && growth_ok && separated && anchored; }
  };
  std::vector<Row> rows;
  bool overall = true;      // vacuous pass when no scales
  double fitted_c = 0.0;    // tightest c for the declared zeta over n >= 1
};

SeparationCertificate verify_separation(const SeparatingPartitionFamily& fam,
                                        const LatticeGraph& g);

}  // namespace gapstab

#endif
