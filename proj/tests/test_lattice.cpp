#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gapstab/lattice.hpp"

using namespace gapstab;

TEST_CASE("balls on a chain") {
  auto g = LatticeGraph::chain(21);
  CHECK(g.ball(10, 0).sites == std::vector<Site>{10});
  CHECK(g.ball(10, 3).size() == 7);  // 2n+1 interior
  CHECK(g.ball(0, 3).size() == 4);   // clipped at the boundary
  CHECK_THROWS_AS(g.ball(99, 1), domain_error);
}

TEST_CASE("balls on a 5x5 torus") {
  auto g = LatticeGraph::torus({5, 5});
  for (Site x = 0; x < g.num_sites(); ++x) CHECK(g.ball(x, 1).size() == 5);
}

TEST_CASE("metric certification") {
  for (auto g : {LatticeGraph::chain(9), LatticeGraph::torus({4, 4}),
                 LatticeGraph::zv({5, 3}, {true, false})}) {
    auto m = g.certify_metric();
    CHECK(m.pass());
  }
}

TEST_CASE("nu-regularity with tight kappa") {
  auto g = LatticeGraph::torus({9, 9});
  double k = g.kappa();
  for (Site x = 0; x < g.num_sites(); ++x)
    for (int n = 1; n <= g.diameter(); ++n)
      CHECK(double(g.ball(x, n).size()) <= k * std::pow(double(n), 2) + 1e-9);
  CHECK_THROWS_AS(g.override_kappa(k / 2), domain_error);
}

TEST_CASE("inflate") {
  auto g = LatticeGraph::chain(21);
  Region lam({5});
  CHECK(g.inflate(lam, 0) == lam);
  CHECK(g.inflate(lam, 2) == g.ball(5, 2));
  Region two({3, 13});
  CHECK(g.inflate(two, 3).size() == 14);  // two disjoint balls
  // composition on a geodesic graph
  Region a({8, 9});
  CHECK(g.inflate(g.inflate(a, 2), 3) == g.inflate(a, 5));
  CHECK_THROWS_AS(g.inflate(Region{}, 1), domain_error);
}

TEST_CASE("residue partition on a chain") {
  auto g = LatticeGraph::chain(13);
  auto fam = separating_partition_zv(g, 3);
  CHECK(fam.scales[1].classes.size() == 3);
  CHECK(fam.scales[0].classes.size() == 1);  // scale zero: singletons separate
  CHECK(fam.zeta == 1);
  CHECK(fam.c == doctest::Approx(3.0));
  auto cert = verify_separation(fam, g);
  CHECK(cert.overall);
  for (auto& row : cert.rows) CHECK(row.pass());
}

TEST_CASE("residue partition on a 9x9 torus") {
  auto g = LatticeGraph::torus({9, 9});
  auto fam = separating_partition_zv(g, 1);
  CHECK(fam.scales[1].classes.size() == 9);
  CHECK(verify_separation(fam, g).overall);
}

TEST_CASE("scale too large") {
  auto g = LatticeGraph::chain(5);
  CHECK_THROWS_AS(separating_partition_zv(g, 3), domain_error);
  // periodic axis must be divisible by 2n+1
  auto ring = LatticeGraph::torus({10});
  CHECK(max_partition_scale(ring) == 0);
}

TEST_CASE("oversized inflation regions fail separation") {
  auto g = LatticeGraph::chain(13);
  auto fam = separating_partition_zv(g, 2);
  fam.region_of = [&g](Site x, int n) { return g.linf_ball(x, 2 * n); };
  auto cert = verify_separation(fam, g);
  CHECK_FALSE(cert.overall);
  bool sep_failed = false;
  for (auto& row : cert.rows)
    if (!row.separated) sep_failed = true;
  CHECK(sep_failed);
}

TEST_CASE("empty family passes vacuously") {
  auto g = LatticeGraph::chain(5);
  SeparatingPartitionFamily fam;
  CHECK(verify_separation(fam, g).overall);
}
