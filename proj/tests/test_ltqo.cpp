#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gapstab/ltqo.hpp"

using namespace gapstab;

namespace {

FrustrationFreeModel paramagnet(int n) {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(n));
  return model_zoo("paramagnet", g);
}

FrustrationFreeModel aklt_ring(int n) {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::torus({n}));
  return model_zoo("aklt_periodic", g);
}

}  // namespace

TEST_CASE("paramagnet deviations vanish on the whole grid") {
  auto m = paramagnet(9);
  ProbeSpec probes;
  LtqoGrid grid;
  grid.k_max = 1;
  grid.m_max = 3;
  auto est = ltqo_scan(m, grid, probes, 1.0, 0.0, 1.0);
  REQUIRE(!est.rows.empty());
  for (const auto& row : est.rows) CHECK(row.deviation <= 1e-12);
  CHECK(est.moment.passed());
  CHECK(est.monotone_in_m);
  CHECK(est.excluded_points > 0);  // boundary-touching balls are dropped
}

TEST_CASE("aklt ring deviations decay and fit a positive rate") {
  auto m = aklt_ring(6);
  ProbeSpec probes;
  LtqoGrid grid;
  grid.centers = {0};
  grid.k_max = 1;
  grid.m_max = 2;
  auto est = ltqo_scan(m, grid, probes, 1.0, 0.0, 1.0);
  // (k=1, m=1) and (k=1, m=2): strictly positive, decreasing
  double d11 = 0, d12 = 0;
  for (const auto& row : est.rows) {
    if (row.k == 1 && row.m == 1) d11 = row.deviation;
    if (row.k == 1 && row.m == 2) d12 = row.deviation;
  }
  CHECK(d11 > 1e-4);
  CHECK(d12 > 0);
  CHECK(d12 < d11);
  CHECK(est.monotone_in_m);
  CHECK(est.fit_ok);
  CHECK(est.fit_q > 0);
}

TEST_CASE("deviation requires a unique ambient kernel") {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(4));
  auto open4 = model_zoo("aklt_open", g);  // kernel dimension 4
  ProbeSpec probes;
  CHECK_THROWS_AS(ltqo_deviation(open4, 1, 0, 1, probes), domain_error);
  // a declared reference vector lifts the ambiguity
  Vector ref = open4.ground_space(open4.ambient()->region()).Q.col(0);
  CHECK_NOTHROW(ltqo_deviation(open4, 1, 0, 1, probes, &ref));
}

TEST_CASE("synthetic envelope fit recovers the rate") {
  std::vector<double> raw;
  for (int r = 0; r <= 6; ++r) raw.push_back(std::exp(-1.0 * r));
  auto fit = fit_envelope(raw);
  CHECK(fit.ok);
  CHECK_FALSE(fit.adjusted);
  CHECK(fit.q == doctest::Approx(1.0).epsilon(0.05));
  CHECK(fit.c == doctest::Approx(1.0).epsilon(0.05));

  // non-monotone raw tables are flagged and enveloped, never rejected
  std::vector<double> bumpy{1.0, 0.1, 0.3, 0.05};
  auto fit2 = fit_envelope(bumpy);
  CHECK(fit2.adjusted);
  CHECK(fit2.envelope[1] == doctest::Approx(0.3));
  for (std::size_t r = 1; r < fit2.envelope.size(); ++r)
    CHECK(fit2.envelope[r] <= fit2.envelope[r - 1] + 1e-15);
}

TEST_CASE("all-zero tables pass the moment check with zero sum") {
  auto fit = fit_envelope({0.0, 0.0, 0.0});
  CHECK_FALSE(fit.ok);
  auto check = ltqo_moment_check(DecayFunction::table({}), 1.0, 0.0, 1.0);
  CHECK(check.passed());
  CHECK(check.total_hi == 0.0);
}

TEST_CASE("indistinguishability bound holds with the measured envelope") {
  auto pm = paramagnet(9);
  ProbeSpec probes;
  LtqoGrid grid;
  grid.k_max = 1;
  grid.m_max = 3;
  auto est_pm = ltqo_scan(pm, grid, probes, 1.0, 0.0, 1.0);
  // product model: both norms coincide, slack is non-positive
  CHECK(indistinguishability_check(pm, 4, 1, 1, 3, est_pm, probes) <= 1e-10);

  auto m = aklt_ring(6);
  LtqoGrid agrid;
  agrid.centers = {0};
  agrid.k_max = 1;
  agrid.m_max = 2;
  auto est = ltqo_scan(m, agrid, probes, 1.0, 0.0, 1.0);
  double slack = indistinguishability_check(m, 0, 1, 1, 2, est, probes);
  CHECK(slack <= 1e-10);
}
