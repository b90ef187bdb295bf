#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gapstab/spectral.hpp"

using namespace gapstab;

namespace {

FrustrationFreeModel paramagnet(int n) {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(n));
  return model_zoo("paramagnet", g);
}

}  // namespace

TEST_CASE("dense diagonalization basics") {
  auto m = paramagnet(2);
  auto amb = m.ambient();
  auto zero = LocalOperator::zero(amb, amb->region());
  auto s0 = diagonalize(zero);
  CHECK(s0.values.cwiseAbs().maxCoeff() == 0.0);

  LocalOperator sz(amb, Region({0}), site_operator("sz", 2));
  auto s1 = diagonalize(sz);
  CHECK(s1.values[0] == doctest::Approx(-1.0));
  CHECK(s1.values[1] == doctest::Approx(1.0));

  Matrix nh = Matrix::Zero(2, 2);
  nh(0, 1) = 1;
  CHECK_THROWS_AS(diagonalize(LocalOperator(amb, Region({0}), nh)), domain_error);
}

TEST_CASE("lanczos agrees with dense on the paramagnet") {
  auto m = paramagnet(10);
  Region all = m.ambient()->region();
  auto h = m.assemble_hamiltonian(all);
  auto dense = diagonalize(h, 4096);

  LanczosOptions lo;
  lo.norm_scale = m.hamiltonian_norm_bound(all);
  auto map = m.hamiltonian_map(all);
  auto res = lanczos_lowest(map, 4, lo);
  REQUIRE(res.values.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(res.values[i] - dense.values[i]) < 1e-9 * (1 + dense.norm_bound));
    CHECK(res.residuals[i] < 1e-9 * (1 + lo.norm_scale));
  }
}

TEST_CASE("lanczos resolves degenerate kernels") {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(6));
  auto m = model_zoo("aklt_open", g);
  Region all = m.ambient()->region();
  auto map = m.hamiltonian_map(all);
  LanczosOptions lo;
  lo.norm_scale = m.hamiltonian_norm_bound(all);
  auto res = lanczos_lowest(map, 5, lo);  // kernel dim 4 plus the gap state
  REQUIRE(res.values.size() == 5);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(res.values[i]) < 1e-9);
  CHECK(res.values[4] > 1e-3);
  // orthonormal set
  Matrix gmat = res.vectors.adjoint() * res.vectors;
  CHECK((gmat - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gap report") {
  auto m = paramagnet(5);
  auto spec = diagonalize(m.assemble_hamiltonian(m.ambient()->region()));
  auto rep = gap_above_ground(spec, m.kernel_tol(m.ambient()->region()));
  CHECK(rep.ground_energy == doctest::Approx(0.0));
  CHECK(rep.multiplicity == 1);
  CHECK(rep.gap == doctest::Approx(1.0));
  CHECK_FALSE(rep.ambiguous);

  // zero operator: one cluster, no gap
  auto z = diagonalize(LocalOperator::zero(m.ambient(), Region({0, 1})));
  auto rz = gap_above_ground(z, 1e-10);
  CHECK(rz.multiplicity == 4);
  CHECK_FALSE(rz.gap_defined);

  // shift invariance of multiplicity and gap
  auto h = m.assemble_hamiltonian(m.ambient()->region());
  auto shifted = h + 0.7 * LocalOperator::identity(m.ambient(), h.support());
  auto rs = gap_above_ground(diagonalize(shifted), m.kernel_tol(m.ambient()->region()));
  CHECK(rs.ground_energy == doctest::Approx(0.7));
  CHECK(rs.multiplicity == rep.multiplicity);
  CHECK(rs.gap == doctest::Approx(rep.gap));
}

TEST_CASE("kernel dimensions of zoo models") {
  auto pm = paramagnet(6);
  auto spm = diagonalize(pm.assemble_hamiltonian(pm.ambient()->region()));
  CHECK(kernel_dimension(spm, pm.kernel_tol(pm.ambient()->region())) == 1);

  auto g5 = std::make_shared<LatticeGraph>(LatticeGraph::chain(5));
  auto open5 = model_zoo("aklt_open", g5);
  auto s5 = diagonalize(open5.assemble_hamiltonian(open5.ambient()->region()));
  CHECK(kernel_dimension(s5, open5.kernel_tol(open5.ambient()->region())) == 4);

  auto g6 = std::make_shared<LatticeGraph>(LatticeGraph::torus({6}));
  auto ring6 = model_zoo("aklt_periodic", g6);
  auto s6 = diagonalize(ring6.assemble_hamiltonian(ring6.ambient()->region()));
  CHECK(kernel_dimension(s6, ring6.kernel_tol(ring6.ambient()->region())) == 1);

  // constructed spectrum: identity minus a rank-3 projector has kernel dim 3
  auto amb = pm.ambient();
  Matrix proj = Matrix::Zero(8, 8);
  for (int i = 0; i < 3; ++i) proj(i, i) = 1;
  Matrix hm = Matrix::Identity(8, 8) - proj;
  auto sp = diagonalize(LocalOperator(amb, Region({0, 1, 2}), hm));
  CHECK(kernel_dimension(sp, 1e-10) == 3);
}

TEST_CASE("insufficient iterative data is an error") {
  auto g5 = std::make_shared<LatticeGraph>(LatticeGraph::chain(5));
  auto open5 = model_zoo("aklt_open", g5);
  Region all = open5.ambient()->region();
  auto h = open5.assemble_hamiltonian(all);
  LanczosOptions lo;
  lo.norm_scale = open5.hamiltonian_norm_bound(all);
  auto spec = diagonalize_lowest(h, 3, lo);  // kernel dim is 4: not enough
  CHECK_THROWS_AS(gap_above_ground(spec, open5.kernel_tol(all)), domain_error);
}

TEST_CASE("local gaps of the paramagnet are scale free") {
  auto m = paramagnet(9);
  auto fam = separating_partition_zv(m.ambient()->graph(), 3);
  auto rep = certify_local_gaps(m, fam, 1.0, 0.0);
  CHECK(rep.overall);
  for (auto& row : rep.rows) CHECK(row.gamma_n == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.fitted_alpha == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.fitted_gamma1 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("aklt local gaps decrease but stay positive") {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(13));
  auto m = model_zoo("aklt_open", g);
  auto fam = separating_partition_zv(*g, 3);
  auto rep = certify_local_gaps(m, fam);
  REQUIRE(rep.rows.size() >= 3);
  for (auto& row : rep.rows) CHECK(row.gamma_n > 0.1);
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    CHECK(rep.rows[i].gamma_n <= rep.rows[i - 1].gamma_n + 1e-9);
  CHECK(rep.fitted_gamma1 > 0);
}

TEST_CASE("constructed local gap failure is caught") {
  // one qubit site with h = diag(0, gamma/2) fails the gamma threshold
  auto gph = std::make_shared<LatticeGraph>(LatticeGraph::chain(3));
  auto amb = std::make_shared<AmbientVolume>(gph, gph->all_sites(), 2);
  Matrix h = Matrix::Zero(2, 2);
  h(1, 1) = 0.4;
  std::vector<std::pair<Site, LocalOperator>> terms;
  for (Site x = 0; x < 3; ++x) terms.emplace_back(x, LocalOperator(amb, Region({x}), h));
  FrustrationFreeModel m(amb, std::move(terms), 0, "weak", true);
  auto fam = separating_partition_zv(*gph, 1);
  auto rep = certify_local_gaps(m, fam, 1.0, 0.0);
  CHECK_FALSE(rep.overall);
}
