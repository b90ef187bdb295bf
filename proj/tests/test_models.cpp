#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "gapstab/spectral.hpp"

using namespace gapstab;

namespace {

FrustrationFreeModel paramagnet(int n) {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(n));
  return model_zoo("paramagnet", g);
}

FrustrationFreeModel aklt(int n, bool periodic) {
  auto g = std::make_shared<LatticeGraph>(
      periodic ? LatticeGraph::torus({n}) : LatticeGraph::chain(n));
  return model_zoo(periodic ? "aklt_periodic" : "aklt_open", g);
}

std::map<double, int> spectrum_multiplicities(const LocalOperator& h, double tol = 1e-9) {
  RealVector vals;
  Matrix vecs;
  hermitian_eig(h.matrix(), vals, vecs);
  std::map<double, int> out;
  for (long long i = 0; i < vals.size(); ++i) {
    bool merged = false;
    for (auto& [v, c] : out)
      if (std::abs(v - vals[i]) < tol) {
        c++;
        merged = true;
        break;
      }
    if (!merged) out[vals[i]] = 1;
  }
  return out;
}

}  // namespace

TEST_CASE("paramagnet hamiltonian spectrum") {
  auto m = paramagnet(3);
  auto h = m.assemble_hamiltonian(m.ambient()->region());
  auto mult = spectrum_multiplicities(h);
  std::vector<int> expect{1, 3, 3, 1};
  int k = 0;
  for (auto& [v, c] : mult) {
    CHECK(v == doctest::Approx(double(k)).epsilon(1e-12));
    CHECK(c == expect[k]);
    ++k;
  }
}

TEST_CASE("empty volume gives the zero hamiltonian") {
  auto m = aklt(4, false);
  auto h = m.assemble_hamiltonian(Region({0}));  // no bond fits one site
  CHECK(frobenius_norm(h) == 0.0);
  CHECK(m.ground_space(Region({0})).full_space);
  CHECK(operator_norm(m.ground_projector(Region({0})) -
                      LocalOperator::identity(m.ambient(), Region({0}))) == 0.0);
}

TEST_CASE("aklt two-site spectrum") {
  auto m = aklt(2, false);
  auto h = m.assemble_hamiltonian(Region({0, 1}));
  auto mult = spectrum_multiplicities(h);
  REQUIRE(mult.size() == 2);
  auto it = mult.begin();
  CHECK(it->first == doctest::Approx(0.0));
  CHECK(it->second == 4);
  ++it;
  CHECK(it->first == doctest::Approx(1.0));
  CHECK(it->second == 5);
}

TEST_CASE("ground projectors and kernel dimensions") {
  auto pm = paramagnet(4);
  auto gs = pm.ground_space(pm.ambient()->region());
  CHECK(gs.rank() == 1);  // unique all-up product state

  auto open4 = aklt(4, false);
  CHECK(open4.ground_space(open4.ambient()->region()).rank() == 4);

  auto ring4 = aklt(4, true);
  CHECK(ring4.ground_space(ring4.ambient()->region()).rank() == 1);

  auto p = open4.ground_projector(open4.ambient()->region());
  CHECK(operator_norm(p * p - p) < 1e-10);
  CHECK(p.is_hermitian(1e-12));
}

TEST_CASE("nesting across all interval pairs") {
  auto m = aklt(5, false);
  std::vector<Region> intervals;
  for (int a = 0; a < 5; ++a)
    for (int b = a; b < 5; ++b) {
      std::vector<Site> sites;
      for (int s = a; s <= b; ++s) sites.push_back(s);
      intervals.push_back(Region(sites));
    }
  for (const auto& outer : intervals)
    for (const auto& inner : intervals)
      if (outer.contains(inner)) CHECK(m.nesting_residual(outer, inner) < 1e-10);
}

TEST_CASE("global ground states are local ground states") {
  auto m = aklt(5, false);
  const auto& gs = m.ground_space(m.ambient()->region());
  for (const auto& [x, h] : m.terms()) {
    auto hp = embed(h, m.ambient()->region());
    Matrix overlap = gs.Q.adjoint() * (hp.matrix() * gs.Q);
    CHECK(overlap.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("frustration-freeness certification") {
  auto m = aklt(5, false);
  std::vector<Region> vols;
  for (int len = 2; len <= 5; ++len) {
    std::vector<Site> sites;
    for (int s = 0; s < len; ++s) sites.push_back(s);
    vols.push_back(Region(sites));
  }
  auto cert = m.certify_frustration_free(vols);
  CHECK(cert.overall);
  CHECK(cert.terms_psd);
  for (auto& row : cert.rows) CHECK(std::abs(row.min_spec) <= 1e-10);

  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(2));
  auto amb = std::make_shared<AmbientVolume>(g, g->all_sites(), 2);
  std::vector<std::pair<Site, LocalOperator>> bad;
  bad.emplace_back(0, LocalOperator(amb, Region({0}), site_operator("sz", 2)));
  FrustrationFreeModel notff(amb, std::move(bad), 0, "bad", false);
  auto cert2 = notff.certify_frustration_free({});
  CHECK_FALSE(cert2.terms_psd);
}

TEST_CASE("wrapped arcs reuse translated kernels") {
  auto m = aklt(6, true);
  Region wrapped({4, 5, 0, 1});  // translate of {0,1,2,3} across the seam
  Region straight({0, 1, 2, 3});
  const auto& a = m.ground_space(wrapped);
  const auto& b = m.ground_space(straight);
  CHECK(a.rank() == b.rank());
  CHECK(a.gap_above == doctest::Approx(b.gap_above).epsilon(1e-12));
  auto h = m.assemble_hamiltonian(wrapped);
  CHECK((h.matrix() * a.Q).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("anchored interaction validation") {
  auto m = paramagnet(5);
  auto amb = m.ambient();
  AnchoredInteraction phi(0);
  phi.add_term(2, 0, LocalOperator(amb, Region({2}), site_operator("sz", 2)));
  phi.set_decay({1.0, 1.0, 1.0});
  CHECK(phi.verify().hermitian);
  CHECK(phi.verify().decay_ok);
  Matrix two = Matrix::Identity(4, 4);
  CHECK_THROWS_AS(phi.add_term(0, 0, LocalOperator(amb, Region({0, 1}), two)), domain_error);
  Matrix nh = Matrix::Zero(2, 2);
  nh(0, 1) = 1;
  CHECK_THROWS_AS(phi.add_term(1, 0, LocalOperator(amb, Region({1}), nh)), domain_error);
}

TEST_CASE("perturbation assembly") {
  auto m = paramagnet(3);
  auto amb = m.ambient();
  Region all = amb->region();

  AnchoredInteraction empty(0);
  CHECK(frobenius_norm(assemble_perturbation(empty, all, amb)) == 0.0);

  AnchoredInteraction phi(0);
  for (Site x = 0; x < 3; ++x)
    phi.add_term(x, 0, LocalOperator(amb, Region({x}), site_operator("sz", 2)));
  auto v = assemble_perturbation(phi, all, amb);
  auto mult = spectrum_multiplicities(v);
  std::vector<std::pair<double, int>> expect{{-3, 1}, {-1, 3}, {1, 3}, {3, 1}};
  std::size_t k = 0;
  for (auto& [val, c] : mult) {
    CHECK(val == doctest::Approx(expect[k].first));
    CHECK(c == expect[k].second);
    ++k;
  }

  auto v2 = assemble_perturbation(phi, Region({0}), amb);
  CHECK(operator_norm(v2) == doctest::Approx(1.0));
}

TEST_CASE("ising projector variant is frustration free and non-commuting") {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(4));
  auto m = model_zoo("ising_projector", g);
  auto cert = m.certify_frustration_free({m.ambient()->region()});
  CHECK(cert.overall);
  auto h0 = embed(m.terms()[0].second, m.ambient()->region());
  auto h1 = embed(m.terms()[1].second, m.ambient()->region());
  CHECK(operator_norm(commutator(h0, h1)) > 1e-3);
}

TEST_CASE("zoo bookkeeping") {
  CHECK(zoo_names().size() == 4);
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(8));
  auto m = model_zoo("paramagnet", g);
  CHECK(m.range() == 0);
  CHECK(m.eta_inf() == doctest::Approx(1.0));
  CHECK_THROWS_AS(model_zoo("nonsense", g), domain_error);
  CHECK_THROWS_AS(model_zoo("aklt_periodic", g), domain_error);
}
