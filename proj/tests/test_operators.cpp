#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "gapstab/models.hpp"
#include "gapstab/operators.hpp"

using namespace gapstab;

namespace {

AmbientPtr make_ambient(int nsites, int d) {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(nsites));
  return std::make_shared<AmbientVolume>(g, g->all_sites(), d);
}

LocalOperator pauli(const AmbientPtr& amb, Site x, const std::string& name) {
  return LocalOperator(amb, Region({x}), site_operator(name, 2));
}

}  // namespace

TEST_CASE("embed basics") {
  auto amb = make_ambient(3, 2);
  auto sz = pauli(amb, 0, "sz");
  CHECK(embed(sz, sz.support()).matrix() == sz.matrix());
  auto id01 = embed(LocalOperator::identity(amb, Region({0})), Region({0, 1}));
  CHECK((id01.matrix() - Matrix::Identity(4, 4)).norm() == 0.0);
  auto big = embed(sz, Region({0, 1}));
  RealVector ev = Eigen::SelfAdjointEigenSolver<Matrix>(big.matrix()).eigenvalues();
  CHECK(ev[0] == doctest::Approx(-1));
  CHECK(ev[1] == doctest::Approx(-1));
  CHECK(ev[2] == doctest::Approx(1));
  CHECK(ev[3] == doctest::Approx(1));
  CHECK_THROWS_AS(embed(big, Region({1})), domain_error);
}

TEST_CASE("little-endian index convention") {
  // first (lowest-id) site varies fastest
  auto amb = make_ambient(2, 2);
  auto sz0 = embed(pauli(amb, 0, "sz"), Region({0, 1}));
  CHECK(sz0.matrix()(0, 0) == cdouble(1, 0));
  CHECK(sz0.matrix()(1, 1) == cdouble(-1, 0));  // index 1 = site0 down
  auto sz1 = embed(pauli(amb, 1, "sz"), Region({0, 1}));
  CHECK(sz1.matrix()(1, 1) == cdouble(1, 0));
  CHECK(sz1.matrix()(2, 2) == cdouble(-1, 0));  // index 2 = site1 down
}

TEST_CASE("commutators") {
  auto amb = make_ambient(4, 2);
  auto sx0 = pauli(amb, 0, "sx");
  auto sz0 = pauli(amb, 0, "sz");
  auto sz2 = pauli(amb, 2, "sz");
  // disjoint supports commute exactly
  CHECK(frobenius_norm(commutator(sx0, sz2)) == 0.0);
  CHECK(frobenius_norm(commutator(sx0, sx0)) == 0.0);
  // [sx, sz] = -2i sy
  auto c = commutator(sx0, sz0);
  auto sy0 = pauli(amb, 0, "sy");
  CHECK((c.matrix() - (cdouble(0, -2) * sy0).matrix()).norm() < 1e-14);
}

TEST_CASE("conditional expectation") {
  auto amb = make_ambient(3, 2);
  Region x0({0});
  auto id = LocalOperator::identity(amb, Region({0, 1}));
  auto pi_id = conditional_expectation(id, x0);
  CHECK((pi_id.matrix() - Matrix::Identity(2, 2)).norm() < 1e-15);

  auto zz = pauli(amb, 0, "sz") * pauli(amb, 1, "sz");
  CHECK(frobenius_norm(conditional_expectation(zz, x0)) < 1e-15);

  auto z_id = embed(pauli(amb, 0, "sz"), Region({0, 1}));
  CHECK((conditional_expectation(z_id, x0).matrix() - site_operator("sz", 2)).norm() < 1e-15);

  // projection and nesting on random operators
  Rng rng(11);
  Region all({0, 1, 2});
  LocalOperator a(amb, all, random_hermitian(8, rng));
  Region x({0, 1}), y({1, 2});
  auto pix = conditional_expectation(a, x);
  CHECK(operator_norm(conditional_expectation(pix, x) - pix) < 1e-12);
  auto pxy = conditional_expectation(conditional_expectation(a, x), y);
  auto pint = conditional_expectation(a, region_intersection(x, y));
  CHECK(operator_norm(embed(pxy, all) - embed(pint, all)) < 1e-12);
  // norm non-increasing
  CHECK(operator_norm(pix) <= operator_norm(a) + 1e-12);
}

TEST_CASE("quasi-locality bridge") {
  auto amb = make_ambient(3, 2);
  Rng rng(5);
  Region all({0, 1, 2});
  LocalOperator a(amb, all, random_hermitian(8, rng));
  Region x({0});
  double dist = operator_norm(a - embed(conditional_expectation(a, x), all));
  // sampled complement unitaries can only reach the commutator sup from below
  double sampled = 0.0;
  Region comp({1, 2});
  for (int k = 0; k < 12; ++k) {
    LocalOperator u(amb, comp, haar_unitary(4, rng));
    double c = operator_norm(commutator(a, u));
    CHECK(c <= 2 * dist + 1e-11);
    sampled = std::max(sampled, c);
  }
  CHECK(sampled > 0.2 * dist);  // sanity: the bound is not vacuous here
}

TEST_CASE("delta layers telescope") {
  auto amb = make_ambient(5, 2);
  Rng rng(7);
  Region all({0, 1, 2, 3, 4});
  LocalOperator a(amb, all, random_hermitian(32, rng));
  Site x = 2;
  // sum of layers reconstructs the operator once the ball covers the volume
  LocalOperator sum = delta_layer(a, x, 0, 0);
  for (int n = 1; n <= 2; ++n) sum = sum + delta_layer(a, x, 0, n);
  CHECK(operator_norm(embed(sum, all) - a) < 1e-12);
  // operator already local to the base ball: higher layers vanish
  LocalOperator b(amb, Region({2}), site_operator("sz", 2));
  CHECK(operator_norm(delta_layer(embed(b, all), x, 0, 2)) < 1e-13);
  // layer norm bound
  CHECK(operator_norm(delta_layer(a, x, 0, 1)) <= 2 * operator_norm(a) + 1e-12);
  CHECK_THROWS_AS(delta_layer(a, x, 2, 1), domain_error);
}

TEST_CASE("operator norms") {
  auto amb = make_ambient(2, 2);
  CHECK(operator_norm(LocalOperator::identity(amb, Region({0, 1}))) == doctest::Approx(1.0));
  auto zz = pauli(amb, 0, "sz") * pauli(amb, 1, "sz");
  CHECK(operator_norm(zz) == doctest::Approx(1.0));
  Matrix proj = Matrix::Zero(2, 2);
  proj(0, 0) = 1;
  CHECK(operator_norm(LocalOperator(amb, Region({0}), proj)) == doctest::Approx(1.0));
}

TEST_CASE("tight support") {
  auto amb = make_ambient(3, 2);
  auto widened = embed(pauli(amb, 1, "sz"), Region({0, 1, 2}));
  CHECK(tight_support(widened).sites == std::vector<Site>{1});
}

TEST_CASE("operator file round trip") {
  auto amb = make_ambient(4, 2);
  Rng rng(3);
  LocalOperator a(amb, Region({1, 2}), random_hermitian(4, rng));
  std::string path = "/tmp/gapstab_test_op.bin";
  save_operator(path, a);
  auto b = load_operator(path, amb);
  CHECK(b.support() == a.support());
  CHECK((b.matrix() - a.matrix()).norm() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("conditional expectation commutes with embedding") {
  auto amb = make_ambient(4, 2);
  Rng rng(13);
  Region y({1, 2});
  LocalOperator a(amb, y, random_hermitian(4, rng));
  Region x({0, 1});
  Region target({0, 1, 2, 3});
  auto lhs = conditional_expectation(embed(a, target), x);
  auto rhs = conditional_expectation(a, x);  // support becomes x intersect y
  CHECK(operator_norm(embed(lhs, target) - embed(rhs, target)) < 1e-12);
}

TEST_CASE("ambient dimension cap") {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(8));
  CHECK_THROWS_AS(AmbientVolume(g, g->all_sites(), 2, 100), domain_error);
}
