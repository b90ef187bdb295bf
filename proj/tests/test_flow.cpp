#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "gapstab/flow.hpp"

using namespace gapstab;

namespace {

FrustrationFreeModel paramagnet(int n) {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(n));
  return model_zoo("paramagnet", g);
}

// Three-qubit generator with a generic non-degenerate spectrum.
SpectralData three_qubit_spec(const FrustrationFreeModel& m, double s) {
  auto amb = m.ambient();
  Region all = amb->region();
  LocalOperator h = m.assemble_hamiltonian(all);
  for (Site x = 0; x < 3; ++x) {
    LocalOperator fx(amb, Region({x}), site_operator("sx", 2));
    LocalOperator fz(amb, Region({x}), site_operator("sz", 2));
    h = h + (0.37 * s * (x + 1)) * fx + (0.21 * s) * fz;
  }
  return diagonalize(h);
}

// Simpson time quadrature of int tau_t(A) w(t) dt. The scalar integrals
// sum_t w(t) e^{i t (E_j - E_k)} are shared between probes; the path through
// the sampled time profile is independent of the Fourier-multiplier one.
struct QuadratureOracle {
  Matrix qf, qg;  // per (j,k): quadrature of w and W against the phases
  const SpectralData* spec;

  QuadratureOracle(const SpectralData& s, const GapWeightPair& pair, double t_max, double dt)
      : spec(&s) {
    long long d = s.values.size();
    long long steps = static_cast<long long>(t_max / dt);
    qf = Matrix::Zero(d, d);
    qg = Matrix::Zero(d, d);
    for (long long i = -steps; i <= steps; ++i) {
      double t = i * dt;
      double simpson = (i == -steps || i == steps) ? 1.0 : (((i + steps) % 2) ? 4.0 : 2.0);
      double cf = pair.w_time(t) * simpson * dt / 3.0;
      double cg = pair.W_time(t) * simpson * dt / 3.0;
      for (long long j = 0; j < d; ++j)
        for (long long k = 0; k < d; ++k) {
          cdouble ph = std::exp(cdouble(0, t * (s.values[j] - s.values[k])));
          qf(j, k) += cf * ph;
          qg(j, k) += cg * ph;
        }
    }
  }

  Matrix apply(const LocalOperator& a, WeightKind kind) const {
    Matrix atil = spec->vectors.adjoint() * embed(a, spec->support).matrix() * spec->vectors;
    Matrix res = atil.cwiseProduct(kind == WeightKind::F ? qf : qg);
    return spec->vectors * res * spec->vectors.adjoint();
  }
};

}  // namespace

TEST_CASE("weight pair invariants") {
  auto p = GapWeightPair::bump(0.7);
  CHECK(p.w_hat(0.0) == doctest::Approx(1.0));
  CHECK(p.w_hat(0.7) == 0.0);
  CHECK(p.w_hat(-0.71) == 0.0);
  CHECK(p.w_hat(2.0) == 0.0);
  // i xi W_hat(xi) + w_hat(xi) = 1 across the line
  double worst = 0;
  for (int i = 0; i <= 1000; ++i) {
    double xi = -3.0 + 6.0 * i / 1000.0;
    worst = std::max(worst, std::abs(cdouble(0, xi) * p.W_hat(xi) + p.w_hat(xi) - 1.0));
  }
  CHECK(worst <= 1e-12);
  // W_hat = 1/(i xi) outside the support
  CHECK(std::abs(p.W_hat(1.5) - cdouble(0, -1.0 / 1.5)) < 1e-15);
  // distributional identity away from t = 0, in the project's transform
  // convention: w(t) = dW/dt there (the delta sits at the origin); finite
  // differenced. The Fourier-side identity above pins the same relation.
  for (double t : {0.8, 3.0, 11.0}) {
    double h = 1e-4;
    double deriv = (p.W_time(t + h) - p.W_time(t - h)) / (2 * h);
    CHECK(std::abs(p.w_time(t) - deriv) < 1e-6);
  }
  CHECK(p.W_l1() > 0);
}

TEST_CASE("heisenberg evolution") {
  auto m = paramagnet(3);
  auto spec = three_qubit_spec(m, 1.0);
  Rng rng(21);
  LocalOperator a(m.ambient(), m.ambient()->region(), random_hermitian(8, rng));
  CHECK(operator_norm(evolve(spec, a, 0.0) - a) < 1e-12);
  for (double t : {0.3, 1.7, -2.2}) {
    CHECK(operator_norm(evolve(spec, a, t)) == doctest::Approx(operator_norm(a)).epsilon(1e-10));
    CHECK(frobenius_norm(evolve(spec, a, t)) == doctest::Approx(frobenius_norm(a)).epsilon(1e-10));
  }
  // spectral projector of the generator is invariant
  Matrix proj = spec.vectors.col(0) * spec.vectors.col(0).adjoint();
  LocalOperator p0(m.ambient(), m.ambient()->region(), proj);
  CHECK(operator_norm(evolve(spec, p0, 1.3) - p0) < 1e-10);
  // commuting model: sz is conserved by the paramagnet
  auto pm = paramagnet(3);
  auto spec0 = diagonalize(pm.assemble_hamiltonian(pm.ambient()->region()));
  LocalOperator sz(pm.ambient(), Region({1}), site_operator("sz", 2));
  CHECK(operator_norm(evolve(spec0, embed(sz, spec0.support), 2.1) - embed(sz, spec0.support)) <
        1e-10);
}

TEST_CASE("weighted operators: invariance, support filter, contraction") {
  auto m = paramagnet(3);
  auto spec = three_qubit_spec(m, 1.0);
  auto pair = GapWeightPair::bump(0.5);
  // F fixes exponentials of its own hamiltonian
  for (double u : {0.0, 0.9, -1.8}) {
    Matrix eu = Matrix::Zero(8, 8);
    for (int j = 0; j < 8; ++j) eu(j, j) = std::exp(cdouble(0, u * spec.values[j]));
    Matrix site = spec.vectors * eu * spec.vectors.adjoint();
    LocalOperator euh(m.ambient(), spec.support, site);
    CHECK(operator_norm(weighted_op(spec, euh, WeightKind::F, pair) - euh) < 1e-10);
  }
  // a single far-off-diagonal matrix element is annihilated
  Matrix single = Matrix::Zero(8, 8);
  single(0, 7) = 1.0;
  single(7, 0) = 1.0;
  Matrix site = spec.vectors * single * spec.vectors.adjoint();
  double split = spec.values[7] - spec.values[0];
  REQUIRE(split > pair.gamma());
  LocalOperator probe(m.ambient(), spec.support, site);
  CHECK(operator_norm(weighted_op(spec, probe, WeightKind::F, pair)) < 1e-13);
  // norm contraction on random probes
  Rng rng(77);
  for (int i = 0; i < 100; ++i) {
    LocalOperator a(m.ambient(), spec.support, random_hermitian(8, rng));
    CHECK(operator_norm(weighted_op(spec, a, WeightKind::F, pair)) <=
          operator_norm(a) * (1 + 1e-12));
  }
  // G kills diagonal operators (W_hat(0) = 0)
  Matrix diagm = Matrix::Zero(8, 8);
  for (int j = 0; j < 8; ++j) diagm(j, j) = 0.3 * j;
  LocalOperator dop(m.ambient(), spec.support, spec.vectors * diagm * spec.vectors.adjoint());
  CHECK(operator_norm(weighted_op(spec, dop, WeightKind::G, pair)) < 1e-13);
}

TEST_CASE("spectral weighted operators match time quadrature") {
  auto m = paramagnet(3);
  auto spec = three_qubit_spec(m, 0.8);
  auto pair = GapWeightPair::bump(0.5);
  QuadratureOracle oracle(spec, pair, 600.0 / pair.gamma(), 0.02);
  Rng rng(4242);
  double worst_f = 0, worst_g = 0;
  for (int i = 0; i < 20; ++i) {
    LocalOperator a(m.ambient(), spec.support, random_hermitian(8, rng));
    worst_f = std::max(worst_f, (weighted_op(spec, a, WeightKind::F, pair).matrix() -
                                 oracle.apply(a, WeightKind::F))
                                    .cwiseAbs()
                                    .maxCoeff());
    worst_g = std::max(worst_g, (weighted_op(spec, a, WeightKind::G, pair).matrix() -
                                 oracle.apply(a, WeightKind::G))
                                    .cwiseAbs()
                                    .maxCoeff());
  }
  CHECK(worst_f < 1e-6);
  CHECK(worst_g < 1e-6);
}

TEST_CASE("interaction picture unitaries") {
  auto m = paramagnet(4);
  auto amb = m.ambient();
  Region all = amb->region();
  auto h = m.assemble_hamiltonian(all);
  auto spec0 = diagonalize(h);

  // s = 0: identity at all times
  CHECK(operator_norm(interaction_picture_unitary(spec0, spec0, 1.7) -
                      LocalOperator::identity(amb, all)) < 1e-12);

  // commuting perturbation: Gamma_t = e^{-i s t V}
  LocalOperator v = LocalOperator::zero(amb, all);
  for (Site x = 0; x < 4; ++x)
    v = v + embed(LocalOperator(amb, Region({x}), site_operator("sz", 2)), all);
  double s = 0.31, t = 1.2;
  auto spec_s = diagonalize(h + s * v);
  auto gam = interaction_picture_unitary(spec0, spec_s, t);
  auto vspec = diagonalize(v);
  Matrix expv = Matrix::Zero(16, 16);
  for (int j = 0; j < 16; ++j) expv(j, j) = std::exp(cdouble(0, -s * t * vspec.values[j]));
  Matrix closed = vspec.vectors * expv * vspec.vectors.adjoint();
  CHECK((gam.matrix() - closed).cwiseAbs().maxCoeff() < 1e-10);

  // generic perturbation: unitarity, factorization, and the defining ODE
  LocalOperator vx = LocalOperator::zero(amb, all);
  for (Site x = 0; x < 4; ++x)
    vx = vx + embed(LocalOperator(amb, Region({x}), site_operator("sx", 2)), all);
  auto spec_sx = diagonalize(h + s * vx);
  auto gam2 = interaction_picture_unitary(spec0, spec_sx, t);
  Matrix uu = gam2.matrix().adjoint() * gam2.matrix();
  CHECK((uu - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-10);
  Matrix e0 = Matrix::Zero(16, 16), es = Matrix::Zero(16, 16);
  for (int j = 0; j < 16; ++j) {
    e0(j, j) = std::exp(cdouble(0, -t * spec0.values[j]));
    es(j, j) = std::exp(cdouble(0, -t * spec_sx.values[j]));
  }
  Matrix lhs = spec_sx.vectors * es * spec_sx.vectors.adjoint();
  Matrix rhs = (spec0.vectors * e0 * spec0.vectors.adjoint()) * gam2.matrix();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(interaction_picture_residual(spec0, spec_sx, s * vx, 0.9) < 1e-5);
}

TEST_CASE("F commutes with the transported ground projector") {
  auto m = paramagnet(4);
  auto spec = diagonalize(m.assemble_hamiltonian(m.ambient()->region()));
  auto pair = GapWeightPair::bump(0.5);
  auto rep = check_F_ground_commutation(spec, pair, 20, 99, m.kernel_tol(m.ambient()->region()));
  CHECK_FALSE(rep.gap_below_gamma);
  CHECK(rep.worst <= 1e-10);
}

TEST_CASE("lieb-robinson profiles") {
  // commuting-term model: strictly zero outside the terms' reach
  auto pm = paramagnet(8);
  Region all = pm.ambient()->region();
  auto spec = diagonalize(pm.assemble_hamiltonian(all));
  LocalOperator a(pm.ambient(), Region({0}), site_operator("sx", 2));
  std::vector<std::pair<int, LocalOperator>> probes;
  for (int d : {3, 5}) {
    LocalOperator b(pm.ambient(), Region({d}), site_operator("sx", 2));
    probes.emplace_back(d, b);
  }
  auto prof = lr_commutator_profile(spec, a, probes, {0.0, 0.5, 1.0, 2.0});
  for (const auto& pt : prof.table) CHECK(pt.comm_norm < 1e-12);
  CHECK_FALSE(prof.fit_ok);

  // zero interaction: profile identically zero
  auto z = diagonalize(LocalOperator::zero(pm.ambient(), all));
  auto prof0 = lr_commutator_profile(z, a, probes, {0.0, 1.0, 2.0});
  for (const auto& pt : prof0.table) CHECK(pt.comm_norm < 1e-14);

  // non-commuting projector chain: ballistic front with a finite velocity
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(8));
  auto ip = model_zoo("ising_projector", g);
  auto ispec = diagonalize(ip.assemble_hamiltonian(ip.ambient()->region()));
  LocalOperator ia(ip.ambient(), Region({0}), site_operator("sx", 2));
  std::vector<std::pair<int, LocalOperator>> iprobes;
  for (int d : {3, 4, 5, 6}) {
    LocalOperator b(ip.ambient(), Region({d}), site_operator("sx", 2));
    iprobes.emplace_back(d, b);
  }
  std::vector<double> times;
  for (int i = 0; i <= 10; ++i) times.push_back(0.4 * i);
  auto iprof = lr_commutator_profile(ispec, ia, iprobes, times);
  CHECK(iprof.fit_ok);
  CHECK(iprof.mu > 0);
  CHECK(iprof.velocity > 0);
  CHECK(iprof.velocity < 100);
  CHECK(iprof.envelope_violations == 0);
  // profile rises from zero at fixed distance
  double at0 = 0, late = 0;
  for (const auto& pt : iprof.table)
    if (pt.distance == 5) {
      if (pt.t == 0.0) at0 = pt.comm_norm;
      if (pt.t == 4.0) late = pt.comm_norm;
    }
  CHECK(at0 < 1e-12);
  CHECK(late > 1e-4);
}

TEST_CASE("model-level commutator profile tags distances from the metric") {
  auto g = std::make_shared<LatticeGraph>(LatticeGraph::chain(7));
  auto m = model_zoo("ising_projector", g);
  LocalOperator a(m.ambient(), Region({0}), site_operator("sx", 2));
  std::vector<LocalOperator> probes{
      LocalOperator(m.ambient(), Region({4}), site_operator("sx", 2)),
      LocalOperator(m.ambient(), Region({6}), site_operator("sx", 2))};
  auto prof = lr_commutator_profile(m, a, probes, {0.0, 1.0, 2.0, 3.0});
  std::set<int> dists;
  for (const auto& pt : prof.table) dists.insert(pt.distance);
  CHECK(dists == std::set<int>{4, 6});
  CHECK_THROWS_AS(lr_commutator_profile(m, a, {a}, {0.0}), domain_error);
}
