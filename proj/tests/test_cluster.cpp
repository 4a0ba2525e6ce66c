#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "lyspin/cluster.hpp"
#include "lyspin/exact.hpp"

using namespace lyspin;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an lyspin::Error";
  return ErrorCode::CheckFailure;
}

ValidatedModel chain(int L, double beta, double J, cplx h) { return make_ising_model({L}, Boundary::Free, beta, J, h); }

// Direct expansion of prod_X (1 + mu_X) (1 + S phi_0) (1 + T phi_x) over every
// subset of bonds and loop edges, averaged under the product tilted measure.
cplx brute_force_z(const ValidatedModel& m, const MarkedSites& marks, double tau, cplx S, cplx T) {
  const auto nu = m.site_weights();
  const auto& mu = m.measure();
  const std::size_t n = m.site_count(), q = mu.size();
  const auto& bonds = m.bonds();
  const std::size_t E = bonds.size() + 2;
  std::vector<std::size_t> cfg(n, 0);
  cplx total = 0.0;
  std::size_t configs = 1;
  for (std::size_t k = 0; k < n; ++k) configs *= q;
  for (std::size_t idx = 0; idx < configs; ++idx) {
    std::size_t r = idx;
    cplx w = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      cfg[k] = r % q;
      r /= q;
      w *= nu.weights[cfg[k]];
    }
    std::vector<cplx> f(E);
    for (std::size_t b = 0; b < bonds.size(); ++b) {
      double phi = -tau * tau * bonds[b].J[0];
      for (std::size_t c = 0; c < bonds[b].J.size(); ++c)
        phi += bonds[b].J[c] * mu.atom(cfg[bonds[b].u]).point[c] * mu.atom(cfg[bonds[b].v]).point[c];
      f[b] = std::exp(m.beta() * phi) - 1.0;
    }
    f[E - 2] = S * mu.atom(cfg[marks.origin]).point[marks.origin_component];
    f[E - 1] = T * mu.atom(cfg[marks.target]).point[marks.target_component];
    cplx sum = 0.0;
    for (std::uint32_t sub = 0; sub < (1u << E); ++sub) {
      cplx p = 1.0;
      for (std::size_t e = 0; e < E; ++e)
        if (sub >> e & 1) p *= f[e];
      sum += p;
    }
    total += w * sum;
  }
  return total;
}

}  // namespace

TEST(Polymers, LatticeEnumeration) {
  auto cs = CouplingSet::nearest_neighbour(1, {1.0});
  auto two = enumerate_lattice_polymers({0}, 2, cs);
  ASSERT_EQ(two.size(), 2u);
  std::set<std::vector<Point>> got(two.begin(), two.end());
  EXPECT_TRUE(got.count({{-1}, {0}}));
  EXPECT_TRUE(got.count({{0}, {1}}));
  EXPECT_EQ(enumerate_lattice_polymers({0}, 1, cs).size(), 1u);
  // Lattice animals through the origin of Z^2: n * (fixed polyomino count).
  auto cs2 = CouplingSet::nearest_neighbour(2, {1.0});
  EXPECT_EQ(enumerate_lattice_polymers({0, 0}, 2, cs2).size(), 4u);
  EXPECT_EQ(enumerate_lattice_polymers({0, 0}, 3, cs2).size(), 18u);
  EXPECT_EQ(enumerate_lattice_polymers({0, 0}, 4, cs2).size(), 76u);
  EXPECT_EQ(code_of([&] { enumerate_lattice_polymers({0}, 6, cs); }), ErrorCode::InvalidArgument);
}

TEST(Polymers, BoxEnumeration) {
  auto m = chain(6, 1.0, 1.0, 1.0);
  PolymerSystem sys(m, {0, 3}, 0.9);
  EXPECT_EQ(sys.polymers_containing(0, 1).size(), 1u);
  EXPECT_EQ(sys.polymers_containing(1, 1).size(), 0u);
  EXPECT_EQ(sys.polymers_containing(2, 2).size(), 2u);
  EXPECT_EQ(sys.polymers_containing(0, 2).size(), 1u);
  EXPECT_EQ(sys.polymers_containing(2, 3).size(), 3u);
  // Growth measurement: counts on Z are n for n >= 2.
  auto g = polymer_growth(CouplingSet::nearest_neighbour(1, {1.0}), 1, 5);
  EXPECT_EQ(g.counts, (std::vector<std::size_t>{1, 2, 3, 4, 5}));
  EXPECT_GT(g.constant, 0.0);
}

TEST(Activity, MarkedSingleton) {
  const double bh = 0.8;
  auto m = chain(4, 1.0, 1.0, bh);
  PolymerSystem sys(m, {0, 3}, 0.9);
  auto a = sys.activity({0});
  EXPECT_EQ(a.c, cplx(0.0));
  EXPECT_NEAR(std::abs(a.s - std::tanh(bh)), 0.0, 1e-15);
  EXPECT_EQ(a.t, cplx(0.0));
  EXPECT_EQ(a.st, cplx(0.0));
  EXPECT_EQ(sys.activity({1}).c, cplx(0.0));
}

TEST(Activity, UnmarkedPairClosedForm) {
  const double beta = 1.0, J = 1.0, tau = 0.9;
  for (cplx h : {cplx(1.0), cplx(2.0, 0.7)}) {
    auto m = chain(5, beta, J, h);
    PolymerSystem sys(m, {0, 4}, tau);
    auto a = sys.activity({1, 2});
    const cplx t = std::tanh(beta * h);
    const cplx expected = std::exp(-beta * J * tau * tau) * (std::cosh(beta * J) + std::sinh(beta * J) * t * t) - 1.0;
    EXPECT_NEAR(std::abs(a.c - expected), 0.0, 1e-14);
    EXPECT_EQ(a.s, cplx(0.0));
    EXPECT_EQ(sys.activity({1, 3}).c, cplx(0.0));  // not bonded
  }
}

TEST(Activity, LinearityStructure) {
  auto m = chain(5, 0.7, 1.0, cplx(1.5, 0.4));
  PolymerSystem sys(m, {1, 2}, 0.8);
  auto a = sys.activity({1, 2});
  EXPECT_NE(a.c, cplx(0.0));
  EXPECT_NE(a.st, cplx(0.0));
  // Evaluation is bilinear in (S, T).
  const cplx S(0.01, 0.02), T(-0.03, 0.01);
  const cplx lhs = a.evaluate(S, T);
  EXPECT_NEAR(std::abs(lhs - (a.c + S * a.s + T * a.t + S * T * a.st)), 0.0, 1e-16);
}

TEST(Activity, FactorisationOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> J(0.5, 1.5), hr(0.2, 3.0), hi(-1.0, 1.0), tau(0.0, 1.0), st(-0.2, 0.2);
  for (int draw = 0; draw < 20; ++draw) {
    ModelSpec s;
    s.lattice = LatticeBox({draw % 2 ? 4 : 2, draw % 2 ? 1 : 2}, Boundary::Free);
    s.measure = make_ising();
    const int Lx = s.lattice.dims()[0], Ly = s.lattice.dims()[1];
    for (int x = 0; x < Lx; ++x)
      for (int y = 0; y < Ly; ++y) {
        if (x + 1 < Lx) s.couplings.pairs.push_back({{x, y}, {x + 1, y}, {J(rng)}});
        if (y + 1 < Ly) s.couplings.pairs.push_back({{x, y}, {x, y + 1}, {J(rng)}});
      }
    s.beta = 0.8;
    s.field = cplx(hr(rng), hi(rng));
    auto m = validate_model(s);
    const MarkedSites marks{0, 3, 0, 0};
    const double t = tau(rng);
    PolymerSystem sys(m, marks, t);
    const cplx S(st(rng), st(rng)), T(st(rng), st(rng));
    const cplx poly = polymer_gas_partition(sys).evaluate(S, T);
    const cplx brute = brute_force_z(m, marks, t, S, T);
    EXPECT_NEAR(std::abs(poly - brute), 0.0, 1e-12 * std::max(1.0, std::abs(brute))) << draw;
  }
}

TEST(Activity, TreeGraphBound) {
  auto m = chain(6, 0.5, 1.0, cplx(2.0, 0.5));
  PolymerSystem sys(m, {0, 5}, 0.95);
  for (std::size_t n = 2; n <= 4; ++n)
    for (const auto& p : sys.polymers_containing(2, n))
      EXPECT_LE(std::abs(sys.activity(p).c), sys.tree_graph_bound(p) * (1 + 1e-12));
}

TEST(Activity, GraphBudget) {
  // Six mutually bonded sites give 15 pairs > the 10-edge guard.
  ModelSpec s;
  s.lattice = LatticeBox({6}, Boundary::Free);
  s.measure = make_ising();
  s.couplings.range = 6;
  for (int a = 0; a < 6; ++a)
    for (int b = a + 1; b < 6; ++b) s.couplings.pairs.push_back({{a}, {b}, {0.1}});
  auto m = validate_model(s).with_field(1.0);
  PolymerSystem sys(m, {0, 5}, 0.5);
  EXPECT_EQ(code_of([&] { sys.activity({0, 1, 2, 3, 4, 5}); }), ErrorCode::GraphBudgetExceeded);
}

TEST(ActivitySums, ZeroCouplingAndFieldDependence) {
  auto free = chain(6, 1.0, 0.0, 5.0);
  PolymerSystem fs(free, {0, 5}, 0.9);
  EXPECT_EQ(activity_norm_sum(fs, 2, 2, 0.01), 0.0);

  const double st = source_bound(1.0 / 6.0, 1.0);
  auto strong = chain(8, 1.0, 1.0, 5.0);
  PolymerSystem ss(strong, {0, 7}, 0.999);
  const double sum5 = activity_norm_sum(ss, 3, 2, st);
  // Interior site: two pair polymers with the closed-form activity.
  const double t = std::tanh(5.0);
  const double closed = std::abs(std::exp(-0.999 * 0.999) * (std::cosh(1.0) + std::sinh(1.0) * t * t) - 1.0);
  EXPECT_NEAR(sum5, 2 * closed, 1e-14);
  EXPECT_LT(sum5, 1.0 / 36.0);

  auto weak = chain(8, 1.0, 1.0, 0.1);
  PolymerSystem ws(weak, {0, 7}, 0.999);
  EXPECT_GT(activity_norm_sum(ws, 3, 2, st), 1.0 / 36.0);
}

TEST(FindEta, IsingChain) {
  auto m = chain(8, 1.0, 1.0, 0.0);
  auto r = find_eta(m, {0, 1});
  EXPECT_GT(r.eta, 0.0);
  EXPECT_LT(r.eta, 64.0);
  EXPECT_NEAR(r.tau, 1.0 - r.delta, 1e-15);
  ASSERT_EQ(r.sums.size(), 3u);
  for (std::size_t n = 1; n <= 3; ++n) EXPECT_LE(r.sums[n - 1], std::pow(1.0 / 6.0, static_cast<double>(n)));
}

TEST(FindEta, WeakerDemandLowersThreshold) {
  auto m = chain(8, 1.0, 1.0, 0.0);
  double last = std::numeric_limits<double>::infinity();
  for (double eps : {1.0 / 6.0, 0.3, 0.5, 0.8}) {
    EtaSearch s;
    s.epsilon = eps;
    const double eta = find_eta(m, {0, 1}, s).eta;
    EXPECT_LE(eta, last) << eps;
    last = eta;
  }
}

TEST(FindEta, ZeroCoupling) {
  auto m = chain(6, 1.0, 0.0, 0.0);
  auto r = find_eta(m, {0, 1});
  EXPECT_GT(r.eta, 0.0);
  EXPECT_EQ(r.sums[1], 0.0);
  EXPECT_EQ(r.sums[2], 0.0);
}

TEST(FindEta, NotFoundBelowCap) {
  auto m = chain(8, 1.0, 1.0, 0.0);
  EtaSearch s;
  s.field_cap = 0.5;
  EXPECT_EQ(code_of([&] { find_eta(m, {0, 1}, s); }), ErrorCode::NotFound);
}

TEST(ClusterSeries, ZeroCouplingVanishes) {
  auto m = chain(6, 1.0, 0.0, 3.0);
  ClusterSeriesOptions o;
  o.tau = 0.9;
  PolymerSystem sys(m, {0, 2}, o.tau);
  auto r = cluster_two_point(sys, o);
  for (auto c : r.partial_sums) EXPECT_EQ(std::abs(c), 0.0);
}

TEST(ClusterSeries, MatchesEnumerationWithinTailBound) {
  auto base = chain(8, 1.0, 1.0, 0.0);
  const auto eta = find_eta(base, {0, 1});
  auto m = base.with_field(1.25 * eta.eta);
  ClusterSeriesOptions o;
  o.tau = eta.tau;
  o.order = 4;
  o.eta = eta.eta;
  const auto rows = cluster_two_point_profile(m, 0, {1, 2, 3, 4}, o);
  ASSERT_EQ(rows.size(), 4u);
  for (int x = 1; x <= 4; ++x) {
    const auto& r = rows[x - 1];
    const cplx exact = ursell(m, {{0}, {x}}, {0, 0}).value;
    EXPECT_LE(std::abs(r.value - exact), r.tail_bound) << x;
    EXPECT_EQ(r.partial_sums.size(), 5u);
    EXPECT_DOUBLE_EQ(r.tail_constant, rows[0].tail_constant);
  }
}

TEST(ClusterSeries, RefusesFieldsBelowEta) {
  auto m = chain(8, 1.0, 1.0, 0.5);
  ClusterSeriesOptions o;
  o.tau = 0.99;
  o.eta = 3.0;
  PolymerSystem sys(m, {0, 2}, o.tau);
  EXPECT_EQ(code_of([&] { cluster_two_point(sys, o); }), ErrorCode::NotInConvergenceRegion);
}

TEST(ClusterSeries, ConnectingPolymerNeeded) {
  // Below grade x + 1 no polymer joins 0 and x, so the connected part cancels.
  auto m = chain(6, 0.5, 1.0, 6.0);
  ClusterSeriesOptions o;
  o.tau = 0.999;
  o.order = 6;
  PolymerSystem sys(m, {1, 3}, o.tau);
  auto r = cluster_two_point(sys, o);
  for (std::size_t k = 0; k <= 2; ++k) EXPECT_NEAR(std::abs(r.coefficients[k]), 0.0, 1e-15) << k;
  EXPECT_GT(std::abs(r.coefficients[3]), 1e-12);
}

TEST(Concentration, ThresholdMonotoneInDelta) {
  const auto mu = make_ising();
  double last = 0.0;
  for (double d : {0.5, 0.2, 0.1, 0.05, 0.01}) {
    const double c4 = concentration_threshold(mu, d);
    EXPECT_GE(c4, last) << d;
    last = c4;
  }
  const auto circ = make_sphere_uniform(2, 64);
  EXPECT_GT(concentration_threshold(circ, 0.1), concentration_threshold(circ, 0.3));
}
