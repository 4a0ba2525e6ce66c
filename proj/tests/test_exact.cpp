#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <gtest/gtest.h>

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

double spin(const ValidatedModel& m, std::span<const std::size_t> c, std::size_t site) {
  return m.measure().atom(c[site]).point[0];
}

// Independent brute force: unnormalised Boltzmann weights summed directly.
cplx brute_average(const ValidatedModel& m, const std::function<cplx(const std::vector<int>&)>& f) {
  const std::size_t S = m.site_count();
  cplx z = 0.0, zf = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << S); ++mask) {
    std::vector<int> s(S);
    for (std::size_t k = 0; k < S; ++k) s[k] = (mask >> k) & 1 ? -1 : 1;
    double e = 0.0;
    for (const auto& b : m.bonds()) e += b.J[0] * s[b.u] * s[b.v];
    cplx hsum = 0.0;
    for (int v : s) hsum += m.field() * static_cast<double>(v);
    const cplx w = std::exp(m.beta() * (e + hsum));
    z += w;
    zf += w * f(s);
  }
  return zf / z;
}

ValidatedModel ising_chain(int L, double beta, double J, cplx h, Boundary b = Boundary::Free) {
  return make_ising_model({L}, b, beta, J, h);
}

}  // namespace

TEST(PartitionFunction, SingleFreeSiteIsNormalised) {
  for (cplx h : {cplx(0.3), cplx(-1.2, 0.4), cplx(2.0, 3.0)}) {
    auto m = ising_chain(1, 1.0, 0.0, h);
    EXPECT_NEAR(std::abs(partition_function(m) - 1.0), 0.0, 1e-14);
  }
}

TEST(PartitionFunction, TwoSiteValues) {
  auto m0 = ising_chain(2, 1.0, 1.0, 0.0);
  EXPECT_NEAR(partition_function(m0).real(), std::cosh(1.0), 1e-14);
  EXPECT_NEAR(partition_function(m0).real(), 1.5431, 1e-4);
  auto m1 = ising_chain(2, 1.0, 1.0, 1.0);
  const double t = std::tanh(1.0);
  EXPECT_NEAR(partition_function(m1).real(), std::cosh(1.0) + std::sinh(1.0) * t * t, 1e-14);
}

TEST(PartitionFunction, ObservableOverload) {
  auto m = ising_chain(3, 0.8, 1.0, cplx(0.2, 0.1));
  const cplx z = partition_function(m);
  const cplx z1 = partition_function(m, [](std::span<const std::size_t>) { return 2.0; });
  EXPECT_NEAR(std::abs(z1 - 2.0 * z), 0.0, 1e-14);
}

TEST(PartitionFunction, BudgetExceeded) {
  auto m = ising_chain(12, 1.0, 1.0, 0.5);
  EnumerationOptions opt;
  opt.budget = 1000;
  EXPECT_EQ(code_of([&] { partition_function(m, opt); }), ErrorCode::BudgetExceeded);
}

TEST(ThermalAverage, Examples) {
  auto m = ising_chain(3, 0.7, 1.0, 0.4);
  EXPECT_NEAR(std::abs(thermal_average(m, [](std::span<const std::size_t>) { return 3.5; }) - 3.5), 0.0, 1e-14);
  auto one = ising_chain(1, 0.5, 0.0, 1.3);
  auto mag = thermal_average(one, [&](std::span<const std::size_t> c) { return spin(one, c, 0); });
  EXPECT_NEAR(mag.real(), std::tanh(0.5 * 1.3), 1e-15);
  auto two = ising_chain(2, 1.0, 1.0, 0.0);
  auto corr = thermal_average(two, [&](std::span<const std::size_t> c) { return spin(two, c, 0) * spin(two, c, 1); });
  EXPECT_NEAR(corr.real(), std::tanh(1.0), 1e-15);
}

TEST(ThermalAverage, MatchesBruteForceAtComplexField) {
  auto m = ising_chain(5, 0.9, 1.1, cplx(0.3, 0.8), Boundary::Periodic);
  auto a = thermal_average(m, [&](std::span<const std::size_t> c) { return spin(m, c, 1) * spin(m, c, 3); });
  auto b = brute_average(m, [](const std::vector<int>& s) { return cplx(s[1] * s[3]); });
  EXPECT_NEAR(std::abs(a - b), 0.0, 1e-13);
}

TEST(ThermalAverage, ZeroPartitionAtLeeYangZero) {
  // Two coupled sites at a root of e y^2 + 2 e^{-1} y + e, y = exp(2 beta h).
  const double e = std::exp(1.0);
  const cplx y = (-2.0 / e + std::sqrt(cplx(4.0 / (e * e) - 4.0 * e * e))) / (2.0 * e);
  const cplx h = std::log(y) / 2.0;
  auto m = ising_chain(2, 1.0, 1.0, h);
  EXPECT_EQ(code_of([&] { thermal_average(m, [](std::span<const std::size_t>) { return 1.0; }); }),
            ErrorCode::ZeroPartition);
}

TEST(ThermalAverage, DeterministicAcrossThreads) {
  auto m = make_ising_model({3, 4}, Boundary::Periodic, 0.4, 1.0, cplx(0.2, 0.3));
  EnumerationOptions one, many;
  many.parallel.threads = 8;
  one.block_size = many.block_size = 256;
  auto f = [&](std::span<const std::size_t> c) { return spin(m, c, 0) * spin(m, c, 7); };
  const cplx a = thermal_average(m, f, one), b = thermal_average(m, f, many);
  EXPECT_EQ(a.real(), b.real());
  EXPECT_EQ(a.imag(), b.imag());
}

TEST(Ursell, IndependentSpinsVanish) {
  auto m = ising_chain(4, 1.0, 0.0, 0.6);
  EXPECT_NEAR(std::abs(ursell(m, {{0}, {2}}, {0, 0}).value), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(ursell(m, {{0}, {1}, {3}}, {0, 0, 0}).value), 0.0, 1e-15);
}

TEST(Ursell, SingleSiteCumulants) {
  const double bh = 0.45;
  auto m = ising_chain(1, 1.0, 0.0, bh);
  const double t = std::tanh(bh);
  EXPECT_NEAR(ursell(m, {{0}}, {0}).value.real(), t, 1e-15);
  EXPECT_NEAR(ursell(m, {{0}, {0}}, {0, 0}).value.real(), 1 - t * t, 1e-15);
  EXPECT_NEAR(ursell(m, {{0}, {0}, {0}}, {0, 0, 0}).value.real(), -2 * t * (1 - t * t), 1e-15);
  EXPECT_NEAR(ursell(m, {{0}, {0}, {0}, {0}}, {0, 0, 0, 0}).value.real(), -2 * (1 - t * t) * (1 - 3 * t * t), 1e-14);
}

TEST(Ursell, TwoPointIsCovariance) {
  auto m = ising_chain(6, 0.8, 1.0, cplx(0.5, 0.4));
  const cplx a = brute_average(m, [](const std::vector<int>& s) { return cplx(s[1]); });
  const cplx b = brute_average(m, [](const std::vector<int>& s) { return cplx(s[4]); });
  const cplx ab = brute_average(m, [](const std::vector<int>& s) { return cplx(s[1] * s[4]); });
  EXPECT_NEAR(std::abs(ursell(m, {{1}, {4}}, {0, 0}).value - (ab - a * b)), 0.0, 1e-13);
}

TEST(Ursell, ChainTwoPointClosedForm) {
  // Zero-field free chain: <s_0 s_x> = tanh(beta J)^x.
  auto m = ising_chain(8, 1.0, 1.0, 0.0);
  for (int x = 1; x < 8; ++x)
    EXPECT_NEAR(ursell(m, {{0}, {x}}, {0, 0}).value.real(), std::pow(std::tanh(1.0), x), 1e-14);
}

TEST(Ursell, FactorisesIntoIndependentBlocks) {
  // Two decoupled chains (no bond between sites 2 and 3): mixed cumulants vanish.
  ModelSpec s;
  s.lattice = LatticeBox({6}, Boundary::Free);
  s.measure = make_ising();
  s.couplings.pairs = {{{0}, {1}, {1.0}}, {{1}, {2}, {0.7}}, {{3}, {4}, {1.2}}, {{4}, {5}, {0.9}}};
  auto m = validate_model(s);
  auto mh = m.with_field(cplx(0.3, 0.2));
  EXPECT_NEAR(std::abs(ursell(mh, {{0}, {2}, {4}}, {0, 0, 0}).value), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(ursell(mh, {{1}, {3}, {5}, {2}}, {0, 0, 0, 0}).value), 0.0, 1e-14);
  EXPECT_GT(std::abs(ursell(mh, {{0}, {1}, {2}}, {0, 0, 0}).value), 1e-6);
}

TEST(Cumulant, CovarianceFormula) {
  std::map<std::uint32_t, cplx> mom{{1, 0.3}, {2, cplx(0.1, 0.2)}, {3, 0.7}};
  EXPECT_NEAR(std::abs(cumulant_oracle(mom, 2) - (0.7 - 0.3 * cplx(0.1, 0.2))), 0.0, 1e-15);
}

TEST(Cumulant, MissingMoment) {
  std::map<std::uint32_t, cplx> mom{{1, 0.3}, {2, 0.1}};
  EXPECT_EQ(code_of([&] { cumulant_oracle(mom, 2); }), ErrorCode::MissingMoment);
}

TEST(Cumulant, IndependentVariablesVanish) {
  // Moments of independent variables factorise over the subset.
  const std::vector<double> mean{0.3, -0.5, 0.8, 0.25};
  std::map<std::uint32_t, cplx> mom;
  for (std::uint32_t mask = 1; mask < 16; ++mask) {
    cplx p = 1.0;
    for (int k = 0; k < 4; ++k)
      if (mask >> k & 1) p *= mean[k];
    mom[mask] = p;
  }
  for (std::size_t n = 2; n <= 4; ++n) {
    std::map<std::uint32_t, cplx> sub;
    for (auto [k, v] : mom)
      if (k < (1u << n)) sub[k] = v;
    EXPECT_NEAR(std::abs(cumulant_oracle(sub, n)), 0.0, 1e-15) << n;
  }
}

TEST(Cumulant, ThirdCumulantOfToyDistribution) {
  // Three-atom distribution of a single variable X repeated three times:
  // kappa_3 = E X^3 - 3 E X^2 E X + 2 (E X)^3.
  const std::vector<double> x{-1.0, 0.5, 2.0}, p{0.2, 0.5, 0.3};
  double m1 = 0, m2 = 0, m3 = 0;
  for (int k = 0; k < 3; ++k) {
    m1 += p[k] * x[k];
    m2 += p[k] * x[k] * x[k];
    m3 += p[k] * x[k] * x[k] * x[k];
  }
  std::map<std::uint32_t, cplx> mom;
  for (std::uint32_t mask = 1; mask < 8; ++mask) {
    const int bits = std::popcount(mask);
    mom[mask] = bits == 1 ? m1 : bits == 2 ? m2 : m3;
  }
  EXPECT_NEAR(cumulant_oracle(mom, 3).real(), m3 - 3 * m2 * m1 + 2 * m1 * m1 * m1, 1e-15);
}

TEST(Cumulant, AgreesWithUrsellOnRandomChains) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> J(0.5, 1.5), hr(0.1, 1.5), hi(-1.0, 1.0);
  for (int draw = 0; draw < 5; ++draw) {
    ModelSpec s;
    s.lattice = LatticeBox({6}, Boundary::Free);
    s.measure = make_ising();
    for (int k = 0; k < 5; ++k) s.couplings.pairs.push_back({{k}, {k + 1}, {J(rng)}});
    s.beta = 0.7;
    s.field = cplx(hr(rng), hi(rng));
    auto m = validate_model(s);
    const std::vector<Point> pts{{0}, {2}, {3}, {5}};
    std::vector<Slot> slots;
    for (auto& p : pts) slots.push_back({static_cast<std::size_t>(p[0]), 0});
    auto mom = joint_moments(m, slots);
    std::map<std::uint32_t, cplx> mm;
    for (std::uint32_t k = 1; k < 16; ++k) mm[k] = mom[k];
    EXPECT_NEAR(std::abs(ursell(m, pts, {0, 0, 0, 0}).value - cumulant_oracle(mm, 4)), 0.0, 1e-12);
  }
}

TEST(CorrelationProfile, MatchesPairwiseUrsell) {
  auto m = ising_chain(7, 0.9, 1.0, cplx(0.4, 0.3));
  std::vector<Slot> partners{{1, 0}, {3, 0}, {6, 0}};
  auto prof = correlation_profile(m, {0, 0}, partners);
  ASSERT_EQ(prof.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const int x = static_cast<int>(partners[k].site);
    EXPECT_NEAR(std::abs(prof[k] - ursell(m, {{0}, {x}}, {0, 0}).value), 0.0, 1e-14);
  }
}

TEST(Enumeration, MultiComponentTwoPoint) {
  // Planar rotator pair on a 16-point quadrature, against a direct double loop.
  ModelSpec s;
  s.lattice = LatticeBox({2}, Boundary::Free);
  s.measure = make_sphere_uniform(2, 16);
  s.couplings = CouplingSet::nearest_neighbour(1, {1.0, 1.0});
  s.beta = 0.8;
  auto m = validate_model(s);
  const auto& mu = m.measure();
  double z = 0, f = 0;
  for (const auto& a : mu.atoms())
    for (const auto& b : mu.atoms()) {
      const double w = a.weight * b.weight *
                       std::exp(0.8 * (a.point[0] * b.point[0] + a.point[1] * b.point[1]));
      z += w;
      f += w * a.point[0] * b.point[0];
    }
  EXPECT_NEAR(ursell(m, {{0}, {1}}, {0, 0}).value.real(), f / z, 1e-14);
  EXPECT_NEAR(ursell(m, {{0}, {1}}, {0, 1}).value.real(), 0.0, 1e-14);
}
