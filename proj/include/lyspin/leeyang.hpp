#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "lyspin/common.hpp"
#include "lyspin/exact.hpp"
#include "lyspin/model.hpp"

namespace lyspin {

/// Unnormalised Ising partition function as a polynomial in y = z^2, z = e^{beta h}:
/// Z = z^{-|sites|} sum_k c_k y^k with c_k = sum_{k up spins} exp(-beta H).
struct FugacityPolynomial {
  std::vector<double> coefficients;
  std::size_t sites = 0;
  double beta = 0.0;

  std::size_t degree() const { return coefficients.size() - 1; }
  bool palindromic(double tol = 1e-12) const {
    const std::size_t n = coefficients.size();
    double scale = 0.0;
    for (double c : coefficients) scale = std::max(scale, std::abs(c));
    for (std::size_t k = 0; k < n; ++k)
      if (std::abs(coefficients[k] - coefficients[n - 1 - k]) > tol * scale) return false;
    return true;
  }
};

inline constexpr std::size_t kMaxFugacitySites = 16;

inline bool is_ising_type(const SiteMeasure& mu) {
  if (mu.components() != 1 || mu.size() != 2) return false;
  const auto& a = mu.atom(0);
  const auto& b = mu.atom(1);
  return std::abs(std::abs(a.point[0]) - 1.0) == 0.0 && a.point[0] == -b.point[0] && a.weight == b.weight;
}

inline FugacityPolynomial fugacity_polynomial(const ValidatedModel& model, const EnumerationOptions& options = {}) {
  require(is_ising_type(model.measure()), ErrorCode::NotIsingType, "fugacity polynomials need the two-atom +-1 measure");
  const std::size_t S = model.site_count();
  require(S <= kMaxFugacitySites, ErrorCode::BudgetExceeded, "fugacity polynomial supports at most 16 sites");
  // Enumerate with zero field so the weights are exp(-beta H) / 2^S.
  const ValidatedModel zero = model.with_field(0.0);
  const std::size_t up_atom = model.measure().atom(0).point[0] > 0 ? 0 : 1;
  ConfigurationSpace space(zero, options);
  std::vector<double> c = space.reduce<std::vector<double>>(
      [&] { return std::vector<double>(S + 1, 0.0); },
      [&](const std::vector<std::size_t>& config, cplx w, std::vector<double>& acc) {
        std::size_t up = 0;
        for (auto a : config) up += (a == up_atom);
        acc[up] += w.real();
      },
      [](std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
      });
  const double norm = std::ldexp(1.0, static_cast<int>(S));
  for (auto& x : c) x *= norm;
  return {c, S, model.beta()};
}

struct FugacityRoot {
  cplx z = 0.0;
  double modulus = 0.0;
  cplx h = 0.0;
  /// |p(y)| / sum_k |c_k| |y|^k at y = z^2.
  double residual = 0.0;
};

inline constexpr double kRootResidualLimit = 1e-10;

namespace detail {

using lcplx = std::complex<long double>;

inline long double relative_residual(const std::vector<double>& c, lcplx y) {
  lcplx p = 0.0L;
  long double scale = 0.0L;
  const long double ay = std::abs(y);
  for (std::size_t k = c.size(); k-- > 0;) {
    p = p * y + static_cast<long double>(c[k]);
    scale = scale * ay + std::abs(static_cast<long double>(c[k]));
  }
  return std::abs(p) / scale;
}

/// Roots of sum_k c_k y^k: companion-matrix eigenvalues refined by
/// simultaneous Aberth-Ehrlich iteration in extended precision.
inline std::vector<lcplx> polynomial_roots(const std::vector<double>& c) {
  const std::size_t n = c.size() - 1;
  require(n >= 1 && c[n] != 0.0, ErrorCode::InvalidArgument, "polynomial must have positive degree");
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  for (std::size_t i = 0; i < n; ++i) companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -c[i] / c[n];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  require(solver.info() == Eigen::Success, ErrorCode::RootFindingFailure, "companion eigenvalue solve failed");
  std::vector<lcplx> roots;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
    roots.emplace_back(solver.eigenvalues()[i].real(), solver.eigenvalues()[i].imag());

  auto eval = [&](lcplx y, lcplx& dp) {
    lcplx p = 0.0L;
    dp = 0.0L;
    for (std::size_t k = c.size(); k-- > 0;) {
      dp = dp * y + p;
      p = p * y + static_cast<long double>(c[k]);
    }
    return p;
  };
  for (int iter = 0; iter < 100; ++iter) {
    long double largest_step = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      lcplx dp;
      const lcplx p = eval(roots[i], dp);
      if (p == lcplx(0.0L)) continue;
      const lcplx ratio = p / dp;
      lcplx repulsion = 0.0L;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && roots[i] != roots[j]) repulsion += 1.0L / (roots[i] - roots[j]);
      const lcplx step = ratio / (1.0L - ratio * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
      roots[i] -= step;
      largest_step = std::max(largest_step, std::abs(step) / std::max(1.0L, std::abs(roots[i])));
    }
    if (largest_step < 1e-18L) break;
  }
  return roots;
}

}  // namespace detail

/// All complex fugacity roots z of the Ising partition function (both square
/// roots of every y-root), with h = Log(z) / beta on the principal branch.
inline std::vector<FugacityRoot> zeros(const FugacityPolynomial& poly) {
  std::vector<FugacityRoot> out;
  const auto yroots = detail::polynomial_roots(poly.coefficients);
  for (const auto& y : yroots) {
    const long double res = detail::relative_residual(poly.coefficients, y);
    if (!(res <= kRootResidualLimit))
      throw Error(ErrorCode::RootFindingFailure,
                  "root residual " + std::to_string(static_cast<double>(res)) + " exceeds limit");
    const detail::lcplx r = std::sqrt(y);
    for (const auto& z : {r, -r}) {
      FugacityRoot fr;
      fr.z = cplx(static_cast<double>(z.real()), static_cast<double>(z.imag()));
      fr.modulus = static_cast<double>(std::abs(z));
      const detail::lcplx lg = std::log(z);
      fr.h = cplx(static_cast<double>(lg.real()), static_cast<double>(lg.imag())) / poly.beta;
      fr.residual = static_cast<double>(res);
      out.push_back(fr);
    }
  }
  std::sort(out.begin(), out.end(), [](const FugacityRoot& a, const FugacityRoot& b) {
    if (std::arg(a.z) != std::arg(b.z)) return std::arg(a.z) < std::arg(b.z);
    return a.modulus < b.modulus;
  });
  return out;
}

inline std::vector<FugacityRoot> zeros(const ValidatedModel& model, const EnumerationOptions& options = {}) {
  return zeros(fugacity_polynomial(model, options));
}

// ---------------------------------------------------------------------------
// Wedge conditions on the Laplace transform
// ---------------------------------------------------------------------------

inline double checked_modulus_ratio(const SiteMeasure& measure, double u, double v) {
  const double r = laplace_modulus_ratio(measure, cplx(u, v));
  if (!std::isfinite(r))
    throw Error(ErrorCode::DenominatorZero,
                "Laplace transform vanishes at " + std::to_string(u) + " + " + std::to_string(v) + "i");
  return r;
}

inline constexpr double kKappaRefinementTolerance = 1e-6;

/// max_{|v| <= u tan(alpha)} mu0(u) / |mu0(u + iv)| by grid sampling with
/// doubling refinement until successive maxima differ by < 1e-6, then
/// golden-section polishing around the best sample.
inline double kappa_of_wedge(const SiteMeasure& measure, double u, double alpha, int grid_points = 64) {
  require(u > 0.0, ErrorCode::InvalidArgument, "u must be positive");
  require(alpha >= 0.0 && alpha < std::numbers::pi / 2, ErrorCode::InvalidArgument, "alpha must lie in [0, pi/2)");
  require(grid_points >= 2, ErrorCode::InvalidArgument, "need at least two grid points");
  const double vmax = u * std::tan(alpha);
  if (vmax == 0.0) return checked_modulus_ratio(measure, u, 0.0);
  // The measure is symmetric, so |mu0(u + iv)| is even in v: scan [0, vmax].
  auto scan = [&](int points, double& best_v) {
    double best = 0.0;
    for (int k = 0; k <= points; ++k) {
      const double v = vmax * k / points;
      const double r = checked_modulus_ratio(measure, u, v);
      if (r > best) {
        best = r;
        best_v = v;
      }
    }
    return best;
  };
  int points = grid_points;
  double best_v = 0.0;
  double best = scan(points, best_v);
  for (int pass = 0; pass < 12; ++pass) {
    double v2 = 0.0;
    const double refined = scan(points * 2, v2);
    points *= 2;
    const bool converged = std::abs(refined - best) < kKappaRefinementTolerance;
    best = std::max(best, refined);
    if (refined >= best) best_v = v2;
    if (converged) break;
  }
  // Golden-section search within one grid cell each side of the best sample.
  const double h = vmax / points;
  double a = std::max(0.0, best_v - h), b = std::min(vmax, best_v + h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = checked_modulus_ratio(measure, u, c), fd = checked_modulus_ratio(measure, u, d);
  for (int it = 0; it < 60 && b - a > 1e-12 * std::max(1.0, vmax); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = checked_modulus_ratio(measure, u, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = checked_modulus_ratio(measure, u, d);
    }
    best = std::max({best, fc, fd});
  }
  return std::max({best, checked_modulus_ratio(measure, u, a), checked_modulus_ratio(measure, u, b)});
}

/// Closed form for the Ising measure: cosh u / sqrt(sinh^2 u + cos^2 v*) with v*
/// the point of [0, u tan alpha] closest to pi/2 (mod pi).
inline double ising_kappa_closed_form(double u, double alpha) {
  const double vmax = u * std::tan(alpha);
  double c2 = std::cos(vmax) * std::cos(vmax);
  if (vmax >= std::numbers::pi / 2) c2 = 0.0;
  return std::cosh(u) / std::sqrt(std::sinh(u) * std::sinh(u) + c2);
}

struct WedgeCertificate {
  double u0 = 0.0;
  double alpha_tilde = 0.0;
  double u_tilde = 0.0;
  double kappa = 1.0;
  double kappa_cap = 10.0;
  int u_grid = 0;
  int alpha_grid = 0;
  int segment_grid = 0;
};

struct WedgeSearch {
  int u_points = 32;
  int alpha_points = 32;
  int segment_points = 64;
  double kappa_cap = 10.0;
};

/// Scans u on a geometric grid in (u0, 64 u0] and alpha on the linear grid
/// k (pi/2) / (A + 1); returns the largest alpha, and for it the smallest u,
/// with kappa_of_wedge <= cap.
inline WedgeCertificate find_wedge_params(const SiteMeasure& measure, double u0, const WedgeSearch& search = {}) {
  require(u0 > 0.0, ErrorCode::InvalidArgument, "u0 must be positive");
  require(search.u_points >= 1 && search.alpha_points >= 1, ErrorCode::InvalidArgument, "grids must be nonempty");
  for (int k = search.alpha_points; k >= 1; --k) {
    const double alpha = k * (std::numbers::pi / 2) / (search.alpha_points + 1);
    for (int j = 1; j <= search.u_points; ++j) {
      const double u = u0 * std::pow(64.0, static_cast<double>(j) / search.u_points);
      const double kappa = kappa_of_wedge(measure, u, alpha, search.segment_points);
      if (kappa <= search.kappa_cap)
        return {u0, alpha, u, kappa, search.kappa_cap, search.u_points, search.alpha_points, search.segment_points};
    }
  }
  throw Error(ErrorCode::NoWedgeFound, "no (u, alpha) grid point satisfies kappa <= " + std::to_string(search.kappa_cap));
}

}  // namespace lyspin
