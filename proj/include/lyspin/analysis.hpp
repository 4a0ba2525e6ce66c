#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "lyspin/cluster.hpp"
#include "lyspin/common.hpp"
#include "lyspin/exact.hpp"
#include "lyspin/leeyang.hpp"
#include "lyspin/model.hpp"
#include "lyspin/parallel.hpp"
#include "lyspin/transfer.hpp"

namespace lyspin {

// ---------------------------------------------------------------------------
// The wedge domain Sigma_alpha
// ---------------------------------------------------------------------------

/// Triangle 0, p+, p- with p+- = eta (1 +- i tan alpha), minus the closed
/// delta-disk at the origin. Boundary: arc gamma_c, radial segments gamma_r,
/// vertical segment gamma_v.
struct WedgeDomain {
  double alpha = 1.0;
  double delta = 0.1;
  double eta = 1.0;

  double exponent() const { return std::numbers::pi / (2.0 * alpha); }
  cplx p_plus() const { return {eta, eta * std::tan(alpha)}; }
  cplx p_minus() const { return {eta, -eta * std::tan(alpha)}; }

  void validate() const {
    require(alpha > 0.0 && alpha < std::numbers::pi / 2, ErrorCode::InvalidArgument, "alpha must lie in (0, pi/2)");
    require(delta > 0.0 && delta < eta, ErrorCode::InvalidArgument, "need 0 < delta < eta");
  }

  bool contains(cplx z) const {
    return std::abs(z) > delta && z.real() < eta && std::abs(std::arg(z)) < alpha;
  }

  /// z = delta e^{i theta}, theta from -alpha to alpha, endpoints included.
  std::vector<cplx> gamma_c(std::size_t points) const {
    std::vector<cplx> out;
    for (std::size_t k = 0; k < points; ++k) {
      const double th = points == 1 ? 0.0 : -alpha + 2.0 * alpha * static_cast<double>(k) / static_cast<double>(points - 1);
      out.push_back(std::polar(delta, th));
    }
    return out;
  }
  /// z = r e^{+- i alpha}, r geometric from delta to eta / cos(alpha).
  std::vector<cplx> gamma_r(std::size_t points, int sign) const {
    std::vector<cplx> out;
    const double rmax = eta / std::cos(alpha);
    for (std::size_t k = 0; k < points; ++k) {
      const double f = points == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(points - 1);
      out.push_back(std::polar(delta * std::pow(rmax / delta, f), sign * alpha));
    }
    return out;
  }
  /// z = eta + i v, v from -eta tan(alpha) to eta tan(alpha).
  std::vector<cplx> gamma_v(std::size_t points) const {
    std::vector<cplx> out;
    const double vmax = eta * std::tan(alpha);
    for (std::size_t k = 0; k < points; ++k) {
      const double f = points == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(points - 1);
      out.push_back({eta, -vmax + 2.0 * vmax * f});
    }
    return out;
  }
  /// Equal sample counts on gamma_c, both gamma_r and gamma_v.
  std::vector<cplx> boundary_samples(std::size_t total) const {
    const std::size_t per = std::max<std::size_t>(1, total / 4);
    std::vector<cplx> out = gamma_c(per);
    for (auto z : gamma_r(per, +1)) out.push_back(z);
    for (auto z : gamma_r(per, -1)) out.push_back(z);
    for (auto z : gamma_v(per)) out.push_back(z);
    return out;
  }
  /// Polar grid strictly inside: cell-centred angles and radii between the
  /// arc and the vertical side.
  std::vector<cplx> interior_samples(std::size_t count) const {
    const std::size_t nth = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
    const std::size_t nr = (count + nth - 1) / nth;
    std::vector<cplx> out;
    for (std::size_t j = 0; j < nth && out.size() < count; ++j) {
      const double th = -alpha + 2.0 * alpha * (static_cast<double>(j) + 0.5) / static_cast<double>(nth);
      const double rmax = eta / std::cos(th);
      for (std::size_t i = 0; i < nr && out.size() < count; ++i) {
        const double r = delta + (rmax - delta) * (static_cast<double>(i) + 0.5) / static_cast<double>(nr);
        out.push_back(std::polar(r, th));
      }
    }
    return out;
  }
};

/// Principal-branch power z^p for Re z > 0.
inline cplx principal_power(cplx z, double p) { return std::exp(p * std::log(z)); }

/// phi_alpha(theta) = cos(theta pi / 2 alpha) / cos(theta)^{pi / 2 alpha}.
inline double phi_alpha(double alpha, double theta) {
  const double p = std::numbers::pi / (2.0 * alpha);
  return std::cos(theta * p) / std::pow(std::cos(theta), p);
}

/// eps(alpha) = min(1, m0 / (c1^{pi/2 alpha} sup_{|theta| <= alpha} |phi_alpha|)); the
/// supremum is phi_alpha(0) = 1.
inline double epsilon_of_alpha(double alpha, double m0, double c1) {
  const double p = std::numbers::pi / (2.0 * alpha);
  return std::min(1.0, m0 / std::pow(c1, p));
}

struct DomainParameters {
  WedgeDomain domain;
  double epsilon = 1.0;
  /// Smallest admissible alpha (complex h), or the certificate alpha (real h).
  double alpha_min = 0.0;
  /// Which rule produced the parameters: "real", "complex-small", "complex-large".
  std::string rule;
};

using CertificateOracle = std::function<WedgeCertificate(double u0)>;

/// Domain parameters for the maximum-principle argument at field h.
/// Real h: delta = min(1/10, h/2), eta = u~(max(h, c1)), alpha = alpha~(max(h, c1)).
/// Complex h with Re h < c1: delta = min(1/10, Re h^{pi/2 alpha}), eta = c1,
/// alpha = `alpha` if given, else the midpoint of (|arg h|, pi/2).
/// Complex h with Re h >= c1: the real-h rule applied to Re h.
/// eps = min(1, m0 / sup_{gamma_v} |Re z^{pi/2 alpha}|) = min(1, m0 / eta^{pi/2 alpha}).
inline DomainParameters select_parameters(cplx h, const CertificateOracle& certificate, double c1, double m0,
                                          double alpha = 0.0) {
  require(h.real() > 0.0, ErrorCode::OutsideHalfPlane, "select_parameters needs Re h > 0");
  require(c1 > 0.0 && m0 > 0.0, ErrorCode::InvalidArgument, "c1 and m0 must be positive");
  DomainParameters out;
  WedgeDomain& d = out.domain;
  const double arg = std::abs(std::arg(h));
  if (h.imag() == 0.0 || h.real() >= c1) {
    const double u = std::max(h.real(), c1);
    const WedgeCertificate cert = certificate(u);
    d.delta = std::min(0.1, h.real() / 2.0);
    d.eta = cert.u_tilde;
    d.alpha = cert.alpha_tilde;
    out.alpha_min = cert.alpha_tilde;
    out.rule = h.imag() == 0.0 ? "real" : "complex-large";
    require(arg < d.alpha, ErrorCode::OutsideHalfPlane, "h lies outside the certified wedge");
  } else {
    out.alpha_min = arg;
    d.alpha = alpha > 0.0 ? alpha : 0.5 * (arg + std::numbers::pi / 2);
    require(d.alpha > arg && d.alpha < std::numbers::pi / 2, ErrorCode::InvalidArgument,
            "alpha must exceed |arg h| and stay below pi/2");
    d.eta = c1;
    d.delta = std::min(0.1, principal_power(h, d.exponent()).real());
    out.rule = "complex-small";
  }
  d.validate();
  require(d.contains(h), ErrorCode::OutsideHalfPlane, "h does not lie inside the selected domain");
  out.epsilon = std::min(1.0, m0 / std::pow(d.eta, d.exponent()));
  return out;
}

/// Sites and components of a two-point function.
struct TwoPointSlots {
  Point origin;
  Point target;
  std::size_t origin_component = 0;
  std::size_t target_component = 0;
};

/// F(z) = exp(eps z^{pi/2 alpha} |x|) <phi_0^i ; phi_x^j>_z on the principal branch.
inline cplx F_function(const ValidatedModel& model, const TwoPointSlots& slots, double epsilon, double alpha, cplx z,
                       const EnumerationOptions& options = {}) {
  require(z.real() > 0.0, ErrorCode::OutsideHalfPlane, "F is evaluated for Re z > 0 only");
  const double dist = model.lattice().distance(slots.origin, slots.target);
  const cplx pre = std::exp(epsilon * principal_power(z, std::numbers::pi / (2.0 * alpha)) * dist);
  const auto u = ursell(model.with_field(z), {slots.origin, slots.target},
                        {slots.origin_component, slots.target_component}, options);
  return pre * u.value;
}

struct MaxPrincipleReport {
  double boundary_max = 0.0;
  double interior_max = 0.0;
  cplx boundary_argmax = 0.0;
  cplx interior_argmax = 0.0;
  /// (boundary_max * (1 + tol) - interior_max) / boundary_max
  double margin = 0.0;
  std::size_t boundary_points = 0;
  std::size_t interior_points = 0;
  bool refined = false;
  bool passed = false;
};

inline constexpr double kMaxPrincipleTolerance = 1e-9;

/// Checks sup_interior |F| <= sup_boundary |F| (1 + 1e-9) on sampled points;
/// on failure the boundary sample is doubled once before SampleTooCoarse.
inline MaxPrincipleReport max_principle_check(const ValidatedModel& model, const TwoPointSlots& slots,
                                              const WedgeDomain& domain, double epsilon,
                                              std::size_t boundary_points = 512, std::size_t interior_points = 128,
                                              const std::vector<cplx>& extra_interior = {},
                                              const EnumerationOptions& options = {}, bool throw_on_failure = true) {
  domain.validate();
  auto evaluate = [&](const std::vector<cplx>& zs, double& best, cplx& where) {
    std::vector<double> mod(zs.size());
    parallel_for(zs.size(), options.parallel, [&](std::size_t k) {
      EnumerationOptions serial = options;
      serial.parallel.threads = 1;
      mod[k] = std::abs(F_function(model, slots, epsilon, domain.alpha, zs[k], serial));
    });
    best = 0.0;
    for (std::size_t k = 0; k < zs.size(); ++k)
      if (mod[k] > best || k == 0) {
        best = mod[k];
        where = zs[k];
      }
  };
  std::vector<cplx> interior = domain.interior_samples(interior_points);
  for (auto z : extra_interior) {
    require(domain.contains(z), ErrorCode::InvalidArgument, "extra interior point lies outside the domain");
    interior.push_back(z);
  }
  MaxPrincipleReport r;
  r.interior_points = interior.size();
  evaluate(interior, r.interior_max, r.interior_argmax);
  std::size_t nb = boundary_points;
  for (int pass = 0; pass < 2; ++pass) {
    const auto boundary = domain.boundary_samples(nb);
    r.boundary_points = boundary.size();
    evaluate(boundary, r.boundary_max, r.boundary_argmax);
    r.margin = (r.boundary_max * (1.0 + kMaxPrincipleTolerance) - r.interior_max) / r.boundary_max;
    r.passed = r.interior_max <= r.boundary_max * (1.0 + kMaxPrincipleTolerance);
    if (r.passed) break;
    r.refined = true;
    nb *= 2;
  }
  if (!r.passed && throw_on_failure)
    throw Error(ErrorCode::SampleTooCoarse, "interior max " + std::to_string(r.interior_max) +
                                                " exceeds boundary max " + std::to_string(r.boundary_max) +
                                                " after refinement");
  return r;
}

// ---------------------------------------------------------------------------
// Decay fits
// ---------------------------------------------------------------------------

struct DecaySample {
  double length = 0.0;
  double log_modulus = 0.0;
};

struct DecayFit {
  std::vector<DecaySample> samples;
  /// Decay rate m: log|u| ~ intercept - slope * length.
  double slope = 0.0;
  double intercept = 0.0;
  /// Indices [first, last) of the candidate separations that entered the fit.
  std::size_t window_first = 0, window_last = 0;
  double residual = 0.0;
  /// Smallest c with |u| <= c e^{-slope * length} on every sample.
  double envelope = 0.0;
  /// Correlations identically zero: slope = +inf.
  bool infinite = false;
  /// Points dropped because |u| was below the cancellation floor.
  std::size_t dropped = 0;
  /// Candidates outside the boundary window (free b.c.).
  std::size_t trimmed = 0;
};

/// True when every point keeps r + 1 sites from each free end.
inline bool inside_boundary_window(const ValidatedModel& model, const std::vector<Point>& points) {
  const auto& lat = model.lattice();
  if (lat.boundary() == Boundary::Periodic) return true;
  const int margin = model.couplings().range + 1;
  for (const auto& p : points)
    for (std::size_t k = 0; k < p.size(); ++k)
      if (p[k] < margin || lat.dims()[k] - 1 - p[k] < margin) return false;
  return true;
}

inline constexpr std::size_t kMinFitPoints = 4;

/// Least-squares fit of log|u| against length.
inline DecayFit fit_decay(std::vector<DecaySample> samples, std::size_t dropped = 0) {
  DecayFit f;
  f.dropped = dropped;
  if (samples.empty()) {
    f.infinite = true;
    f.slope = std::numeric_limits<double>::infinity();
    return f;
  }
  require(samples.size() >= kMinFitPoints, ErrorCode::InsufficientData,
          std::to_string(samples.size()) + " usable points; a decay fit needs 4");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    sx += s.length;
    sy += s.log_modulus;
    sxx += s.length * s.length;
    sxy += s.length * s.log_modulus;
  }
  const double den = n * sxx - sx * sx;
  require(den > 0.0, ErrorCode::InsufficientData, "decay fit needs at least two distinct lengths");
  const double b = (n * sxy - sx * sy) / den;
  f.slope = -b;
  f.intercept = (sy - b * sx) / n;
  double rss = 0.0;
  for (const auto& s : samples) {
    const double e = s.log_modulus - (f.intercept - f.slope * s.length);
    rss += e * e;
    f.envelope = std::max(f.envelope, std::exp(s.log_modulus + f.slope * s.length));
  }
  f.residual = std::sqrt(rss / n);
  f.samples = std::move(samples);
  if (f.slope < 0.0)
    throw Error(ErrorCode::NonDecay, "fitted decay rate " + std::to_string(f.slope) + " is negative");
  return f;
}

/// Mass-gap estimate from a sequence of chain volumes. For each separation the
/// largest admissible volume is used: periodic needs x <= L/4, free needs both
/// sites at least r + 1 from the ends (the pair is centred). Values below the
/// cancellation floor are dropped and counted.
inline DecayFit mass_gap_fit(const std::vector<ValidatedModel>& volumes, const std::vector<int>& separations,
                             std::size_t i = 0, std::size_t j = 0, const EnumerationOptions& options = {}) {
  require(!volumes.empty(), ErrorCode::InsufficientData, "no volumes given");
  std::vector<DecaySample> samples;
  std::size_t dropped = 0, used_first = separations.size(), used_last = 0;
  bool any_nonzero = false, any_used = false;
  for (std::size_t k = 0; k < separations.size(); ++k) {
    const int x = separations[k];
    const ValidatedModel* best = nullptr;
    Point a, b;
    for (const auto& m : volumes) {
      const auto& lat = m.lattice();
      require(lat.dimension() == 1, ErrorCode::NotAChain, "mass_gap_fit expects chains");
      const int L = lat.dims()[0];
      Point pa, pb;
      if (lat.boundary() == Boundary::Periodic) {
        if (4 * x > L) continue;
        pa = {0};
        pb = {x};
      } else {
        const int first = (L - 1 - x) / 2;
        const int margin = m.couplings().range + 1;
        if (first < margin || L - 1 - (first + x) < margin) continue;
        pa = {first};
        pb = {first + x};
      }
      if (!best || lat.site_count() > best->site_count()) {
        best = &m;
        a = pa;
        b = pb;
      }
    }
    if (!best) continue;
    any_used = true;
    const auto u = ursell(*best, {a, b}, {i, j}, options);
    if (u.value != cplx(0.0)) any_nonzero = true;
    if (u.negligible()) {
      ++dropped;
      continue;
    }
    used_first = std::min(used_first, k);
    used_last = std::max(used_last, k + 1);
    samples.push_back({static_cast<double>(x), std::log(std::abs(u.value))});
  }
  require(any_used, ErrorCode::InsufficientData, "no separation fits inside the given volumes");
  if (!any_nonzero || samples.empty()) {
    DecayFit f = fit_decay({}, dropped);
    return f;
  }
  DecayFit f = fit_decay(std::move(samples), dropped);
  f.window_first = used_first;
  f.window_last = used_last;
  return f;
}

/// Shortest total Manhattan length over labelled spanning trees of the points.
inline int tree_length(const std::vector<Point>& points, const LatticeBox* box = nullptr) {
  const std::size_t n = points.size();
  require(n >= 1 && n <= 6, ErrorCode::InvalidArgument, "tree_length supports 1 to 6 points");
  auto dist = [&](std::size_t a, std::size_t b) {
    if (box) return box->distance(points[a], points[b]);
    int d = 0;
    for (std::size_t k = 0; k < points[a].size(); ++k) d += std::abs(points[a][k] - points[b][k]);
    return d;
  };
  int best = std::numeric_limits<int>::max();
  detail::for_each_labelled_tree(n, [&](const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    int len = 0;
    for (auto [a, b] : edges) len += dist(a, b);
    best = std::min(best, len);
  });
  return n == 1 ? 0 : best;
}

/// Fit of log|u_n| against tree length over a family of n-point configurations.
/// Free b.c.: configurations reaching within r + 1 of an end are trimmed.
inline DecayFit tree_decay_fit(const ValidatedModel& model, const std::vector<std::vector<Point>>& families,
                               const std::vector<std::size_t>& components, const EnumerationOptions& options = {}) {
  std::vector<DecaySample> samples;
  std::size_t dropped = 0, trimmed = 0, first = families.size(), last = 0;
  bool any_nonzero = false;
  for (std::size_t k = 0; k < families.size(); ++k) {
    const auto& pts = families[k];
    require(pts.size() == components.size(), ErrorCode::InvalidArgument, "one component per point required");
    require(pts.size() >= 2 && pts.size() <= 4, ErrorCode::InvalidArgument, "tree decay fits use 2 to 4 points");
    if (!inside_boundary_window(model, pts)) {
      ++trimmed;
      continue;
    }
    const auto u = ursell(model, pts, components, options);
    if (u.value != cplx(0.0)) any_nonzero = true;
    if (u.negligible()) {
      ++dropped;
      continue;
    }
    first = std::min(first, k);
    last = std::max(last, k + 1);
    samples.push_back({static_cast<double>(tree_length(pts, &model.lattice())), std::log(std::abs(u.value))});
  }
  if (!any_nonzero || samples.empty()) {
    DecayFit f = fit_decay({}, dropped);
    f.trimmed = trimmed;
    return f;
  }
  std::vector<double> lengths;
  for (const auto& s : samples) lengths.push_back(s.length);
  std::sort(lengths.begin(), lengths.end());
  const auto distinct = static_cast<std::size_t>(std::unique(lengths.begin(), lengths.end()) - lengths.begin());
  require(distinct >= kMinFitPoints, ErrorCode::InsufficientData,
          "tree decay fit needs 4 distinct tree lengths inside the boundary window");
  DecayFit f = fit_decay(std::move(samples), dropped);
  f.trimmed = trimmed;
  f.window_first = first;
  f.window_last = last;
  return f;
}

// ---------------------------------------------------------------------------
// Ratio scan m(h) / Re h
// ---------------------------------------------------------------------------

struct RatioRow {
  cplx h = 0.0;
  MassGap gap;
  double ratio = 0.0;
};

struct RatioScan {
  std::vector<RatioRow> rows;
  double infimum = std::numeric_limits<double>::infinity();
  cplx infimum_at = 0.0;
};

/// Spectral mass gap and m / Re h for every grid point (Re h > 0 required).
inline RatioScan ratio_scan(const ValidatedModel& model, const std::vector<cplx>& grid, Parallelism par = {}) {
  for (auto h : grid)
    require(h.real() > 0.0, ErrorCode::OutsideHalfPlane, "ratio_scan grid point with Re h <= 0");
  RatioScan scan;
  scan.rows.resize(grid.size());
  parallel_for(grid.size(), par, [&](std::size_t k) {
    RatioRow row;
    row.h = grid[k];
    row.gap = spectral_mass_gap(model.with_field(grid[k]));
    row.ratio = row.gap.value / grid[k].real();
    scan.rows[k] = row;
  });
  for (const auto& r : scan.rows)
    if (r.ratio < scan.infimum) {
      scan.infimum = r.ratio;
      scan.infimum_at = r.h;
    }
  return scan;
}

/// Measured m divided by eps(alpha) rho (1 - rho^{pi/2 alpha - 1}), with
/// rho = Re h^{pi/2 alpha}; the lower bound's unnamed constant is this ratio.
inline double explicit_bound_ratio(double mass, cplx h, double alpha, double m0, double c1) {
  const double p = std::numbers::pi / (2.0 * alpha);
  const double rho = principal_power(h, p).real();
  const double bound = epsilon_of_alpha(alpha, m0, c1) * rho * (1.0 - std::pow(rho, p - 1.0));
  return mass / bound;
}

}  // namespace lyspin
