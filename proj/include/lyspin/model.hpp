#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lyspin/common.hpp"

namespace lyspin {

// ---------------------------------------------------------------------------
// Single-site a-priori measure
// ---------------------------------------------------------------------------

struct Atom {
  std::vector<double> point;
  double weight = 1.0;
};

/// Atomic a-priori measure on R^N. Continuous measures (circle, sphere) enter
/// through symmetric quadratures so every downstream sum stays exact.
class SiteMeasure {
 public:
  SiteMeasure() = default;

  explicit SiteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    require(!atoms_.empty(), ErrorCode::InvalidArgument, "site measure needs at least one atom");
    components_ = atoms_.front().point.size();
    require(components_ >= 1, ErrorCode::InvalidArgument, "atoms must have at least one component");
    for (const auto& a : atoms_) {
      require(a.point.size() == components_, ErrorCode::InvalidArgument,
              "all atoms must have the same number of components");
      require(a.weight > 0.0 && std::isfinite(a.weight), ErrorCode::InvalidArgument,
              "atom weights must be positive and finite");
      double norm2 = 0.0;
      for (double c : a.point) {
        require(std::isfinite(c), ErrorCode::InvalidArgument, "atom coordinates must be finite");
        norm2 += c * c;
      }
      sup_norm_ = std::max(sup_norm_, std::sqrt(norm2));
      max_first_ = std::max(max_first_, a.point[0]);
    }
  }

  std::size_t size() const noexcept { return atoms_.size(); }
  std::size_t components() const noexcept { return components_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const Atom& atom(std::size_t a) const { return atoms_[a]; }
  /// max |point| over the support.
  double sup_norm() const noexcept { return sup_norm_; }
  /// max point^1 over the support; the field direction.
  double max_first() const noexcept { return max_first_; }
  double total_mass() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.weight;
    return m;
  }

 private:
  std::vector<Atom> atoms_;
  std::size_t components_ = 0;
  double sup_norm_ = 0.0;
  double max_first_ = -1e300;
};

inline SiteMeasure make_ising() { return SiteMeasure({{{1.0}, 1.0}, {{-1.0}, 1.0}}); }

namespace detail {

inline void push_orbit(std::vector<Atom>& out, double x, double y, double z, double w) {
  // All sign combinations of all distinct permutations of (x, y, z).
  std::vector<std::array<double, 3>> seen;
  std::array<double, 3> base{x, y, z};
  std::sort(base.begin(), base.end());
  do {
    for (int mask = 0; mask < 8; ++mask) {
      std::array<double, 3> p = base;
      bool skip = false;
      for (int k = 0; k < 3; ++k) {
        if (mask & (1 << k)) {
          if (p[k] == 0.0) skip = true;
          p[k] = -p[k];
        }
      }
      if (skip) continue;
      if (std::find(seen.begin(), seen.end(), p) != seen.end()) continue;
      seen.push_back(p);
      out.push_back({{p[0], p[1], p[2]}, w});
    }
  } while (std::next_permutation(base.begin(), base.end()));
}

}  // namespace detail

/// Symmetric quadrature of the uniform probability measure on S^{N-1}.
/// N = 2: `nodes` equally spaced points on the circle (nodes divisible by 4).
/// N = 3: octahedrally symmetric Lebedev rules with 6, 14, 26 or 38 nodes.
inline SiteMeasure make_sphere_uniform(int components, int nodes) {
  require(components >= 2, ErrorCode::InvalidArgument, "use make_ising for one-component spins");
  require(components <= 3, ErrorCode::UnsupportedDimension,
          "sphere quadrature is provided for N = 2, 3 only");
  std::vector<Atom> atoms;
  if (components == 2) {
    require(nodes >= 4 && nodes % 4 == 0, ErrorCode::InvalidArgument,
            "circle quadrature needs a node count divisible by 4");
    // Build one quadrant and reflect it so that the node set is exactly
    // invariant under coordinate sign flips and the swap x <-> y.
    const int quarter = nodes / 4;
    std::vector<std::pair<double, double>> q;
    for (int k = 0; k < quarter; ++k) {
      double theta = 2.0 * std::numbers::pi * k / nodes;
      q.emplace_back(std::cos(theta), std::sin(theta));
    }
    // Enforce the swap symmetry inside the quadrant: node k pairs with quarter - k.
    for (int k = 1; k < quarter; ++k) {
      int partner = quarter - k;
      if (partner > k) {
        q[partner].first = q[k].second;
        q[partner].second = q[k].first;
      }
    }
    const double w = 1.0 / nodes;
    for (auto [c, s] : q) {
      atoms.push_back({{c, s}, w});
      atoms.push_back({{-s, c}, w});
      atoms.push_back({{-c, -s}, w});
      atoms.push_back({{s, -c}, w});
    }
    for (auto& a : atoms)
      for (auto& v : a.point)
        if (v == 0.0) v = 0.0;  // normalise -0.0
    return SiteMeasure(std::move(atoms));
  }
  const double r2 = 1.0 / std::sqrt(2.0);
  const double r3 = 1.0 / std::sqrt(3.0);
  switch (nodes) {
    case 6:
      detail::push_orbit(atoms, 1.0, 0.0, 0.0, 1.0 / 6.0);
      break;
    case 14:
      detail::push_orbit(atoms, 1.0, 0.0, 0.0, 1.0 / 15.0);
      detail::push_orbit(atoms, r3, r3, r3, 3.0 / 40.0);
      break;
    case 26:
      detail::push_orbit(atoms, 1.0, 0.0, 0.0, 1.0 / 21.0);
      detail::push_orbit(atoms, r2, r2, 0.0, 4.0 / 105.0);
      detail::push_orbit(atoms, r3, r3, r3, 9.0 / 280.0);
      break;
    case 38: {
      const double p = 0.4597008433809831;
      const double q = std::sqrt(1.0 - p * p);
      detail::push_orbit(atoms, 1.0, 0.0, 0.0, 1.0 / 105.0);
      detail::push_orbit(atoms, r3, r3, r3, 9.0 / 280.0);
      detail::push_orbit(atoms, p, q, 0.0, 1.0 / 35.0);
      break;
    }
    default:
      throw Error(ErrorCode::InvalidArgument, "sphere quadrature for N = 3 supports 6, 14, 26 or 38 nodes");
  }
  return SiteMeasure(std::move(atoms));
}

/// Laplace transform of the first component: sum_a w_a exp(z t_a^1).
inline cplx laplace_transform(const SiteMeasure& measure, cplx z) {
  cplx sum = 0.0;
  for (const auto& a : measure.atoms()) sum += a.weight * std::exp(z * a.point[0]);
  return sum;
}

/// mu0(Re z) / |mu0(z)| evaluated with a common exponential shift so large
/// fields do not overflow. Returns +inf when the denominator vanishes.
inline double laplace_modulus_ratio(const SiteMeasure& measure, cplx z) {
  const double shift = measure.max_first();
  double num = 0.0;
  cplx den = 0.0;
  double scale = 0.0;
  for (const auto& a : measure.atoms()) {
    const double t = a.point[0] - shift;
    const double e = a.weight * std::exp(z.real() * t);
    num += e;
    scale += e;
    den += e * std::exp(cplx(0.0, z.imag() * a.point[0]));
  }
  const double d = std::abs(den);
  if (d <= 1e-14 * scale) return std::numeric_limits<double>::infinity();
  return num / d;
}

/// Complex-weighted atomic measure (same support as the a-priori measure).
struct ComplexMeasure {
  const SiteMeasure* base = nullptr;
  std::vector<cplx> weights;

  std::size_t size() const noexcept { return weights.size(); }
  cplx mean(std::size_t component) const {
    cplx m = 0.0;
    for (std::size_t a = 0; a < weights.size(); ++a) m += weights[a] * base->atom(a).point[component];
    return m;
  }
  cplx total() const { return std::accumulate(weights.begin(), weights.end(), cplx(0.0)); }
};

/// nu_w(t) = exp(w t^1) mu0(t) / mu0^(w), normalised exactly to total mass 1.
inline ComplexMeasure tilted_site_measure(const SiteMeasure& measure, cplx w) {
  const double shift = w.real() >= 0.0 ? measure.max_first() : [&] {
    double mn = 1e300;
    for (const auto& a : measure.atoms()) mn = std::min(mn, a.point[0]);
    return mn;
  }();
  ComplexMeasure out{&measure, {}};
  out.weights.reserve(measure.size());
  cplx norm = 0.0;
  double scale = 0.0;
  for (const auto& a : measure.atoms()) {
    cplx e = a.weight * std::exp(w * (a.point[0] - shift));
    out.weights.push_back(e);
    norm += e;
    scale += std::abs(e);
  }
  if (std::abs(norm) <= 1e-13 * scale)
    throw Error(ErrorCode::ZeroNormalizer, "Laplace transform of the site measure vanishes at the tilt");
  for (auto& x : out.weights) x /= norm;
  return out;
}

/// Finite proxy for rotation invariance: invariance of the weighted atom set
/// under t -> -t (N = 1) or under each coordinate sign flip and each adjacent
/// coordinate transposition (N >= 2), which generate the hyperoctahedral group.
inline bool has_symmetry_proxy(const SiteMeasure& measure, double tol = 1e-12) {
  const std::size_t n = measure.components();
  auto invariant_under = [&](auto&& transform) {
    for (const auto& a : measure.atoms()) {
      std::vector<double> image = transform(a.point);
      bool matched = false;
      for (const auto& b : measure.atoms()) {
        bool same = true;
        for (std::size_t k = 0; k < n && same; ++k) same = std::abs(b.point[k] - image[k]) <= tol;
        if (same && std::abs(b.weight - a.weight) <= tol * std::max(1.0, a.weight)) {
          matched = true;
          break;
        }
      }
      if (!matched) return false;
    }
    return true;
  };
  for (std::size_t k = 0; k < n; ++k) {
    if (!invariant_under([k](std::vector<double> p) {
          p[k] = -p[k];
          return p;
        }))
      return false;
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!invariant_under([k](std::vector<double> p) {
          std::swap(p[k], p[k + 1]);
          return p;
        }))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Lattice, couplings, model
// ---------------------------------------------------------------------------

enum class Boundary { Free, Periodic };

inline std::string boundary_name(Boundary b) { return b == Boundary::Free ? "free" : "periodic"; }

class LatticeBox {
 public:
  LatticeBox() = default;
  LatticeBox(std::vector<int> dims, Boundary boundary) : dims_(std::move(dims)), boundary_(boundary) {
    require(!dims_.empty(), ErrorCode::InvalidArgument, "lattice needs at least one dimension");
    sites_ = 1;
    for (int L : dims_) {
      require(L >= 1, ErrorCode::InvalidArgument, "side lengths must be positive");
      sites_ *= static_cast<std::size_t>(L);
    }
  }

  std::size_t dimension() const noexcept { return dims_.size(); }
  const std::vector<int>& dims() const noexcept { return dims_; }
  Boundary boundary() const noexcept { return boundary_; }
  std::size_t site_count() const noexcept { return sites_; }

  /// Row-major: the last coordinate varies fastest.
  std::size_t index(const Point& p) const {
    require(p.size() == dims_.size(), ErrorCode::InvalidArgument, "point has wrong dimension");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      require(p[k] >= 0 && p[k] < dims_[k], ErrorCode::InvalidArgument, "point outside the lattice box");
      idx = idx * static_cast<std::size_t>(dims_[k]) + static_cast<std::size_t>(p[k]);
    }
    return idx;
  }

  bool contains(const Point& p) const {
    if (p.size() != dims_.size()) return false;
    for (std::size_t k = 0; k < dims_.size(); ++k)
      if (p[k] < 0 || p[k] >= dims_[k]) return false;
    return true;
  }

  Point point(std::size_t idx) const {
    Point p(dims_.size());
    for (std::size_t k = dims_.size(); k-- > 0;) {
      p[k] = static_cast<int>(idx % static_cast<std::size_t>(dims_[k]));
      idx /= static_cast<std::size_t>(dims_[k]);
    }
    return p;
  }

  /// Site reached from `from` by `offset`; wraps for periodic boxes, empty if
  /// the target leaves a free box.
  std::optional<std::size_t> shifted(std::size_t from, const Point& offset) const {
    Point p = point(from);
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      int c = p[k] + offset[k];
      if (boundary_ == Boundary::Periodic) {
        c %= dims_[k];
        if (c < 0) c += dims_[k];
      } else if (c < 0 || c >= dims_[k]) {
        return std::nullopt;
      }
      p[k] = c;
    }
    return index(p);
  }

  /// Manhattan distance; wraps per coordinate for periodic boxes.
  int distance(const Point& a, const Point& b) const {
    int d = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      int diff = std::abs(a[k] - b[k]);
      if (boundary_ == Boundary::Periodic) diff = std::min(diff, dims_[k] - diff);
      d += diff;
    }
    return d;
  }
  int distance(std::size_t a, std::size_t b) const { return distance(point(a), point(b)); }

  bool operator==(const LatticeBox&) const = default;

 private:
  std::vector<int> dims_;
  Boundary boundary_ = Boundary::Free;
  std::size_t sites_ = 0;
};

inline int manhattan_norm(const Point& p) {
  int d = 0;
  for (int c : p) d += std::abs(c);
  return d;
}

/// Translation-invariant coupling: every site x is bonded to x + offset.
struct OffsetCoupling {
  Point offset;
  std::vector<double> J;
};

/// Coupling attached to one explicit unordered pair of sites.
struct PairCoupling {
  Point a, b;
  std::vector<double> J;
};

struct CouplingSet {
  int range = 2;
  std::vector<OffsetCoupling> offsets;
  std::vector<PairCoupling> pairs;

  static CouplingSet nearest_neighbour(std::size_t dimension, std::vector<double> J) {
    CouplingSet c;
    c.range = 2;
    for (std::size_t k = 0; k < dimension; ++k) {
      Point o(dimension, 0);
      o[k] = 1;
      c.offsets.push_back({o, J});
    }
    return c;
  }

  bool translation_invariant() const noexcept { return pairs.empty(); }
};

struct ModelSpec {
  LatticeBox lattice;
  SiteMeasure measure;
  CouplingSet couplings;
  double beta = 1.0;
  cplx field = 0.0;
};

/// One interacting pair after expansion of the coupling set on the box.
/// Periodic boxes use the multigraph convention: each (site, offset) pair is a
/// bond, so a length-2 ring carries two bonds between its sites.
struct Bond {
  std::size_t u = 0, v = 0;
  std::vector<double> J;
};

inline bool is_zero(const std::vector<double>& J) {
  return std::all_of(J.begin(), J.end(), [](double x) { return x == 0.0; });
}

class ValidatedModel;
ValidatedModel validate_model(const ModelSpec& spec);

/// Immutable model whose measure and couplings satisfy the symmetry,
/// ferromagnetism and finite-range conditions.
class ValidatedModel {
 public:
  const ModelSpec& spec() const noexcept { return spec_; }
  const LatticeBox& lattice() const noexcept { return spec_.lattice; }
  const SiteMeasure& measure() const noexcept { return spec_.measure; }
  const CouplingSet& couplings() const noexcept { return spec_.couplings; }
  double beta() const noexcept { return spec_.beta; }
  cplx field() const noexcept { return spec_.field; }
  const std::vector<Bond>& bonds() const noexcept { return bonds_; }
  std::size_t site_count() const noexcept { return spec_.lattice.site_count(); }
  std::size_t components() const noexcept { return spec_.measure.components(); }
  bool interacting() const noexcept { return !bonds_.empty(); }

  /// Same model at another field; the field does not enter validation.
  ValidatedModel with_field(cplx h) const {
    ValidatedModel m = *this;
    m.spec_.field = h;
    return m;
  }

  /// Tilted site measure nu_{beta h}.
  ComplexMeasure site_weights() const { return tilted_site_measure(spec_.measure, spec_.beta * spec_.field); }

 private:
  friend ValidatedModel validate_model(const ModelSpec& spec);
  ModelSpec spec_;
  std::vector<Bond> bonds_;
};

inline void check_coupling_vector(const std::vector<double>& J, std::size_t components) {
  require(J.size() == components, ErrorCode::InvalidArgument,
          "coupling vectors must have one entry per spin component");
  for (double x : J) require(std::isfinite(x), ErrorCode::InvalidArgument, "couplings must be finite");
  double rest = 0.0;
  for (std::size_t k = 1; k < J.size(); ++k) rest += std::abs(J[k]);
  require(J[0] >= rest, ErrorCode::FerromagnetismViolation,
          "J^1 = " + std::to_string(J[0]) + " < sum_k |J^k| = " + std::to_string(rest));
}

inline ValidatedModel validate_model(const ModelSpec& spec) {
  require(spec.beta > 0.0 && std::isfinite(spec.beta), ErrorCode::InvalidArgument, "beta must be positive");
  require(spec.measure.size() > 0, ErrorCode::InvalidArgument, "model needs a site measure");
  require(spec.lattice.site_count() > 0, ErrorCode::InvalidArgument, "model needs a lattice box");
  require(std::isfinite(spec.field.real()) && std::isfinite(spec.field.imag()), ErrorCode::InvalidArgument,
          "field must be finite");
  require(has_symmetry_proxy(spec.measure), ErrorCode::SymmetryViolation,
          "site measure is not invariant under the coordinate sign flips and permutations");
  const auto& lat = spec.lattice;
  const auto& cs = spec.couplings;
  require(cs.range >= 1, ErrorCode::InvalidArgument, "coupling range must be positive");
  const std::size_t N = spec.measure.components();

  ValidatedModel m;
  m.spec_ = spec;
  for (std::size_t i = 0; i < cs.offsets.size(); ++i) {
    const auto& oc = cs.offsets[i];
    require(oc.offset.size() == lat.dimension(), ErrorCode::InvalidArgument, "offset has wrong dimension");
    require(manhattan_norm(oc.offset) > 0, ErrorCode::InvalidArgument, "offset must be nonzero");
    check_coupling_vector(oc.J, N);
    if (!is_zero(oc.J))
      require(manhattan_norm(oc.offset) < cs.range, ErrorCode::RangeViolation,
              "nonzero coupling at Manhattan distance >= range");
    for (std::size_t j = 0; j < i; ++j) {
      Point neg = oc.offset;
      for (auto& c : neg) c = -c;
      require(cs.offsets[j].offset != oc.offset && cs.offsets[j].offset != neg, ErrorCode::InvalidArgument,
              "duplicate coupling offset");
    }
    if (is_zero(oc.J)) continue;
    for (std::size_t x = 0; x < lat.site_count(); ++x) {
      auto y = lat.shifted(x, oc.offset);
      if (!y) continue;
      require(*y != x, ErrorCode::InvalidArgument, "coupling offset wraps a site onto itself");
      m.bonds_.push_back({x, *y, oc.J});
    }
  }
  for (const auto& pc : cs.pairs) {
    require(lat.contains(pc.a) && lat.contains(pc.b), ErrorCode::InvalidArgument, "pair coupling outside the box");
    check_coupling_vector(pc.J, N);
    std::size_t u = lat.index(pc.a), v = lat.index(pc.b);
    require(u != v, ErrorCode::InvalidArgument, "pair coupling needs two distinct sites");
    if (is_zero(pc.J)) continue;
    require(lat.distance(pc.a, pc.b) < cs.range, ErrorCode::RangeViolation,
            "nonzero coupling at Manhattan distance >= range");
    m.bonds_.push_back({u, v, pc.J});
  }
  return m;
}

/// Pair interaction energy -sum_bonds sum_k J^k t_x^k t_y^k; `config` holds one
/// atom index per site. The field term lives in the tilted measure.
inline double hamiltonian(std::span<const std::size_t> config, const ValidatedModel& model) {
  require(config.size() == model.site_count(), ErrorCode::ConfigMismatch,
          "configuration has " + std::to_string(config.size()) + " sites, lattice has " +
              std::to_string(model.site_count()));
  const auto& mu = model.measure();
  for (std::size_t a : config)
    require(a < mu.size(), ErrorCode::ConfigMismatch, "configuration refers to a nonexistent atom");
  double energy = 0.0;
  for (const auto& b : model.bonds()) {
    const auto& p = mu.atom(config[b.u]).point;
    const auto& q = mu.atom(config[b.v]).point;
    for (std::size_t k = 0; k < b.J.size(); ++k) energy -= b.J[k] * p[k] * q[k];
  }
  return energy;
}

/// Ising chain or box with uniform nearest-neighbour coupling.
inline ValidatedModel make_ising_model(std::vector<int> dims, Boundary boundary, double beta, double J,
                                       cplx field) {
  ModelSpec spec;
  spec.lattice = LatticeBox(std::move(dims), boundary);
  spec.measure = make_ising();
  spec.couplings = CouplingSet::nearest_neighbour(spec.lattice.dimension(), {J});
  spec.beta = beta;
  spec.field = field;
  return validate_model(spec);
}

}  // namespace lyspin
