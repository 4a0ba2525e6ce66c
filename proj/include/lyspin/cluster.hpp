#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "lyspin/common.hpp"
#include "lyspin/model.hpp"
#include "lyspin/parallel.hpp"

namespace lyspin {

/// Polynomial c + s S + t T + st S T in the source variables S, T of
/// (1 + S phi_0^i)(1 + T phi_x^j); S^2 and T^2 never occur.
struct StPoly {
  cplx c = 0.0, s = 0.0, t = 0.0, st = 0.0;

  StPoly& operator+=(const StPoly& o) {
    c += o.c;
    s += o.s;
    t += o.t;
    st += o.st;
    return *this;
  }
  friend StPoly operator*(const StPoly& a, const StPoly& b) {
    return {a.c * b.c, a.c * b.s + a.s * b.c, a.c * b.t + a.t * b.c,
            a.c * b.st + a.st * b.c + a.s * b.t + a.t * b.s};
  }
  friend StPoly operator*(cplx k, const StPoly& a) { return {k * a.c, k * a.s, k * a.t, k * a.st}; }
  cplx evaluate(cplx S, cplx T) const { return c + S * s + T * t + S * T * st; }
  /// |c| + b|s| + b|t| + b^2|st|: bound on |evaluate| for |S|, |T| <= b.
  double norm(double b) const { return std::abs(c) + b * std::abs(s) + b * std::abs(t) + b * b * std::abs(st); }
};

/// The two marked sites carrying the source terms S phi_0^i and T phi_x^j.
struct MarkedSites {
  std::size_t origin = 0;
  std::size_t target = 1;
  std::size_t origin_component = 0;
  std::size_t target_component = 0;
};

using SiteSet = std::vector<std::size_t>;

namespace detail {

/// Connected vertex sets of size n containing `root`, grown one neighbour at a
/// time; `neighbours(v)` lists the adjacent vertices.
template <class Vertex, class Neighbours>
std::vector<std::vector<Vertex>> connected_sets(const Vertex& root, std::size_t n, Neighbours&& neighbours,
                                                std::size_t budget) {
  std::set<std::vector<Vertex>> level{{root}};
  for (std::size_t k = 1; k < n; ++k) {
    std::set<std::vector<Vertex>> next;
    for (const auto& s : level)
      for (const auto& v : s)
        for (const auto& w : neighbours(v)) {
          if (std::find(s.begin(), s.end(), w) != s.end()) continue;
          auto grown = s;
          grown.insert(std::upper_bound(grown.begin(), grown.end(), w), w);
          next.insert(std::move(grown));
          require(next.size() <= budget, ErrorCode::BudgetExceeded, "polymer enumeration budget exceeded");
        }
    level = std::move(next);
  }
  return {level.begin(), level.end()};
}

}  // namespace detail

inline constexpr std::size_t kDefaultMaxPolymerSize = 5;
inline constexpr std::size_t kPolymerBudget = 2'000'000;

/// Range-connected subsets of Z^d of size n containing `root`; adjacency is
/// "joined by a nonzero translation-invariant coupling".
inline std::vector<std::vector<Point>> enumerate_lattice_polymers(const Point& root, std::size_t n,
                                                                  const CouplingSet& couplings,
                                                                  std::size_t n_max = kDefaultMaxPolymerSize) {
  require(n >= 1 && n <= n_max, ErrorCode::InvalidArgument, "polymer size outside [1, n_max]");
  std::vector<Point> steps;
  for (const auto& oc : couplings.offsets) {
    if (is_zero(oc.J) || manhattan_norm(oc.offset) >= couplings.range) continue;
    steps.push_back(oc.offset);
    Point neg = oc.offset;
    for (auto& c : neg) c = -c;
    steps.push_back(neg);
  }
  auto neighbours = [&](const Point& p) {
    std::vector<Point> out;
    for (const auto& s : steps) {
      Point q = p;
      for (std::size_t k = 0; k < q.size(); ++k) q[k] += s[k];
      out.push_back(std::move(q));
    }
    return out;
  };
  return detail::connected_sets(root, n, neighbours, kPolymerBudget);
}

/// Factorised polymer representation of Z^tau(A) on a validated model.
/// Pair factors mu_X = exp(beta sum_k J^k (phi^k phi^k - tau^2 delta_k1)) - 1
/// aggregate all bonds joining the same two sites.
class PolymerSystem {
 public:
  PolymerSystem(const ValidatedModel& model, MarkedSites marks, double tau)
      : model_(&model), marks_(marks), tau_(tau), nu_(model.site_weights()) {
    const std::size_t S = model.site_count();
    require(marks.origin < S && marks.target < S, ErrorCode::InvalidArgument, "marked site outside the lattice");
    require(marks.origin != marks.target, ErrorCode::InvalidArgument, "marked sites must be distinct");
    require(marks.origin_component < model.components() && marks.target_component < model.components(),
            ErrorCode::InvalidArgument, "marked component out of range");
    require(tau >= 0.0, ErrorCode::InvalidArgument, "tau must be nonnegative");
    adjacency_.assign(S, {});
    for (const auto& b : model.bonds()) {
      auto key = std::minmax(b.u, b.v);
      auto& J = pair_J_[{key.first, key.second}];
      if (J.empty()) J.assign(b.J.size(), 0.0);
      for (std::size_t k = 0; k < J.size(); ++k) J[k] += b.J[k];
    }
    for (const auto& [key, J] : pair_J_) {
      adjacency_[key.first].push_back(key.second);
      adjacency_[key.second].push_back(key.first);
    }
    for (auto& a : adjacency_) std::sort(a.begin(), a.end());
  }

  const ValidatedModel& model() const { return *model_; }
  const MarkedSites& marks() const { return marks_; }
  double tau() const { return tau_; }
  bool marked(std::size_t site) const { return site == marks_.origin || site == marks_.target; }

  /// Polymers of size n containing y: bond-connected sets for n >= 2, the
  /// singleton {y} for n = 1 when y is marked.
  std::vector<SiteSet> polymers_containing(std::size_t y, std::size_t n,
                                           std::size_t n_max = kDefaultMaxPolymerSize) const {
    require(y < model_->site_count(), ErrorCode::InvalidArgument, "root site outside the lattice");
    require(n >= 1 && n <= n_max, ErrorCode::InvalidArgument, "polymer size outside [1, n_max]");
    if (n == 1) return marked(y) ? std::vector<SiteSet>{{y}} : std::vector<SiteSet>{};
    return detail::connected_sets(y, n, [&](std::size_t v) -> const std::vector<std::size_t>& { return adjacency_[v]; },
                                  kPolymerBudget);
  }

  /// Every polymer of the box with size <= n_max, each listed once.
  std::vector<SiteSet> all_polymers(std::size_t n_max) const {
    std::vector<SiteSet> out;
    for (std::size_t n = 1; n <= n_max; ++n)
      for (std::size_t y = 0; y < model_->site_count(); ++y)
        for (auto& p : polymers_containing(y, n, n_max))
          if (p.front() == y) out.push_back(std::move(p));
    return out;
  }

  static constexpr std::size_t kMaxEdges = 10;
  static constexpr std::uint64_t kConfigBudget = 10'000'000;

  /// z(zeta) = < sum over connected graphs g on zeta (pair edges among bonded
  /// sites plus optional loop edges at marked sites, at least one edge) of
  /// prod_{X in g} mu_X >, under the product tilted measure.
  StPoly activity(const SiteSet& zeta) const {
    const std::size_t n = zeta.size();
    require(n >= 1, ErrorCode::InvalidArgument, "empty polymer");
    for (auto v : zeta) require(v < model_->site_count(), ErrorCode::InvalidArgument, "polymer site outside lattice");
    if (n == 1 && !marked(zeta[0])) return {};
    const std::vector<Edge> edges = edges_of(zeta);
    require(edges.size() <= kMaxEdges, ErrorCode::GraphBudgetExceeded,
            "polymer has " + std::to_string(edges.size()) + " bonded pairs; at most 10 are enumerated");
    const std::vector<std::uint32_t> connected = connected_spanning_masks(n, edges);
    if (connected.empty()) return {};

    const auto& mu = model_->measure();
    const std::size_t q = mu.size();
    std::uint64_t configs = 1;
    for (std::size_t k = 0; k < n; ++k) {
      configs *= q;
      require(configs <= kConfigBudget, ErrorCode::BudgetExceeded, "polymer configuration sum exceeds budget");
    }
    int origin_slot = -1, target_slot = -1;
    for (std::size_t k = 0; k < n; ++k) {
      if (zeta[k] == marks_.origin) origin_slot = static_cast<int>(k);
      if (zeta[k] == marks_.target) target_slot = static_cast<int>(k);
    }
    const double beta = model_->beta();
    const std::size_t E = edges.size();
    std::vector<std::size_t> cfg(n, 0);
    std::vector<double> f(E);
    std::vector<double> prod(std::size_t{1} << E);
    StPoly sum;
    for (std::uint64_t idx = 0; idx < configs; ++idx) {
      cplx w = 1.0;
      for (std::size_t k = 0; k < n; ++k) w *= nu_.weights[cfg[k]];
      for (std::size_t e = 0; e < E; ++e) {
        const auto& pu = mu.atom(cfg[edges[e].a]).point;
        const auto& pv = mu.atom(cfg[edges[e].b]).point;
        double phi = -tau_ * tau_ * edges[e].J[0];
        for (std::size_t k = 0; k < edges[e].J.size(); ++k) phi += edges[e].J[k] * pu[k] * pv[k];
        f[e] = std::expm1(beta * phi);
      }
      prod[0] = 1.0;
      for (std::size_t m = 1; m < prod.size(); ++m)
        prod[m] = prod[m & (m - 1)] * f[static_cast<std::size_t>(std::countr_zero(m))];
      double graphs = 0.0;
      for (auto m : connected) graphs += prod[m];
      const double a = origin_slot >= 0 ? mu.atom(cfg[origin_slot]).point[marks_.origin_component] : 0.0;
      const double b = target_slot >= 0 ? mu.atom(cfg[target_slot]).point[marks_.target_component] : 0.0;
      const cplx wg = w * graphs;
      sum.c += wg;
      if (origin_slot >= 0) sum.s += wg * a;
      if (target_slot >= 0) sum.t += wg * b;
      if (origin_slot >= 0 && target_slot >= 0) sum.st += wg * a * b;
      for (std::size_t k = n; k-- > 0;) {
        if (++cfg[k] < q) break;
        cfg[k] = 0;
      }
    }
    // A lone vertex needs its loop edge: drop the empty graph.
    if (n == 1) sum.c = 0.0;
    return sum;
  }

  /// Penrose-type bound |sum_g prod mu_X| <= sum_trees prod |a_e| exp(sum_e a_e^+)
  /// with a_e = beta Phi_tau(e), maximised over the atoms; unmarked polymers only.
  double tree_graph_bound(const SiteSet& zeta) const;

 private:
  struct Edge {
    std::size_t a, b;  // positions within zeta
    std::vector<double> J;
  };

  std::vector<Edge> edges_of(const SiteSet& zeta) const {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < zeta.size(); ++i)
      for (std::size_t j = i + 1; j < zeta.size(); ++j) {
        auto key = std::minmax(zeta[i], zeta[j]);
        auto it = pair_J_.find({key.first, key.second});
        if (it != pair_J_.end()) edges.push_back({i, j, it->second});
      }
    return edges;
  }

  static std::vector<std::uint32_t> connected_spanning_masks(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<std::uint32_t> out;
    if (n == 1) return {0u};
    const std::uint32_t total = 1u << edges.size();
    for (std::uint32_t m = 1; m < total; ++m) {
      if (static_cast<std::size_t>(std::popcount(m)) + 1 < n) continue;
      std::vector<std::size_t> parent(n);
      std::iota(parent.begin(), parent.end(), 0);
      std::function<std::size_t(std::size_t)> find = [&](std::size_t v) {
        return parent[v] == v ? v : parent[v] = find(parent[v]);
      };
      std::size_t comps = n;
      for (std::size_t e = 0; e < edges.size(); ++e)
        if (m & (1u << e)) {
          auto ra = find(edges[e].a), rb = find(edges[e].b);
          if (ra != rb) {
            parent[ra] = rb;
            --comps;
          }
        }
      if (comps == 1) out.push_back(m);
    }
    return out;
  }

  const ValidatedModel* model_;
  MarkedSites marks_;
  double tau_;
  ComplexMeasure nu_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> pair_J_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

namespace detail {

/// Labelled trees on n vertices via Pruefer sequences; visit(edge list).
template <class Visit>
void for_each_labelled_tree(std::size_t n, Visit&& visit) {
  if (n == 1) {
    visit(std::vector<std::pair<std::size_t, std::size_t>>{});
    return;
  }
  if (n == 2) {
    visit(std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}});
    return;
  }
  std::vector<std::size_t> seq(n - 2, 0);
  for (;;) {
    std::vector<std::size_t> degree(n, 1);
    for (auto v : seq) ++degree[v];
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<std::size_t> deg = degree;
    for (auto v : seq) {
      std::size_t leaf = 0;
      while (deg[leaf] != 1) ++leaf;
      edges.emplace_back(leaf, v);
      --deg[leaf];
      --deg[v];
    }
    std::size_t u = n, w = n;
    for (std::size_t k = 0; k < n; ++k)
      if (deg[k] == 1) (u == n ? u : w) = k;
    edges.emplace_back(u, w);
    visit(edges);
    std::size_t k = 0;
    while (k < seq.size() && ++seq[k] == n) seq[k++] = 0;
    if (k == seq.size()) break;
  }
}

}  // namespace detail

inline double PolymerSystem::tree_graph_bound(const SiteSet& zeta) const {
  const std::size_t n = zeta.size();
  const auto& mu = model_->measure();
  std::vector<std::vector<double>> amax(n, std::vector<double>(n, 0.0)), apos(n, std::vector<double>(n, 0.0));
  for (const auto& e : edges_of(zeta)) {
    double worst = 0.0, pos = 0.0;
    for (const auto& x : mu.atoms())
      for (const auto& y : mu.atoms()) {
        double phi = -tau_ * tau_ * e.J[0];
        for (std::size_t k = 0; k < e.J.size(); ++k) phi += e.J[k] * x.point[k] * y.point[k];
        worst = std::max(worst, std::abs(model_->beta() * phi));
        pos = std::max(pos, model_->beta() * phi);
      }
    amax[e.a][e.b] = amax[e.b][e.a] = worst;
    apos[e.a][e.b] = apos[e.b][e.a] = pos;
  }
  double exponent = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) exponent += apos[i][j];
  double trees = 0.0;
  detail::for_each_labelled_tree(n, [&](const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    double p = 1.0;
    for (auto [a, b] : edges) p *= amax[a][b];
    trees += p;
  });
  return trees * std::exp(exponent);
}

/// Default bound on the source variables: c(eps) = eps / (2 ||mu0|| M_inf).
inline double source_bound(double epsilon, double sup_norm, double m_infinity = 10.0) {
  return epsilon / (2.0 * sup_norm * m_infinity);
}

/// sum_{zeta containing y, |zeta| = n} |z(zeta)| with |S|, |T| <= st_bound.
inline double activity_norm_sum(const PolymerSystem& system, std::size_t y, std::size_t n, double st_bound,
                                std::size_t n_max = kDefaultMaxPolymerSize) {
  double total = 0.0;
  for (const auto& zeta : system.polymers_containing(y, n, n_max)) total += system.activity(zeta).norm(st_bound);
  return total;
}

struct EtaSearch {
  double epsilon = 1.0 / 6.0;
  std::size_t n_max = 3;
  double field_start = 0.25;
  double field_cap = 64.0;
  /// Geometric grid: field_start * ratio^k.
  double ratio = 1.0625;
  double m_infinity = 10.0;
  /// Share of eps^n the concentration-limit sums may use when fixing delta.
  double limit_fraction = 0.5;
};

struct EtaResult {
  double eta = 0.0;
  double tau = 0.0;
  double delta = 0.0;
  double st_bound = 0.0;
  /// max_y activity_norm_sum(y, n) at eta, per n (index 0 -> n = 1).
  std::vector<double> sums;
};

/// Activity sums in the limit Re h -> infinity, where every spin sits at
/// p = (||mu0||, 0, ..., 0): pair factors become exp(beta J^1 (p^2 - tau^2)) - 1.
inline std::vector<double> concentration_limit_sums(const ValidatedModel& model, const MarkedSites& marks, double tau,
                                                    std::size_t n_max, double st_bound) {
  // Replace the measure by a point mass at p, symmetrised so validation holds;
  // the tilt at a huge field then selects p exactly.
  ModelSpec spec = model.spec();
  const double p = model.measure().sup_norm();
  std::vector<Atom> atoms;
  std::vector<double> plus(model.components(), 0.0), minus(model.components(), 0.0);
  plus[0] = p;
  minus[0] = -p;
  atoms.push_back({plus, 1.0});
  atoms.push_back({minus, 1.0});
  spec.measure = SiteMeasure(atoms);
  spec.field = 1e3 / (spec.beta * std::max(p, 1e-300));
  const ValidatedModel limit = validate_model(spec);
  PolymerSystem sys(limit, marks, tau);
  std::vector<double> out(n_max, 0.0);
  for (std::size_t n = 1; n <= n_max; ++n)
    for (std::size_t y = 0; y < limit.site_count(); ++y)
      out[n - 1] = std::max(out[n - 1], activity_norm_sum(sys, y, n, st_bound, n_max));
  return out;
}

/// tau = ||mu0|| - delta with delta the largest value (bisection) for which the
/// concentration-limit sums are <= eps^n / 2; then the first Re h on the
/// geometric grid where every root site has sums <= eps^n for n <= n_max.
inline EtaResult find_eta(const ValidatedModel& model, const MarkedSites& marks, const EtaSearch& search = {}) {
  require(search.epsilon > 0.0 && search.epsilon < 1.0, ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
  require(search.n_max >= 1 && search.n_max <= kDefaultMaxPolymerSize, ErrorCode::InvalidArgument,
          "n_max must lie in [1, 5]");
  const double norm = model.measure().sup_norm();
  const double st = source_bound(search.epsilon, norm, search.m_infinity);
  auto limit_ok = [&](double delta) {
    const auto sums = concentration_limit_sums(model, marks, norm - delta, search.n_max, st);
    for (std::size_t n = 1; n <= search.n_max; ++n)
      if (sums[n - 1] > search.limit_fraction * std::pow(search.epsilon, static_cast<double>(n))) return false;
    return true;
  };
  double lo = 0.0, hi = norm;
  if (limit_ok(hi)) {
    lo = hi;
  } else {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (limit_ok(mid) ? lo : hi) = mid;
    }
  }
  require(lo > 0.0, ErrorCode::NotFound, "no delta > 0 makes the concentration-limit sums small");
  EtaResult r;
  r.delta = lo;
  r.tau = norm - lo;
  r.st_bound = st;
  std::size_t failing_n = 0;
  for (double h = search.field_start; h <= search.field_cap * (1 + 1e-12); h *= search.ratio) {
    const ValidatedModel at = model.with_field(h);
    PolymerSystem sys(at, marks, r.tau);
    std::vector<double> sums(search.n_max, 0.0);
    bool ok = true;
    for (std::size_t n = 1; n <= search.n_max && ok; ++n) {
      for (std::size_t y = 0; y < at.site_count(); ++y)
        sums[n - 1] = std::max(sums[n - 1], activity_norm_sum(sys, y, n, st, search.n_max));
      if (sums[n - 1] > std::pow(search.epsilon, static_cast<double>(n))) {
        ok = false;
        failing_n = n;
      }
    }
    if (ok) {
      r.eta = h;
      r.sums = sums;
      return r;
    }
  }
  throw Error(ErrorCode::NotFound, "activity sums exceed eps^n up to Re h = " + std::to_string(search.field_cap) +
                                       " (failing n = " + std::to_string(failing_n) + ")");
}

/// Hard-core polymer gas sum over pairwise disjoint collections of the given
/// polymers, graded by total grade: entry k collects collections of total
/// grade k (k <= max_size). Grades default to the polymer sizes.
inline std::vector<StPoly> polymer_gas_series(const std::vector<SiteSet>& polymers, const std::vector<StPoly>& activities,
                                              std::size_t max_size, std::vector<std::size_t> grades = {}) {
  if (grades.empty())
    for (const auto& p : polymers) grades.push_back(p.size());
  require(grades.size() == polymers.size(), ErrorCode::InvalidArgument, "one grade per polymer");
  std::vector<StPoly> series(max_size + 1);
  series[0].c = 1.0;
  std::vector<std::uint64_t> masks;
  for (const auto& p : polymers) {
    std::uint64_t m = 0;
    for (auto v : p) {
      require(v < 64, ErrorCode::BudgetExceeded, "polymer gas sums support boxes of at most 64 sites");
      m |= std::uint64_t{1} << v;
    }
    masks.push_back(m);
  }
  std::function<void(std::size_t, std::uint64_t, std::size_t, const StPoly&)> grow =
      [&](std::size_t first, std::uint64_t used, std::size_t size, const StPoly& weight) {
        for (std::size_t i = first; i < polymers.size(); ++i) {
          const std::size_t ns = size + grades[i];
          if (ns > max_size || (masks[i] & used)) continue;
          const StPoly w = weight * activities[i];
          series[ns] += w;
          grow(i + 1, used | masks[i], ns, w);
        }
      };
  const StPoly one = series[0];
  grow(0, 0, 0, one);
  return series;
}

/// Z^tau(A) summed over every collection (no size truncation).
inline StPoly polymer_gas_partition(const PolymerSystem& system) {
  const std::size_t S = system.model().site_count();
  const auto polymers = system.all_polymers(S);
  std::vector<StPoly> acts;
  for (const auto& p : polymers) acts.push_back(system.activity(p));
  StPoly total;
  for (const auto& term : polymer_gas_series(polymers, acts, S)) total += term;
  return total;
}

struct ClusterSeriesOptions {
  double tau = 0.0;
  std::size_t order = 4;
  double epsilon = 1.0 / 6.0;
  /// Convergence threshold; Re h below it raises NotInConvergenceRegion. 0 disables.
  double eta = 0.0;
  /// Tail constant c; negative means "measure from the computed coefficients".
  double tail_constant = -1.0;
  /// Grade of the marked singletons {0}, {x} in the size grading (1 = their size).
  std::size_t singleton_grade = 1;
};

struct ClusterTwoPoint {
  cplx value = 0.0;
  /// Coefficient of lambda^k in the size-graded series (index k, k = 0..order).
  std::vector<cplx> coefficients;
  /// Running sums of coefficients up to each order.
  std::vector<cplx> partial_sums;
  double tail_constant = 0.0;
  double tail_bound = 0.0;
  std::vector<std::size_t> polymer_counts;  // per size, 1..order
};

/// d^2/dS dT log Z^tau at S = T = 0 from the polymer gas, keeping all cluster
/// terms with total polymer size <= order: with Z = A + S B + T C + S T D,
/// the target is D / A - B C / A^2, expanded in the size grading.
inline ClusterTwoPoint cluster_two_point(const PolymerSystem& system, const ClusterSeriesOptions& opt) {
  const auto& model = system.model();
  if (opt.eta > 0.0)
    require(model.field().real() >= opt.eta, ErrorCode::NotInConvergenceRegion,
            "Re h = " + std::to_string(model.field().real()) + " is below eta = " + std::to_string(opt.eta));
  require(opt.order >= 1, ErrorCode::InvalidArgument, "order must be positive");
  const std::size_t N = opt.order;
  const auto polymers = system.all_polymers(std::min(N, model.site_count()));
  std::vector<StPoly> acts;
  ClusterTwoPoint out;
  out.polymer_counts.assign(N, 0);
  for (const auto& p : polymers) {
    acts.push_back(system.activity(p));
    ++out.polymer_counts[p.size() - 1];
  }
  std::vector<std::size_t> grades;
  for (const auto& p : polymers) grades.push_back(p.size() == 1 ? opt.singleton_grade : p.size());
  const auto z = polymer_gas_series(polymers, acts, N, grades);
  auto series = [&](auto member) {
    std::vector<cplx> v(N + 1);
    for (std::size_t k = 0; k <= N; ++k) v[k] = z[k].*member;
    return v;
  };
  const auto A = series(&StPoly::c), B = series(&StPoly::s), C = series(&StPoly::t), D = series(&StPoly::st);
  auto mul = [&](const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<cplx> r(N + 1, 0.0);
    for (std::size_t i = 0; i <= N; ++i)
      for (std::size_t j = 0; i + j <= N; ++j) r[i + j] += a[i] * b[j];
    return r;
  };
  std::vector<cplx> inv(N + 1, 0.0);  // 1 / A
  inv[0] = 1.0 / A[0];
  for (std::size_t k = 1; k <= N; ++k) {
    cplx s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += A[j] * inv[k - j];
    inv[k] = -s * inv[0];
  }
  const auto first = mul(D, inv);
  const auto second = mul(mul(B, C), mul(inv, inv));
  out.coefficients.resize(N + 1);
  out.partial_sums.resize(N + 1);
  cplx run = 0.0;
  for (std::size_t k = 0; k <= N; ++k) {
    out.coefficients[k] = first[k] - second[k];
    run += out.coefficients[k];
    out.partial_sums[k] = run;
  }
  out.value = run;
  if (opt.tail_constant >= 0.0) {
    out.tail_constant = opt.tail_constant;
  } else {
    for (std::size_t k = 1; k <= N; ++k)
      out.tail_constant = std::max(out.tail_constant, std::abs(out.coefficients[k]) /
                                                          std::pow(opt.epsilon, static_cast<double>(k)));
  }
  out.tail_bound = out.tail_constant * std::pow(opt.epsilon, static_cast<double>(N + 1)) / (1.0 - opt.epsilon);
  return out;
}

/// Two-point series for several targets sharing one tail constant: the
/// largest c = max_k |u_k| eps^{-k} over all targets, so separations whose low
/// orders vanish identically still get a bound.
inline std::vector<ClusterTwoPoint> cluster_two_point_profile(const ValidatedModel& model, std::size_t origin,
                                                              const std::vector<std::size_t>& targets,
                                                              ClusterSeriesOptions opt,
                                                              std::size_t component = 0) {
  std::vector<ClusterTwoPoint> out;
  double c = 0.0;
  for (auto x : targets) {
    PolymerSystem sys(model, {origin, x, component, component}, opt.tau);
    auto opt_local = opt;
    opt_local.tail_constant = -1.0;
    out.push_back(cluster_two_point(sys, opt_local));
    c = std::max(c, out.back().tail_constant);
  }
  if (opt.tail_constant >= 0.0) c = opt.tail_constant;
  for (auto& r : out) {
    r.tail_constant = c;
    r.tail_bound = c * std::pow(opt.epsilon, static_cast<double>(opt.order + 1)) / (1.0 - opt.epsilon);
  }
  return out;
}

/// Smallest Re h on a geometric grid above which the tilted measure puts mass
/// < delta outside the delta-ball around (||mu0||, 0, ..., 0).
inline double concentration_threshold(const SiteMeasure& measure, double delta, double beta = 1.0,
                                      double cap = 1e4) {
  require(delta > 0.0, ErrorCode::InvalidArgument, "delta must be positive");
  const double p = measure.sup_norm();
  auto outside_mass = [&](double u) {
    double in = 0.0, total = 0.0;
    const double shift = measure.max_first();
    for (const auto& a : measure.atoms()) {
      const double w = a.weight * std::exp(beta * u * (a.point[0] - shift));
      total += w;
      double d2 = (a.point[0] - p) * (a.point[0] - p);
      for (std::size_t k = 1; k < a.point.size(); ++k) d2 += a.point[k] * a.point[k];
      if (std::sqrt(d2) < delta) in += w;
    }
    return 1.0 - in / total;
  };
  for (double u = 1e-3; u <= cap; u *= 1.01)
    if (outside_mass(u) < delta) return u;
  throw Error(ErrorCode::NotFound, "concentration not reached below the field cap");
}

/// Number of bond-connected polymers of each size 2..n_max containing the
/// root, and the measured growth constant max_n count^{1/n} / r^d.
struct PolymerGrowth {
  std::vector<std::size_t> counts;
  double constant = 0.0;
};

inline PolymerGrowth polymer_growth(const CouplingSet& couplings, std::size_t dimension, std::size_t n_max) {
  PolymerGrowth g;
  const Point root(dimension, 0);
  const double rd = std::pow(static_cast<double>(couplings.range), static_cast<double>(dimension));
  for (std::size_t n = 1; n <= n_max; ++n) {
    const auto sets = enumerate_lattice_polymers(root, n, couplings, n_max);
    g.counts.push_back(sets.size());
    if (n >= 2)
      g.constant = std::max(g.constant, std::pow(static_cast<double>(sets.size()), 1.0 / static_cast<double>(n)) / rd);
  }
  return g;
}

}  // namespace lyspin
