#pragma once

#include <concepts>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lyspin/common.hpp"
#include "lyspin/model.hpp"
#include "lyspin/parallel.hpp"

namespace lyspin {

struct EnumerationOptions {
  std::uint64_t budget = 20'000'000;
  Parallelism parallel{};
  /// Configurations per reduction block. Part of the determinism contract:
  /// results are bit-identical for any thread count at fixed block size.
  std::size_t block_size = 4096;
};

/// Precomputed Boltzmann data for brute-force sums over the configuration
/// space. Configurations are visited in mixed-radix lexicographic order with
/// site 0 as the most significant digit.
class ConfigurationSpace {
 public:
  ConfigurationSpace(const ValidatedModel& model, const EnumerationOptions& options)
      : model_(&model), options_(options), nu_(model.site_weights()) {
    const std::size_t q = model.measure().size();
    const std::size_t sites = model.site_count();
    total_ = 1;
    for (std::size_t s = 0; s < sites; ++s) {
      require(total_ <= options.budget / q, ErrorCode::BudgetExceeded,
              std::to_string(q) + "^" + std::to_string(sites) + " configurations exceed the enumeration budget of " +
                  std::to_string(options.budget));
      total_ *= q;
    }
    const auto& mu = model.measure();
    const double beta = model.beta();
    for (const auto& b : model.bonds()) {
      std::vector<double> table(q * q);
      for (std::size_t a = 0; a < q; ++a)
        for (std::size_t c = 0; c < q; ++c) {
          double e = 0.0;
          for (std::size_t k = 0; k < b.J.size(); ++k) e += b.J[k] * mu.atom(a).point[k] * mu.atom(c).point[k];
          table[a * q + c] = std::exp(beta * e);
        }
      bond_tables_.push_back(std::move(table));
    }
  }

  std::uint64_t size() const noexcept { return total_; }
  const ValidatedModel& model() const noexcept { return *model_; }
  const ComplexMeasure& site_measure() const noexcept { return nu_; }

  /// exp(-beta H(config)) * prod_x nu(config_x)
  cplx weight(const std::vector<std::size_t>& config) const {
    const std::size_t q = model_->measure().size();
    cplx w = 1.0;
    for (std::size_t x = 0; x < config.size(); ++x) w *= nu_.weights[config[x]];
    double boltz = 1.0;
    const auto& bonds = model_->bonds();
    for (std::size_t b = 0; b < bonds.size(); ++b) boltz *= bond_tables_[b][config[bonds[b].u] * q + config[bonds[b].v]];
    return w * boltz;
  }

  /// visit(config, weight, acc) over every configuration; per-block
  /// accumulators are merged in block order.
  template <class Acc, class MakeAcc, class Visit, class Merge>
  Acc reduce(MakeAcc&& make, Visit&& visit, Merge&& merge) const {
    const std::size_t q = model_->measure().size();
    const std::size_t sites = model_->site_count();
    return block_reduce<Acc>(
        static_cast<std::size_t>(total_), options_.block_size, options_.parallel, make,
        [&](std::size_t begin, std::size_t end, Acc& acc) {
          std::vector<std::size_t> config(sites, 0);
          std::size_t idx = begin;
          for (std::size_t s = sites; s-- > 0;) {
            config[s] = idx % q;
            idx /= q;
          }
          for (std::size_t i = begin; i < end; ++i) {
            visit(config, weight(config), acc);
            for (std::size_t s = sites; s-- > 0;) {
              if (++config[s] < q) break;
              config[s] = 0;
            }
          }
        },
        merge);
  }

 private:
  const ValidatedModel* model_;
  EnumerationOptions options_;
  ComplexMeasure nu_;
  std::vector<std::vector<double>> bond_tables_;
  std::uint64_t total_ = 1;
};

struct WeightedSum {
  cplx value = 0.0;
  /// sum of |terms|; the scale against which cancellation is judged.
  double magnitude = 0.0;
};

/// Z(f) = sum_config f(config) exp(-beta H) prod_x nu_{beta h}(config_x).
template <class Observable>
  requires std::invocable<Observable&, std::span<const std::size_t>>
WeightedSum partition_sum(const ValidatedModel& model, Observable&& f, const EnumerationOptions& options = {}) {
  ConfigurationSpace space(model, options);
  return space.reduce<WeightedSum>(
      [] { return WeightedSum{}; },
      [&](const std::vector<std::size_t>& config, cplx w, WeightedSum& acc) {
        cplx term = w * cplx(f(std::span<const std::size_t>(config)));
        acc.value += term;
        acc.magnitude += std::abs(term);
      },
      [](WeightedSum& a, const WeightedSum& b) {
        a.value += b.value;
        a.magnitude += b.magnitude;
      });
}

template <class Observable>
  requires std::invocable<Observable&, std::span<const std::size_t>>
cplx partition_function(const ValidatedModel& model, Observable&& f, const EnumerationOptions& options = {}) {
  return partition_sum(model, std::forward<Observable>(f), options).value;
}

inline cplx partition_function(const ValidatedModel& model, const EnumerationOptions& options = {}) {
  return partition_function(model, [](std::span<const std::size_t>) { return 1.0; }, options);
}

/// Relative size below which a partition function is treated as a zero.
inline constexpr double kZeroPartitionTolerance = 1e-13;

inline void check_nonzero_partition(const WeightedSum& z) {
  if (!(std::abs(z.value) > kZeroPartitionTolerance * z.magnitude))
    throw Error(ErrorCode::ZeroPartition, "partition function vanishes (Lee-Yang zero) at this field");
}

/// <f> = Z(f) / Z(1)
template <class Observable>
cplx thermal_average(const ValidatedModel& model, Observable&& f, const EnumerationOptions& options = {}) {
  struct Acc {
    cplx z = 0.0, zf = 0.0;
    double magnitude = 0.0;
  };
  ConfigurationSpace space(model, options);
  Acc acc = space.reduce<Acc>(
      [] { return Acc{}; },
      [&](const std::vector<std::size_t>& config, cplx w, Acc& a) {
        a.z += w;
        a.magnitude += std::abs(w);
        a.zf += w * cplx(f(std::span<const std::size_t>(config)));
      },
      [](Acc& a, const Acc& b) {
        a.z += b.z;
        a.zf += b.zf;
        a.magnitude += b.magnitude;
      });
  check_nonzero_partition({acc.z, acc.magnitude});
  return acc.zf / acc.z;
}

/// One spin variable phi_x^i entering a correlation function.
struct Slot {
  std::size_t site = 0;
  std::size_t component = 0;
};

/// All joint moments <prod_{k in S} phi_{slot_k}>, indexed by the bitmask of S
/// (entry 0 is 1). One enumeration pass serves every subset.
inline std::vector<cplx> joint_moments(const ValidatedModel& model, std::span<const Slot> slots,
                                       const EnumerationOptions& options = {}) {
  const std::size_t n = slots.size();
  require(n >= 1 && n <= 6, ErrorCode::InvalidArgument, "joint moments support 1 to 6 slots");
  for (const auto& s : slots) {
    require(s.site < model.site_count(), ErrorCode::InvalidArgument, "slot site outside the lattice");
    require(s.component < model.components(), ErrorCode::InvalidArgument, "slot component out of range");
  }
  const std::size_t subsets = std::size_t{1} << n;
  struct Acc {
    std::vector<cplx> sums;
    double magnitude = 0.0;
  };
  const auto& mu = model.measure();
  ConfigurationSpace space(model, options);
  Acc acc = space.reduce<Acc>(
      [&] { return Acc{std::vector<cplx>(subsets, 0.0), 0.0}; },
      [&](const std::vector<std::size_t>& config, cplx w, Acc& a) {
        cplx prod[64];
        prod[0] = w;
        a.magnitude += std::abs(w);
        for (std::size_t mask = 1; mask < subsets; ++mask) {
          const std::size_t low = static_cast<std::size_t>(std::countr_zero(mask));
          const Slot& s = slots[low];
          prod[mask] = prod[mask & (mask - 1)] * mu.atom(config[s.site]).point[s.component];
        }
        for (std::size_t mask = 0; mask < subsets; ++mask) a.sums[mask] += prod[mask];
      },
      [](Acc& a, const Acc& b) {
        for (std::size_t i = 0; i < a.sums.size(); ++i) a.sums[i] += b.sums[i];
        a.magnitude += b.magnitude;
      });
  check_nonzero_partition({acc.sums[0], acc.magnitude});
  std::vector<cplx> moments(subsets);
  moments[0] = 1.0;
  for (std::size_t mask = 1; mask < subsets; ++mask) moments[mask] = acc.sums[mask] / acc.sums[0];
  return moments;
}

namespace detail {

/// Product in C[e_1..e_n]/(e_k^2), coefficients indexed by subset bitmask.
inline std::vector<cplx> squarefree_product(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<cplx> out(a.size(), 0.0);
  for (std::size_t s = 0; s < a.size(); ++s) {
    // Enumerate submasks t of s, including 0 and s.
    for (std::size_t t = s;; t = (t - 1) & s) {
      out[s] += a[t] * b[s ^ t];
      if (t == 0) break;
    }
  }
  return out;
}

/// Coefficient of e_1...e_n in log(G) for a square-free polynomial G with
/// G(0) = 1, via log(1 + X) = sum_m (-1)^{m-1} X^m / m; X^{n+1} = 0.
/// Also returns the same series with every sign positive and |X| in place of
/// X, which bounds the size of the cancelling terms.
inline std::pair<cplx, double> squarefree_log_top(const std::vector<cplx>& g, std::size_t n) {
  const std::size_t full = (std::size_t{1} << n) - 1;
  std::vector<cplx> x(g), power;
  x[0] = 0.0;
  std::vector<cplx> ax(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) ax[i] = std::abs(x[i]);
  std::vector<cplx> apower = ax;
  power = x;
  cplx top = 0.0;
  double scale = 0.0;
  for (std::size_t m = 1; m <= n; ++m) {
    const double sign = (m % 2 == 1) ? 1.0 : -1.0;
    top += sign * power[full] / static_cast<double>(m);
    scale += apower[full].real() / static_cast<double>(m);
    if (m < n) {
      power = squarefree_product(power, x);
      apower = squarefree_product(apower, ax);
    }
  }
  return {top, scale};
}

}  // namespace detail

/// Connected n-point function with finite-volume metadata.
struct UrsellResult {
  std::vector<Point> sites;
  std::vector<std::size_t> components;
  cplx value = 0.0;
  /// Size of the largest cancelling contributions; |value| below
  /// kNegligibleRelative * scale is indistinguishable from zero.
  double scale = 0.0;
  LatticeBox volume;
  cplx field = 0.0;
  double beta = 0.0;

  static constexpr double kNegligibleRelative = 1e-13;
  bool negligible() const { return std::abs(value) <= kNegligibleRelative * scale; }
};

/// Mixed derivative d^n/de_1..de_n log <prod_k (1 + e_k phi_{x_k}^{i_k})> at e = 0,
/// i.e. the joint cumulant, evaluated exactly from the joint moments.
/// Repeated (site, component) pairs are separate derivative slots.
inline UrsellResult ursell(const ValidatedModel& model, const std::vector<Point>& sites,
                           const std::vector<std::size_t>& components, const EnumerationOptions& options = {}) {
  require(sites.size() == components.size(), ErrorCode::InvalidArgument, "one component per site required");
  require(sites.size() >= 1 && sites.size() <= 6, ErrorCode::InvalidArgument, "Ursell functions support 1 <= n <= 6");
  std::vector<Slot> slots;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    require(model.lattice().contains(sites[k]), ErrorCode::InvalidArgument, "site outside the lattice");
    slots.push_back({model.lattice().index(sites[k]), components[k]});
  }
  auto moments = joint_moments(model, slots, options);
  auto [value, scale] = detail::squarefree_log_top(moments, slots.size());
  return {sites, components, value, scale, model.lattice(), model.field(), model.beta()};
}

/// Moment-cumulant formula over set partitions:
/// sum_pi (-1)^{b-1} (b-1)! prod_{B in pi} m(B). Keys are subset bitmasks
/// (bit k stands for element k+1).
inline cplx cumulant_oracle(const std::map<std::uint32_t, cplx>& moments, std::size_t n) {
  require(n >= 1 && n <= 12, ErrorCode::InvalidArgument, "cumulant oracle supports 1 <= n <= 12");
  auto moment = [&](std::uint32_t mask) {
    auto it = moments.find(mask);
    if (it == moments.end()) throw Error(ErrorCode::MissingMoment, "moment for subset mask " + std::to_string(mask));
    return it->second;
  };
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) (void)moment(mask);
  // Restricted growth strings enumerate each set partition exactly once.
  std::vector<std::size_t> block(n, 0), max_prefix(n, 0);
  cplx total = 0.0;
  for (;;) {
    std::size_t blocks = 0;
    for (std::size_t k = 0; k < n; ++k) blocks = std::max(blocks, block[k] + 1);
    std::vector<std::uint32_t> masks(blocks, 0);
    for (std::size_t k = 0; k < n; ++k) masks[block[k]] |= 1u << k;
    cplx term = 1.0;
    for (auto m : masks) term *= moment(m);
    double factorial = 1.0;
    for (std::size_t f = 2; f < blocks; ++f) factorial *= static_cast<double>(f);
    total += ((blocks % 2 == 1) ? 1.0 : -1.0) * factorial * term;
    // Next restricted growth string.
    std::size_t k = n;
    while (k-- > 1) {
      if (block[k] <= max_prefix[k - 1]) {
        ++block[k];
        for (std::size_t j = k; j < n; ++j) {
          if (j > k) block[j] = 0;
          max_prefix[j] = std::max(max_prefix[j - 1], block[j]);
        }
        break;
      }
    }
    if (k == 0) break;
  }
  return total;
}

/// Connected two-point functions <phi_a^i ; phi_b^j> for one reference slot and
/// many partners, from a single enumeration pass.
inline std::vector<cplx> correlation_profile(const ValidatedModel& model, Slot reference,
                                             std::span<const Slot> partners,
                                             const EnumerationOptions& options = {}) {
  const std::size_t p = partners.size();
  struct Acc {
    cplx z = 0.0, ref = 0.0;
    double magnitude = 0.0;
    std::vector<cplx> partner, joint;
  };
  const auto& mu = model.measure();
  ConfigurationSpace space(model, options);
  Acc acc = space.reduce<Acc>(
      [&] { return Acc{0.0, 0.0, 0.0, std::vector<cplx>(p, 0.0), std::vector<cplx>(p, 0.0)}; },
      [&](const std::vector<std::size_t>& config, cplx w, Acc& a) {
        a.z += w;
        a.magnitude += std::abs(w);
        const cplx wr = w * mu.atom(config[reference.site]).point[reference.component];
        a.ref += wr;
        for (std::size_t k = 0; k < p; ++k) {
          const double v = mu.atom(config[partners[k].site]).point[partners[k].component];
          a.partner[k] += w * v;
          a.joint[k] += wr * v;
        }
      },
      [](Acc& a, const Acc& b) {
        a.z += b.z;
        a.ref += b.ref;
        a.magnitude += b.magnitude;
        for (std::size_t k = 0; k < a.partner.size(); ++k) {
          a.partner[k] += b.partner[k];
          a.joint[k] += b.joint[k];
        }
      });
  check_nonzero_partition({acc.z, acc.magnitude});
  std::vector<cplx> out(p);
  const cplx mean_ref = acc.ref / acc.z;
  for (std::size_t k = 0; k < p; ++k) out[k] = acc.joint[k] / acc.z - mean_ref * (acc.partner[k] / acc.z);
  return out;
}

}  // namespace lyspin
