#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "lyspin/common.hpp"
#include "lyspin/model.hpp"

namespace lyspin {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Transfer operator of a chain of super-sites. A super-site is one column of
/// the lattice (all sites sharing coordinate 0); for d = 1 it is a single spin.
struct TransferOperator {
  CMatrix T;
  /// sqrt of the super-site weights (tilt and intra-column Boltzmann factor).
  CVector sqrt_weight;
  /// Column configuration -> atom index per column site (row-major over the
  /// transverse coordinates).
  std::vector<std::vector<std::size_t>> columns;
  std::size_t column_sites = 1;
  std::size_t length = 0;
  Boundary boundary = Boundary::Free;
  SiteMeasure measure;

  std::size_t dimension() const { return static_cast<std::size_t>(T.rows()); }

  /// Diagonal operator: value of phi^component at one column site.
  CVector spin_diagonal(std::size_t column_site, std::size_t component) const {
    CVector d(static_cast<Eigen::Index>(columns.size()));
    for (std::size_t a = 0; a < columns.size(); ++a)
      d[static_cast<Eigen::Index>(a)] = measure.atom(columns[a][column_site]).point[component];
    return d;
  }
};

inline constexpr std::size_t kMaxSuperSiteStates = 256;

/// Builds T[a][b] = sqrt(w_a) sqrt(w_b) exp(beta * sum_k J^k t_a^k t_b^k)
/// summed over the couplings from one column to the next.
inline TransferOperator build_transfer(const ValidatedModel& model) {
  const auto& lat = model.lattice();
  const auto& cs = model.couplings();
  require(cs.translation_invariant(), ErrorCode::NotAChain, "transfer operators need translation-invariant couplings");
  const std::size_t d = lat.dimension();
  for (const auto& oc : cs.offsets) {
    if (is_zero(oc.J)) continue;
    require(std::abs(oc.offset[0]) <= 1, ErrorCode::NotAChain, "couplings must connect adjacent columns only");
  }
  const int L = lat.dims()[0];
  require(L >= 1, ErrorCode::NotAChain, "chain needs at least one column");

  std::vector<int> tdims(lat.dims().begin() + 1, lat.dims().end());
  if (tdims.empty()) tdims.push_back(1);
  LatticeBox column(tdims, lat.boundary());
  const std::size_t cs_sites = column.site_count();
  const std::size_t q1 = model.measure().size();
  std::size_t q = 1;
  for (std::size_t s = 0; s < cs_sites; ++s) {
    q *= q1;
    require(q <= kMaxSuperSiteStates, ErrorCode::BudgetExceeded,
            "column state space exceeds " + std::to_string(kMaxSuperSiteStates));
  }

  TransferOperator op;
  op.column_sites = cs_sites;
  op.length = static_cast<std::size_t>(L);
  op.boundary = lat.boundary();
  op.measure = model.measure();
  op.columns.resize(q);
  for (std::size_t a = 0; a < q; ++a) {
    std::vector<std::size_t> cfg(cs_sites);
    std::size_t idx = a;
    for (std::size_t s = cs_sites; s-- > 0;) {
      cfg[s] = idx % q1;
      idx /= q1;
    }
    op.columns[a] = std::move(cfg);
  }

  // Transverse part of each offset: (offset[1..], J), split by column step.
  struct Link {
    Point transverse;
    std::vector<double> J;
  };
  std::vector<Link> intra, inter;
  for (const auto& oc : cs.offsets) {
    if (is_zero(oc.J)) continue;
    Point tr(oc.offset.begin() + 1, oc.offset.end());
    if (d == 1) tr = {0};
    if (oc.offset[0] == 0) {
      intra.push_back({tr, oc.J});
    } else {
      // Normalise to a +1 step in the chain direction.
      if (oc.offset[0] < 0)
        for (auto& c : tr) c = -c;
      inter.push_back({tr, oc.J});
    }
  }
  const auto& mu = model.measure();
  const double beta = model.beta();
  auto coupling_energy = [&](const std::vector<std::size_t>& A, const std::vector<std::size_t>& B,
                             const std::vector<Link>& links) {
    double e = 0.0;
    for (const auto& link : links)
      for (std::size_t s = 0; s < cs_sites; ++s) {
        auto t = column.shifted(s, link.transverse);
        if (!t) continue;
        const auto& p = mu.atom(A[s]).point;
        const auto& r = mu.atom(B[*t]).point;
        for (std::size_t k = 0; k < link.J.size(); ++k) e += link.J[k] * p[k] * r[k];
      }
    return e;
  };

  const ComplexMeasure nu = model.site_weights();
  op.sqrt_weight.resize(static_cast<Eigen::Index>(q));
  for (std::size_t a = 0; a < q; ++a) {
    cplx w = 1.0;
    for (std::size_t s = 0; s < cs_sites; ++s) w *= nu.weights[op.columns[a][s]];
    w *= std::exp(beta * coupling_energy(op.columns[a], op.columns[a], intra));
    op.sqrt_weight[static_cast<Eigen::Index>(a)] = std::sqrt(w);
  }
  op.T.resize(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b)
      op.T(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          op.sqrt_weight[static_cast<Eigen::Index>(a)] * op.sqrt_weight[static_cast<Eigen::Index>(b)] *
          std::exp(beta * coupling_energy(op.columns[a], op.columns[b], inter));
  return op;
}

/// Eigen-decomposition with eigenvalues sorted by decreasing modulus, ties
/// broken by increasing argument.
struct TransferSpectrum {
  std::vector<cplx> eigenvalues;
  CMatrix vectors;
  /// Condition number estimate of the eigenvector matrix.
  double condition = 1.0;
};

inline TransferSpectrum transfer_spectrum(const TransferOperator& op) {
  Eigen::ComplexEigenSolver<CMatrix> solver(op.T, true);
  require(solver.info() == Eigen::Success, ErrorCode::InvalidArgument, "eigen-decomposition failed");
  const Eigen::Index q = op.T.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(q));
  for (Eigen::Index i = 0; i < q; ++i) order[static_cast<std::size_t>(i)] = i;
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(ev[a]), mb = std::abs(ev[b]);
    if (ma != mb) return ma > mb;
    return std::arg(ev[a]) < std::arg(ev[b]);
  });
  TransferSpectrum s;
  s.vectors.resize(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    s.eigenvalues.push_back(ev[order[static_cast<std::size_t>(i)]]);
    s.vectors.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }
  Eigen::JacobiSVD<CMatrix> svd(s.vectors);
  const auto& sv = svd.singularValues();
  s.condition = sv[q - 1] > 0.0 ? sv[0] / sv[q - 1] : std::numeric_limits<double>::infinity();
  return s;
}

struct MassGap {
  /// log(|lambda1| / |lambda2|); +inf for a rank-one operator.
  double value = 0.0;
  cplx lambda1 = 0.0, lambda2 = 0.0;
  /// |lambda1| = |lambda2| within 1e-12 relative; value is then 0.
  bool degenerate_top = false;
};

inline constexpr double kDegenerateTopTolerance = 1e-12;
inline constexpr double kRankOneTolerance = 1e-14;

inline MassGap mass_gap_from_spectrum(const std::vector<cplx>& ev) {
  MassGap g;
  g.lambda1 = ev.front();
  const double m1 = std::abs(g.lambda1);
  require(m1 > 0.0, ErrorCode::InvalidArgument, "transfer operator has vanishing spectral radius");
  if (ev.size() < 2 || std::abs(ev[1]) <= kRankOneTolerance * m1) {
    g.lambda2 = ev.size() < 2 ? cplx(0.0) : ev[1];
    g.value = std::numeric_limits<double>::infinity();
    return g;
  }
  g.lambda2 = ev[1];
  const double m2 = std::abs(g.lambda2);
  if (m1 - m2 <= kDegenerateTopTolerance * m1) {
    g.degenerate_top = true;
    g.value = 0.0;
    return g;
  }
  g.value = std::log(m1 / m2);
  return g;
}

inline MassGap spectral_mass_gap(const ValidatedModel& model) {
  return mass_gap_from_spectrum(transfer_spectrum(build_transfer(model)).eigenvalues);
}

/// Position of one spin within a chain of super-sites.
struct ChainSlot {
  std::size_t column_site = 0;
  std::size_t component = 0;
};

inline constexpr double kIllConditioned = 1e10;

/// Connected correlation at column separation x >= 0 on the infinite chain:
/// sum_{k >= 2} (lambda_k / lambda_1)^x (V^{-1} A V)_{1k} (V^{-1} B V)_{k1}.
/// Ill-conditioned eigenvector bases fall back to powers of T with the top
/// eigenpair deflated.
inline cplx two_point_infinite(const TransferOperator& op, int x, ChainSlot a, ChainSlot b) {
  require(x >= 0, ErrorCode::InvalidArgument, "separation must be nonnegative");
  const TransferSpectrum s = transfer_spectrum(op);
  const Eigen::Index q = op.T.rows();
  const CVector da = op.spin_diagonal(a.column_site, a.component);
  const CVector db = op.spin_diagonal(b.column_site, b.component);
  const cplx l1 = s.eigenvalues.front();
  if (s.condition <= kIllConditioned) {
    const CMatrix Vinv = s.vectors.inverse();
    const CVector row = (Vinv.row(0).transpose().array() * da.array()).matrix();  // (V^{-1} A)_{1,:}
    const CVector col = (db.array() * s.vectors.col(0).array()).matrix();        // (B V)_{:,1}
    CVector atil = (row.transpose() * s.vectors).transpose();
    CVector btil = Vinv * col;
    cplx sum = 0.0;
    for (Eigen::Index k = 1; k < q; ++k) sum += std::pow(s.eigenvalues[static_cast<std::size_t>(k)] / l1, x) * atil[k] * btil[k];
    return sum;
  }
  // Deflated powers: T' = T - lambda1 r l / (l r), so l A T'^x B r / lambda1^x
  // is the connected part for x >= 1.
  Eigen::ComplexEigenSolver<CMatrix> left(op.T.transpose(), true);
  Eigen::Index top = 0;
  for (Eigen::Index i = 1; i < q; ++i)
    if (std::abs(left.eigenvalues()[i] - l1) < std::abs(left.eigenvalues()[top] - l1)) top = i;
  const CVector r = s.vectors.col(0);
  const CVector l = left.eigenvectors().col(top);
  const cplx norm = (l.transpose() * r)(0, 0);
  require(std::abs(norm) > 0.0, ErrorCode::InvalidArgument, "top left and right eigenvectors are orthogonal");
  const CMatrix deflated = op.T - l1 * r * l.transpose() / norm;
  CVector v = (db.array() * r.array()).matrix();
  if (x == 0) {
    const cplx full = (l.transpose() * (da.array() * v.array()).matrix())(0, 0) / norm;
    const cplx ma = (l.transpose() * (da.array() * r.array()).matrix())(0, 0) / norm;
    const cplx mb = (l.transpose() * v)(0, 0) / norm;
    return full - ma * mb;
  }
  for (int step = 0; step < x; ++step) v = deflated * v / l1;
  return (l.transpose() * (da.array() * v.array()).matrix())(0, 0) / norm;
}

/// Connected correlation between columns p < q of the finite chain described
/// by `op` (its length and boundary), by exact matrix products.
inline cplx two_point_finite(const TransferOperator& op, std::size_t p, std::size_t q, ChainSlot a, ChainSlot b) {
  const std::size_t L = op.length;
  require(p < L && q < L, ErrorCode::InvalidArgument, "column outside the chain");
  if (p > q) {
    std::swap(p, q);
    std::swap(a, b);
  }
  const CVector da = op.spin_diagonal(a.column_site, a.component);
  const CVector db = op.spin_diagonal(b.column_site, b.component);
  const CVector one = CVector::Ones(op.T.rows());
  auto power = [&](const CMatrix& M, std::size_t n) {
    CMatrix R = CMatrix::Identity(M.rows(), M.cols());
    CMatrix B = M;
    while (n > 0) {
      if (n & 1u) R = R * B;
      B = B * B;
      n >>= 1u;
    }
    return R;
  };
  if (op.boundary == Boundary::Periodic) {
    const std::size_t x = q - p;
    const CMatrix Tx = power(op.T, x);
    const CMatrix Trest = power(op.T, L - x);
    const CMatrix TL = Tx * Trest;
    const cplx z = TL.trace();
    const cplx joint = (da.asDiagonal() * Tx * db.asDiagonal() * Trest).trace() / z;
    const cplx ma = (da.asDiagonal() * TL).trace() / z;
    const cplx mb = (db.asDiagonal() * TL).trace() / z;
    return joint - ma * mb;
  }
  // Free chain: s^T D_0 T D_1 T ... D_{L-1} s with s = sqrt(w).
  const CVector& s = op.sqrt_weight;
  auto sandwich = [&](std::size_t i, const CVector* di, std::size_t j, const CVector* dj) {
    CVector v = s;
    for (std::size_t col = 0; col < L; ++col) {
      if (col > 0) v = op.T.transpose() * v;
      if (di && col == i) v = (v.array() * di->array()).matrix();
      if (dj && col == j) v = (v.array() * dj->array()).matrix();
    }
    return (v.transpose() * s)(0, 0);
  };
  const cplx z = sandwich(0, nullptr, 0, nullptr);
  const cplx joint = sandwich(p, &da, q, &db) / z;
  const cplx ma = sandwich(p, &da, 0, nullptr) / z;
  const cplx mb = sandwich(q, &db, 0, nullptr) / z;
  return joint - ma * mb;
}

/// Z of the model's own chain from the transfer operator: trace(T^L) for a
/// periodic ring, s^T T^{L-1} s for a free chain.
inline cplx transfer_partition_function(const TransferOperator& op) {
  CVector s = op.sqrt_weight;
  if (op.boundary == Boundary::Periodic) {
    CMatrix P = CMatrix::Identity(op.T.rows(), op.T.cols());
    for (std::size_t i = 0; i < op.length; ++i) P = P * op.T;
    return P.trace();
  }
  CVector v = s;
  for (std::size_t i = 1; i < op.length; ++i) v = op.T.transpose() * v;
  return (v.transpose() * s)(0, 0);
}

}  // namespace lyspin
