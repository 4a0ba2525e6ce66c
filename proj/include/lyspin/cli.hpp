#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lyspin/analysis.hpp"
#include "lyspin/cluster.hpp"
#include "lyspin/config.hpp"
#include "lyspin/exact.hpp"
#include "lyspin/io.hpp"
#include "lyspin/leeyang.hpp"
#include "lyspin/model.hpp"
#include "lyspin/transfer.hpp"

namespace lyspin::cli {

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"enumerate", "ursell",  "transfer-scan", "zeros",     "check-c1",
                                              "cluster",   "max-principle", "tree-decay", "ratio-scan"};
  return names;
}

struct Options {
  std::string command;
  std::string config_path;
  /// Inline configuration text; used instead of config_path when nonempty.
  std::string config_text;
  std::filesystem::path out_dir = ".";
  unsigned threads = Parallelism::hardware().threads;
  std::uint64_t seed = 0;
  Format format = Format::Csv;
};

enum ExitCode : int { kSuccess = 0, kValidationError = 1, kCheckFailure = 2 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::SymmetryViolation:
    case ErrorCode::FerromagnetismViolation:
    case ErrorCode::RangeViolation:
    case ErrorCode::UnsupportedDimension:
    case ErrorCode::ConfigMismatch:
    case ErrorCode::NotAChain:
    case ErrorCode::NotIsingType:
    case ErrorCode::OutsideHalfPlane:
    case ErrorCode::ConfigParse:
    case ErrorCode::BudgetExceeded:
    case ErrorCode::IoFailure:
      return kValidationError;
    default:
      return kCheckFailure;
  }
}

namespace detail {

struct Context {
  const Options& opt;
  const RunConfig& cfg;
  EnumerationOptions enumeration;
  Table table;
};

/// Re h < 0 is mapped to -h by the global flip of component 0; slots on
/// component 0 then pick up a sign each.
struct FieldMap {
  cplx field;
  bool flipped = false;
};

inline FieldMap map_field(cplx h) {
  if (h.real() < 0.0) return {-h, true};
  return {h, false};
}

inline double flip_sign(bool flipped, const std::vector<std::size_t>& components) {
  if (!flipped) return 1.0;
  double s = 1.0;
  for (auto c : components)
    if (c == 0) s = -s;
  return s;
}

inline std::vector<double> value_list(const YAML::Node& n, const char* what) {
  if (!n) return {};
  try {
    if (n.IsSequence()) return n.as<std::vector<double>>();
    if (n.IsScalar()) return {n.as<double>()};
    const double start = n["start"].as<double>(), stop = n["stop"].as<double>(), step = n["step"].as<double>();
    require(step > 0.0 && stop >= start, ErrorCode::ConfigParse, std::string(what) + ": need step > 0, stop >= start");
    const long count = std::lround((stop - start) / step) + 1;
    std::vector<double> out;
    for (long k = 0; k < count; ++k) out.push_back(start + static_cast<double>(k) * step);
    return out;
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string(what) + ": " + e.what());
  }
}

/// `fields: [[re, im], ...]` or `grid: {re: ..., im: ...}` (product, im outer);
/// defaults to the model field.
inline std::vector<cplx> field_grid(const RunConfig& cfg) {
  std::vector<cplx> out;
  try {
    if (const auto f = cfg.node("fields")) {
      for (const auto& p : f) {
        const auto v = p.as<std::vector<double>>();
        require(v.size() == 2, ErrorCode::ConfigParse, "each field is [re, im]");
        out.emplace_back(v[0], v[1]);
      }
      return out;
    }
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string("fields: ") + e.what());
  }
  if (const auto g = cfg.node("grid")) {
    auto re = value_list(g["re"], "grid.re");
    auto im = value_list(g["im"], "grid.im");
    if (im.empty()) im = {0.0};
    require(!re.empty(), ErrorCode::ConfigParse, "grid.re is required");
    for (double i : im)
      for (double r : re) out.emplace_back(r, i);
    return out;
  }
  return {cfg.model.field};
}

inline std::vector<Point> point_list(const YAML::Node& n, const char* what) {
  try {
    return n.as<std::vector<Point>>();
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string(what) + ": " + e.what());
  }
}

inline Point center_point(const LatticeBox& lat) {
  Point p;
  for (int L : lat.dims()) p.push_back(L / 2);
  return p;
}

inline void note_flip(Table& t, bool flipped) {
  if (flipped)
    t.metadata["field_mapping"] =
        "Re h < 0 evaluated at -h; values on component 0 carry (-1)^(number of component-0 slots)";
}

// ---------------------------------------------------------------------------

inline void cmd_enumerate(Context& c) {
  const FieldMap fm = map_field(c.cfg.model.field);
  ModelSpec spec = c.cfg.model;
  spec.field = fm.field;
  const ValidatedModel model = validate_model(spec);
  const cplx z = partition_function(model, c.enumeration);
  c.table.add_column("quantity");
  c.table.add_column("site");
  c.table.add_complex_column("value");
  c.table.add_row(Table::RowBuilder{}("Z")(-1)(z));
  for (std::size_t x = 0; x < model.site_count(); ++x) {
    const auto m = joint_moments(model, std::vector<Slot>{{x, 0}}, c.enumeration);
    c.table.add_row(Table::RowBuilder{}("magnetization")(x)((fm.flipped ? -1.0 : 1.0) * m[1]));
  }
  c.table.metadata["beta"] = model.beta();
  note_flip(c.table, fm.flipped);
}

inline void cmd_ursell(Context& c) {
  const FieldMap fm = map_field(c.cfg.model.field);
  ModelSpec spec = c.cfg.model;
  spec.field = fm.field;
  const ValidatedModel model = validate_model(spec);
  require(c.cfg.has("sites"), ErrorCode::ConfigParse, "ursell needs 'sites'");
  const auto sites = point_list(c.cfg.node("sites"), "sites");
  auto comps = c.cfg.get<std::vector<std::size_t>>("components", std::vector<std::size_t>(sites.size(), 0));
  const auto u = ursell(model, sites, comps, c.enumeration);
  const double sign = flip_sign(fm.flipped, comps);
  c.table.add_column("n");
  c.table.add_column("sites");
  c.table.add_column("components");
  c.table.add_complex_column("value");
  c.table.add_complex_column("h");
  c.table.add_column("beta");
  c.table.add_column("volume");
  std::string s, k, vol;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    s += (i ? ";" : "");
    for (std::size_t d = 0; d < sites[i].size(); ++d) s += (d ? " " : "") + std::to_string(sites[i][d]);
    k += (i ? ";" : "") + std::to_string(comps[i]);
  }
  for (std::size_t d = 0; d < model.lattice().dims().size(); ++d)
    vol += (d ? "x" : "") + std::to_string(model.lattice().dims()[d]);
  vol += " " + boundary_name(model.lattice().boundary());
  c.table.add_row(Table::RowBuilder{}(sites.size())(s)(k)(sign * u.value)(c.cfg.model.field)(model.beta())(vol));
  c.table.metadata["negligible"] = u.negligible();
  note_flip(c.table, fm.flipped);
}

inline void cmd_transfer_scan(Context& c) {
  const ValidatedModel base = validate_model(c.cfg.model);
  const auto grid = field_grid(c.cfg);
  std::vector<MassGap> gaps(grid.size());
  bool flipped = false;
  for (auto h : grid) flipped = flipped || map_field(h).flipped;
  parallel_for(grid.size(), c.enumeration.parallel, [&](std::size_t k) {
    require(grid[k].real() != 0.0, ErrorCode::OutsideHalfPlane, "transfer-scan needs Re h != 0");
    gaps[k] = spectral_mass_gap(base.with_field(map_field(grid[k]).field));
  });
  c.table.add_complex_column("h");
  c.table.add_column("mass_gap");
  c.table.add_complex_column("lambda1");
  c.table.add_complex_column("lambda2");
  c.table.add_column("degenerate_top");
  for (std::size_t k = 0; k < grid.size(); ++k)
    c.table.add_row(
        Table::RowBuilder{}(grid[k])(gaps[k].value)(gaps[k].lambda1)(gaps[k].lambda2)(gaps[k].degenerate_top ? 1 : 0));
  note_flip(c.table, flipped);
}

/// Optional random suite: `random_draws` instances on the config lattice with
/// every bond's J drawn from `coupling_range` and beta from `beta_range`.
inline std::vector<ModelSpec> instance_suite(const Context& c) {
  const int draws = c.cfg.get<int>("random_draws", 0);
  if (draws <= 0) return {c.cfg.model};
  const auto jr = c.cfg.get<std::vector<double>>("coupling_range", {0.5, 1.5});
  const auto br = c.cfg.get<std::vector<double>>("beta_range", {0.2, 1.0});
  require(jr.size() == 2 && br.size() == 2, ErrorCode::ConfigParse, "ranges are [lo, hi]");
  std::mt19937_64 rng(c.opt.seed);
  std::uniform_real_distribution<double> J(jr[0], jr[1]), B(br[0], br[1]);
  const ValidatedModel base = validate_model(c.cfg.model);
  std::vector<ModelSpec> out;
  for (int d = 0; d < draws; ++d) {
    ModelSpec s = c.cfg.model;
    s.beta = B(rng);
    s.couplings.offsets.clear();
    s.couplings.pairs.clear();
    for (const auto& b : base.bonds()) {
      std::vector<double> Jb(base.components(), 0.0);
      Jb[0] = J(rng);
      s.couplings.pairs.push_back({base.lattice().point(b.u), base.lattice().point(b.v), Jb});
    }
    out.push_back(s);
  }
  return out;
}

inline constexpr double kCircleTolerance = 1e-8;

inline void cmd_zeros(Context& c) {
  const auto suite = instance_suite(c);
  c.table.add_column("instance");
  c.table.add_column("beta");
  c.table.add_complex_column("z");
  c.table.add_column("modulus");
  c.table.add_complex_column("h");
  c.table.add_column("residual");
  double worst = 0.0, worst_res = 0.0;
  for (std::size_t k = 0; k < suite.size(); ++k) {
    const ValidatedModel m = validate_model(suite[k]);
    for (const auto& r : zeros(m, c.enumeration)) {
      worst = std::max(worst, std::abs(r.modulus - 1.0));
      worst_res = std::max(worst_res, r.residual);
      c.table.add_row(Table::RowBuilder{}(k)(m.beta())(r.z)(r.modulus)(r.h)(r.residual));
    }
  }
  c.table.metadata["seed"] = c.opt.seed;
  c.table.metadata["instances"] = suite.size();
  c.table.metadata["max_modulus_deviation"] = worst;
  c.table.metadata["max_residual"] = worst_res;
  require(worst <= kCircleTolerance, ErrorCode::CheckFailure,
          "a fugacity root lies off the unit circle by " + format_double(worst));
}

inline WedgeSearch wedge_search(const RunConfig& cfg) {
  WedgeSearch w;
  w.u_points = cfg.get<int>("u_points", w.u_points);
  w.alpha_points = cfg.get<int>("alpha_points", w.alpha_points);
  w.segment_points = cfg.get<int>("segment_points", w.segment_points);
  w.kappa_cap = cfg.get<double>("kappa_cap", w.kappa_cap);
  return w;
}

/// max M_h = mu0(Re h) / |mu0(h)| over `points` samples of gamma_v(alpha, u).
inline double max_m_factor(const SiteMeasure& mu, double beta, double u, double alpha, std::size_t points) {
  WedgeDomain d{alpha, std::min(0.1, u / 2), u};
  double worst = 0.0;
  for (auto z : d.gamma_v(points)) worst = std::max(worst, laplace_modulus_ratio(mu, beta * z));
  return worst;
}

inline void cmd_check_c1(Context& c) {
  const auto u0s = value_list(c.cfg.node("u0"), "u0");
  const auto search = wedge_search(c.cfg);
  const SiteMeasure& mu = c.cfg.model.measure;
  c.table.add_column("u0");
  c.table.add_column("alpha_tilde");
  c.table.add_column("u_tilde");
  c.table.add_column("kappa");
  c.table.add_column("m_factor_max");
  for (double u0 : (u0s.empty() ? std::vector<double>{1.0} : u0s)) {
    const auto cert = find_wedge_params(mu, u0, search);
    const double mmax = max_m_factor(mu, 1.0, cert.u_tilde, cert.alpha_tilde, 1024);
    c.table.add_row(Table::RowBuilder{}(u0)(cert.alpha_tilde)(cert.u_tilde)(cert.kappa)(mmax));
  }
  c.table.metadata["kappa_cap"] = search.kappa_cap;
  c.table.metadata["u_points"] = search.u_points;
  c.table.metadata["alpha_points"] = search.alpha_points;
  c.table.metadata["segment_points"] = search.segment_points;
}

inline EtaSearch eta_search(const RunConfig& cfg) {
  EtaSearch s;
  s.epsilon = cfg.get<double>("epsilon", s.epsilon);
  s.n_max = cfg.get<std::size_t>("n_max", s.n_max);
  s.field_cap = cfg.get<double>("field_cap", s.field_cap);
  return s;
}

inline void cmd_cluster(Context& c) {
  const ValidatedModel base = validate_model(c.cfg.model);
  const auto& lat = base.lattice();
  const Point origin = c.cfg.has("origin") ? c.cfg.get<Point>("origin", {}) : Point(lat.dimension(), 0);
  const auto seps = c.cfg.get<std::vector<int>>("separations", {1, 2, 3, 4});
  std::vector<std::size_t> targets;
  for (int x : seps) {
    Point t = origin;
    t[0] += x;
    require(lat.contains(t), ErrorCode::InvalidArgument, "separation leaves the lattice");
    targets.push_back(lat.index(t));
  }
  const EtaSearch es = eta_search(c.cfg);
  const auto eta = find_eta(base, {lat.index(origin), targets.empty() ? 0 : targets.front()}, es);
  // Zero field in the config means "evaluate at the convergence threshold".
  const FieldMap fm = map_field(base.field() == cplx(0.0) ? cplx(eta.eta) : base.field());
  const ValidatedModel model = base.with_field(fm.field);
  ClusterSeriesOptions so;
  so.tau = eta.tau;
  so.order = c.cfg.get<std::size_t>("order", 4);
  so.epsilon = es.epsilon;
  so.eta = eta.eta;
  const auto series = cluster_two_point_profile(model, lat.index(origin), targets, so);
  const bool exact_ok = std::pow(static_cast<double>(model.measure().size()), static_cast<double>(model.site_count())) <=
                        static_cast<double>(c.enumeration.budget);
  c.table.add_column("x");
  c.table.add_column("order");
  c.table.add_complex_column("value");
  c.table.add_column("tail_bound");
  c.table.add_complex_column("exact");
  c.table.add_column("error");
  for (std::size_t k = 0; k < targets.size(); ++k) {
    cplx exact = std::nan("");
    double err = std::nan("");
    if (exact_ok) {
      exact = ursell(model, {origin, lat.point(targets[k])}, {0, 0}, c.enumeration).value;
      err = std::abs(exact - series[k].value);
    }
    c.table.add_row(Table::RowBuilder{}(seps[k])(so.order)(series[k].value)(series[k].tail_bound)(exact)(err));
  }
  c.table.metadata["eta"] = eta.eta;
  c.table.metadata["tau"] = eta.tau;
  c.table.metadata["delta"] = eta.delta;
  c.table.metadata["epsilon"] = es.epsilon;
  c.table.metadata["source_bound"] = eta.st_bound;
  c.table.metadata["tail_constant"] = series.empty() ? 0.0 : series.front().tail_constant;
  nlohmann::ordered_json counts = nlohmann::ordered_json::array();
  if (!series.empty())
    for (auto n : series.front().polymer_counts) counts.push_back(n);
  c.table.metadata["polymer_counts"] = counts;
  nlohmann::ordered_json partial = nlohmann::ordered_json::array();
  for (const auto& s : series) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (auto v : s.partial_sums) row.push_back({v.real(), v.imag()});
    partial.push_back(row);
  }
  c.table.metadata["partial_sums"] = partial;
  note_flip(c.table, fm.flipped);
}

inline void cmd_max_principle(Context& c) {
  const ValidatedModel base = validate_model(c.cfg.model);
  const auto& lat = base.lattice();
  TwoPointSlots slots;
  slots.origin = c.cfg.has("origin") ? c.cfg.get<Point>("origin", {}) : Point(lat.dimension(), 0);
  if (c.cfg.has("target")) {
    slots.target = c.cfg.get<Point>("target", {});
  } else {
    slots.target = slots.origin;
    slots.target[0] += lat.dims()[0] / 2;
  }
  const double m0 = c.cfg.get<double>("m0", 1.0);
  double c1 = c.cfg.get<double>("c1", 0.0);
  if (c1 <= 0.0) c1 = find_eta(base, {lat.index(slots.origin), lat.index(slots.target)}, eta_search(c.cfg)).eta;
  const auto search = wedge_search(c.cfg);
  const CertificateOracle oracle = [&](double u0) { return find_wedge_params(base.measure(), u0, search); };
  const auto nb = c.cfg.get<std::size_t>("boundary_points", 512);
  const auto ni = c.cfg.get<std::size_t>("interior_points", 128);
  c.table.add_complex_column("h");
  for (const char* col : {"alpha", "delta", "eta", "epsilon", "boundary_max", "interior_max", "margin"})
    c.table.add_column(col);
  c.table.add_complex_column("boundary_argmax");
  c.table.add_complex_column("interior_argmax");
  c.table.add_column("boundary_points");
  c.table.add_column("interior_points");
  c.table.add_column("passed");
  bool all = true, flipped = false;
  for (auto h0 : field_grid(c.cfg)) {
    const FieldMap fm = map_field(h0);
    flipped = flipped || fm.flipped;
    const auto p = select_parameters(fm.field, oracle, c1, m0);
    const auto r = max_principle_check(base, slots, p.domain, p.epsilon, nb, ni, {}, c.enumeration, false);
    all = all && r.passed;
    c.table.add_row(Table::RowBuilder{}(h0)(p.domain.alpha)(p.domain.delta)(p.domain.eta)(p.epsilon)(r.boundary_max)(
        r.interior_max)(r.margin)(r.boundary_argmax)(r.interior_argmax)(r.boundary_points)(r.interior_points)(
        r.passed ? 1 : 0));
  }
  c.table.metadata["c1"] = c1;
  c.table.metadata["m0"] = m0;
  note_flip(c.table, flipped);
  require(all, ErrorCode::SampleTooCoarse, "interior samples exceed the boundary maximum after refinement");
}

inline void cmd_tree_decay(Context& c) {
  const FieldMap fm = map_field(c.cfg.model.field);
  ModelSpec spec = c.cfg.model;
  spec.field = fm.field;
  const ValidatedModel model = validate_model(spec);
  const auto& lat = model.lattice();
  std::vector<std::vector<Point>> families;
  if (const auto f = c.cfg.node("families")) {
    for (const auto& fam : f) families.push_back(point_list(fam, "families"));
  } else {
    // Collinear triples (c - floor(k/2), c, c + ceil(k/2)) along axis 0.
    const Point ctr = center_point(lat);
    for (int k = 2;; ++k) {
      Point a = ctr, b = ctr;
      a[0] -= k / 2;
      b[0] += k - k / 2;
      if (!lat.contains(a) || !lat.contains(b)) break;
      families.push_back({a, ctr, b});
    }
  }
  require(!families.empty(), ErrorCode::ConfigParse, "tree-decay needs at least one point family");
  const std::size_t n = families.front().size();
  const auto comps = c.cfg.get<std::vector<std::size_t>>("components", std::vector<std::size_t>(n, 0));
  const DecayFit fit = tree_decay_fit(model, families, comps, c.enumeration);
  const double sign = flip_sign(fm.flipped, comps);
  c.table.add_column("family");
  c.table.add_column("tree_length");
  c.table.add_complex_column("value");
  c.table.add_column("in_window");
  for (std::size_t k = 0; k < families.size(); ++k) {
    const auto u = ursell(model, families[k], comps, c.enumeration);
    c.table.add_row(Table::RowBuilder{}(k)(tree_length(families[k], &lat))(sign * u.value)(
        inside_boundary_window(model, families[k]) ? 1 : 0));
  }
  c.table.metadata["slope"] = fit.slope;
  c.table.metadata["intercept"] = fit.intercept;
  c.table.metadata["residual"] = fit.residual;
  c.table.metadata["envelope"] = fit.envelope;
  c.table.metadata["dropped"] = fit.dropped;
  c.table.metadata["trimmed"] = fit.trimmed;
  note_flip(c.table, fm.flipped);
}

inline void cmd_ratio_scan(Context& c) {
  const ValidatedModel base = validate_model(c.cfg.model);
  auto grid = field_grid(c.cfg);
  bool flipped = false;
  for (auto& h : grid) {
    require(h.real() != 0.0, ErrorCode::OutsideHalfPlane, "ratio-scan grid contains Re h = 0");
    const FieldMap fm = map_field(h);
    flipped = flipped || fm.flipped;
    h = fm.field;
  }
  const RatioScan scan = ratio_scan(base, grid, c.enumeration.parallel);
  c.table.add_complex_column("h");
  c.table.add_column("mass_gap");
  c.table.add_column("ratio");
  for (const auto& r : scan.rows) c.table.add_row(Table::RowBuilder{}(r.h)(r.gap.value)(r.ratio));
  c.table.metadata["infimum"] = scan.infimum;
  c.table.metadata["infimum_at"] = {scan.infimum_at.real(), scan.infimum_at.imag()};
  note_flip(c.table, flipped);
}

}  // namespace detail

inline void write_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
  nlohmann::ordered_json rec;
  rec["error"] = code;
  rec["message"] = message;
  rec["exit_code"] = exit_code;
  err << rec.dump() << '\n';
}

/// Executes one command; returns the process exit status. Result files go to
/// `<out>/<command>.csv|json`; failures print a JSON record to `err`.
inline int run(const Options& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const RunConfig cfg = opt.config_text.empty() ? load_config(opt.config_path) : parse_config_text(opt.config_text);
    Options resolved = opt;
    if (resolved.command.empty()) resolved.command = cfg.get<std::string>("command", "");
    require(!resolved.command.empty(), ErrorCode::ConfigParse, "no command given on the command line or in the config");
    detail::Context c{resolved, cfg, {}, {}};
    c.enumeration.parallel.threads = std::max(1u, opt.threads);
    c.enumeration.budget = cfg.get<std::uint64_t>("budget", c.enumeration.budget);
    c.table.command = resolved.command;
    c.table.metadata["schema_version"] = kSchemaVersion;
    c.table.metadata["seed"] = opt.seed;
    std::optional<Error> deferred;
    try {
      const std::string& cmd = resolved.command;
      if (cmd == "enumerate") detail::cmd_enumerate(c);
      else if (cmd == "ursell") detail::cmd_ursell(c);
      else if (cmd == "transfer-scan") detail::cmd_transfer_scan(c);
      else if (cmd == "zeros") detail::cmd_zeros(c);
      else if (cmd == "check-c1") detail::cmd_check_c1(c);
      else if (cmd == "cluster") detail::cmd_cluster(c);
      else if (cmd == "max-principle") detail::cmd_max_principle(c);
      else if (cmd == "tree-decay") detail::cmd_tree_decay(c);
      else if (cmd == "ratio-scan") detail::cmd_ratio_scan(c);
      else throw Error(ErrorCode::ConfigParse, "unknown command '" + cmd + "'");
    } catch (const Error& e) {
      // Check failures still write the rows computed so far.
      if (exit_code_for(e.code()) != kCheckFailure || c.table.rows.empty()) throw;
      deferred = e;
    }
    emit(c.table, resolved.out_dir, resolved.format);
    for (const auto& row : c.table.rows) {
      for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << c.table.columns[k] << "=" << format_cell(row[k]);
      out << '\n';
    }
    if (deferred) {
      write_error(err, std::string(deferred->name()), deferred->what(), kCheckFailure);
      return kCheckFailure;
    }
    return kSuccess;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    write_error(err, std::string(e.name()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    write_error(err, "InternalError", e.what(), kCheckFailure);
    return kCheckFailure;
  }
}

}  // namespace lyspin::cli
