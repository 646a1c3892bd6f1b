#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mre/analytic.hpp"
#include "mre/error.hpp"
#include "mre/field.hpp"
#include "mre/lm.hpp"
#include "mre/mesh.hpp"
#include "mre/model.hpp"
#include "mre/verify.hpp"

#ifndef MRE_VERSION
#define MRE_VERSION "0.0.0"
#endif

namespace mre {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = MRE_VERSION;

enum class DataSource { analytic, fd };

/// Two values per layer, layer 1 first.
using LayerPair = std::array<double, 2>;

struct RelativeTolerance {
  double storage = 0.05;
  double loss = 0.10;
};

/// One experiment as configured, in the units used by the configuration
/// files: mm, kPa, Hz, and the viscosity coefficient eta in Pa s with
/// G'' = eta * omega.
struct ExperimentSpec {
  std::string name = "experiment";

  LayerPair storage_kPa{20.0, 10.0};
  LayerPair viscosity_Pa_s{0.4, 0.3};
  double rho = 1000.0;
  double frequency_Hz = 20.0;
  double interface_mm = 60.0;
  double x_extent_mm = 120.0;
  double y_extent_mm = 120.0;
  double amplitude_mm = 0.02;
  bool elastic = false;

  int nx = 121;
  int ny = 121;
  int refinement = 1;
  MassStencil mass = MassStencil::corrected;

  double noise_level = 0.2;
  std::uint64_t seed = 1;

  DataSource source = DataSource::analytic;
  FluxRow flux = FluxRow::physical;
  DispersionSign dispersion = DispersionSign::pde;
  /// Refinement of the solver grid used to synthesize data when source = fd.
  int fd_refinement = 3;

  LayerPair initial_storage_kPa{30.0, 30.0};
  LayerPair initial_viscosity_Pa_s{0.5, 0.5};
  /// Solver settings. Bounds are stored in SI (Pa) here; the configuration
  /// file gives storage bounds in kPa and loss bounds in Pa.
  LMConfig lm;
  /// Noise level for the discrepancy rule; measured from the synthetic data
  /// when absent.
  std::optional<double> noise_delta;

  std::string out_dir;
  double profile_x1_mm = 60.0;

  /// Published recovery for side-by-side comparison, in configuration units.
  std::optional<LayerPair> reference_storage_kPa;
  std::optional<LayerPair> reference_viscosity_Pa_s;
  RelativeTolerance tolerance;

  double omega() const { return 2.0 * std::numbers::pi * frequency_Hz; }

  TwoLayerGeometry geometry() const {
    return {x_extent_mm * 1e-3, y_extent_mm * 1e-3, interface_mm * 1e-3, amplitude_mm * 1e-3};
  }
  Physics physics() const { return {rho, omega(), geometry()}; }

  LayeredParams to_si(const LayerPair& storage_kPa_, const LayerPair& eta) const {
    const double w = elastic ? 0.0 : omega();
    return {storage_kPa_[0] * 1e3, eta[0] * w, storage_kPa_[1] * 1e3, eta[1] * w};
  }
  LayeredParams truth() const { return to_si(storage_kPa, viscosity_Pa_s); }
  LayeredParams initial() const { return to_si(initial_storage_kPa, initial_viscosity_Pa_s); }

  LMConfig solver_config() const {
    LMConfig c = lm;
    c.elastic = elastic;
    return c;
  }

  Grid grid() const {
    const auto g = geometry();
    return build_grid(nx, ny, g.x_extent, g.y_extent, g.x_L);
  }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw Error(ErrorCode::InvalidConfig, field + ": " + why);
    };
    for (int k = 0; k < 2; ++k) {
      if (!(storage_kPa[k] > 0.0)) fail("physics.storage_kPa", "must be positive");
      if (!(initial_storage_kPa[k] > 0.0)) fail("inversion.initial.storage_kPa", "must be positive");
      if (!elastic && !(viscosity_Pa_s[k] > 0.0)) fail("physics.viscosity_Pa_s", "must be positive");
      if (!elastic && !(initial_viscosity_Pa_s[k] > 0.0)) fail("inversion.initial.viscosity_Pa_s", "must be positive");
    }
    if (!(rho > 0.0)) fail("physics.rho_kg_m3", "must be positive");
    if (!(frequency_Hz > 0.0)) fail("physics.frequency_Hz", "must be positive");
    if (!(x_extent_mm > 0.0) || !(y_extent_mm > 0.0)) fail("physics.extent_mm", "must be positive");
    if (!(interface_mm > 0.0 && interface_mm < y_extent_mm)) fail("physics.interface_mm", "must lie inside the domain");
    if (!(amplitude_mm > 0.0)) fail("physics.amplitude_mm", "must be positive");
    if (nx < 3 || ny < 3) fail("discretization", "nx and ny must be at least 3");
    if (refinement < 1) fail("discretization.refinement", "must be >= 1");
    if (fd_refinement < 1) fail("data.fd_refinement", "must be >= 1");
    if (!(noise_level >= 0.0)) fail("noise.level", "must be nonnegative");
    if (noise_delta && !(*noise_delta >= 0.0)) fail("inversion.noise_delta", "must be nonnegative");
    if (!(tolerance.storage > 0.0) || !(tolerance.loss > 0.0)) fail("tolerance", "must be positive");
    try {
      solver_config().validate();
    } catch (const Error& e) {
      fail("inversion", e.what());
    }
    try {
      (void)grid();
    } catch (const Error& e) {
      fail("discretization", e.what());
    }
    if (!initial().within(lm.bounds, elastic)) fail("inversion.initial", "outside the admissible box");
  }
};

// ---------------------------------------------------------------------------
// Enum spellings used by configuration files and the command line.

inline std::string to_string(DataSource s) { return s == DataSource::analytic ? "analytic" : "fd"; }
inline std::string to_string(FluxRow f) { return f == FluxRow::physical ? "physical" : "unweighted"; }
inline std::string to_string(DispersionSign s) { return s == DispersionSign::pde ? "pde" : "flipped"; }
inline std::string to_string(DataNorm n) { return n == DataNorm::h1 ? "h1" : "l2"; }
inline std::string to_string(MassStencil m) { return m == MassStencil::corrected ? "corrected" : "lumped"; }

namespace detail {

template <class E>
E parse_choice(const std::string& field, const std::string& v, std::initializer_list<std::pair<const char*, E>> opts) {
  std::string names;
  for (const auto& [name, value] : opts) {
    if (v == name) return value;
    names += names.empty() ? name : std::string("|") + name;
  }
  throw Error(ErrorCode::InvalidConfig, field + ": expected " + names + ", got '" + v + "'");
}

}  // namespace detail

inline DataSource parse_data_source(const std::string& v) {
  return detail::parse_choice<DataSource>("data.source", v, {{"analytic", DataSource::analytic}, {"fd", DataSource::fd}});
}
inline FluxRow parse_flux_row(const std::string& v) {
  return detail::parse_choice<FluxRow>("data.flux_row", v, {{"physical", FluxRow::physical}, {"unweighted", FluxRow::unweighted}});
}
inline DispersionSign parse_dispersion(const std::string& v) {
  return detail::parse_choice<DispersionSign>("data.dispersion", v,
                                              {{"pde", DispersionSign::pde}, {"flipped", DispersionSign::flipped}});
}
inline DataNorm parse_norm(const std::string& v) {
  return detail::parse_choice<DataNorm>("inversion.norm", v, {{"h1", DataNorm::h1}, {"l2", DataNorm::l2}});
}
inline MassStencil parse_mass(const std::string& v) {
  return detail::parse_choice<MassStencil>("discretization.mass", v,
                                           {{"corrected", MassStencil::corrected}, {"lumped", MassStencil::lumped}});
}

// ---------------------------------------------------------------------------
// JSON schema. Unknown keys are rejected so that typos do not silently fall
// back to defaults.

namespace detail {

class Section {
 public:
  Section(const Json& j, std::string path, std::initializer_list<const char*> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorCode::InvalidConfig, where("") + "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!ok.count(it.key())) throw Error(ErrorCode::InvalidConfig, where(it.key()) + "unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const Json& raw(const char* key) const { return j_.at(key); }
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void read(const char* key, T& out) const {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::InvalidConfig, where(key) + "wrong type");
    }
  }

  void read_pair(const char* key, LayerPair& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw Error(ErrorCode::InvalidConfig, where(key) + "expected [layer1, layer2]");
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  template <class E>
  void read_enum(const char* key, E& out, E (*parse)(const std::string&)) const {
    std::string s;
    if (!has(key)) return;
    read(key, s);
    out = parse(s);
  }

 private:
  std::string where(const std::string& key) const {
    const std::string full = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
    return (full.empty() ? std::string("config") : full) + ": ";
  }
  const Json& j_;
  std::string path_;
};

}  // namespace detail

inline ExperimentSpec spec_from_json(const Json& j, ExperimentSpec s = {}) {
  using detail::Section;
  const Section top(j, "", {"name", "physics", "discretization", "noise", "data", "inversion", "outputs", "reference",
                            "tolerance"});
  top.read("name", s.name);
  if (top.has("physics")) {
    const Section p(top.raw("physics"), "physics",
                    {"storage_kPa", "viscosity_Pa_s", "rho_kg_m3", "frequency_Hz", "interface_mm", "extent_mm",
                     "amplitude_mm", "elastic"});
    p.read_pair("storage_kPa", s.storage_kPa);
    p.read_pair("viscosity_Pa_s", s.viscosity_Pa_s);
    p.read("rho_kg_m3", s.rho);
    p.read("frequency_Hz", s.frequency_Hz);
    p.read("interface_mm", s.interface_mm);
    LayerPair ext{s.x_extent_mm, s.y_extent_mm};
    p.read_pair("extent_mm", ext);
    s.x_extent_mm = ext[0];
    s.y_extent_mm = ext[1];
    p.read("amplitude_mm", s.amplitude_mm);
    p.read("elastic", s.elastic);
  }
  if (top.has("discretization")) {
    const Section d(top.raw("discretization"), "discretization", {"nx", "ny", "refinement", "mass"});
    d.read("nx", s.nx);
    d.read("ny", s.ny);
    d.read("refinement", s.refinement);
    d.read_enum("mass", s.mass, &parse_mass);
  }
  if (top.has("noise")) {
    const Section n(top.raw("noise"), "noise", {"level", "seed"});
    n.read("level", s.noise_level);
    n.read("seed", s.seed);
  }
  if (top.has("data")) {
    const Section d(top.raw("data"), "data", {"source", "flux_row", "dispersion", "fd_refinement"});
    d.read_enum("source", s.source, &parse_data_source);
    d.read_enum("flux_row", s.flux, &parse_flux_row);
    d.read_enum("dispersion", s.dispersion, &parse_dispersion);
    d.read("fd_refinement", s.fd_refinement);
  }
  if (top.has("inversion")) {
    const Section v(top.raw("inversion"), "inversion",
                    {"initial", "q", "tau", "alpha_min", "alpha_max", "alpha_tol", "max_bisection", "max_iter",
                     "exact_data_tol", "step_tol", "stagnation_window", "norm", "noise_delta", "bounds"});
    if (v.has("initial")) {
      const Section i(v.raw("initial"), "inversion.initial", {"storage_kPa", "viscosity_Pa_s"});
      i.read_pair("storage_kPa", s.initial_storage_kPa);
      i.read_pair("viscosity_Pa_s", s.initial_viscosity_Pa_s);
    }
    v.read("q", s.lm.q);
    v.read("tau", s.lm.tau);
    v.read("alpha_min", s.lm.alpha_min);
    v.read("alpha_max", s.lm.alpha_max);
    v.read("alpha_tol", s.lm.alpha_tol);
    v.read("max_bisection", s.lm.max_bisection);
    v.read("max_iter", s.lm.max_iter);
    v.read("exact_data_tol", s.lm.exact_data_tol);
    v.read("step_tol", s.lm.step_tol);
    v.read("stagnation_window", s.lm.stagnation_window);
    v.read_enum("norm", s.lm.norm, &parse_norm);
    if (v.has("noise_delta")) {
      double d = 0.0;
      v.read("noise_delta", d);
      s.noise_delta = d;
    }
    if (v.has("bounds")) {
      const Section b(v.raw("bounds"), "inversion.bounds", {"storage_kPa", "loss_Pa"});
      LayerPair st{s.lm.bounds.storage_min * 1e-3, s.lm.bounds.storage_max * 1e-3};
      LayerPair lo{s.lm.bounds.loss_min, s.lm.bounds.loss_max};
      b.read_pair("storage_kPa", st);
      b.read_pair("loss_Pa", lo);
      s.lm.bounds = {st[0] * 1e3, st[1] * 1e3, lo[0], lo[1]};
    }
  }
  if (top.has("outputs")) {
    const Section o(top.raw("outputs"), "outputs", {"directory", "profile_x1_mm"});
    o.read("directory", s.out_dir);
    o.read("profile_x1_mm", s.profile_x1_mm);
  }
  if (top.has("reference")) {
    const Section r(top.raw("reference"), "reference", {"storage_kPa", "viscosity_Pa_s"});
    if (r.has("storage_kPa")) {
      LayerPair v{};
      r.read_pair("storage_kPa", v);
      s.reference_storage_kPa = v;
    }
    if (r.has("viscosity_Pa_s")) {
      LayerPair v{};
      r.read_pair("viscosity_Pa_s", v);
      s.reference_viscosity_Pa_s = v;
    }
  }
  if (top.has("tolerance")) {
    const Section t(top.raw("tolerance"), "tolerance", {"storage_rel", "loss_rel"});
    t.read("storage_rel", s.tolerance.storage);
    t.read("loss_rel", s.tolerance.loss);
  }
  s.validate();
  return s;
}

inline ExperimentSpec load_spec(const std::string& path, ExperimentSpec base = {}) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::Io, "cannot open config " + path);
  Json j;
  try {
    j = Json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
  }
  return spec_from_json(j, std::move(base));
}

/// The resolved spec, in configuration units plus the derived SI values.
inline Json to_json(const ExperimentSpec& s) {
  Json j;
  j["name"] = s.name;
  j["physics"] = {{"storage_kPa", s.storage_kPa},     {"viscosity_Pa_s", s.viscosity_Pa_s},
                  {"rho_kg_m3", s.rho},               {"frequency_Hz", s.frequency_Hz},
                  {"interface_mm", s.interface_mm},   {"extent_mm", {s.x_extent_mm, s.y_extent_mm}},
                  {"amplitude_mm", s.amplitude_mm},   {"elastic", s.elastic}};
  j["discretization"] = {{"nx", s.nx}, {"ny", s.ny}, {"refinement", s.refinement}, {"mass", to_string(s.mass)}};
  j["noise"] = {{"level", s.noise_level}, {"seed", s.seed}};
  j["data"] = {{"source", to_string(s.source)},
               {"flux_row", to_string(s.flux)},
               {"dispersion", to_string(s.dispersion)},
               {"fd_refinement", s.fd_refinement}};
  const auto& c = s.lm;
  j["inversion"] = {
      {"initial", {{"storage_kPa", s.initial_storage_kPa}, {"viscosity_Pa_s", s.initial_viscosity_Pa_s}}},
      {"q", c.q},
      {"tau", c.tau},
      {"alpha_min", c.alpha_min},
      {"alpha_max", c.alpha_max},
      {"alpha_tol", c.alpha_tol},
      {"max_bisection", c.max_bisection},
      {"max_iter", c.max_iter},
      {"exact_data_tol", c.exact_data_tol},
      {"step_tol", c.step_tol},
      {"stagnation_window", c.stagnation_window},
      {"norm", to_string(c.norm)},
      {"noise_delta", s.noise_delta ? Json(*s.noise_delta) : Json(nullptr)},
      {"bounds",
       {{"storage_kPa", {c.bounds.storage_min * 1e-3, c.bounds.storage_max * 1e-3}},
        {"loss_Pa", {c.bounds.loss_min, c.bounds.loss_max}}}}};
  j["outputs"] = {{"directory", s.out_dir}, {"profile_x1_mm", s.profile_x1_mm}};
  if (s.reference_storage_kPa || s.reference_viscosity_Pa_s) {
    Json r = Json::object();
    if (s.reference_storage_kPa) r["storage_kPa"] = *s.reference_storage_kPa;
    if (s.reference_viscosity_Pa_s) r["viscosity_Pa_s"] = *s.reference_viscosity_Pa_s;
    j["reference"] = r;
  }
  j["tolerance"] = {{"storage_rel", s.tolerance.storage}, {"loss_rel", s.tolerance.loss}};
  const LayeredParams t = s.truth(), i = s.initial();
  j["si"] = {{"omega_rad_s", s.omega()},
             {"truth_Pa", t.as_array()},
             {"initial_Pa", i.as_array()},
             {"geometry_m", {s.geometry().x_extent, s.geometry().y_extent, s.geometry().x_L, s.geometry().amplitude}}};
  return j;
}

// ---------------------------------------------------------------------------
// Parameter tables and comparison against reference values

/// Named parameters in configuration units: storage in kPa, loss as the
/// viscosity coefficient in Pa s. Elastic tables carry storage entries only.
using ParameterTable = std::map<std::string, double>;

inline ParameterTable parameter_table(const LayeredParams& p, bool elastic, double omega) {
  ParameterTable t{{"G1_storage_kPa", p.storage1 * 1e-3}, {"G2_storage_kPa", p.storage2 * 1e-3}};
  if (!elastic) {
    t["G1_viscosity_Pa_s"] = p.loss1 / omega;
    t["G2_viscosity_Pa_s"] = p.loss2 / omega;
  }
  return t;
}

inline ParameterTable parameter_table(const LayerPair& storage_kPa, const std::optional<LayerPair>& eta) {
  ParameterTable t{{"G1_storage_kPa", storage_kPa[0]}, {"G2_storage_kPa", storage_kPa[1]}};
  if (eta) {
    t["G1_viscosity_Pa_s"] = (*eta)[0];
    t["G2_viscosity_Pa_s"] = (*eta)[1];
  }
  return t;
}

struct ComparisonRow {
  std::string name;
  double recovered = 0.0;
  double truth = 0.0;
  std::optional<double> reference;
  double rel_error_truth = 0.0;
  std::optional<double> rel_error_reference;
  double tolerance = 0.0;
  bool pass = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool pass = true;
};

inline double relative_error(double value, double target) {
  return target != 0.0 ? std::abs(value - target) / std::abs(target) : std::abs(value);
}

/// Relative errors of `recovered` against the true values and, optionally,
/// against reference values. Pass/fail is judged against the truth.
inline ComparisonReport compare_with_reference(const ParameterTable& recovered, const ParameterTable& truth,
                                               const std::optional<ParameterTable>& reference,
                                               const RelativeTolerance& tol) {
  auto same_keys = [](const ParameterTable& a, const ParameterTable& b) {
    if (a.size() != b.size()) return false;
    for (const auto& [k, v] : a)
      if (!b.count(k)) return false;
    return true;
  };
  if (!same_keys(recovered, truth)) throw Error(ErrorCode::LayoutMismatch, "recovered and true parameters differ in layout");
  if (reference && !same_keys(recovered, *reference)) {
    throw Error(ErrorCode::LayoutMismatch, "reference table has a different parameter layout");
  }
  ComparisonReport out;
  for (const auto& [name, value] : recovered) {
    ComparisonRow row;
    row.name = name;
    row.recovered = value;
    row.truth = truth.at(name);
    row.rel_error_truth = relative_error(value, row.truth);
    if (reference) {
      row.reference = reference->at(name);
      row.rel_error_reference = relative_error(value, *row.reference);
    }
    row.tolerance = name.find("storage") != std::string::npos ? tol.storage : tol.loss;
    row.pass = row.rel_error_truth <= row.tolerance;
    out.pass = out.pass && row.pass;
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline Json to_json(const ComparisonReport& c) {
  Json rows = Json::array();
  for (const auto& r : c.rows) {
    rows.push_back({{"name", r.name},
                    {"recovered", r.recovered},
                    {"truth", r.truth},
                    {"reference", r.reference ? Json(*r.reference) : Json(nullptr)},
                    {"rel_error_truth", r.rel_error_truth},
                    {"rel_error_reference", r.rel_error_reference ? Json(*r.rel_error_reference) : Json(nullptr)},
                    {"tolerance", r.tolerance},
                    {"pass", r.pass}});
  }
  return {{"pass", c.pass}, {"rows", rows}};
}

// ---------------------------------------------------------------------------
// Profiles

struct ProfileRow {
  double x2 = 0.0;
  Complex value;
};

inline int grid_column(const Grid& g, double x1) {
  const double col = x1 / g.hx;
  const double nearest = std::round(col);
  if (std::abs(col - nearest) > 1e-9 || nearest < 0 || nearest > g.nx - 1) {
    throw Error(ErrorCode::NonGridColumn, "x1 = " + std::to_string(x1) + " m is not a grid column");
  }
  return static_cast<int>(nearest);
}

/// Values along the vertical grid line x = x1 (meters), bottom to top.
inline std::vector<ProfileRow> emit_profile(const WaveField& u, double x1) {
  const Grid& g = u.grid();
  const int i = grid_column(g, x1);
  std::vector<ProfileRow> rows;
  rows.reserve(static_cast<std::size_t>(g.ny));
  for (int j = 0; j < g.ny; ++j) rows.push_back({g.y(j), u(i, j)});
  return rows;
}

/// One CSV with a column pair per named field: x2,<name>_re,<name>_im,...
inline void write_profiles(const std::string& path, const std::vector<std::pair<std::string, const WaveField*>>& fields,
                           double x1) {
  std::vector<std::vector<ProfileRow>> cols;
  for (const auto& [name, f] : fields) cols.push_back(emit_profile(*f, x1));
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path);
  os << "x2";
  for (const auto& [name, f] : fields) os << ',' << name << "_re," << name << "_im";
  os << '\n';
  for (std::size_t r = 0; r < cols.front().size(); ++r) {
    os << detail::format_double(cols.front()[r].x2);
    for (const auto& c : cols) os << ',' << detail::format_double(c[r].value.real()) << ',' << detail::format_double(c[r].value.imag());
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// History serialization

inline const char* kHistoryColumns =
    "k,G1_storage_before,G1_loss_before,G2_storage_before,G2_loss_before,"
    "G1_storage_after,G1_loss_after,G2_storage_after,G2_loss_after,"
    "residual,residual_after,alpha,morozov_ratio,step_norm,projected,saturated";

inline void write_history_csv(const std::string& path, const std::vector<IterationRecord>& h) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path);
  os << kHistoryColumns << '\n';
  for (const auto& r : h) {
    os << r.k;
    for (double v : r.params_before.as_array()) os << ',' << detail::format_double(v);
    for (double v : r.params_after.as_array()) os << ',' << detail::format_double(v);
    for (double v : {r.residual, r.residual_after, r.alpha, r.morozov_ratio, r.step_norm}) {
      os << ',' << detail::format_double(v);
    }
    os << ',' << (r.projected ? 1 : 0) << ',' << (r.saturated ? 1 : 0) << '\n';
  }
}

inline Json to_json(const LayeredParams& p) {
  return {{"G1_storage", p.storage1}, {"G1_loss", p.loss1}, {"G2_storage", p.storage2}, {"G2_loss", p.loss2}};
}

inline Json to_json(const IterationRecord& r) {
  return {{"k", r.k},
          {"params_before_Pa", to_json(r.params_before)},
          {"params_after_Pa", to_json(r.params_after)},
          {"residual", r.residual},
          {"residual_after", r.residual_after},
          {"alpha", r.alpha},
          {"morozov_ratio", r.morozov_ratio},
          {"step_norm", r.step_norm},
          {"projected", r.projected},
          {"saturated", r.saturated}};
}

inline Json to_json(const std::vector<IterationRecord>& h) {
  Json a = Json::array();
  for (const auto& r : h) a.push_back(to_json(r));
  return a;
}

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path);
  os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Experiment pipeline

struct SyntheticData {
  WaveField clean;
  WaveField noisy;
  /// ||noisy - clean|| in H1 and L2, and the realized L2-relative level.
  double delta_h1 = 0.0;
  double delta_l2 = 0.0;
  double realized_level = 0.0;
};

/// Clean measurement at the true moduli from the chosen source, then
/// relative white noise.
inline SyntheticData synthesize(const ExperimentSpec& s) {
  const Grid grid = s.grid();
  const LayeredParams truth = s.truth();
  WaveField clean;
  if (s.source == DataSource::analytic) {
    clean = evaluate(solve_transmission(truth, s.rho, s.omega(), s.geometry(), s.flux, s.dispersion), grid);
  } else {
    clean = LayeredForwardModel(grid, s.physics(), {s.fd_refinement, s.mass})(truth);
  }
  WaveField noisy = add_relative_noise(clean, s.noise_level, s.seed);
  SyntheticData d{clean, noisy};
  const WaveField e = noisy - clean;
  d.delta_h1 = h1_norm(e);
  d.delta_l2 = l2_norm(e);
  d.realized_level = d.delta_l2 / l2_norm(clean);
  return d;
}

struct ExperimentReport {
  ExperimentSpec spec;
  LayeredParams truth;
  LayeredParams initial;
  RunResult run;
  SyntheticData data;
  /// Noise level passed to the stopping rule, in the inversion's data norm.
  double delta_used = 0.0;
  WaveField recovered_field;
  ComparisonReport comparison;
  double runtime_seconds = 0.0;

  const LayeredParams& recovered() const { return run.final_params; }
  bool pass() const { return comparison.pass; }
};

inline Json to_json(const ExperimentReport& r) {
  const auto& s = r.spec;
  const double w = s.omega();
  Json j;
  j["version"] = kVersion;
  j["spec"] = to_json(s);
  j["seeds"] = {{"noise", s.seed}};
  j["recovered_Pa"] = to_json(r.recovered());
  j["recovered"] = parameter_table(r.recovered(), s.elastic, w);
  j["truth"] = parameter_table(r.truth, s.elastic, w);
  j["comparison"] = to_json(r.comparison);
  j["stop_reason"] = std::string(to_string(r.run.stop_reason));
  j["k_star"] = r.run.k_star;
  j["noise"] = {{"requested_level", s.noise_level},
                {"realized_l2_level", r.data.realized_level},
                {"delta_h1", r.data.delta_h1},
                {"delta_l2", r.data.delta_l2},
                {"delta_used", r.delta_used},
                {"norm", to_string(s.lm.norm)}};
  j["norms"] = {{"clean_h1", h1_norm(r.data.clean)},
                {"clean_l2", l2_norm(r.data.clean)},
                {"final_residual", r.run.residuals.back()},
                {"final_residual_h1", h1_norm(r.data.noisy - r.recovered_field)},
                {"final_residual_l2", l2_norm(r.data.noisy - r.recovered_field)},
                {"recovered_vs_clean_h1", h1_norm(r.recovered_field - r.data.clean)}};
  j["residuals"] = r.run.residuals;
  j["history"] = to_json(r.run.history);
  j["pass"] = r.pass();
  j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

/// Writes the report and its field, profile and history dumps into `dir`.
inline void write_artifacts(const ExperimentReport& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto p = [&](const char* f) { return (fs::path(dir) / f).string(); };
  write_field(p("clean.csv"), r.data.clean);
  write_field(p("data.csv"), r.data.noisy);
  write_field(p("recovered.csv"), r.recovered_field);
  write_history_csv(p("history.csv"), r.run.history);
  write_json(p("history.json"), to_json(r.run.history));
  write_profiles(p("profile.csv"), {{"clean", &r.data.clean}, {"data", &r.data.noisy}, {"recovered", &r.recovered_field}},
                 r.spec.profile_x1_mm * 1e-3);
  write_json(p("report.json"), to_json(r));
  Json files = Json::array();
  files.push_back({{"file", "clean.csv"}, {"kind", "field"}, {"content", "noise-free measurement at the true moduli"}});
  files.push_back({{"file", "data.csv"}, {"kind", "field"}, {"content", "noisy measurement used by the inversion"}});
  files.push_back({{"file", "recovered.csv"}, {"kind", "field"}, {"content", "forward field at the recovered moduli"}});
  files.push_back({{"file", "profile.csv"},
                   {"kind", "profile"},
                   {"x1_m", r.spec.profile_x1_mm * 1e-3},
                   {"columns", "x2,clean_re,clean_im,data_re,data_im,recovered_re,recovered_im"}});
  files.push_back({{"file", "history.csv"}, {"kind", "history"}, {"columns", kHistoryColumns}});
  files.push_back({{"file", "history.json"}, {"kind", "history"}});
  files.push_back({{"file", "report.json"}, {"kind", "report"}});
  write_json(p("manifest.json"),
             {{"name", r.spec.name}, {"version", kVersion}, {"field_format", "nx,ny,hx,hy then i,j,re,im"}, {"files", files}});
}

inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport r;
  r.spec = spec;
  r.truth = spec.truth();
  r.initial = spec.initial();
  r.data = synthesize(spec);

  LMConfig cfg = spec.solver_config();
  if (spec.noise_delta) {
    r.delta_used = *spec.noise_delta;
  } else {
    r.delta_used = data_norm(r.data.noisy - r.data.clean, cfg.norm);
  }
  cfg.noise_delta = spec.noise_level > 0.0 || spec.noise_delta ? r.delta_used : 0.0;

  const LayeredForwardModel model(spec.grid(), spec.physics(), {spec.refinement, spec.mass}, cfg.bounds);
  const LevenbergMarquardt lm(model, cfg, r.initial);
  r.run = lm.run(r.initial, r.data.noisy);
  r.recovered_field = model(r.run.final_params);

  const double w = spec.omega();
  std::optional<ParameterTable> ref;
  if (spec.reference_storage_kPa) {
    ref = parameter_table(*spec.reference_storage_kPa, spec.elastic ? std::nullopt : spec.reference_viscosity_Pa_s);
  }
  r.comparison = compare_with_reference(parameter_table(r.recovered(), spec.elastic, w),
                                        parameter_table(r.truth, spec.elastic, w), ref, spec.tolerance);
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!spec.out_dir.empty()) write_artifacts(r, spec.out_dir);
  return r;
}

struct StoppingIndex {
  double level = 0.0;
  double delta = 0.0;
  int k_star = 0;
  StopReason stop_reason = StopReason::MaxIter;
};

/// One run per noise level with a common seed; levels must decrease.
inline std::vector<StoppingIndex> stopping_index_scan(ExperimentSpec spec, const std::vector<double>& levels,
                                                      std::uint64_t seed) {
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (!(levels[k] > 0.0)) throw Error(ErrorCode::InvalidConfig, "noise levels must be positive");
    if (k > 0 && !(levels[k] < levels[k - 1])) throw Error(ErrorCode::InvalidConfig, "noise levels must decrease");
  }
  spec.out_dir.clear();
  spec.seed = seed;
  spec.noise_delta.reset();
  std::vector<StoppingIndex> out;
  for (double level : levels) {
    spec.noise_level = level;
    const ExperimentReport r = run_experiment(spec);
    out.push_back({level, r.delta_used, r.run.k_star, r.run.stop_reason});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics serialization

inline Json to_json(const ConeEstimate& c) {
  Json samples = Json::array();
  for (const auto& s : c.samples) {
    samples.push_back({{"tilde_Pa", s.tilde.as_array()},
                       {"hat_Pa", s.hat.as_array()},
                       {"lhs", s.lhs},
                       {"rhs_factor", s.rhs_factor},
                       {"ratio", s.ratio}});
  }
  return {{"c_hat", c.c_hat},
          {"ball_radius", c.ball_radius},
          {"base_Pa", c.base_gamma.as_array()},
          {"elastic", c.elastic},
          {"seed", c.seed},
          {"validation",
           {{"pairs", c.validation.pairs},
            {"violations", c.validation.violations},
            {"inflation", c.validation.inflation},
            {"max_ratio", c.validation.max_ratio}}},
          {"samples", samples}};
}

inline Json to_json(const std::vector<TaylorPoint>& scan) {
  Json a = Json::array();
  for (const auto& p : scan) a.push_back({{"t", p.t}, {"remainder_h1", p.remainder_h1}});
  return a;
}

}  // namespace mre
