#pragma once

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/crc.hpp>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "spinwave/atomphys.hpp"
#include "spinwave/correlations.hpp"
#include "spinwave/errors.hpp"
#include "spinwave/grating.hpp"
#include "spinwave/io.hpp"
#include "spinwave/multiplex.hpp"

namespace spinwave::lab {

inline constexpr const char* kVersion = "1.0.0";

using json = nlohmann::json;

struct ValidationError : DomainError {
  using DomainError::DomainError;
};

enum class ParamType { Real, Int, String };

struct ParamSpec {
  std::string key;
  ParamType type;
  json def;
  std::string help;
};

// Flat typed key/value set; only declared keys are accepted.
class Config {
 public:
  explicit Config(const std::vector<ParamSpec>& specs) : specs_(&specs) {
    for (const auto& s : specs) values_[s.key] = s.def;
  }

  void set(const std::string& key, const json& v) {
    const ParamSpec& s = spec(key);
    switch (s.type) {
      case ParamType::Real:
        if (!v.is_number()) throw ValidationError("key " + key + " expects a number");
        values_[key] = v.get<double>();
        break;
      case ParamType::Int:
        if (!v.is_number_integer()) throw ValidationError("key " + key + " expects an integer");
        values_[key] = v.get<std::int64_t>();
        break;
      case ParamType::String:
        if (!v.is_string()) throw ValidationError("key " + key + " expects a string");
        values_[key] = v;
        break;
    }
  }

  void set_text(const std::string& key, const std::string& text) {
    const ParamSpec& s = spec(key);
    if (s.type == ParamType::String) {
      values_[key] = text;
      return;
    }
    if (text.empty()) throw ValidationError("empty value for key " + key);
    errno = 0;
    char* end = nullptr;
    if (s.type == ParamType::Real) {
      const double v = std::strtod(text.c_str(), &end);
      if (*end != '\0' || errno == ERANGE || !std::isfinite(v)) throw ValidationError("bad number for " + key + ": " + text);
      values_[key] = v;
    } else {
      const long long v = std::strtoll(text.c_str(), &end, 10);
      if (*end != '\0' || errno == ERANGE) throw ValidationError("bad integer for " + key + ": " + text);
      values_[key] = static_cast<std::int64_t>(v);
    }
  }

  void merge_file(const json& j) {
    if (!j.is_object()) throw ValidationError("config file must hold a flat JSON object");
    for (const auto& [k, v] : j.items()) set(k, v);
  }

  double real(const std::string& k) const { return values_.at(k).get<double>(); }
  std::int64_t integer(const std::string& k) const { return values_.at(k).get<std::int64_t>(); }
  std::string text(const std::string& k) const { return values_.at(k).get<std::string>(); }

  double positive(const std::string& k) const {
    const double v = real(k);
    if (!(v > 0.0)) throw ValidationError(k + " must be positive");
    return v;
  }
  double unit_interval(const std::string& k) const {
    const double v = real(k);
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(k + " must lie in [0, 1]");
    return v;
  }
  std::int64_t count(const std::string& k, std::int64_t lo, std::int64_t hi) const {
    const auto v = integer(k);
    if (v < lo || v > hi) throw ValidationError(k + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }
  std::string choice(const std::string& k, std::initializer_list<const char*> options) const {
    const std::string v = text(k);
    for (const char* o : options)
      if (v == o) return v;
    throw ValidationError("invalid value for " + k + ": " + v);
  }

  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

 private:
  const ParamSpec& spec(const std::string& key) const {
    for (const auto& s : *specs_)
      if (s.key == key) return s;
    throw ValidationError("unknown config key: " + key);
  }
  const std::vector<ParamSpec>* specs_;
  std::map<std::string, json> values_;
};

struct Output {
  std::string name;  // file suffix
  CsvTable table;
  std::string x;     // plotting hint: x column
  std::vector<std::string> y;
};

struct Result {
  std::vector<Output> outputs;
  json summary = json::object();
};

struct Scenario {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  std::function<Result(const Config&, std::uint64_t)> run;
};

namespace detail {
inline std::vector<double> linspace(double a, double b, std::int64_t n) {
  std::vector<double> v;
  for (std::int64_t i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

inline ParamSpec real(std::string k, double d, std::string h) { return {std::move(k), ParamType::Real, d, std::move(h)}; }
inline ParamSpec integer(std::string k, std::int64_t d, std::string h) { return {std::move(k), ParamType::Int, d, std::move(h)}; }
inline ParamSpec text(std::string k, std::string d, std::string h) { return {std::move(k), ParamType::String, d, std::move(h)}; }

inline std::vector<ParamSpec> sweep_params(double dk_max) {
  return {real("sigma_rad_per_mm", kModeSigma, "read-out mode field radius"),
          real("dk_max_rad_per_mm", dk_max, "largest mode displacement"),
          integer("points", 61, "sweep points")};
}

inline std::vector<double> dk_sweep(const Config& c) {
  const double dk = c.real("dk_max_rad_per_mm");
  if (!(dk >= 0.0)) throw ValidationError("dk_max_rad_per_mm must be non-negative");
  return linspace(0.0, dk, c.count("points", 2, 100000));
}

inline PhasePattern modulation_pattern(const Config& c) {
  const std::string m = c.choice("modulation", {"balanced", "none", "sine"});
  const double kg = c.positive("k_g_rad_per_mm");
  if (m == "none") return sine_pattern(0.0, 0.0, kg);
  if (m == "balanced") return sine_pattern(balanced_chi(), 0.0, kg);
  return sine_pattern(c.real("chi_rad"), 0.0, kg);
}

inline double pair_probability(const Config& c) {
  const double p = c.real("pair_probability");
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("pair_probability must lie in [0, 1)");
  return p;
}

inline double dark_ratio(const Config& c) {
  const double d = c.real("dark_ratio");
  if (!(d >= 0.0)) throw ValidationError("dark_ratio must be non-negative");
  return d;
}

inline double value_or_nan(const std::optional<G2Result>& r) { return r ? r->value : std::nan(""); }

// ---- scenarios -------------------------------------------------------------

inline Result diffraction_orders(const Config& c, std::uint64_t) {
  const double kg = c.positive("k_g_rad_per_mm");
  const int n_max = static_cast<int>(c.count("n_max", 2, 64));
  CsvTable t({"rms_rad", "chi_rad", "power_m0", "power_m1", "power_m_minus1", "power_m2", "total_power"});
  for (double r : linspace(0.0, c.real("rms_max_rad"), c.count("points", 2, 100000))) {
    const auto s = decompose(sine_pattern(r * std::numbers::sqrt2, 0.0, kg), n_max);
    t.add({r, r * std::numbers::sqrt2, s.power(0), s.power(1), s.power(-1), s.power(2), s.total_power()});
  }
  const double chi = balanced_chi();
  const auto b = decompose(sine_pattern(chi, 0.0, kg), n_max);
  Result res;
  res.outputs.push_back({"orders", t, "rms_rad", {"power_m0", "power_m1", "power_m2"}});
  res.outputs.push_back({"balanced_spectrum", spectrum_table(b), "m", {"power"}});
  res.summary = {{"balanced_chi_rad", chi},
                 {"balanced_rms_rad", chi / std::numbers::sqrt2},
                 {"balanced_power_m0", b.power(0)},
                 {"balanced_power_m1", b.power(1)},
                 {"balanced_power_m_minus1", b.power(-1)}};
  return res;
}

inline Result steered_diffraction(const Config& c, std::uint64_t) {
  const double ratio = c.positive("chi_ratio");
  const double rms = c.real("total_rms_rad");
  const double kg = c.positive("k_g_rad_per_mm");
  const int n_max = static_cast<int>(c.count("n_max", 2, 64));
  auto sides = [&](const DiffractionSpectrum& s) {
    double pos = 0.0, neg = 0.0;
    for (int m = 1; m <= s.n_max; ++m) {
      pos += s.power(m);
      neg += s.power(-m);
    }
    return std::array<double, 3>{pos, s.power(0), neg};
  };
  const auto s0 = decompose(design_asymmetric(ratio, 0.0, rms, kg), n_max);
  const auto sp = decompose(design_asymmetric(ratio, std::numbers::pi, rms, kg), n_max);
  CsvTable spectra({"m", "power_dtheta_0", "power_dtheta_pi"});
  for (int m = -n_max; m <= n_max; ++m) spectra.add({double(m), s0.power(m), sp.power(m)});
  CsvTable sweep({"dtheta_rad", "power_positive_orders", "power_m0", "power_negative_orders"});
  for (double d : linspace(0.0, kTwoPi, c.count("phase_points", 2, 100000))) {
    const auto a = sides(decompose(design_asymmetric(ratio, d, rms, kg), n_max));
    sweep.add({d, a[0], a[1], a[2]});
  }
  const auto a0 = sides(s0), ap = sides(sp);
  Result res;
  res.outputs.push_back({"spectra", spectra, "m", {"power_dtheta_0", "power_dtheta_pi"}});
  res.outputs.push_back({"phase_sweep", sweep, "dtheta_rad", {"power_positive_orders", "power_negative_orders"}});
  res.summary = {{"dtheta_0", {{"positive", a0[0]}, {"zero", a0[1]}, {"negative", a0[2]}}},
                 {"dtheta_pi", {{"positive", ap[0]}, {"zero", ap[1]}, {"negative", ap[2]}}}};
  return res;
}

inline Result coincidence_map_run(const Config& c, std::uint64_t seed) {
  CoincidenceGrid g;
  g.cells = static_cast<int>(c.count("cells", 4, 512));
  g.cells_per_order = static_cast<int>(c.count("cells_per_order", 5, 512));
  g.k_g = c.positive("k_g_rad_per_mm");
  const CountingModel cm{c.real("eta"), c.real("p_dark")};
  cm.validate();
  const auto spec = decompose(modulation_pattern(c), static_cast<int>(c.count("n_max", 1, 64)));
  const auto shots = static_cast<std::uint64_t>(c.count("shots", 1, 100000000));
  const auto threads = static_cast<unsigned>(c.count("threads", 0, 256));
  const CoincidenceMap map = coincidence_map(g, spec, pair_probability(c), cm, shots, seed, threads);
  CsvTable t({"k_sum_x_rad_per_mm", "k_sum_y_rad_per_mm", "g2", "g2_sigma", "coincidences"});
  const auto cells = map.cells();
  for (int sx = 0; sx < g.cells; ++sx)
    for (int sy = 0; sy < g.cells; ++sy) {
      const auto& cell = cells[static_cast<std::size_t>(sx * g.cells + sy)];
      const double n = static_cast<double>(map.coincidences[static_cast<std::size_t>(sx * g.cells + sy)]);
      if (cell.present)
        t.add({g.sum_k(sx), g.sum_k(sy), cell.g2, cell.sigma, n});
      else
        t.add_text({format_number(g.sum_k(sx)), format_number(g.sum_k(sy)), "", "", format_number(n)});
    }
  CsvTable peaks({"order", "k_sum_y_rad_per_mm", "g2", "g2_sigma"});
  json pk = json::array();
  for (int m = -1; m <= 1; ++m) {
    const int sy = ((m * g.cells_per_order) % g.cells + g.cells) % g.cells;
    const auto cell = map.at(0, sy);
    peaks.add({double(m), g.sum_k(sy), cell.present ? cell.g2 : std::nan(""), cell.present ? cell.sigma : std::nan("")});
    pk.push_back({{"order", m}, {"g2", cell.g2}, {"sigma", cell.sigma}});
  }
  Result res;
  res.outputs.push_back({"map", t, "k_sum_y_rad_per_mm", {"g2"}});
  res.outputs.push_back({"peaks", peaks, "k_sum_y_rad_per_mm", {"g2"}});
  res.summary = {{"shots", map.shots}, {"peaks", pk}};
  return res;
}

inline Result hom_dip(const Config& c, std::uint64_t) {
  using M = PairModes;
  const double p = pair_probability(c), d = dark_ratio(c), sigma = c.positive("sigma_rad_per_mm");
  HomOptions o;
  o.theta = c.real("theta_rad");
  const CountingModel cm = CountingModel::from_ratio(d);
  CsvTable t({"dk_x_rad_per_mm", "tau", "g2_rc_rd_given_wa_wb", "g2_rc_rc_given_wa_wb", "visibility"});
  double worst = 0.0;
  for (double dk : dk_sweep(c)) {
    const double tau = overlap_tau(dk, sigma);
    const double closed = g2_hom_closed(p, tau, d).value;
    const Network net = hom_network(p, tau, o);
    const double wick = value_or_nan(g2_from_moments(net, cm, {M::wa, M::wb}, M::rc, M::rd));
    worst = std::max(worst, std::abs(wick - closed));
    const double autoc = value_or_nan(g2_from_moments(net, cm, {M::wa, M::wb}, M::rc, M::rc));
    t.add({dk, tau, closed, autoc, 1.0 - closed});
  }
  const double dip = g2_hom_closed(p, 1.0, d).value;
  Result res;
  res.outputs.push_back({"dip", t, "dk_x_rad_per_mm", {"g2_rc_rd_given_wa_wb", "g2_rc_rc_given_wa_wb"}});
  res.summary = {{"g2_at_overlap", dip},
                 {"visibility", visibility({dip, 0.0}).value},
                 {"max_abs_closed_vs_wick", worst}};
  return res;
}

inline Result hbt(const Config& c, std::uint64_t) {
  using M = PairModes;
  const double p = pair_probability(c), d = dark_ratio(c), sigma = c.positive("sigma_rad_per_mm");
  const double nbar = c.real("nbar");
  if (!(nbar >= 0.0)) throw ValidationError("nbar must be non-negative");
  const std::string eng = c.choice("moment_engine", {"oracle", "wick"});
  const MomentEngine engine = eng == "oracle" ? MomentEngine::PairOracle : MomentEngine::Wick;
  const int cutoff = static_cast<int>(c.count("oracle_cutoff", 2, kMaxCutoff));
  const CountingModel cm = CountingModel::from_ratio(d);
  auto g2 = [&](const Network& n, int x, int y) {
    const auto v = network_moments(n, heralded_lists({M::wa}, x, y), engine, cutoff);
    return value_or_nan(g2_assemble({v[0], v[1], v[2], v[3]}, cm.d()));
  };
  CsvTable t({"dk_x_rad_per_mm", "tau", "g2_rc_rd_given_wa", "g2_rc_rc_given_wa", "g2_rd_rd_given_wa"});
  for (double dk : dk_sweep(c)) {
    const double tau = overlap_tau(dk, sigma);
    const Network net = hbt_network(p, nbar, tau);
    t.add({dk, tau, g2(net, M::rc, M::rd), g2(net, M::rc, M::rc), g2(net, M::rd, M::rd)});
  }
  const double cross = g2(hbt_network(p, nbar, 1.0), M::rc, M::rd);
  const Network dec = hbt_network(p, nbar, 0.0);
  const double arc = g2(dec, M::rc, M::rc), ard = g2(dec, M::rd, M::rd);
  Result res;
  res.outputs.push_back({"hbt", t, "dk_x_rad_per_mm", {"g2_rc_rd_given_wa", "g2_rc_rc_given_wa", "g2_rd_rd_given_wa"}});
  res.summary = {{"moment_engine", eng},
                 {"g2_rc_rd_given_wa_overlap", cross},
                 {"g2_rc_rc_given_wa_decoupled", arc},
                 {"g2_rd_rd_given_wa_decoupled", ard}};
  return res;
}

inline Result splitter_validation(const Config& c, std::uint64_t) {
  using M = PairModes;
  const double p = pair_probability(c), d = dark_ratio(c), sigma = c.positive("sigma_rad_per_mm");
  const double frac = c.real("misalign_fraction");
  if (!(frac >= 0.0)) throw ValidationError("misalign_fraction must be non-negative");
  const CountingModel cm = CountingModel::from_ratio(d);
  CsvTable t({"dk_x_rad_per_mm", "tau", "g2_aligned", "tau_misalign", "g2_misaligned"});
  for (double dk : dk_sweep(c)) {
    const double tau = overlap_tau(dk, sigma);
    HomOptions o;
    o.tau_misalign = overlap_tau(frac * dk, sigma);
    const double mis = value_or_nan(g2_from_moments(hom_network(p, tau, o), cm, {M::wa, M::wb}, M::rc, M::rd));
    t.add({dk, tau, g2_hom_closed(p, tau, d).value, o.tau_misalign, mis});
  }
  Result res;
  res.outputs.push_back({"validation", t, "dk_x_rad_per_mm", {"g2_aligned", "g2_misaligned"}});
  res.summary = {{"g2_at_overlap", g2_hom_closed(p, 1.0, d).value}};
  return res;
}

inline Result classical_hom(const Config& c, std::uint64_t seed) {
  using M = ClassicalModes;
  const double na = c.real("nbar_a"), nb = c.real("nbar_b"), sigma = c.positive("sigma_rad_per_mm");
  if (!(na > 0.0 && nb > 0.0)) throw ValidationError("nbar_a and nbar_b must be positive");
  const int samples = static_cast<int>(c.count("phase_samples", 2, 1000000));
  CsvTable t({"dk_x_rad_per_mm", "tau", "g2_rc_rd_exact", "g2_rc_rd_sampled", "g2_sampled_sigma"});
  std::uint64_t k = 0;
  for (double dk : dk_sweep(c)) {
    const double tau = overlap_tau(dk, sigma);
    const Network net = classical_hom_network(na, nb, tau);
    const auto ex = g2_phase_averaged(net, M::rc, M::rd);
    const auto mc = g2_phase_sampled(net, M::rc, M::rd, samples, seed ^ k++);
    t.add({dk, tau, ex.value, mc.value, mc.sigma});
  }
  Result res;
  res.outputs.push_back({"classical", t, "dk_x_rad_per_mm", {"g2_rc_rd_exact", "g2_rc_rd_sampled"}});
  res.summary = {{"g2_at_overlap", g2_phase_averaged(classical_hom_network(na, nb, 1.0), M::rc, M::rd).value}};
  return res;
}

inline Result fit_forms(const Config& c, std::uint64_t) {
  const FitForm f{c.real("alpha"), c.real("gamma_per_rad")};
  const EfficiencyModel e{f.gamma, c.real("var_z_rad2")};
  CsvTable t({"chi_rad", "rms_rad", "g2_wa_rc", "g2_wa_rd", "retrieval_penalty"});
  for (double chi : linspace(0.0, c.real("chi_max_rad"), c.count("points", 2, 100000))) {
    const auto [a, b] = g2_fit_forms(f, chi);
    t.add({chi, chi / std::numbers::sqrt2, a, b, retrieval_penalty(e, chi)});
  }
  const double cross = balanced_chi();
  Result res;
  res.outputs.push_back({"fit_forms", t, "chi_rad", {"g2_wa_rc", "g2_wa_rd"}});
  res.summary = {{"g2_wa_rc_at_zero", g2_fit_forms(f, 0.0).first}, {"crossing_chi_rad", cross},
                 {"g2_at_crossing", g2_fit_forms(f, cross).first}};
  return res;
}

inline Result blazed(const Config& c, std::uint64_t) {
  const PhasePattern p = blazed_pattern(c.positive("k_g_rad_per_mm"), c.positive("wrap_rad"));
  const int n_max = static_cast<int>(c.count("n_max", 1, 64));
  CsvTable noise({"rel_intensity_noise", "efficiency_ideal", "efficiency_penalized"});
  for (double s : linspace(0.0, c.real("noise_max"), c.count("points", 2, 100000))) {
    const auto e = blazed_efficiency(p, s);
    noise.add({s, e.ideal, e.penalized});
  }
  const auto e = blazed_efficiency(p, c.real("rel_intensity_noise"));
  Result res;
  res.outputs.push_back({"orders", spectrum_table(decompose(p, n_max)), "m", {"power"}});
  res.outputs.push_back({"noise", noise, "rel_intensity_noise", {"efficiency_ideal", "efficiency_penalized"}});
  res.summary = {{"efficiency_ideal", e.ideal}, {"efficiency_penalized", e.penalized}};
  return res;
}

inline Result rates_run(const Config& c, std::uint64_t) {
  const std::string set = c.choice("param_set", {"a", "b"});
  RateScenario s = rate_parameters(set[0]);
  s.us.rep_rate = s.qm.rep_rate = c.positive("rep_rate_hz");
  const bool sw = c.count("splitter_switch", 0, 1) == 1;
  CsvTable t({"l", "P_us", "P_qm", "R_us_hz", "R_qm_hz", "ratio_qm_us", "mode_guideline"});
  json ratios = json::array();
  for (long l = 0; l <= c.count("l_max", 1, 200); ++l) {
    if (l > s.qm.M) break;
    const Rates r = rates(s.us, s.qm, l, sw);
    const double m = l >= 1 ? static_cast<double>(mode_guideline(l, s.qm.p, s.qm.eta_w)) : std::nan("");
    t.add({double(l), r.P_us, r.P_qm, r.R_us, r.R_qm, r.P_qm / r.P_us, m});
    ratios.push_back(r.P_qm / r.P_us);
  }
  Result res;
  res.outputs.push_back({"rates", t, "l", {"R_us_hz", "R_qm_hz"}});
  res.summary = {{"param_set", set}, {"ratio_qm_us", ratios}};
  return res;
}

inline Result stark_sweep(const Config& c, std::uint64_t) {
  StarkParams s;
  s.intensity = c.real("intensity_mw_per_cm2");
  s.T = c.real("interaction_time_s");
  s.field = c.choice("field_convention", {"rms", "peak"}) == "rms" ? FieldConvention::Rms : FieldConvention::Peak;
  s.validate();
  CsvTable t({"detuning_ghz", "shift_g_khz", "shift_h_khz", "differential_khz", "phase_rad"});
  for (double f : linspace(c.real("detuning_min_ghz"), c.real("detuning_max_ghz"), c.count("points", 2, 1000000))) {
    s.delta_s = units::angular_from_hz(f * 1e9);
    try {
      const double g = stark_shift_g(s), h = stark_shift_h(s);
      t.add({f, units::hz_from_angular(g) / 1e3, units::hz_from_angular(h) / 1e3, units::hz_from_angular(h - g) / 1e3,
             (h - g) * s.T});
    } catch (const PoleProximityError&) {
      t.add_text({format_number(f), "", "", "", ""});
    }
  }
  s.delta_s = units::angular_from_hz(1.43e9);
  EnsembleGeometry geo;
  const auto noise = noise_mode_estimate(geo, c.positive("atoms"), c.real("gamma_noise_hz"), s.T);
  Result res;
  res.outputs.push_back({"stark", t, "detuning_ghz", {"differential_khz"}});
  res.summary = {{"differential_khz_at_1_43_ghz", units::hz_from_angular(differential_shift(s)) / 1e3},
                 {"phase_rad_at_1_43_ghz", stark_phase(s)},
                 {"noise_modes", noise.modes},
                 {"noise_probability_per_mode", noise.per_mode_probability}};
  return res;
}

inline Result phasematch_map_run(const Config& c, std::uint64_t) {
  EnsembleGeometry g{c.positive("sigma_z_mm"), c.positive("sigma_perp_mm"), c.positive("k_r_rad_per_mm"), 795.0};
  const auto spec = decompose(modulation_pattern(c), static_cast<int>(c.count("n_max", 1, 64)));
  const double lo = c.real("k_min_rad_per_mm"), hi = c.real("k_max_rad_per_mm");
  if (!(hi > lo)) throw ValidationError("k_max_rad_per_mm must exceed k_min_rad_per_mm");
  const auto pts = c.count("points", 2, 2000);
  CsvTable map({"k_w_rad_per_mm", "k_r_rad_per_mm", "efficiency"});
  for (const auto& q : phasematch_map(g, spec, c.positive("k_g_rad_per_mm"), lo, hi, static_cast<int>(pts),
                                      c.positive("width_rad_per_mm")))
    map.add({q.k_w, q.k_r, q.value});
  CsvTable prof({"k_y_rad_per_mm", "efficiency", "efficiency_paraxial", "efficiency_quadrature"});
  for (double k : linspace(lo, hi, pts)) {
    const double dp = phase_mismatch_paraxial(k, g);
    prof.add({k, phasematch_efficiency(k, g), std::exp(-0.5 * dp * dp * g.sigma_z * g.sigma_z),
              phasematch_efficiency_quadrature(k, g)});
  }
  Result res;
  res.outputs.push_back({"map", map, "k_w_rad_per_mm", {"k_r_rad_per_mm", "efficiency"}});
  res.outputs.push_back({"profile", prof, "k_y_rad_per_mm", {"efficiency", "efficiency_paraxial"}});
  res.summary = {{"efficiency_at_k_g", phasematch_efficiency(c.positive("k_g_rad_per_mm"), g)}};
  return res;
}

inline Result repeater(const Config& c, std::uint64_t seed) {
  RepeaterParams r;
  r.L0 = c.positive("L0_km");
  r.L_att = c.positive("L_att_km");
  r.eta_cam = c.unit_interval("eta_cam");
  r.M = static_cast<long>(c.count("modes", 2, 100000000));
  r.p = c.unit_interval("pair_probability");
  r.eta_readout = c.unit_interval("eta_readout");
  r.phi = c.real("phi_rad");
  const auto trials = static_cast<std::uint64_t>(c.count("trials", 1, 100000000));
  const auto rep = repeater_monte_carlo(r, trials, seed, static_cast<unsigned>(c.count("threads", 0, 256)));
  CsvTable st({"stage", "trials", "successes", "probability", "sigma", "analytic"});
  auto row = [&](const char* n, const StageStat& s, double a) {
    st.add_text({n, std::to_string(s.trials), std::to_string(s.successes), format_number(s.probability()),
                 format_number(s.sigma()), format_number(a)});
  };
  row("eng", rep.eng, rep.eng_analytic);
  row("enc", rep.enc, rep.enc_analytic);
  row("purify", rep.purify, rep.purify_analytic);
  CsvTable pat({"pattern", "probability", "fidelity"});
  for (const auto& o : enc_outcomes(r.phi, r.phi))
    pat.add_text({pattern_name(o.pattern), format_number(o.probability), format_number(o.fidelity)});
  Result res;
  res.outputs.push_back({"stages", st, "stage", {"probability", "analytic"}});
  res.outputs.push_back({"enc_patterns", pat, "pattern", {"probability", "fidelity"}});
  res.summary = {{"eta_w", r.eta_w()}, {"enc_fidelity_min", rep.enc_fidelity},
                 {"eng_z_score", rep.eng.sigma() > 0 ? (rep.eng.probability() - rep.eng_analytic) / rep.eng.sigma() : 0.0}};
  return res;
}
}  // namespace detail

inline const std::vector<Scenario>& scenarios() {
  using namespace detail;
  static const std::vector<Scenario> all = [] {
    std::vector<Scenario> v;
    v.push_back({"diffraction-orders", "diffraction-order powers of a sine grating versus RMS",
                 {real("rms_max_rad", 2.5, "largest RMS amplitude"), integer("points", 51, "sweep points"),
                  integer("n_max", 10, "order truncation"), real("k_g_rad_per_mm", 44.0, "grating wavevector")},
                 diffraction_orders});
    v.push_back({"steered-diffraction", "two-tone grating steering into one side",
                 {real("chi_ratio", 2.5, "chi1/chi2"), real("total_rms_rad", 1.0, "pattern RMS"),
                  real("k_g_rad_per_mm", 44.0, "grating wavevector"), integer("n_max", 10, "order truncation"),
                  integer("phase_points", 37, "relative-phase sweep points")},
                 steered_diffraction});
    v.push_back({"coincidence-map", "Monte Carlo coincidence map over the sum wavevector",
                 {real("pair_probability", 0.01, "pair probability per mode and shot"),
                  real("eta", 0.5, "detection efficiency"), real("p_dark", 1e-4, "dark-count probability per cell"),
                  integer("shots", 1000000, "camera frames"), integer("cells", 48, "torus cells per axis"),
                  integer("cells_per_order", 8, "cells per grating wavevector"),
                  real("k_g_rad_per_mm", 44.0, "grating wavevector"),
                  text("modulation", "balanced", "balanced | none | sine"), real("chi_rad", 1.0, "sine amplitude"),
                  integer("n_max", 10, "order truncation"), integer("threads", 0, "worker threads (0 = auto)")},
                 coincidence_map_run});
    {
      auto p = sweep_params(60.0);
      p.push_back(real("pair_probability", kDefaultPairProbability, "pair probability"));
      p.push_back(real("dark_ratio", kDefaultDarkRatio, "p_dark / eta"));
      p.push_back(real("theta_rad", 0.0, "splitter phase"));
      v.push_back({"hom-dip", "heralded HOM dip versus mode displacement", p, hom_dip});
    }
    {
      auto p = sweep_params(60.0);
      p.push_back(real("pair_probability", kDefaultPairProbability, "pair probability"));
      p.push_back(real("dark_ratio", kDefaultDarkRatio, "p_dark / eta"));
      p.push_back(real("nbar", 0.1, "thermal occupation of rb"));
      p.push_back(text("moment_engine", "oracle", "oracle | wick"));
      p.push_back(integer("oracle_cutoff", kDefaultCutoff, "Fock cutoff per mode"));
      v.push_back({"hbt", "HBT configuration with a thermal rb input", p, hbt});
    }
    {
      auto p = sweep_params(60.0);
      p.push_back(real("pair_probability", kDefaultPairProbability, "pair probability"));
      p.push_back(real("dark_ratio", kDefaultDarkRatio, "p_dark / eta"));
      p.push_back(real("misalign_fraction", 0.29, "wa-rc misalignment per unit displacement"));
      v.push_back({"splitter-validation", "HOM dip with residual wa-rc misalignment", p,
                   splitter_validation});
    }
    {
      auto p = sweep_params(60.0);
      p.push_back(real("nbar_a", 0.1, "mean photon number in ra"));
      p.push_back(real("nbar_b", 0.1, "mean photon number in rb"));
      p.push_back(integer("phase_samples", 1000, "Monte Carlo phase samples per point"));
      v.push_back({"classical-hom", "phase-averaged coherent inputs", p, classical_hom});
    }
    v.push_back({"fit-forms", "heuristic g2 envelopes versus modulation depth",
                 {real("alpha", 23.1, "correlation amplitude"), real("gamma_per_rad", 0.27, "decay constant"),
                  real("var_z_rad2", 0.0, "longitudinal phase variance"), real("chi_max_rad", 4.0, "largest chi"),
                  integer("points", 81, "sweep points")},
                 fit_forms});
    v.push_back({"blazed", "blazed grating efficiency",
                 {real("k_g_rad_per_mm", 44.0, "grating wavevector"), real("wrap_rad", kTwoPi, "phase wrap"),
                  real("rel_intensity_noise", 0.05, "relative intensity noise"),
                  real("noise_max", 0.3, "largest noise in the sweep"), integer("points", 31, "sweep points"),
                  integer("n_max", 10, "order truncation")},
                 blazed});
    v.push_back({"rates", "multiplexed source rates",
                 {text("param_set", "a", "a | b"), integer("l_max", 10, "largest photon number"),
                  integer("splitter_switch", 0, "1 applies the l^-l routing penalty"),
                  real("rep_rate_hz", 1.0, "repetition rate")},
                 rates_run});
    v.push_back({"stark-sweep", "analytic ac Stark shifts versus detuning",
                 {real("intensity_mw_per_cm2", 35.0, "intensity"), real("interaction_time_s", 2e-6, "interaction time"),
                  real("detuning_min_ghz", -3.0, "sweep start"), real("detuning_max_ghz", 6.0, "sweep end"),
                  integer("points", 181, "sweep points"), text("field_convention", "rms", "rms | peak"),
                  real("atoms", 1e8, "atom number"), real("gamma_noise_hz", kGammaNoise, "noise scattering rate")},
                 stark_sweep});
    v.push_back({"phasematch-map", "read-out phase-matching efficiency map",
                 {real("sigma_z_mm", 4.0, "ensemble length"), real("sigma_perp_mm", 0.3, "ensemble width"),
                  real("k_r_rad_per_mm", 7899.0, "read-out wavevector"),
                  real("k_g_rad_per_mm", 44.0, "grating wavevector"), text("modulation", "balanced", "balanced | none | sine"),
                  real("chi_rad", 1.0, "sine amplitude"), real("k_min_rad_per_mm", -150.0, "map start"),
                  real("k_max_rad_per_mm", 150.0, "map end"), integer("points", 61, "points per axis"),
                  real("width_rad_per_mm", 4.7, "pair-correlation width"), integer("n_max", 10, "order truncation")},
                 phasematch_map_run});
    v.push_back({"repeater", "repeater protocol Monte Carlo",
                 {real("L0_km", 25.0, "node distance"), real("L_att_km", 22.0, "attenuation length"),
                  real("eta_cam", 0.5, "camera efficiency"), integer("modes", 4000, "mode count"),
                  real("pair_probability", 1e-2, "pair probability per mode"),
                  real("eta_readout", 1.0, "read-out efficiency"), real("phi_rad", 0.0, "ENG channel phase"),
                  integer("trials", 100000, "protocol attempts"), integer("threads", 0, "worker threads (0 = auto)")},
                 repeater});
    return v;
  }();
  return all;
}

inline const Scenario* find_scenario(const std::string& name) {
  for (const auto& s : scenarios())
    if (s.name == name) return &s;
  return nullptr;
}

inline std::string crc32_hex(const std::string& bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << crc.checksum();
  return os.str();
}

inline json versions() {
  return {{"spinwave-lab", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

struct RunRequest {
  std::string scenario;
  std::string config_file;
  std::vector<std::string> sets;  // key=value
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  bool gnuplot_hints = false;
};

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << bytes;
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

// Runs one scenario; returns the paths written (CSV files, hints, manifest).
inline std::vector<std::string> run(const RunRequest& req) {
  const Scenario* sc = find_scenario(req.scenario);
  if (!sc) throw UsageError("unknown scenario: " + req.scenario);
  Config cfg(sc->params);
  if (!req.config_file.empty()) {
    std::ifstream f(req.config_file);
    if (!f) throw ValidationError("cannot read config file: " + req.config_file);
    json j;
    try {
      j = json::parse(f);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("config file is not valid JSON: ") + e.what());
    }
    cfg.merge_file(j);
  }
  for (const auto& s : req.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key=value, got: " + s);
    cfg.set_text(s.substr(0, eq), s.substr(eq + 1));
  }
  const Result res = sc->run(cfg, req.seed);

  const std::filesystem::path dir(req.out_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  json outputs = json::array();
  std::ostringstream hints;
  for (std::size_t i = 0; i < res.outputs.size(); ++i) {
    const Output& o = res.outputs[i];
    // first table is <scenario>.csv, the rest <scenario>_<name>.csv
    const std::string name = sc->name + (i == 0 ? "" : "_" + o.name) + ".csv";
    const std::string bytes = o.table.str();
    write_file(dir / name, bytes);
    written.push_back((dir / name).string());
    outputs.push_back({{"file", name}, {"rows", o.table.rows()}, {"columns", o.table.header()}, {"crc32", crc32_hex(bytes)}});
    hints << "file: " << name << "\n" << "x: " << o.x << "\n" << "y:";
    for (const auto& y : o.y) hints << ' ' << y;
    hints << "\n" << "columns:";
    for (const auto& h : o.table.header()) hints << ' ' << h;
    hints << "\n\n";
  }
  json manifest = {{"scenario", sc->name},
                   {"seed", req.seed},
                   {"inputs", cfg.to_json()},
                   {"versions", versions()},
                   {"outputs", outputs},
                   {"summary", res.summary}};
  if (req.gnuplot_hints) {
    const std::string name = sc->name + ".gnuplot.txt";
    const std::string bytes = "# " + sc->description + "\n" + hints.str();
    write_file(dir / name, bytes);
    written.push_back((dir / name).string());
    manifest["hints"] = {{"file", name}, {"crc32", crc32_hex(bytes)}};
  }
  const std::string mname = sc->name + ".manifest.json";
  write_file(dir / mname, manifest.dump(2) + "\n");
  written.push_back((dir / mname).string());
  return written;
}

inline std::string usage_text() {
  std::ostringstream os;
  os << "scenarios:\n";
  for (const auto& s : scenarios()) os << "  " << std::left << std::setw(22) << s.name << s.description << "\n";
  return os.str();
}

inline std::string scenario_keys(const Scenario& s) {
  std::ostringstream os;
  for (const auto& p : s.params) os << "  " << std::left << std::setw(24) << p.key << p.def.dump() << "  " << p.help << "\n";
  return os.str();
}

}  // namespace spinwave::lab
