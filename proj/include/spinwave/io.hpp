#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinwave/errors.hpp"
#include "spinwave/grating.hpp"

namespace spinwave {

// Locale-independent %.12g; NaN and missing values become empty fields.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

  void add(const std::vector<double>& values) {
    std::vector<std::string> r;
    for (double v : values) r.push_back(format_number(v));
    add_text(std::move(r));
  }
  void add_text(std::vector<std::string> fields) {
    if (fields.size() != header_.size()) throw DomainError("CSV row width does not match header");
    rows_.push_back(std::move(fields));
  }

  void write(std::ostream& os) const {
    write_line(os, header_);
    for (const auto& r : rows_) write_line(os, r);
  }
  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

 private:
  static void write_line(std::ostream& os, const std::vector<std::string>& f) {
    for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << f[i];
    os << '\n';
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline CsvTable spectrum_table(const DiffractionSpectrum& s) {
  CsvTable t({"m", "re_c", "im_c", "power"});
  for (int m = -s.n_max; m <= s.n_max; ++m) t.add({double(m), s.at(m).real(), s.at(m).imag(), s.power(m)});
  return t;
}

namespace detail {
inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw DomainError("unknown pattern key: " + k);
}
inline double req(const nlohmann::json& j, const char* k) {
  if (!j.contains(k) || !j.at(k).is_number()) throw DomainError(std::string("missing numeric pattern key: ") + k);
  return j.at(k).get<double>();
}
}  // namespace detail

// {kind, parameters (rad, rad/mm), offset}
inline nlohmann::json pattern_to_json(const PhasePattern& p) {
  nlohmann::json j;
  j["kind"] = kind_name(p);
  j["k_g_rad_per_mm"] = p.k_g;
  j["phi0_rad"] = p.phi0;
  nlohmann::json par;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Sine>) {
          par = {{"chi_rad", k.chi}, {"theta_rad", k.theta}};
        } else if constexpr (std::is_same_v<T, TwoTone>) {
          par = {{"chi1_rad", k.chi1}, {"theta1_rad", k.theta1}, {"chi2_rad", k.chi2}, {"theta2_rad", k.theta2}};
        } else if constexpr (std::is_same_v<T, BlazedRamp>) {
          par = {{"alpha_rad_per_mm", k.alpha}, {"wrap_rad", k.wrap}};
        } else {
          par = {{"values_rad", k.values}};
        }
      },
      p.kind);
  j["parameters"] = par;
  return j;
}

inline PhasePattern pattern_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("pattern must be a JSON object");
  detail::reject_unknown(j, {"kind", "k_g_rad_per_mm", "phi0_rad", "parameters"});
  if (!j.contains("kind") || !j.at("kind").is_string()) throw DomainError("pattern kind missing");
  const std::string kind = j.at("kind").get<std::string>();
  const nlohmann::json par = j.value("parameters", nlohmann::json::object());
  PhasePattern p;
  p.k_g = detail::req(j, "k_g_rad_per_mm");
  p.phi0 = j.contains("phi0_rad") ? detail::req(j, "phi0_rad") : 0.0;
  if (kind == "sine") {
    detail::reject_unknown(par, {"chi_rad", "theta_rad"});
    p.kind = Sine{detail::req(par, "chi_rad"), detail::req(par, "theta_rad")};
  } else if (kind == "two_tone") {
    detail::reject_unknown(par, {"chi1_rad", "theta1_rad", "chi2_rad", "theta2_rad"});
    p.kind = TwoTone{detail::req(par, "chi1_rad"), detail::req(par, "theta1_rad"), detail::req(par, "chi2_rad"),
                     detail::req(par, "theta2_rad")};
  } else if (kind == "blazed") {
    detail::reject_unknown(par, {"alpha_rad_per_mm", "wrap_rad"});
    p.kind = BlazedRamp{detail::req(par, "alpha_rad_per_mm"), detail::req(par, "wrap_rad")};
  } else if (kind == "sampled") {
    detail::reject_unknown(par, {"values_rad"});
    if (!par.contains("values_rad") || !par.at("values_rad").is_array()) throw DomainError("sampled pattern needs values_rad");
    p.kind = Sampled{par.at("values_rad").get<std::vector<double>>()};
  } else {
    throw DomainError("unknown pattern kind: " + kind);
  }
  p.validate();
  return p;
}

}  // namespace spinwave
