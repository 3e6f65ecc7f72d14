#pragma once

// JSON configuration files, config hashing, run manifests and the sample CSV.
//
// Config schema (all keys except "channels" optional):
//   { "beta": 1 | 2, "M": int, "channels": [ {"T": x} | {"gamma": x}, ... ],
//     "v": x, "E": x, "a": int, "b": int }
// A one-element channel list with M > 1 is repeated M times.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "xsdist/error.hpp"
#include "xsdist/model.hpp"
#include "xsdist/montecarlo.hpp"
#include "xsdist/quadrature.hpp"

namespace xsdist {

inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

using json = nlohmann::json;

inline double number_at(const json& j, const std::string& key) {
  if (!j.is_number()) throw ParseError("config key '" + key + "' must be a number", key);
  return j.get<double>();
}

inline int integer_at(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ParseError("config key '" + key + "' must be an integer", key);
  return j.get<int>();
}

}  // namespace detail

inline ScatteringConfig parse_config(const std::string& text) {
  using detail::json;
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "beta" && key != "M" && key != "channels" && key != "v" && key != "E" && key != "a" && key != "b")
      throw ParseError("unknown config key '" + key + "'", key);

  ScatteringConfig cfg;
  if (j.contains("beta")) {
    const int beta = detail::integer_at(j["beta"], "beta");
    if (beta != 1 && beta != 2) throw ParseError("config key 'beta' must be 1 or 2", "beta");
    cfg.symmetry = beta == 1 ? Symmetry::orthogonal : Symmetry::unitary;
  }
  if (!j.contains("channels")) throw ParseError("config key 'channels' is required", "channels");
  const auto& ch = j["channels"];
  if (!ch.is_array() || ch.empty()) throw ParseError("config key 'channels' must be a non-empty list", "channels");
  for (std::size_t i = 0; i < ch.size(); ++i) {
    const std::string key = "channels[" + std::to_string(i) + "]";
    const auto& c = ch[i];
    if (!c.is_object() || c.size() != 1 || (!c.contains("T") && !c.contains("gamma")))
      throw ParseError("config key '" + key + "' must be {\"T\": x} or {\"gamma\": x}", key);
    if (c.contains("T"))
      cfg.channels.push_back(ChannelCoupling::from_transmission(detail::number_at(c["T"], key + ".T")));
    else
      cfg.channels.push_back(ChannelCoupling::from_gamma(detail::number_at(c["gamma"], key + ".gamma")));
  }
  if (j.contains("M")) {
    const int m = detail::integer_at(j["M"], "M");
    if (m < 2) throw ParseError("config key 'M' must be at least 2", "M");
    if (cfg.channels.size() == 1)
      cfg.channels.assign(static_cast<std::size_t>(m), cfg.channels.front());
    else if (cfg.num_channels() != m)
      throw ParseError("config key 'M' disagrees with the length of 'channels'", "M");
  }
  if (j.contains("v")) cfg.v = detail::number_at(j["v"], "v");
  if (j.contains("E")) cfg.E = detail::number_at(j["E"], "E");
  if (j.contains("a")) cfg.a = detail::integer_at(j["a"], "a");
  if (j.contains("b")) cfg.b = detail::integer_at(j["b"], "b");
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

inline ScatteringConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline nlohmann::json config_to_json(const ScatteringConfig& cfg) {
  nlohmann::json ch = nlohmann::json::array();
  for (const auto& c : cfg.channels)
    ch.push_back(c.kind == ChannelCoupling::Kind::transmission ? nlohmann::json{{"T", c.value}}
                                                               : nlohmann::json{{"gamma", c.value}});
  return {{"beta", cfg.beta()}, {"M", cfg.num_channels()}, {"channels", ch},
          {"v", cfg.v},         {"E", cfg.E},              {"a", cfg.a},
          {"b", cfg.b}};
}

/// FNV-1a (64 bit) of the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const ScatteringConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config_to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline nlohmann::json quadrature_to_json(const QuadratureSpec& q) {
  return {{"rel_tol", q.rel_tol},   {"abs_tol", q.abs_tol}, {"max_subdivisions", q.max_subdivisions},
          {"u_max", q.u_max},       {"n_psi", q.n_psi},     {"max_psi", q.max_psi}};
}

struct RunManifest {
  std::string command;
  std::string config_hash;
  nlohmann::json config;
  nlohmann::json seeds = nlohmann::json::object();
  nlohmann::json tolerances = nlohmann::json::object();
  nlohmann::json diagnostics = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::array();
  double wall_time = 0.0;  // seconds; excluded from deterministic outputs

  nlohmann::json to_json() const {
    return {{"command", command}, {"tool_version", kToolVersion}, {"config_hash", config_hash},
            {"config", config},   {"seeds", seeds},               {"tolerances", tolerances},
            {"diagnostics", diagnostics}, {"outputs", outputs},   {"wall_time_s", wall_time}};
  }

  void write(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot write " + path);
    os << std::setw(2) << to_json() << "\n";
  }
};

/// `index,E,Re_Sab,Im_Sab`, one row per sample and energy, 17 significant digits.
inline void write_samples_csv(std::ostream& os, const mc::EnsembleRun& run, const std::string& manifest_name = {}) {
  if (!manifest_name.empty()) os << "# manifest=" << manifest_name << "\n";
  os << "# config_hash=" << config_hash(run.config) << "\n# N=" << run.n << " seed=" << run.seed << "\n";
  os << "index,E,Re_Sab,Im_Sab\n";
  os << std::setprecision(17);
  const auto n_e = run.energies.size();
  for (long s = 0; s < run.n_samples; ++s)
    for (std::size_t e = 0; e < n_e; ++e) {
      const auto z = run.s_ab[static_cast<std::size_t>(s) * n_e + e];
      os << s << ',' << run.energies[e] << ',' << z.real() << ',' << z.imag() << '\n';
    }
}

}  // namespace xsdist
