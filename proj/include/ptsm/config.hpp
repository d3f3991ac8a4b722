#pragma once

// Experiment description and its sectioned key = value text format.
//
//   # comment
//   [section]
//   key = value
//
// Lists are comma separated. Unknown sections or keys, duplicate keys and
// malformed values are errors reported with line and column.

#include "ptsm/controllers.hpp"
#include "ptsm/csv.hpp"
#include "ptsm/plants.hpp"
#include "ptsm/sim.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptsm {

enum class PlantKind { double_integrator, manipulator };
enum class ControllerKind { so_ptsm, ptsm, tbg, fixed };

inline const char* to_string(PlantKind k) {
  return k == PlantKind::double_integrator ? "double_integrator" : "manipulator";
}

inline const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::so_ptsm: return "so_ptsm";
    case ControllerKind::ptsm: return "ptsm";
    case ControllerKind::tbg: return "tbg";
    case ControllerKind::fixed: return "fixed";
  }
  return "?";
}

struct AcceptanceSpec {
  double tol = 1e-2;
  std::optional<double> settle_by;  // nullopt: the controller's theoretical bound
  double radius_slack = 0.05;       // TBG surface-radius check
};

struct ExperimentConfig {
  std::string name = "custom";
  PlantKind plant = PlantKind::manipulator;
  ControllerKind controller = ControllerKind::ptsm;
  int dof = 2;
  std::string true_params = "manip2dof-true";
  std::string nominal_params = "manip2dof-nominal";
  std::vector<std::uint64_t> seeds{1};

  SimConfig sim{};

  // Shared by both plants; K is K_f for the double integrator and K_d for
  // the manipulator.
  double Ts = 4.0, Tc = 6.0, gamma = 0.5, rho = 0.5;
  std::vector<double> K{25.0, 25.0};
  double sigma1 = 14.0, sigma2 = 12.0, sigma3 = 10.0, sigma_m0_hat = 2.5;
  double epsilon = 0.1, alpha = 1.0, beta = 1.0;
  int m1 = 5, n1 = 3, m2 = 3, n2 = 5;

  UncertaintyBounds bounds{0.0, 5.0, 5.0, 5.0};
  DisturbanceKind disturbance = DisturbanceKind::piecewise_constant_uniform;
  double disturbance_bound = 5.0;
  double q_range = 5.0, qdot_range = 5.0;
  AcceptanceSpec acceptance{};

  SecondOrderGains second_order_gains() const {
    SecondOrderGains g{Ts, Tc, gamma, rho, Eigen::Map<const RealVec>(K.data(), Eigen::Index(K.size()))};
    return g;
  }

  ManipGains manip_gains() const {
    ManipGains g;
    g.Ts = Ts;
    g.Tc = Tc;
    g.gamma = gamma;
    g.rho = rho;
    g.Kd = Eigen::Map<const RealVec>(K.data(), Eigen::Index(K.size()));
    g.sigma1 = sigma1;
    g.sigma2 = sigma2;
    g.sigma3 = sigma3;
    g.sigma_m0_hat = sigma_m0_hat;
    g.epsilon = epsilon;
    g.alpha = alpha;
    g.beta = beta;
    g.m1 = m1;
    g.n1 = n1;
    g.m2 = m2;
    g.n2 = n2;
    return g;
  }

  ManipLaw manip_law() const {
    switch (controller) {
      case ControllerKind::tbg: return ManipLaw::tbg;
      case ControllerKind::fixed: return ManipLaw::fixed;
      default: return ManipLaw::ptsm;
    }
  }

  GainCondition gain_condition() const {
    switch (controller) {
      case ControllerKind::so_ptsm: return GainCondition::second_order;
      case ControllerKind::tbg: return GainCondition::tbg;
      case ControllerKind::fixed: return GainCondition::fixed_time;
      default: return GainCondition::manipulator;
    }
  }

  /// Semantic checks that need the whole config: ranges, dimensions and
  /// plant/controller compatibility. Throws std::invalid_argument.
  void validate() const {
    sim.validate();
    if (seeds.empty()) throw std::invalid_argument("experiment.seeds must not be empty");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
      throw std::invalid_argument("experiment.seeds contains duplicates");
    if (dof < 1) throw std::invalid_argument("experiment.dof must be positive");
    if (int(K.size()) != dof)
      throw std::invalid_argument("gains.K has " + std::to_string(K.size()) + " entries but dof is " +
                                  std::to_string(dof));
    if (plant == PlantKind::double_integrator) {
      if (controller != ControllerKind::so_ptsm)
        throw std::invalid_argument("double_integrator plant requires controller = so_ptsm");
      second_order_gains().validate();
    } else {
      if (controller == ControllerKind::so_ptsm)
        throw std::invalid_argument("controller so_ptsm requires the double_integrator plant");
      if (dof != 2) throw std::invalid_argument("manipulator presets are 2-DOF");
      manipulator_preset(true_params);
      manipulator_preset(nominal_params);
      manip_gains().validate(manip_law());
    }
    if (disturbance_bound < 0.0 || q_range < 0.0 || qdot_range < 0.0)
      throw std::invalid_argument("ranges and bounds must be non-negative");
    if (bounds.sigma_f < 0.0 || bounds.sigma_d < 0.0 || bounds.sigma_m0 < 0.0 || bounds.sigma_alpha < 0.0)
      throw std::invalid_argument("bounds must be non-negative");
    if (!(acceptance.tol > 0.0)) throw std::invalid_argument("acceptance.tol must be positive");
  }
};

struct ConfigError : std::runtime_error {
  int line;
  int column;
  ConfigError(int l, int c, const std::string& msg)
      : std::runtime_error("line " + std::to_string(l) + ", column " + std::to_string(c) + ": " + msg),
        line(l),
        column(c) {}
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

inline double to_real(const std::string& v) { return parse_double(v); }

inline int to_int(const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw std::invalid_argument("not an integer: '" + v + "'");
  return out;
}

inline std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw std::invalid_argument("not a seed: '" + v + "'");
  return out;
}

template <class E>
E to_enum(const std::string& v, std::initializer_list<std::pair<const char*, E>> choices) {
  std::string names;
  for (const auto& [n, e] : choices) {
    if (v == n) return e;
    names += (names.empty() ? "" : "|") + std::string(n);
  }
  throw std::invalid_argument("expected one of " + names + ", got '" + v + "'");
}

#define PTSM_REAL(member)                                                   \
  Field {                                                                   \
    [](ExperimentConfig& c, const std::string& v) { c.member = to_real(v); }, \
        [](const ExperimentConfig& c) { return format_double(c.member); }   \
  }
#define PTSM_INT(member)                                                    \
  Field {                                                                   \
    [](ExperimentConfig& c, const std::string& v) { c.member = to_int(v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }  \
  }

/// Section -> key -> accessor, in canonical serialisation order.
inline const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Field>>>>& schema() {
  static const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Field>>>> s{
      {"experiment",
       {
           {"name", {[](ExperimentConfig& c, const std::string& v) { c.name = v; },
                     [](const ExperimentConfig& c) { return c.name; }}},
           {"plant", {[](ExperimentConfig& c, const std::string& v) {
                        c.plant = to_enum<PlantKind>(v, {{"double_integrator", PlantKind::double_integrator},
                                                         {"manipulator", PlantKind::manipulator}});
                      },
                      [](const ExperimentConfig& c) { return std::string(to_string(c.plant)); }}},
           {"controller", {[](ExperimentConfig& c, const std::string& v) {
                             c.controller = to_enum<ControllerKind>(
                                 v, {{"so_ptsm", ControllerKind::so_ptsm},
                                     {"ptsm", ControllerKind::ptsm},
                                     {"tbg", ControllerKind::tbg},
                                     {"fixed", ControllerKind::fixed}});
                           },
                           [](const ExperimentConfig& c) { return std::string(to_string(c.controller)); }}},
           {"dof", PTSM_INT(dof)},
           {"true_params", {[](ExperimentConfig& c, const std::string& v) { c.true_params = v; },
                            [](const ExperimentConfig& c) { return c.true_params; }}},
           {"nominal_params", {[](ExperimentConfig& c, const std::string& v) { c.nominal_params = v; },
                               [](const ExperimentConfig& c) { return c.nominal_params; }}},
           {"seeds", {[](ExperimentConfig& c, const std::string& v) {
                        c.seeds.clear();
                        for (const auto& item : split_list(v)) c.seeds.push_back(to_u64(item));
                      },
                      [](const ExperimentConfig& c) {
                        std::vector<std::string> items;
                        for (auto s : c.seeds) items.push_back(std::to_string(s));
                        return join(items);
                      }}},
       }},
      {"sim",
       {
           {"dt", PTSM_REAL(sim.dt)},
           {"horizon", PTSM_REAL(sim.horizon)},
           {"decimation", PTSM_INT(sim.decimation)},
           {"sgn", {[](ExperimentConfig& c, const std::string& v) {
                      c.sim.sgn.mode = to_enum<SgnMode>(v, {{"exact", SgnMode::exact}, {"layer", SgnMode::boundary_layer}});
                    },
                    [](const ExperimentConfig& c) { return std::string(to_string(c.sim.sgn.mode)); }}},
           {"layer_width", PTSM_REAL(sim.sgn.width)},
       }},
      {"gains",
       {
           {"Ts", PTSM_REAL(Ts)},
           {"Tc", PTSM_REAL(Tc)},
           {"gamma", PTSM_REAL(gamma)},
           {"rho", PTSM_REAL(rho)},
           {"K", {[](ExperimentConfig& c, const std::string& v) {
                    c.K.clear();
                    for (const auto& item : split_list(v)) c.K.push_back(to_real(item));
                  },
                  [](const ExperimentConfig& c) {
                    std::vector<std::string> items;
                    for (double k : c.K) items.push_back(format_double(k));
                    return join(items);
                  }}},
           {"sigma1", PTSM_REAL(sigma1)},
           {"sigma2", PTSM_REAL(sigma2)},
           {"sigma3", PTSM_REAL(sigma3)},
           {"sigma_m0_hat", PTSM_REAL(sigma_m0_hat)},
           {"epsilon", PTSM_REAL(epsilon)},
           {"alpha", PTSM_REAL(alpha)},
           {"beta", PTSM_REAL(beta)},
           {"m1", PTSM_INT(m1)},
           {"n1", PTSM_INT(n1)},
           {"m2", PTSM_INT(m2)},
           {"n2", PTSM_INT(n2)},
       }},
      {"bounds",
       {
           {"sigma_f", PTSM_REAL(bounds.sigma_f)},
           {"sigma_d", PTSM_REAL(bounds.sigma_d)},
           {"sigma_m0", PTSM_REAL(bounds.sigma_m0)},
           {"sigma_alpha", PTSM_REAL(bounds.sigma_alpha)},
       }},
      {"disturbance",
       {
           {"kind", {[](ExperimentConfig& c, const std::string& v) {
                       c.disturbance = to_enum<DisturbanceKind>(
                           v, {{"zero", DisturbanceKind::zero}, {"uniform", DisturbanceKind::piecewise_constant_uniform}});
                     },
                     [](const ExperimentConfig& c) { return std::string(to_string(c.disturbance)); }}},
           {"bound", PTSM_REAL(disturbance_bound)},
       }},
      {"initial",
       {
           {"q_range", PTSM_REAL(q_range)},
           {"qdot_range", PTSM_REAL(qdot_range)},
       }},
      {"acceptance",
       {
           {"tol", PTSM_REAL(acceptance.tol)},
           {"settle_by", {[](ExperimentConfig& c, const std::string& v) {
                            if (v == "auto") c.acceptance.settle_by.reset();
                            else c.acceptance.settle_by = to_real(v);
                          },
                          [](const ExperimentConfig& c) {
                            return c.acceptance.settle_by ? format_double(*c.acceptance.settle_by)
                                                          : std::string("auto");
                          }}},
           {"radius_slack", PTSM_REAL(acceptance.radius_slack)},
       }},
  };
  return s;
}

#undef PTSM_REAL
#undef PTSM_INT

}  // namespace detail

/// Parses the sectioned text format. Keys not present keep their defaults;
/// semantic validation runs afterwards and is reported against line 0.
inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  const auto& sch = detail::schema();
  const std::vector<std::pair<std::string, detail::Field>>* section = nullptr;
  std::string section_name;
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = raw.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const int col = int(first) + 1;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      if (close == std::string::npos) throw ConfigError(line_no, col, "unterminated section header");
      if (!detail::trim(line.substr(close + 1)).empty())
        throw ConfigError(line_no, int(close) + 2, "unexpected text after section header");
      section_name = detail::trim(line.substr(first + 1, close - first - 1));
      section = nullptr;
      for (const auto& [name, fields] : sch) {
        if (name == section_name) section = &fields;
      }
      if (!section) throw ConfigError(line_no, col + 1, "unknown section '" + section_name + "'");
      continue;
    }
    const auto eq = line.find('=', first);
    if (eq == std::string::npos) throw ConfigError(line_no, col, "expected 'key = value'");
    if (!section) throw ConfigError(line_no, col, "key outside of any section");
    const std::string key = detail::trim(line.substr(first, eq - first));
    const std::string value = detail::trim(line.substr(eq + 1));
    const detail::Field* field = nullptr;
    for (const auto& [k, f] : *section) {
      if (k == key) field = &f;
    }
    if (!field) throw ConfigError(line_no, col, "unknown key '" + key + "' in section [" + section_name + "]");
    if (!seen.insert(section_name + "." + key).second)
      throw ConfigError(line_no, col, "duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(line_no, int(eq) + 2, "missing value for '" + key + "'");
    try {
      field->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      const auto vcol = line.find_first_not_of(" \t", eq + 1);
      throw ConfigError(line_no, int(vcol) + 1, e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, 0, e.what());
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_config(is);
}

/// Canonical text form: every section and key in schema order.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [section, fields] : detail::schema()) {
    out += (out.empty() ? "[" : "\n[") + section + "]\n";
    for (const auto& [key, field] : fields) out += key + " = " + field.get(cfg) + "\n";
  }
  return out;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace ptsm
