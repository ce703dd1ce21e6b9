#pragma once

// Proof configuration: which states form S_sys, how divergent states are
// classified, what the victim does during the window, which invariants
// restrict the symbolic start state, and solver limits.
//
// JSON shape:
//   {
//     "s_sys_patterns": ["soc.*", "!soc.core.*"],
//     "include_outputs": true,
//     "persistent_patterns": [...], "transient_patterns": [...],
//     "input_equality_patterns": ["*"],
//     "input_equality_window": [0, 1],          (optional, default: all cycles)
//     "victim_constraints": [<constraint>...],
//     "invariants": [<constraint>...],
//     "solver": {"conflict_budget": 10000000},
//     "unrolled": {"max_k": 16, "victim_window": "first" | "full"}
//   }
//
// <constraint>:
//   {"name": "...", "signal": "soc.core.addr", "cmp": "uge", "value": 16,
//    "instance": "both", "cycles": [0, 1],
//    "when": {"signal": "soc.core.pending", "cmp": "eq", "value": 1}}
// cmp is one of eq ne ult ule ugt uge equal_instances. Values may be given
// as numbers or as "0x.." strings.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "upec/error.hpp"
#include "upec/netlist.hpp"
#include "upec/state_set.hpp"

namespace upec {

using json = nlohmann::ordered_json;

enum class Cmp { Eq, Ne, Ult, Ule, Ugt, Uge, EqualInstances };
enum class Target { Inst1, Inst2, Both };
enum class VictimWindow { First, Full };

inline constexpr std::string_view cmp_name(Cmp c) {
  switch (c) {
    case Cmp::Eq: return "eq";
    case Cmp::Ne: return "ne";
    case Cmp::Ult: return "ult";
    case Cmp::Ule: return "ule";
    case Cmp::Ugt: return "ugt";
    case Cmp::Uge: return "uge";
    case Cmp::EqualInstances: return "equal_instances";
  }
  return "?";
}

inline bool compare(Cmp c, std::uint64_t a, std::uint64_t b) {
  switch (c) {
    case Cmp::Eq: return a == b;
    case Cmp::Ne: return a != b;
    case Cmp::Ult: return a < b;
    case Cmp::Ule: return a <= b;
    case Cmp::Ugt: return a > b;
    case Cmp::Uge: return a >= b;
    case Cmp::EqualInstances: break;
  }
  throw Error("equal_instances is not a single-value comparison");
}

struct Guard {
  std::string signal;
  Cmp cmp = Cmp::Eq;
  std::uint64_t value = 0;
};

struct SignalConstraint {
  std::string name;
  std::string signal;
  Cmp cmp = Cmp::Eq;
  std::uint64_t value = 0;
  Target target = Target::Both;
  std::optional<std::pair<unsigned, unsigned>> cycles;  // inclusive; default depends on use
  std::optional<Guard> when;

  std::string describe() const {
    std::string s = signal + " " + std::string(cmp_name(cmp));
    if (cmp != Cmp::EqualInstances) s += " " + std::to_string(value);
    if (when) s = "(" + when->signal + " " + std::string(cmp_name(when->cmp)) + " " + std::to_string(when->value) + ") => " + s;
    return name.empty() ? s : name + ": " + s;
  }
};

struct ProofConfig {
  std::vector<std::string> s_sys_patterns;
  bool include_outputs = true;
  std::vector<std::string> persistent_patterns;
  std::vector<std::string> transient_patterns;
  std::vector<std::string> input_equality_patterns{"*"};
  std::optional<std::pair<unsigned, unsigned>> input_equality_window;
  std::vector<SignalConstraint> victim_constraints;
  std::vector<SignalConstraint> invariants;
  std::optional<unsigned long long> conflict_budget;
  unsigned max_k = 16;
  VictimWindow victim_window = VictimWindow::First;
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(where + ": unknown field '" + k + "'");
}

inline std::uint64_t parse_value(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    auto v = j.get<std::int64_t>();
    if (v < 0) throw ConfigError(where + ": negative value");
    return std::uint64_t(v);
  }
  if (j.is_string()) {
    auto s = j.get<std::string>();
    try {
      std::size_t pos = 0;
      std::uint64_t v = std::stoull(s, &pos, 0);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(where + ": bad numeric value '" + s + "'");
  }
  throw ConfigError(where + ": value must be a number or numeric string");
}

inline Cmp parse_cmp(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": cmp must be a string");
  auto s = j.get<std::string>();
  for (Cmp c : {Cmp::Eq, Cmp::Ne, Cmp::Ult, Cmp::Ule, Cmp::Ugt, Cmp::Uge, Cmp::EqualInstances})
    if (s == cmp_name(c)) return c;
  throw ConfigError(where + ": unknown cmp '" + s + "'");
}

inline std::vector<std::string> parse_strings(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected a list of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw ConfigError(where + ": expected a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline std::pair<unsigned, unsigned> parse_range(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) {
    auto c = j.get<unsigned>();
    return {c, c};
  }
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned())
    throw ConfigError(where + ": cycles must be a non-negative integer or [first, last]");
  auto r = std::make_pair(j[0].get<unsigned>(), j[1].get<unsigned>());
  if (r.first > r.second) throw ConfigError(where + ": empty cycle range");
  return r;
}

inline SignalConstraint parse_constraint(const json& j, const std::string& where) {
  check_keys(j, {"name", "signal", "cmp", "value", "instance", "cycles", "when"}, where);
  SignalConstraint c;
  if (j.contains("name")) c.name = j.at("name").get<std::string>();
  if (!j.contains("signal") || !j.at("signal").is_string()) throw ConfigError(where + ": missing 'signal'");
  c.signal = j.at("signal").get<std::string>();
  if (!j.contains("cmp")) throw ConfigError(where + ": missing 'cmp'");
  c.cmp = parse_cmp(j.at("cmp"), where);
  if (c.cmp != Cmp::EqualInstances) {
    if (!j.contains("value")) throw ConfigError(where + ": missing 'value'");
    c.value = parse_value(j.at("value"), where);
  }
  if (j.contains("instance")) {
    auto s = j.at("instance").get<std::string>();
    if (s == "1" || s == "inst1")
      c.target = Target::Inst1;
    else if (s == "2" || s == "inst2")
      c.target = Target::Inst2;
    else if (s == "both")
      c.target = Target::Both;
    else
      throw ConfigError(where + ": instance must be inst1, inst2 or both");
  }
  if (j.contains("cycles")) c.cycles = parse_range(j.at("cycles"), where);
  if (j.contains("when")) {
    const auto& w = j.at("when");
    check_keys(w, {"signal", "cmp", "value"}, where + ".when");
    Guard g;
    if (!w.contains("signal")) throw ConfigError(where + ".when: missing 'signal'");
    g.signal = w.at("signal").get<std::string>();
    g.cmp = w.contains("cmp") ? parse_cmp(w.at("cmp"), where + ".when") : Cmp::Eq;
    if (g.cmp == Cmp::EqualInstances) throw ConfigError(where + ".when: equal_instances is not allowed in a guard");
    if (!w.contains("value")) throw ConfigError(where + ".when: missing 'value'");
    g.value = parse_value(w.at("value"), where + ".when");
    c.when = g;
  }
  return c;
}

}  // namespace detail

inline ProofConfig parse_config(const json& j) {
  detail::check_keys(j,
                     {"$schema", "description", "s_sys_patterns", "include_outputs", "persistent_patterns",
                      "transient_patterns", "input_equality_patterns", "input_equality_window",
                      "victim_constraints", "invariants", "solver", "unrolled"},
                     "config");
  ProofConfig c;
  if (!j.contains("s_sys_patterns")) throw ConfigError("config: missing 's_sys_patterns'");
  c.s_sys_patterns = detail::parse_strings(j.at("s_sys_patterns"), "s_sys_patterns");
  if (j.contains("include_outputs")) c.include_outputs = j.at("include_outputs").get<bool>();
  if (j.contains("persistent_patterns"))
    c.persistent_patterns = detail::parse_strings(j.at("persistent_patterns"), "persistent_patterns");
  if (j.contains("transient_patterns"))
    c.transient_patterns = detail::parse_strings(j.at("transient_patterns"), "transient_patterns");
  if (j.contains("input_equality_patterns"))
    c.input_equality_patterns = detail::parse_strings(j.at("input_equality_patterns"), "input_equality_patterns");
  if (j.contains("input_equality_window"))
    c.input_equality_window = detail::parse_range(j.at("input_equality_window"), "input_equality_window");
  if (j.contains("victim_constraints")) {
    const auto& a = j.at("victim_constraints");
    if (!a.is_array()) throw ConfigError("victim_constraints: expected a list");
    for (std::size_t i = 0; i < a.size(); ++i)
      c.victim_constraints.push_back(detail::parse_constraint(a[i], "victim_constraints[" + std::to_string(i) + "]"));
  }
  if (j.contains("invariants")) {
    const auto& a = j.at("invariants");
    if (!a.is_array()) throw ConfigError("invariants: expected a list");
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::string where = "invariants[" + std::to_string(i) + "]";
      auto inv = detail::parse_constraint(a[i], where);
      if (inv.cmp == Cmp::EqualInstances) throw ConfigError(where + ": invariants refer to a single instance");
      if (inv.cycles) throw ConfigError(where + ": invariants hold at the start state; 'cycles' is not allowed");
      c.invariants.push_back(std::move(inv));
    }
  }
  if (j.contains("solver")) {
    detail::check_keys(j.at("solver"), {"conflict_budget"}, "solver");
    if (j.at("solver").contains("conflict_budget"))
      c.conflict_budget = detail::parse_value(j.at("solver").at("conflict_budget"), "solver.conflict_budget");
  }
  if (j.contains("unrolled")) {
    const auto& u = j.at("unrolled");
    detail::check_keys(u, {"max_k", "victim_window"}, "unrolled");
    if (u.contains("max_k")) c.max_k = u.at("max_k").get<unsigned>();
    if (c.max_k < 1) throw ConfigError("unrolled.max_k must be at least 1");
    if (u.contains("victim_window")) {
      auto w = u.at("victim_window").get<std::string>();
      if (w == "first")
        c.victim_window = VictimWindow::First;
      else if (w == "full")
        c.victim_window = VictimWindow::Full;
      else
        throw ConfigError("unrolled.victim_window must be 'first' or 'full'");
    }
  }
  return c;
}

inline ProofConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ProofConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline json constraint_to_json(const SignalConstraint& c) {
  json j;
  if (!c.name.empty()) j["name"] = c.name;
  j["signal"] = c.signal;
  j["cmp"] = std::string(cmp_name(c.cmp));
  if (c.cmp != Cmp::EqualInstances) j["value"] = c.value;
  if (c.target != Target::Both) j["instance"] = c.target == Target::Inst1 ? "inst1" : "inst2";
  if (c.cycles) j["cycles"] = {c.cycles->first, c.cycles->second};
  if (c.when) j["when"] = {{"signal", c.when->signal}, {"cmp", std::string(cmp_name(c.when->cmp))}, {"value", c.when->value}};
  return j;
}

// Checks every constraint against the netlist: names resolve to bit-vector
// signals and constants fit. Pattern lists that match nothing produce
// warnings.
inline std::vector<std::string> validate_config(const Netlist& n, const ProofConfig& c) {
  std::vector<std::string> warnings;
  auto check_signal = [&](const std::string& name, std::uint64_t value, bool has_value, const std::string& where) {
    auto sig = n.find_signal(name);
    if (!sig) throw ConfigError(where + ": unknown signal '" + name + "'");
    const Sort& s = n.sort_of(sig->node);
    if (s.is_array()) throw ConfigError(where + ": '" + name + "' is an array; constraints need a bit-vector");
    if (has_value && (value & ~width_mask(s.width)))
      throw ConfigError(where + ": value " + std::to_string(value) + " does not fit " + std::to_string(s.width) +
                        "-bit signal '" + name + "'");
  };
  auto check_all = [&](const std::vector<SignalConstraint>& list, const std::string& what) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      std::string where = what + "[" + std::to_string(i) + "]";
      const auto& k = list[i];
      check_signal(k.signal, k.value, k.cmp != Cmp::EqualInstances, where);
      if (k.when) check_signal(k.when->signal, k.when->value, true, where + ".when");
    }
  };
  check_all(c.victim_constraints, "victim_constraints");
  check_all(c.invariants, "invariants");

  auto sel = select_states(n, c.s_sys_patterns, c.include_outputs);
  for (auto& w : sel.warnings) warnings.push_back("s_sys_patterns: " + w);
  if (sel.set.empty()) throw ConfigError("s_sys_patterns select no state");
  for (const auto* list : {&c.persistent_patterns, &c.transient_patterns}) {
    for (const auto& p : *list) {
      bool hit = false;
      for (auto id : sel.set) hit = hit || glob_match(p, n.name_of(id));
      if (!hit)
        warnings.push_back(std::string(list == &c.persistent_patterns ? "persistent" : "transient") +
                           "_patterns: pattern '" + p + "' matches no member of S_sys");
    }
  }
  bool any_input = c.input_equality_patterns.empty();
  for (auto id : n.inputs()) any_input = any_input || matches_any(c.input_equality_patterns, n.name_of(id));
  if (!any_input) warnings.push_back("input_equality_patterns match no input");
  return warnings;
}

inline StateSet s_sys(const Netlist& n, const ProofConfig& c) {
  return select_states(n, c.s_sys_patterns, c.include_outputs).set;
}

}  // namespace upec
