#pragma once

// Concrete replay of a three-phase attack script: the attacker primes and
// starts an engine (scripted steps), the victim issues v memory accesses,
// and the attacker reads an observation at the end of the window.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "upec/config.hpp"
#include "upec/evaluator.hpp"

namespace upec {

struct AttackStep {
  unsigned cycle = 0;
  std::vector<std::pair<std::string, std::uint64_t>> inputs;
};

struct AttackScript {
  std::string scenario;
  std::string description;
  unsigned cycles = 0;
  std::vector<AttackStep> steps;
  struct {
    std::string issue, addr_input;
    std::uint64_t addr = 0;
    unsigned first_cycle = 0, spacing = 1, max_accesses = 0;
  } victim;
  struct {
    std::string kind;  // value | count_nonzero
    std::string signal;
    std::uint64_t first = 0, count = 0;
  } observe;
};

inline AttackScript parse_attack_script(const json& j) {
  try {
    detail::check_keys(j, {"scenario", "description", "cycles", "steps", "victim", "observe"}, "attack script");
    AttackScript s;
    s.scenario = j.at("scenario").get<std::string>();
    s.description = j.value("description", "");
    s.cycles = j.at("cycles").get<unsigned>();
    for (const auto& st : j.at("steps")) {
      detail::check_keys(st, {"cycle", "inputs"}, "attack step");
      AttackStep a;
      a.cycle = st.at("cycle").get<unsigned>();
      for (const auto& [name, v] : st.at("inputs").items())
        a.inputs.emplace_back(name, detail::parse_value(v, "attack step input '" + name + "'"));
      s.steps.push_back(std::move(a));
    }
    const auto& v = j.at("victim");
    detail::check_keys(v, {"issue", "addr_input", "addr", "first_cycle", "spacing", "max_accesses"}, "victim");
    s.victim.issue = v.at("issue").get<std::string>();
    s.victim.addr_input = v.at("addr_input").get<std::string>();
    s.victim.addr = detail::parse_value(v.at("addr"), "victim addr");
    s.victim.first_cycle = v.at("first_cycle").get<unsigned>();
    s.victim.spacing = v.value("spacing", 1u);
    s.victim.max_accesses = v.at("max_accesses").get<unsigned>();
    const auto& o = j.at("observe");
    detail::check_keys(o, {"kind", "signal", "first", "count"}, "observe");
    s.observe.kind = o.at("kind").get<std::string>();
    s.observe.signal = o.at("signal").get<std::string>();
    s.observe.first = o.value("first", std::uint64_t{0});
    s.observe.count = o.value("count", std::uint64_t{0});
    if (s.observe.kind != "value" && s.observe.kind != "count_nonzero")
      throw ConfigError("observe.kind must be 'value' or 'count_nonzero'");
    if (s.victim.spacing == 0) throw ConfigError("victim spacing must be positive");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("attack script: ") + e.what());
  }
}

inline AttackScript load_attack_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read attack script " + path.string());
  try {
    return parse_attack_script(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

struct DemoReport {
  std::string scenario;
  unsigned victim_accesses = 0;
  std::vector<unsigned> victim_cycles;
  unsigned cycles = 0;
  std::string observation_kind;
  std::string signal;
  std::uint64_t observation = 0;
};

namespace detail {

inline NodeId demo_input(const Netlist& n, const std::string& name) {
  auto sig = n.find_signal(name);
  if (!sig || sig->kind != Signal::Kind::Input) throw ConfigError("attack script: unknown input '" + name + "'");
  return sig->id;
}

}  // namespace detail

inline DemoReport replay_attack_demo(const Netlist& n, const AttackScript& s, unsigned v) {
  if (v > s.victim.max_accesses)
    throw ConfigError("scenario '" + s.scenario + "' supports at most " + std::to_string(s.victim.max_accesses) +
                      " victim accesses");
  std::vector<std::vector<std::pair<NodeId, std::uint64_t>>> drive(s.cycles);
  auto put = [&](unsigned cycle, const std::string& name, std::uint64_t value) {
    NodeId id = detail::demo_input(n, name);
    if (value & ~width_mask(n.sort_of(id).width))
      throw ConfigError("attack script: value for '" + name + "' does not fit");
    if (cycle >= s.cycles) throw ConfigError("attack script: cycle " + std::to_string(cycle) + " outside the window");
    drive[cycle].emplace_back(id, value);
  };
  for (const auto& st : s.steps)
    for (const auto& [name, value] : st.inputs) put(st.cycle, name, value);

  DemoReport r;
  r.scenario = s.scenario;
  r.victim_accesses = v;
  r.cycles = s.cycles;
  r.observation_kind = s.observe.kind;
  r.signal = s.observe.signal;
  for (unsigned i = 0; i < v; ++i) {
    unsigned c = s.victim.first_cycle + i * s.victim.spacing;
    put(c, s.victim.issue, 1);
    put(c, s.victim.addr_input, s.victim.addr);
    r.victim_cycles.push_back(c);
  }

  auto obs = n.find_signal(s.observe.signal);
  if (!obs || obs->kind != Signal::Kind::State)
    throw ConfigError("attack script: unknown state '" + s.observe.signal + "'");
  const Sort& os = n.sort_of(obs->id);
  if (s.observe.kind == "count_nonzero" && !os.is_array())
    throw ConfigError("attack script: count_nonzero needs an array state");
  if (s.observe.kind == "value" && os.is_array()) throw ConfigError("attack script: value needs a bit-vector state");

  Valuation state = reset_state(n);
  for (unsigned c = 0; c < s.cycles; ++c) {
    Valuation in = zero_inputs(n);
    for (const auto& [id, value] : drive[c]) in[id] = value;
    state = evaluate_step(n, state, in).next;
  }
  const Value& final_value = state.at(obs->id);
  if (s.observe.kind == "value") {
    r.observation = as_bits(final_value);
  } else {
    for (std::uint64_t i = 0; i < s.observe.count; ++i)
      r.observation += as_array(final_value).get(s.observe.first + i) != 0;
  }
  return r;
}

inline json demo_json(const DemoReport& r) {
  json j;
  j["scenario"] = r.scenario;
  j["victim_accesses"] = r.victim_accesses;
  j["victim_cycles"] = r.victim_cycles;
  j["cycles"] = r.cycles;
  j["observation_kind"] = r.observation_kind;
  j["signal"] = r.signal;
  j["observation"] = r.observation;
  return j;
}

}  // namespace upec
