#pragma once

// JSON reports for the command-line tool. Everything except the "timing"
// object is a function of the inputs, so identical invocations give
// identical reports once timing is removed.

#include <string>
#include <vector>

#include "upec/procedure.hpp"

namespace upec {

inline constexpr const char* kOutputsNote =
    "primary outputs are pseudo-state evaluated from the same cycle's states and inputs";

inline json value_json(const Value& v) {
  if (std::holds_alternative<std::uint64_t>(v)) return as_bits(v);
  const auto& a = as_array(v);
  json entries = json::object();
  for (const auto& [i, e] : a.entries)
    if (e != a.default_element) entries[std::to_string(i)] = e;
  return json{{"default", a.default_element}, {"entries", entries}};
}

inline json frame_json(const Netlist& n, const TraceFrame& f, unsigned cycle) {
  json j;
  j["cycle"] = cycle;
  json states = json::object(), inputs = json::object(), outputs = json::object();
  for (const auto& s : n.states()) states[n.name_of(s.node)] = value_json(f.states.at(s.node));
  for (auto id : n.inputs()) inputs[n.name_of(id)] = value_json(f.inputs.at(id));
  for (const auto& o : n.outputs()) outputs[o.name] = value_json(f.outputs.at(o.id));
  j["states"] = states;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  return j;
}

inline json counterexample_json(const Netlist& n, const Counterexample& cex, const ProofConfig& cfg) {
  json j;
  j["k"] = cex.k;
  j["failing_cycle"] = cex.failing_cycle;
  j["diff_set"] = names_json(n, cex.diff_set);
  auto cls = classify(n, cex.diff_set, cfg);
  j["persistent"] = names_json(n, cls.persistent);
  j["transient"] = names_json(n, cls.transient);
  j["unknown"] = names_json(n, cls.unknown);
  json ad = json::object();
  for (const auto& [id, idx] : cex.array_diffs) ad[n.name_of(id)] = idx;
  j["array_diffs"] = ad;
  json trace = json::object();
  for (unsigned inst = 0; inst < (cex.two_instances ? 2u : 1u); ++inst) {
    json frames = json::array();
    for (unsigned c = 0; c < cex.trace[inst].size(); ++c) frames.push_back(frame_json(n, cex.trace[inst][c], c));
    trace["inst" + std::to_string(inst + 1)] = frames;
  }
  j["trace"] = trace;
  return j;
}

struct RunFiles {
  std::vector<std::string> traces;
  std::vector<std::string> dimacs;
  std::string log;
};

struct RunTiming {
  double total_seconds = 0;
  double solver_seconds = 0;
};

inline json files_json(const RunFiles& f) {
  json j;
  j["traces"] = f.traces;
  j["dimacs"] = f.dimacs;
  j["log"] = f.log.empty() ? json(nullptr) : json(f.log);
  return j;
}

inline json check_report(const Netlist& n, const ProofConfig& cfg, const Verdict& v, bool unrolled,
                         const std::string& netlist_path, const std::string& config_path, const RunFiles& files,
                         const RunTiming& timing) {
  json j;
  j["command"] = "check";
  j["netlist"] = netlist_path;
  j["config"] = config_path;
  j["procedure"] = unrolled ? "unrolled" : "fixpoint";
  j["verdict"] = std::string(verdict_name(v.status));
  j["exit_code"] = exit_code(v.status);
  j["iterations"] = json::array();
  for (const auto& r : v.log) j["iterations"].push_back(iteration_json(n, r));
  j["s_sys"] = names_json(n, v.s_sys);
  j["final_set"] = names_json(n, v.final_set);
  if (unrolled) {
    j["k"] = v.k;
    json sched = json::array();
    for (const auto& s : v.schedule) sched.push_back(names_json(n, s));
    j["schedule"] = sched;
  }
  j["closing_induction_held"] = v.closing_induction_held;
  j["evidence"] = v.evidence ? counterexample_json(n, *v.evidence, cfg) : json(nullptr);
  j["unclassified"] = names_json(n, v.unclassified);
  j["budget_report"] = v.budget_report.empty() ? json(nullptr) : json(v.budget_report);
  j["warnings"] = v.warnings;
  j["notes"] = {kOutputsNote};
  j["files"] = files_json(files);
  j["timing"] = {{"total_seconds", timing.total_seconds}, {"solver_seconds", timing.solver_seconds}};
  return j;
}

struct InvariantResult {
  SignalConstraint invariant;
  std::string status;  // holds | fails | budget
  std::optional<Counterexample> counterexample;
  std::string trace_file;
  unsigned long long conflicts = 0;
};

inline json invariants_report(const Netlist& n, const ProofConfig& cfg, const std::vector<InvariantResult>& results,
                              const std::string& netlist_path, const std::string& config_path,
                              const RunTiming& timing) {
  json j;
  j["command"] = "invariants";
  j["netlist"] = netlist_path;
  j["config"] = config_path;
  int code = 0;
  json arr = json::array();
  for (const auto& r : results) {
    json e;
    e["name"] = r.invariant.name;
    e["constraint"] = constraint_to_json(r.invariant);
    e["status"] = r.status;
    e["conflicts"] = r.conflicts;
    e["counterexample"] = r.counterexample ? counterexample_json(n, *r.counterexample, cfg) : json(nullptr);
    e["trace_file"] = r.trace_file.empty() ? json(nullptr) : json(r.trace_file);
    arr.push_back(e);
    if (r.status == "fails") code = 2;
    if (r.status == "budget" && code == 0) code = 4;
  }
  j["checked"] = results.size();
  j["invariants"] = arr;
  j["exit_code"] = code;
  j["notes"] = {"invariants are proven by consecution only; one that no reachable state satisfies would be vacuous"};
  j["timing"] = {{"total_seconds", timing.total_seconds}, {"solver_seconds", timing.solver_seconds}};
  return j;
}

}  // namespace upec
