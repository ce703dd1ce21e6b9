#pragma once

// The fixpoint procedure over S and its cycle-by-cycle unrolled variant.
//
// Fixpoint: start from S_sys; on every counterexample either stop
// (persistent divergence, or a divergent state nobody classified) or drop
// the divergent states from S and check again.
//
// Unrolled: S[0] stays S_sys; counterexamples shrink the schedule from the
// failing cycle on; when a depth holds, the schedule grows by one cycle.
// Once a new cycle adds no divergence (or the depth cap is reached), the
// two-cycle property is checked with S[k]; if that induction fails, the
// fixpoint procedure continues from S[k].

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "upec/property.hpp"

namespace upec {

struct Classification {
  StateSet persistent;
  StateSet transient;
  StateSet unknown;
};

inline Classification classify(const Netlist& n, const StateSet& vars, const ProofConfig& cfg) {
  Classification c;
  for (auto id : vars) {
    auto name = n.name_of(id);
    bool p = matches_any(cfg.persistent_patterns, name);
    bool t = matches_any(cfg.transient_patterns, name);
    if (p && t) throw ConfigError("'" + name + "' matches both persistent and transient patterns");
    (p ? c.persistent : t ? c.transient : c.unknown).insert(id);
  }
  return c;
}

enum class VerdictStatus { Secure, Vulnerable, NeedsClassification, Inconclusive };

inline constexpr std::string_view verdict_name(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Secure: return "secure";
    case VerdictStatus::Vulnerable: return "vulnerable";
    case VerdictStatus::NeedsClassification: return "needs_classification";
    case VerdictStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

inline constexpr int exit_code(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Secure: return 0;
    case VerdictStatus::Vulnerable: return 2;
    case VerdictStatus::NeedsClassification: return 3;
    case VerdictStatus::Inconclusive: return 4;
  }
  return 1;
}

struct IterationRecord {
  unsigned iteration = 0;
  std::string phase;  // fixpoint | unrolled | closing
  unsigned k = 1;
  std::vector<std::size_t> set_sizes;  // |S|, or |S[0]|..|S[k]|
  std::string status;                  // holds | fails | budget
  StateSet diff_set;
  unsigned failing_cycle = 0;
  Classification classes;
  std::string action;  // secure | vulnerable | needs_classification | remove | extend | close | inconclusive
  CheckStats stats;
};

struct Verdict {
  VerdictStatus status = VerdictStatus::Inconclusive;
  std::optional<Counterexample> evidence;
  StateSet unclassified;
  std::string budget_report;
  std::vector<IterationRecord> log;
  StateSet s_sys;
  StateSet final_set;              // S when the procedure stopped (S[k] when unrolled)
  std::vector<StateSet> schedule;  // S[0..k] of the unrolled phase
  unsigned k = 1;
  bool closing_induction_held = false;
  std::vector<std::string> warnings;
};

struct ProcedureOptions {
  std::optional<unsigned long long> budget;
  std::optional<unsigned> max_k;
  std::function<void(unsigned iteration, const ClauseSet&)> on_query;
  std::function<void(const IterationRecord&, const Counterexample*)> on_iteration;
};

namespace detail {

class ProcedureRun {
public:
  ProcedureRun(const Netlist& n, const ProofConfig& cfg, const ProcedureOptions& opts)
      : n_(n), cfg_(cfg), opts_(opts) {
    v_.warnings = validate_config(n, cfg);
    v_.s_sys = s_sys(n, cfg);
  }

  Verdict& verdict() { return v_; }

  CheckOptions check_options() {
    CheckOptions o;
    o.budget = opts_.budget;
    unsigned it = unsigned(v_.log.size()) + 1;
    if (opts_.on_query) o.on_query = [this, it](const ClauseSet& cs) { opts_.on_query(it, cs); };
    return o;
  }

  IterationRecord start(const std::string& phase, unsigned k, std::vector<std::size_t> sizes) {
    IterationRecord r;
    r.iteration = unsigned(v_.log.size()) + 1;
    r.phase = phase;
    r.k = k;
    r.set_sizes = std::move(sizes);
    return r;
  }

  void finish(IterationRecord r, const Counterexample* cex) {
    if (opts_.on_iteration) opts_.on_iteration(r, cex);
    v_.log.push_back(std::move(r));
  }

  // Runs a check; returns nothing (and records an inconclusive verdict)
  // when the solver budget runs out.
  template <class F>
  std::optional<CheckOutcome> attempt(IterationRecord& r, F&& check) {
    try {
      return check();
    } catch (const BudgetExceeded& e) {
      r.status = "budget";
      r.action = "inconclusive";
      r.stats.conflicts = e.conflicts();
      v_.status = VerdictStatus::Inconclusive;
      v_.budget_report = std::string(e.what()) + " in iteration " + std::to_string(r.iteration);
      finish(r, nullptr);
      return std::nullopt;
    }
  }

  // Applies the three-way case split to a failing check. Returns true when
  // the procedure stops.
  bool judge(IterationRecord& r, CheckOutcome& out) {
    const Counterexample& cex = *out.counterexample;
    r.status = "fails";
    r.diff_set = cex.diff_set;
    r.failing_cycle = cex.failing_cycle;
    r.classes = classify(n_, cex.diff_set, cfg_);
    if (!r.classes.persistent.empty()) {
      r.action = "vulnerable";
      v_.status = VerdictStatus::Vulnerable;
    } else if (!r.classes.unknown.empty()) {
      r.action = "needs_classification";
      v_.status = VerdictStatus::NeedsClassification;
      v_.unclassified = r.classes.unknown;
    } else {
      r.action = "remove";
      finish(r, &cex);
      return false;
    }
    finish(r, &cex);
    v_.evidence = std::move(out.counterexample);
    return true;
  }

  // Fixpoint loop from `s`. `phase` labels the log entries.
  void fixpoint(StateSet s, const std::string& phase) {
    while (true) {
      auto r = start(phase, 1, {s.size()});
      auto out = attempt(r, [&] { return check_upec_ssc(n_, s, cfg_, check_options()); });
      v_.final_set = s;
      if (!out) return;
      r.stats = out->stats;
      if (out->holds()) {
        r.status = "holds";
        r.action = "secure";
        finish(r, nullptr);
        v_.status = VerdictStatus::Secure;
        v_.closing_induction_held = true;
        return;
      }
      StateSet diff = out->counterexample->diff_set;
      if (judge(r, *out)) return;
      s = s - diff;
    }
  }

  void unrolled() {
    unsigned max_k = opts_.max_k.value_or(cfg_.max_k);
    if (max_k < 1) throw ConfigError("max_k must be at least 1");
    std::vector<StateSet> s{v_.s_sys, v_.s_sys};
    unsigned k = 1;
    while (true) {
      std::vector<std::size_t> sizes;
      for (const auto& x : s) sizes.push_back(x.size());
      auto r = start("unrolled", k, sizes);
      auto out = attempt(r, [&] { return check_upec_ssc_unrolled(n_, k, s, cfg_, check_options()); });
      v_.schedule = s;
      v_.k = k;
      v_.final_set = s[k];
      if (!out) return;
      r.stats = out->stats;
      if (out->holds()) {
        r.status = "holds";
        if (s[k] == s[k - 1] || k == max_k) {
          r.action = "close";
          finish(r, nullptr);
          fixpoint(s[k], "closing");
          return;
        }
        r.action = "extend";
        finish(r, nullptr);
        ++k;
        s.push_back(s[k - 1]);
        continue;
      }
      StateSet diff = out->counterexample->diff_set;
      unsigned j = out->counterexample->failing_cycle;
      if (judge(r, *out)) return;
      for (unsigned c = j; c <= k; ++c) s[c] = s[c] - diff;
    }
  }

private:
  const Netlist& n_;
  const ProofConfig& cfg_;
  const ProcedureOptions& opts_;
  Verdict v_;
};

}  // namespace detail

inline Verdict run_ssc(const Netlist& n, const ProofConfig& cfg, const ProcedureOptions& opts = {}) {
  detail::ProcedureRun run(n, cfg, opts);
  run.fixpoint(run.verdict().s_sys, "fixpoint");
  return std::move(run.verdict());
}

inline Verdict run_ssc_unrolled(const Netlist& n, const ProofConfig& cfg, const ProcedureOptions& opts = {}) {
  detail::ProcedureRun run(n, cfg, opts);
  run.unrolled();
  return std::move(run.verdict());
}

inline json names_json(const Netlist& n, const StateSet& s) {
  json a = json::array();
  for (const auto& name : s.names(n)) a.push_back(name);
  return a;
}

// One JSON object per iteration; contains no timing so that logs of
// identical runs are byte-identical.
inline json iteration_json(const Netlist& n, const IterationRecord& r) {
  json j;
  j["iteration"] = r.iteration;
  j["phase"] = r.phase;
  j["k"] = r.k;
  j["set_sizes"] = r.set_sizes;
  j["status"] = r.status;
  if (r.status == "fails") {
    j["failing_cycle"] = r.failing_cycle;
    j["diff_set"] = names_json(n, r.diff_set);
    j["persistent"] = names_json(n, r.classes.persistent);
    j["transient"] = names_json(n, r.classes.transient);
    j["unknown"] = names_json(n, r.classes.unknown);
  }
  j["action"] = r.action;
  j["conflicts"] = r.stats.conflicts;
  return j;
}

inline std::string iteration_log_jsonl(const Netlist& n, const Verdict& v) {
  std::string out;
  for (const auto& r : v.log) out += iteration_json(n, r).dump() + "\n";
  return out;
}

}  // namespace upec
