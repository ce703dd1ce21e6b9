#pragma once

// Proof obligations: the two-cycle property over S, the unrolled property
// over S[0..k], and single-instance invariant consecution.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>

#include "upec/config.hpp"
#include "upec/miter.hpp"
#include "upec/sat_solver.hpp"

namespace upec {

enum class CheckStatus { Holds, Fails };

struct CheckStats {
  unsigned long long conflicts = 0;
  unsigned long long decisions = 0;
  std::uint32_t vars = 0;
  std::size_t clauses = 0;
  double seconds = 0;
};

struct CheckOutcome {
  CheckStatus status = CheckStatus::Holds;
  std::optional<Counterexample> counterexample;
  CheckStats stats;

  bool holds() const noexcept { return status == CheckStatus::Holds; }
};

struct CheckOptions {
  std::optional<unsigned long long> budget;  // overrides the config when set
  std::function<void(const ClauseSet&)> on_query;  // sees every clause set before solving
};

// Conflict budget precedence: explicit value, then UPEC_SSC_BUDGET, then
// the config, then the built-in default.
inline unsigned long long resolve_budget(std::optional<unsigned long long> flag, const ProofConfig& cfg) {
  if (flag) return *flag;
  if (const char* env = std::getenv("UPEC_SSC_BUDGET"); env && *env) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ConfigError(std::string("UPEC_SSC_BUDGET is not a number: '") + env + "'");
    return v;
  }
  return cfg.conflict_budget.value_or(kDefaultConflictBudget);
}

namespace detail {

struct Solved {
  SatResult result;
  CheckStats stats;
};

inline Solved solve_checked(const ClauseSet& cs, const ProofConfig& cfg, const CheckOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  if (opts.on_query) opts.on_query(cs);
  Solved s;
  s.result = solve(cs, {}, resolve_budget(opts.budget, cfg));
  s.stats.conflicts = s.result.stats.conflicts;
  s.stats.decisions = s.result.stats.decisions;
  s.stats.vars = cs.var_count;
  s.stats.clauses = cs.clauses.size();
  s.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (s.result.status == SatStatus::Unknown) throw BudgetExceeded(s.result.stats.conflicts);
  return s;
}

inline void require_subset(const Netlist& n, const StateSet& s, const StateSet& sys, const std::string& what) {
  for (auto id : s)
    if (!sys.contains(id)) throw ConfigError(what + " member '" + n.name_of(id) + "' is not in S_sys");
}

}  // namespace detail

inline CheckOutcome run_query(const UpecQuery& q, const ProofConfig& cfg, const CheckOptions& opts = {}) {
  auto m = build_query(q);
  auto s = detail::solve_checked(m.cs, cfg, opts);
  CheckOutcome out;
  out.stats = s.stats;
  if (s.result.status == SatStatus::Sat) {
    out.status = CheckStatus::Fails;
    out.counterexample = extract_counterexample(s.result, m, q);
  }
  return out;
}

// Assume equality on S at cycle 0, prove equality on S at cycle 1.
inline CheckOutcome check_upec_ssc(const Netlist& n, const StateSet& s, const ProofConfig& cfg,
                                   const CheckOptions& opts = {}) {
  detail::require_subset(n, s, s_sys(n, cfg), "S");
  return run_query(make_two_cycle_query(n, cfg, s), cfg, opts);
}

// Assume equality on S[0] at cycle 0, prove equality on S[j] at cycle j.
inline CheckOutcome check_upec_ssc_unrolled(const Netlist& n, unsigned k, const std::vector<StateSet>& s,
                                            const ProofConfig& cfg, const CheckOptions& opts = {}) {
  if (k < 1) throw ConfigError("unrolling depth must be at least 1");
  if (s.size() != k + 1) throw ConfigError("state schedule must define S[0..k]");
  detail::require_subset(n, s[0], s_sys(n, cfg), "S[0]");
  for (unsigned j = 0; j < k; ++j)
    if (!s[j + 1].subset_of(s[j]))
      throw ConfigError("state schedule is not monotone: S[" + std::to_string(j + 1) + "] is not a subset of S[" +
                        std::to_string(j) + "]");
  return run_query(make_query(n, cfg, k, s[0], s), cfg, opts);
}

// Consecution on a single copy: the invariant and the configured invariants
// hold at cycle 0, the invariant fails at cycle 1.
inline CheckOutcome check_invariant(const Netlist& n, const SignalConstraint& inv, const ProofConfig& cfg,
                                    const CheckOptions& opts = {}) {
  if (inv.cmp == Cmp::EqualInstances) throw ConfigError("invariants refer to a single instance");
  ProofConfig only_inv = cfg;
  only_inv.victim_constraints.clear();
  only_inv.invariants = {inv};
  validate_config(n, only_inv);

  ClauseSet cs;
  GateBuilder g(cs);
  Encoder enc(n, g);
  auto frames = unroll(enc, 1, 1, [](NodeId) { return false; }, [](NodeId, unsigned) { return false; });
  const auto& f = frames[0];
  cs.add_unit(encode_constraint(g, n, inv, f[0], nullptr));
  for (const auto& other : cfg.invariants) cs.add_unit(encode_constraint(g, n, other, f[0], nullptr));
  cs.add_unit(~encode_constraint(g, n, inv, f[1], nullptr));

  auto s = detail::solve_checked(cs, cfg, opts);
  CheckOutcome out;
  out.stats = s.stats;
  if (s.result.status != SatStatus::Sat) return out;

  out.status = CheckStatus::Fails;
  Counterexample cex;
  cex.k = 1;
  cex.two_instances = false;
  cex.failing_cycle = 1;
  for (unsigned c = 0; c <= 1; ++c) cex.trace[0].push_back(decode_frame(n, f[c], s.result));
  if (auto bad = replay_mismatch(n, cex.trace[0]))
    throw SoundnessError("invariant counterexample replay mismatch: " + *bad);
  if (!constraint_holds(n, inv, cex.trace[0][0], nullptr) || constraint_holds(n, inv, cex.trace[0][1], nullptr))
    throw SoundnessError("invariant counterexample does not violate consecution");
  out.counterexample = std::move(cex);
  return out;
}

}  // namespace upec
