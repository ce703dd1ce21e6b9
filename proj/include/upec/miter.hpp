#pragma once

// Two-instance unrolling with a shared symbolic start state.
//
// Both copies start from fully unconstrained cycle-0 states. Members of the
// equality set share their cycle-0 variables between the copies, inputs in
// the equality window share variables per cycle, and everything else is
// free in each copy. The target clause asks for some scheduled member to
// differ at its scheduled cycle.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "upec/bitblast.hpp"
#include "upec/config.hpp"
#include "upec/evaluator.hpp"
#include "upec/sat_solver.hpp"
#include "upec/state_set.hpp"

namespace upec {

struct UpecQuery {
  const Netlist* netlist = nullptr;
  unsigned k = 1;
  StateSet equality_at_t;
  std::vector<StateSet> prove_schedule;  // entries 1..k are used
  std::pair<unsigned, unsigned> input_window{0, 1};
  std::vector<NodeId> equal_inputs;
  std::vector<SignalConstraint> victim_constraints;  // cycles resolved and clipped to 0..k
  std::vector<SignalConstraint> invariants;          // assumed at cycle 0 in both copies
};

namespace detail {

inline std::optional<std::pair<unsigned, unsigned>> clip(std::pair<unsigned, unsigned> r, unsigned k) {
  if (r.first > k) return std::nullopt;
  return std::make_pair(r.first, std::min(r.second, k));
}

}  // namespace detail

inline void validate_query(const UpecQuery& q) {
  if (!q.netlist) throw Error("query has no netlist");
  const Netlist& n = *q.netlist;
  if (q.k < 1) throw Error("query horizon must be at least 1");
  if (q.prove_schedule.size() != q.k + 1) throw Error("prove schedule must cover cycles 1..k");
  auto check = [&](const StateSet& s) {
    for (auto id : s)
      if (!n.is_state(id) && !n.is_output(id))
        throw Error("set member " + std::to_string(id) + " is neither a state nor an output");
  };
  check(q.equality_at_t);
  for (const auto& s : q.prove_schedule) check(s);
  for (auto id : q.equal_inputs)
    if (std::find(n.inputs().begin(), n.inputs().end(), id) == n.inputs().end())
      throw Error("input equality refers to non-input " + std::to_string(id));
}

// Assembles a query from a configuration. Victim constraints default to the
// first two cycles (or the whole window when the config asks for it).
inline UpecQuery make_query(const Netlist& n, const ProofConfig& cfg, unsigned k, StateSet equality_at_t,
                            std::vector<StateSet> schedule) {
  UpecQuery q;
  q.netlist = &n;
  q.k = k;
  q.equality_at_t = std::move(equality_at_t);
  q.prove_schedule = std::move(schedule);
  auto win = detail::clip(cfg.input_equality_window.value_or(std::make_pair(0u, k)), k);
  q.input_window = win.value_or(std::make_pair(1u, 0u));  // empty when clipped away
  for (auto id : n.inputs())
    if (matches_any(cfg.input_equality_patterns, n.name_of(id))) q.equal_inputs.push_back(id);
  std::pair<unsigned, unsigned> dflt{0, cfg.victim_window == VictimWindow::Full ? k : std::min(1u, k)};
  for (auto c : cfg.victim_constraints) {
    auto r = detail::clip(c.cycles.value_or(dflt), k);
    if (!r) continue;
    c.cycles = r;
    q.victim_constraints.push_back(std::move(c));
  }
  q.invariants = cfg.invariants;
  return q;
}

inline UpecQuery make_two_cycle_query(const Netlist& n, const ProofConfig& cfg, const StateSet& s) {
  return make_query(n, cfg, 1, s, {StateSet{}, s});
}

using Frame = std::vector<Word>;  // indexed like Netlist::nodes()

// Word of a state/input/output in one frame.
inline const Word& member_word(const Netlist& n, const Frame& f, NodeId id) {
  if (n.is_output(id)) return f[n.index_of(n.output_decl(id).expr)];
  return f[n.index_of(id)];
}

inline const Word& signal_word(const Netlist& n, const Frame& f, const std::string& name) {
  return f[n.index_of(n.signal(name).node)];
}

inline Lit encode_compare(GateBuilder& g, const Bits& a, Cmp cmp, std::uint64_t v) {
  Bits c = g.constant_bits(v, unsigned(a.size()));
  switch (cmp) {
    case Cmp::Eq: return g.eq(a, c);
    case Cmp::Ne: return ~g.eq(a, c);
    case Cmp::Ult: return g.ult(a, c);
    case Cmp::Ule: return ~g.ult(c, a);
    case Cmp::Ugt: return g.ult(c, a);
    case Cmp::Uge: return ~g.ult(a, c);
    case Cmp::EqualInstances: break;
  }
  throw Error("equal_instances needs two instances");
}

// Literal for one constraint in one frame; `other` is the frame of the
// second copy at the same cycle and is required for equal_instances.
inline Lit encode_constraint(GateBuilder& g, const Netlist& n, const SignalConstraint& c, const Frame& f,
                             const Frame* other) {
  Lit body;
  if (c.cmp == Cmp::EqualInstances) {
    if (!other) throw Error("equal_instances constraint in a single-instance check");
    body = ~g.differs(signal_word(n, f, c.signal), signal_word(n, *other, c.signal));
  } else {
    body = encode_compare(g, signal_word(n, f, c.signal).bits, c.cmp, c.value);
  }
  if (!c.when) return body;
  Lit guard = encode_compare(g, signal_word(n, f, c.when->signal).bits, c.when->cmp, c.when->value);
  return g.or2(~guard, body);
}

struct MiterEncoding {
  ClauseSet cs;
  std::array<std::vector<Frame>, 2> frames;  // [copy][cycle]
  std::vector<std::vector<std::pair<NodeId, Lit>>> diff_lits;  // [cycle] -> scheduled member, differs
  std::vector<Lit> target_clause;  // some scheduled member differs
};

// Unrolls one or two copies over cycles 0..k. `share_state(id)` decides
// whether copy 2 reuses copy 1's cycle-0 variables for a state;
// `share_input(id, c)` likewise for inputs.
template <class ShareState, class ShareInput>
std::vector<std::vector<Frame>> unroll(Encoder& enc, unsigned copies, unsigned k, ShareState share_state,
                                       ShareInput share_input) {
  const Netlist& n = enc.netlist();
  std::vector<std::vector<Frame>> frames(copies);
  for (unsigned c = 0; c <= k; ++c) {
    for (unsigned inst = 0; inst < copies; ++inst) {
      FrameContext ctx{std::uint8_t(copies == 1 ? 0 : inst + 1), c};
      auto leaf = [&](NodeId id) -> Word {
        const Node& nd = n.node(id);
        if (nd.op == Op::State) {
          if (c == 0) {
            if (inst == 1 && share_state(id)) return frames[0][0][n.index_of(id)];
            return enc.fresh_leaf(id, ctx);
          }
          const auto& d = n.state_decl(id);
          const Frame& prev = frames[inst][c - 1];
          return d.next ? prev[n.index_of(*d.next)] : prev[n.index_of(id)];
        }
        if (inst == 1 && share_input(id, c)) return frames[0][c][n.index_of(id)];
        return enc.fresh_leaf(id, ctx);
      };
      frames[inst].push_back(enc.encode_frame(ctx, leaf));
    }
  }
  return frames;
}

inline MiterEncoding build_query(const UpecQuery& q) {
  validate_query(q);
  const Netlist& n = *q.netlist;
  MiterEncoding m;
  GateBuilder g(m.cs);
  Encoder enc(n, g);

  std::vector<bool> eq_input(n.nodes().size(), false);
  for (auto id : q.equal_inputs) eq_input[n.index_of(id)] = true;
  auto share_state = [&](NodeId id) { return q.equality_at_t.contains(id); };
  auto share_input = [&](NodeId id, unsigned c) {
    return eq_input[n.index_of(id)] && c >= q.input_window.first && c <= q.input_window.second;
  };
  auto frames = unroll(enc, 2, q.k, share_state, share_input);
  m.frames = {std::move(frames[0]), std::move(frames[1])};

  // Outputs in the equality set are compared explicitly; states are shared.
  for (auto id : q.equality_at_t)
    if (n.is_output(id))
      m.cs.add_unit(~g.differs(member_word(n, m.frames[0][0], id), member_word(n, m.frames[1][0], id)));

  for (const auto& c : q.victim_constraints) {
    for (unsigned cyc = c.cycles->first; cyc <= c.cycles->second; ++cyc) {
      const Frame& f1 = m.frames[0][cyc];
      const Frame& f2 = m.frames[1][cyc];
      if (c.cmp == Cmp::EqualInstances) {
        m.cs.add_unit(encode_constraint(g, n, c, f1, &f2));
        continue;
      }
      if (c.target != Target::Inst2) m.cs.add_unit(encode_constraint(g, n, c, f1, nullptr));
      if (c.target != Target::Inst1) m.cs.add_unit(encode_constraint(g, n, c, f2, nullptr));
    }
  }
  for (const auto& inv : q.invariants)
    for (unsigned inst = 0; inst < 2; ++inst) m.cs.add_unit(encode_constraint(g, n, inv, m.frames[inst][0], nullptr));

  m.diff_lits.resize(q.k + 1);
  std::vector<Lit> target_clause;
  for (unsigned j = 1; j <= q.k; ++j) {
    for (auto id : q.prove_schedule[j]) {
      Lit d = g.differs(member_word(n, m.frames[0][j], id), member_word(n, m.frames[1][j], id));
      m.diff_lits[j].emplace_back(id, d);
      target_clause.push_back(d);
    }
  }
  if (target_clause.empty()) target_clause.push_back(g.f());
  m.cs.add(target_clause);
  m.target_clause = std::move(target_clause);
  return m;
}

struct TraceFrame {
  Valuation states;
  Valuation inputs;
  Valuation outputs;  // keyed by output declaration id
};

struct Counterexample {
  unsigned k = 1;
  bool two_instances = true;
  std::array<std::vector<TraceFrame>, 2> trace;  // [copy][cycle 0..k]
  StateSet diff_set;
  unsigned failing_cycle = 0;
  std::map<NodeId, std::vector<std::uint64_t>> array_diffs;  // differing element indices
};

inline const Value& member_value(const Netlist& n, const TraceFrame& f, NodeId id) {
  return n.is_output(id) ? f.outputs.at(id) : f.states.at(id);
}

inline const Value& signal_value(const Netlist& n, const TraceFrame& f, const std::string& name) {
  auto sig = n.signal(name);
  switch (sig.kind) {
    case Signal::Kind::State: return f.states.at(sig.id);
    case Signal::Kind::Input: return f.inputs.at(sig.id);
    case Signal::Kind::Output: break;
  }
  return f.outputs.at(sig.id);
}

inline bool constraint_holds(const Netlist& n, const SignalConstraint& c, const TraceFrame& f,
                             const TraceFrame* other) {
  if (c.when && !compare(c.when->cmp, as_bits(signal_value(n, f, c.when->signal)), c.when->value)) return true;
  if (c.cmp == Cmp::EqualInstances)
    return other && as_bits(signal_value(n, f, c.signal)) == as_bits(signal_value(n, *other, c.signal));
  return compare(c.cmp, as_bits(signal_value(n, f, c.signal)), c.value);
}

inline Value decode_word(const Word& w, const Sort& s, const SatResult& r) {
  auto val = [&](Lit l) { return r.value(l); };
  if (!s.is_array()) return decode_bits(w.bits, val);
  ArrayValue a;
  for (std::size_t e = 0; e < w.elems.size(); ++e) a.set(e, decode_bits(w.elems[e], val));
  return a;
}

inline TraceFrame decode_frame(const Netlist& n, const Frame& f, const SatResult& r) {
  TraceFrame t;
  for (const auto& s : n.states()) t.states[s.node] = decode_word(f[n.index_of(s.node)], n.sort_of(s.node), r);
  for (auto id : n.inputs()) t.inputs[id] = decode_word(f[n.index_of(id)], n.sort_of(id), r);
  for (const auto& o : n.outputs()) t.outputs[o.id] = decode_word(f[n.index_of(o.expr)], n.sort_of(o.expr), r);
  return t;
}

// Re-simulates each copy with the evaluator and checks that the recorded
// trace is exactly what the circuit does. Returns a description of the
// first mismatch, or nothing.
inline std::optional<std::string> replay_mismatch(const Netlist& n, const std::vector<TraceFrame>& tr) {
  for (std::size_t c = 0; c < tr.size(); ++c) {
    auto step = evaluate_step(n, tr[c].states, tr[c].inputs);
    for (const auto& o : n.outputs())
      if (!values_equal(step.outputs.at(o.id), tr[c].outputs.at(o.id), n.sort_of(o.expr)))
        return "output '" + o.name + "' at cycle " + std::to_string(c);
    if (c + 1 < tr.size())
      for (const auto& s : n.states())
        if (!values_equal(step.next.at(s.node), tr[c + 1].states.at(s.node), n.sort_of(s.node)))
          return "state '" + n.name_of(s.node) + "' at cycle " + std::to_string(c + 1);
  }
  return std::nullopt;
}

// Decodes a satisfying assignment and checks it against the query's
// assumptions and the evaluator. Any disagreement is an encoder bug.
inline Counterexample extract_counterexample(const SatResult& r, const MiterEncoding& m, const UpecQuery& q) {
  if (r.status != SatStatus::Sat) throw Error("extract_counterexample needs a satisfiable result");
  const Netlist& n = *q.netlist;
  Counterexample cex;
  cex.k = q.k;
  for (unsigned inst = 0; inst < 2; ++inst)
    for (unsigned c = 0; c <= q.k; ++c) cex.trace[inst].push_back(decode_frame(n, m.frames[inst][c], r));

  for (unsigned inst = 0; inst < 2; ++inst)
    if (auto bad = replay_mismatch(n, cex.trace[inst]))
      throw SoundnessError("counterexample replay mismatch in instance " + std::to_string(inst + 1) + ": " + *bad);

  const auto& t1 = cex.trace[0];
  const auto& t2 = cex.trace[1];
  auto member_equal = [&](NodeId id, unsigned c) {
    return values_equal(member_value(n, t1[c], id), member_value(n, t2[c], id), n.member_sort(id));
  };
  for (auto id : q.equality_at_t)
    if (!member_equal(id, 0)) throw SoundnessError("equality assumption violated for '" + n.name_of(id) + "'");
  for (auto id : q.equal_inputs)
    for (unsigned c = q.input_window.first; c <= q.input_window.second && c <= q.k; ++c)
      if (as_bits(t1[c].inputs.at(id)) != as_bits(t2[c].inputs.at(id)))
        throw SoundnessError("input equality violated for '" + n.name_of(id) + "'");
  for (const auto& vc : q.victim_constraints)
    for (unsigned c = vc.cycles->first; c <= vc.cycles->second; ++c) {
      bool ok = vc.cmp == Cmp::EqualInstances
                    ? constraint_holds(n, vc, t1[c], &t2[c])
                    : (vc.target == Target::Inst2 || constraint_holds(n, vc, t1[c], nullptr)) &&
                          (vc.target == Target::Inst1 || constraint_holds(n, vc, t2[c], nullptr));
      if (!ok) throw SoundnessError("victim constraint violated: " + vc.describe());
    }
  for (const auto& inv : q.invariants)
    if (!constraint_holds(n, inv, t1[0], nullptr) || !constraint_holds(n, inv, t2[0], nullptr))
      throw SoundnessError("invariant violated at cycle 0: " + inv.describe());

  for (unsigned j = 1; j <= q.k && cex.diff_set.empty(); ++j) {
    for (auto id : q.prove_schedule[j]) {
      if (member_equal(id, j)) continue;
      cex.diff_set.insert(id);
      cex.failing_cycle = j;
      const Sort& s = n.member_sort(id);
      if (s.is_array())
        cex.array_diffs[id] = array_diff_indices(as_array(member_value(n, t1[j], id)),
                                                 as_array(member_value(n, t2[j], id)), s.index_width);
    }
  }
  if (cex.diff_set.empty()) throw SoundnessError("satisfying assignment shows no divergence");
  return cex;
}

}  // namespace upec
