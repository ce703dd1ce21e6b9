#pragma once

// Exhaustive oracle for the two-cycle query, independent of the CNF
// encoder and the solver.
//
// For a member m and a set S, m can diverge at cycle 1 iff there are shared
// leaf values x and per-instance leaf values y1, y2 such that both instances
// satisfy their constraints, S-outputs agree at cycle 0, and m differs at
// cycle 1. Leaves outside the cones of m and of the constraints cannot
// matter and are not enumerated. For fixed x the instances only interact
// through the S-output values at cycle 0 (the key), so each instance is
// enumerated separately and the value sets are compared per key.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "upec/config.hpp"
#include "upec/netlist.hpp"
#include "upec/state_set.hpp"

namespace upec::testkit {

inline constexpr unsigned kOracleMaxBits = 26;

// Flattened simulator: every node owns one slot, or one slot per element
// for arrays.
class SlotSim {
public:
  explicit SlotSim(const Netlist& n) : n_(n) {
    for (const auto& nd : n.nodes()) {
      const Sort& s = n.sort(nd.sort);
      first_.push_back(slots_);
      unsigned c = s.is_array() ? unsigned(1u << s.index_width) : 1;
      if (s.is_array() && s.index_width > 8) throw std::runtime_error("oracle: array too large");
      count_.push_back(c);
      slots_ += c;
    }
  }

  unsigned slots() const { return slots_; }
  unsigned first(std::size_t idx) const { return first_[idx]; }
  unsigned count(std::size_t idx) const { return count_[idx]; }

  // Nodes (by index) in the transitive fan-in of the roots.
  std::vector<char> cone(const std::vector<std::size_t>& roots) const {
    std::vector<char> in(n_.nodes().size(), 0);
    std::vector<std::size_t> stack(roots);
    while (!stack.empty()) {
      auto i = stack.back();
      stack.pop_back();
      if (in[i]) continue;
      in[i] = 1;
      for (auto a : n_.nodes()[i].arg_index) stack.push_back(a);
    }
    return in;
  }

  // Evaluates the marked non-leaf nodes in order; leaf slots must be set.
  void eval(std::vector<std::uint64_t>& v, const std::vector<char>& mask) const {
    for (std::size_t i = 0; i < n_.nodes().size(); ++i) {
      if (!mask[i]) continue;
      const Node& nd = n_.nodes()[i];
      const Sort& s = n_.sort(nd.sort);
      std::uint64_t m = s.is_array() ? 0 : mask_of(s.width);
      unsigned o = first_[i];
      auto a = [&](unsigned k) { return v[first_[nd.arg_index[k]]]; };
      switch (nd.op) {
        case Op::Input:
        case Op::State: break;
        case Op::Const:
          for (unsigned e = 0; e < count_[i]; ++e) v[o + e] = nd.value;
          break;
        case Op::Not: v[o] = ~a(0) & m; break;
        case Op::And: v[o] = a(0) & a(1); break;
        case Op::Or: v[o] = a(0) | a(1); break;
        case Op::Xor: v[o] = a(0) ^ a(1); break;
        case Op::Add: v[o] = (a(0) + a(1)) & m; break;
        case Op::Sub: v[o] = (a(0) - a(1)) & m; break;
        case Op::Mul: v[o] = (a(0) * a(1)) & m; break;
        case Op::Eq: v[o] = a(0) == a(1); break;
        case Op::Ult: v[o] = a(0) < a(1); break;
        case Op::Ite: {
          auto src = first_[nd.arg_index[a(0) ? 1 : 2]];
          for (unsigned e = 0; e < count_[i]; ++e) v[o + e] = v[src + e];
          break;
        }
        case Op::Concat: {
          unsigned lw = n_.sort(n_.nodes()[nd.arg_index[1]].sort).width;
          v[o] = (a(0) << lw) | a(1);
          break;
        }
        case Op::Slice: v[o] = (a(0) >> nd.lo) & m; break;
        case Op::Read: v[o] = v[first_[nd.arg_index[0]] + a(1)]; break;
        case Op::Write: {
          auto src = first_[nd.arg_index[0]];
          for (unsigned e = 0; e < count_[i]; ++e) v[o + e] = v[src + e];
          v[o + a(1)] = a(2);
          break;
        }
      }
    }
  }

  static std::uint64_t mask_of(unsigned w) { return w >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << w) - 1; }

private:
  const Netlist& n_;
  std::vector<unsigned> first_, count_;
  unsigned slots_ = 0;
};

inline bool oracle_compare(Cmp c, std::uint64_t a, std::uint64_t b) {
  switch (c) {
    case Cmp::Eq: return a == b;
    case Cmp::Ne: return a != b;
    case Cmp::Ult: return a < b;
    case Cmp::Ule: return a <= b;
    case Cmp::Ugt: return a > b;
    case Cmp::Uge: return a >= b;
    case Cmp::EqualInstances: break;
  }
  throw std::runtime_error("oracle: unsupported comparison");
}

class TwoCycleOracle {
public:
  TwoCycleOracle(const Netlist& n, const ProofConfig& cfg) : n_(n), cfg_(cfg), sim_(n) {
    for (const auto& c : cfg.victim_constraints) {
      if (c.cmp == Cmp::EqualInstances) throw std::runtime_error("oracle: equal_instances is not supported");
      auto r = c.cycles.value_or(std::make_pair(0u, 1u));
      if (r.first > 1) continue;
      for (unsigned cyc = r.first; cyc <= std::min(r.second, 1u); ++cyc) timed_.push_back({&c, cyc});
    }
    for (const auto& c : cfg.invariants) timed_.push_back({&c, 0});
  }

  // Members of S that can differ at cycle 1 under equality on S at cycle 0.
  StateSet divergent(const StateSet& s) const {
    StateSet out;
    for (auto m : s)
      if (can_diverge(s, m)) out.insert(m);
    return out;
  }

  // Largest number of leaf bits enumerated so far (for reporting).
  unsigned max_bits() const { return max_bits_; }

private:
  struct Timed {
    const SignalConstraint* c;
    unsigned cycle;
  };
  struct Leaf {
    unsigned frame;
    std::size_t idx;
    unsigned bits;  // per slot
    unsigned slots;
    bool shared;
  };

  std::size_t idx(NodeId id) const { return n_.index_of(id); }

  std::size_t state_next_idx(const StateDecl& d) const { return idx(d.next ? *d.next : d.node); }

  bool input_shared(NodeId id, unsigned cycle) const {
    if (!matches_any(cfg_.input_equality_patterns, n_.name_of(id))) return false;
    auto w = cfg_.input_equality_window.value_or(std::make_pair(0u, 1u));
    return cycle >= w.first && cycle <= w.second;
  }

  bool can_diverge(const StateSet& s, NodeId m) const {
    // Frame-1 roots: the member (for outputs) and cycle-1 constraint signals.
    std::vector<std::size_t> roots1;
    std::vector<NodeId> states1;
    if (n_.is_output(m))
      roots1.push_back(idx(n_.output_decl(m).expr));
    else
      states1.push_back(m);
    for (const auto& t : timed_) {
      if (t.cycle != 1) continue;
      roots1.push_back(idx(n_.signal(t.c->signal).node));
      if (t.c->when) roots1.push_back(idx(n_.signal(t.c->when->signal).node));
    }
    auto cone1 = sim_.cone(roots1);
    for (const auto& d : n_.states())
      if (cone1[idx(d.node)]) states1.push_back(d.node);

    std::vector<std::size_t> roots0;
    for (auto st : states1) roots0.push_back(state_next_idx(n_.state_decl(st)));
    for (const auto& t : timed_) {
      if (t.cycle != 0) continue;
      roots0.push_back(idx(n_.signal(t.c->signal).node));
      if (t.c->when) roots0.push_back(idx(n_.signal(t.c->when->signal).node));
    }
    std::vector<std::size_t> keys;  // S-outputs compared at cycle 0
    for (auto id : s)
      if (n_.is_output(id)) keys.push_back(idx(n_.output_decl(id).expr));
    for (auto k : keys) roots0.push_back(k);
    auto cone0 = sim_.cone(roots0);

    std::vector<Leaf> leaves;
    for (std::size_t i = 0; i < n_.nodes().size(); ++i) {
      const Node& nd = n_.nodes()[i];
      const Sort& so = n_.sort(nd.sort);
      unsigned bits = so.is_array() ? so.element_width : so.width;
      unsigned slots = sim_.count(i);
      if (cone0[i] && nd.op == Op::State) leaves.push_back({0, i, bits, slots, s.contains(nd.id)});
      if (cone0[i] && nd.op == Op::Input) leaves.push_back({0, i, bits, slots, input_shared(nd.id, 0)});
      if (cone1[i] && nd.op == Op::Input) leaves.push_back({1, i, bits, slots, input_shared(nd.id, 1)});
    }
    unsigned xbits = 0, ybits = 0;
    for (const auto& l : leaves) (l.shared ? xbits : ybits) += l.bits * l.slots;
    max_bits_ = std::max(max_bits_, xbits + ybits);
    if (xbits + ybits > kOracleMaxBits)
      throw std::runtime_error("oracle: " + std::to_string(xbits + ybits) + " leaf bits for " + n_.name_of(m));

    std::vector<std::uint64_t> f0(sim_.slots()), f1(sim_.slots());
    auto assign = [&](bool shared, std::uint64_t pattern) {
      for (const auto& l : leaves) {
        if (l.shared != shared) continue;
        auto& f = l.frame ? f1 : f0;
        for (unsigned e = 0; e < l.slots; ++e) {
          f[sim_.first(l.idx) + e] = pattern & SlotSim::mask_of(l.bits);
          pattern >>= l.bits;
        }
      }
    };
    auto value_at = [&](std::size_t i, unsigned cycle) { return (cycle ? f1 : f0)[sim_.first(i)]; };
    auto holds = [&](unsigned inst, const Timed& t) {
      const auto& c = *t.c;
      if (c.target == Target::Inst1 && inst != 1) return true;
      if (c.target == Target::Inst2 && inst != 2) return true;
      if (c.when && !oracle_compare(c.when->cmp, value_at(idx(n_.signal(c.when->signal).node), t.cycle), c.when->value))
        return true;
      return oracle_compare(c.cmp, value_at(idx(n_.signal(c.signal).node), t.cycle), c.value);
    };
    std::size_t mi = n_.is_output(m) ? idx(n_.output_decl(m).expr) : idx(m);

    using Vals = std::vector<std::uint64_t>;
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << xbits); ++x) {
      assign(true, x);
      std::map<Vals, std::set<Vals>> seen[2];
      for (unsigned inst = 1; inst <= 2; ++inst) {
        for (std::uint64_t y = 0; y < (std::uint64_t{1} << ybits); ++y) {
          assign(false, y);
          sim_.eval(f0, cone0);
          for (auto st : states1) {
            auto src = sim_.first(state_next_idx(n_.state_decl(st)));
            auto dst = sim_.first(idx(st));
            for (unsigned e = 0; e < sim_.count(idx(st)); ++e) f1[dst + e] = f0[src + e];
          }
          sim_.eval(f1, cone1);
          bool ok = true;
          for (const auto& t : timed_) ok = ok && holds(inst, t);
          if (!ok) continue;
          Vals key;
          for (auto k : keys) key.push_back(f0[sim_.first(k)]);
          Vals val(f1.begin() + sim_.first(mi), f1.begin() + sim_.first(mi) + sim_.count(mi));
          auto& bucket = seen[inst - 1][key];
          if (bucket.size() < 2) bucket.insert(val);
        }
      }
      for (const auto& [key, v1] : seen[0]) {
        auto it = seen[1].find(key);
        if (it == seen[1].end()) continue;
        std::set<Vals> all = v1;
        all.insert(it->second.begin(), it->second.end());
        if (all.size() >= 2) return true;
      }
    }
    return false;
  }

  const Netlist& n_;
  const ProofConfig& cfg_;
  SlotSim sim_;
  std::vector<Timed> timed_;
  mutable unsigned max_bits_ = 0;
};

struct OracleVerdict {
  std::string status;  // secure | vulnerable | needs_classification
  StateSet greatest;   // largest S for which the two-cycle property holds
  StateSet removed;
};

// Removes every member that can diverge until nothing can; the result is
// the greatest set for which the two-cycle property holds. The verdict
// follows from the classes of the removed members.
inline OracleVerdict oracle_verdict(const Netlist& n, const ProofConfig& cfg, const StateSet& s_sys) {
  TwoCycleOracle o(n, cfg);
  OracleVerdict v;
  StateSet s = s_sys;
  while (true) {
    auto d = o.divergent(s);
    if (d.empty()) break;
    v.removed = v.removed | d;
    s = s - d;
  }
  v.greatest = s;
  bool persistent = false, unknown = false;
  for (auto id : v.removed) {
    auto name = n.name_of(id);
    if (matches_any(cfg.persistent_patterns, name))
      persistent = true;
    else if (!matches_any(cfg.transient_patterns, name))
      unknown = true;
  }
  v.status = unknown ? "needs_classification" : persistent ? "vulnerable" : "secure";
  return v;
}

}  // namespace upec::testkit
