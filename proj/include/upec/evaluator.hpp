#pragma once

// Concrete cycle-accurate evaluation of a netlist. Serves trace replay,
// attack demonstrations, and as the reference semantics the bit-level
// encoder is tested against.

#include <cstdint>
#include <map>
#include <variant>
#include <vector>

#include "upec/netlist.hpp"

namespace upec {

// Array contents: explicit entries over a default element. Entries equal to
// the default are never stored, so equal defaults give a canonical form.
struct ArrayValue {
  std::uint64_t default_element = 0;
  std::map<std::uint64_t, std::uint64_t> entries;

  std::uint64_t get(std::uint64_t i) const {
    auto it = entries.find(i);
    return it == entries.end() ? default_element : it->second;
  }
  void set(std::uint64_t i, std::uint64_t v) {
    if (v == default_element)
      entries.erase(i);
    else
      entries[i] = v;
  }

  friend bool operator==(const ArrayValue&, const ArrayValue&) = default;
};

using Value = std::variant<std::uint64_t, ArrayValue>;
using Valuation = std::map<NodeId, Value>;

inline std::uint64_t as_bits(const Value& v) { return std::get<std::uint64_t>(v); }
inline const ArrayValue& as_array(const Value& v) { return std::get<ArrayValue>(v); }

inline bool arrays_equal(const ArrayValue& a, const ArrayValue& b, unsigned index_width) {
  if (a.default_element == b.default_element) return a.entries == b.entries;
  for (std::uint64_t i = 0; i < (std::uint64_t{1} << index_width); ++i)
    if (a.get(i) != b.get(i)) return false;
  return true;
}

inline bool values_equal(const Value& a, const Value& b, const Sort& s) {
  if (s.is_array()) return arrays_equal(as_array(a), as_array(b), s.index_width);
  return as_bits(a) == as_bits(b);
}

// Indices at which two arrays disagree.
inline std::vector<std::uint64_t> array_diff_indices(const ArrayValue& a, const ArrayValue& b,
                                                     unsigned index_width) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; i < (std::uint64_t{1} << index_width); ++i)
    if (a.get(i) != b.get(i)) out.push_back(i);
  return out;
}

inline bool value_fits(const Value& v, const Sort& s) {
  if (s.is_array()) {
    if (!std::holds_alternative<ArrayValue>(v)) return false;
    const auto& a = as_array(v);
    std::uint64_t m = width_mask(s.element_width);
    if (a.default_element & ~m) return false;
    for (auto& [i, e] : a.entries)
      if ((i >> s.index_width) != 0 || (e & ~m)) return false;
    return true;
  }
  return std::holds_alternative<std::uint64_t>(v) && (as_bits(v) & ~width_mask(s.width)) == 0;
}

// Values of every node, indexed like Netlist::nodes().
inline std::vector<Value> evaluate_nodes(const Netlist& n, const Valuation& states,
                                         const Valuation& inputs) {
  std::vector<Value> val(n.nodes().size());
  auto arg = [&](const Node& nd, std::size_t k) -> const Value& { return val[nd.arg_index[k]]; };

  for (std::size_t i = 0; i < n.nodes().size(); ++i) {
    const Node& nd = n.nodes()[i];
    const Sort& s = n.sort(nd.sort);
    const std::uint64_t m = s.is_array() ? 0 : width_mask(s.width);
    switch (nd.op) {
      case Op::Const:
        if (s.is_array())
          val[i] = ArrayValue{nd.value, {}};
        else
          val[i] = nd.value;
        break;
      case Op::Input:
      case Op::State: {
        const Valuation& src = nd.op == Op::Input ? inputs : states;
        auto it = src.find(nd.id);
        if (it == src.end())
          throw Error("missing valuation for " + std::string(op_name(nd.op)) + " '" + nd.name + "'");
        if (!value_fits(it->second, s))
          throw Error("value for '" + nd.name + "' does not fit its sort");
        val[i] = it->second;
        break;
      }
      case Op::Not: val[i] = ~as_bits(arg(nd, 0)) & m; break;
      case Op::And: val[i] = as_bits(arg(nd, 0)) & as_bits(arg(nd, 1)); break;
      case Op::Or: val[i] = as_bits(arg(nd, 0)) | as_bits(arg(nd, 1)); break;
      case Op::Xor: val[i] = as_bits(arg(nd, 0)) ^ as_bits(arg(nd, 1)); break;
      case Op::Add: val[i] = (as_bits(arg(nd, 0)) + as_bits(arg(nd, 1))) & m; break;
      case Op::Sub: val[i] = (as_bits(arg(nd, 0)) - as_bits(arg(nd, 1))) & m; break;
      case Op::Mul: val[i] = (as_bits(arg(nd, 0)) * as_bits(arg(nd, 1))) & m; break;
      case Op::Eq: val[i] = std::uint64_t{as_bits(arg(nd, 0)) == as_bits(arg(nd, 1))}; break;
      case Op::Ult: val[i] = std::uint64_t{as_bits(arg(nd, 0)) < as_bits(arg(nd, 1))}; break;
      case Op::Ite: val[i] = as_bits(arg(nd, 0)) ? arg(nd, 1) : arg(nd, 2); break;
      case Op::Concat: {
        unsigned lw = n.sort_of(nd.args[1]).width;
        std::uint64_t hi = as_bits(arg(nd, 0));
        val[i] = (lw >= 64 ? 0 : (hi << lw)) | as_bits(arg(nd, 1));
        break;
      }
      case Op::Slice: val[i] = (as_bits(arg(nd, 0)) >> nd.lo) & m; break;
      case Op::Read: val[i] = as_array(arg(nd, 0)).get(as_bits(arg(nd, 1))); break;
      case Op::Write: {
        ArrayValue a = as_array(arg(nd, 0));
        a.set(as_bits(arg(nd, 1)), as_bits(arg(nd, 2)));
        val[i] = std::move(a);
        break;
      }
    }
  }
  return val;
}

struct StepResult {
  Valuation next;     // state id -> value after the clock edge
  Valuation outputs;  // output id -> value in the current cycle
};

inline StepResult evaluate_step(const Netlist& n, const Valuation& states, const Valuation& inputs) {
  auto val = evaluate_nodes(n, states, inputs);
  StepResult r;
  for (const auto& s : n.states()) {
    if (s.next)
      r.next[s.node] = val[n.index_of(*s.next)];
    else
      r.next[s.node] = val[n.index_of(s.node)];
  }
  for (const auto& o : n.outputs()) r.outputs[o.id] = val[n.index_of(o.expr)];
  return r;
}

// Reset state: init constants where declared, zero elsewhere.
inline Valuation reset_state(const Netlist& n) {
  Valuation v;
  for (const auto& s : n.states()) {
    const Sort& so = n.sort_of(s.node);
    std::uint64_t c = s.init ? n.node(*s.init).value : 0;
    if (so.is_array())
      v[s.node] = ArrayValue{c, {}};
    else
      v[s.node] = c;
  }
  return v;
}

inline Valuation zero_inputs(const Netlist& n) {
  Valuation v;
  for (auto id : n.inputs()) v[id] = std::uint64_t{0};
  return v;
}

}  // namespace upec
