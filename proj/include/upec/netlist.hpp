#pragma once

// Word-level sequential netlist: sorts, combinational operator nodes, state
// registers with next-state functions, primary inputs and named outputs.
//
// Ids share one space across sorts, nodes and the next/init/hold/output
// declarations. Every reference points to a strictly smaller id, so node
// order by id is a topological order of the combinational logic.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "upec/error.hpp"

namespace upec {

using NodeId = std::uint32_t;

inline constexpr unsigned kMaxBitVecWidth = 64;
inline constexpr unsigned kMaxArrayIndexWidth = 16;

struct Sort {
  enum class Kind { BitVec, Array };

  Kind kind = Kind::BitVec;
  unsigned width = 1;          // bit-vector width
  unsigned index_width = 0;    // arrays only
  unsigned element_width = 0;  // arrays only
  // Declaring sort ids of an array's index and element; not part of equality.
  std::uint32_t index_sort = 0, element_sort = 0;

  static Sort bitvec(unsigned w) { return Sort{Kind::BitVec, w, 0, 0}; }
  static Sort array(unsigned iw, unsigned ew) { return Sort{Kind::Array, 0, iw, ew}; }

  bool is_array() const noexcept { return kind == Kind::Array; }
  std::uint64_t entries() const noexcept { return is_array() ? (std::uint64_t{1} << index_width) : 1; }
  // Total number of bits needed to hold a value of this sort.
  std::uint64_t bit_count() const noexcept {
    return is_array() ? entries() * element_width : width;
  }

  friend bool operator==(const Sort& a, const Sort& b) {
    return a.kind == b.kind && a.width == b.width && a.index_width == b.index_width &&
           a.element_width == b.element_width;
  }
};

enum class Op {
  Const,
  Input,
  State,
  Not,
  And,
  Or,
  Xor,
  Add,
  Sub,
  Mul,
  Eq,
  Ult,
  Ite,
  Concat,
  Slice,
  Read,
  Write,
};

inline std::string_view op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Input: return "input";
    case Op::State: return "state";
    case Op::Not: return "not";
    case Op::And: return "and";
    case Op::Or: return "or";
    case Op::Xor: return "xor";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Eq: return "eq";
    case Op::Ult: return "ult";
    case Op::Ite: return "ite";
    case Op::Concat: return "concat";
    case Op::Slice: return "slice";
    case Op::Read: return "read";
    case Op::Write: return "write";
  }
  return "?";
}

inline std::optional<Op> op_from_name(std::string_view s) {
  static const std::map<std::string_view, Op> table = {
      {"const", Op::Const}, {"input", Op::Input}, {"state", Op::State}, {"not", Op::Not},
      {"and", Op::And},     {"or", Op::Or},       {"xor", Op::Xor},     {"add", Op::Add},
      {"sub", Op::Sub},     {"mul", Op::Mul},     {"eq", Op::Eq},       {"ult", Op::Ult},
      {"ite", Op::Ite},     {"concat", Op::Concat}, {"slice", Op::Slice}, {"read", Op::Read},
      {"write", Op::Write},
  };
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

inline std::uint64_t width_mask(unsigned w) noexcept {
  return w >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << w) - 1);
}

struct Node {
  NodeId id = 0;
  Op op = Op::Const;
  NodeId sort = 0;
  std::vector<NodeId> args;
  unsigned hi = 0, lo = 0;   // slice bounds
  std::uint64_t value = 0;   // const payload; for array sorts the default element
  std::string name;          // inputs and states only
  std::vector<std::size_t> arg_index;  // dense indices of args, filled on insertion
};

struct StateDecl {
  NodeId node = 0;
  std::optional<NodeId> next;
  std::optional<NodeId> init;
  bool hold = false;
  // Ids of the declaring lines, kept so printing reproduces the input ids.
  NodeId next_line = 0, init_line = 0, hold_line = 0;
};

struct OutputDecl {
  NodeId id = 0;    // id of the output line; outputs are addressed by this id
  NodeId expr = 0;
  std::string name;
};

// Something that carries a name and a per-cycle value.
struct Signal {
  enum class Kind { State, Input, Output };
  Kind kind;
  NodeId id;    // state/input node id, or output declaration id
  NodeId node;  // node whose value is the signal's value
};

class Netlist {
public:
  const std::map<NodeId, Sort>& sorts() const noexcept { return sorts_; }
  const Sort& sort(NodeId sort_id) const {
    auto it = sorts_.find(sort_id);
    if (it == sorts_.end()) throw Error("unknown sort id " + std::to_string(sort_id));
    return it->second;
  }
  const Sort& sort_of(NodeId node_id) const { return sort(node(node_id).sort); }

  // Nodes in id (topological) order.
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  bool has_node(NodeId id) const { return index_.count(id) != 0; }
  std::size_t index_of(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error("unknown node id " + std::to_string(id));
    return it->second;
  }
  const Node& node(NodeId id) const { return nodes_[index_of(id)]; }

  const std::vector<StateDecl>& states() const noexcept { return states_; }
  const std::vector<NodeId>& inputs() const noexcept { return inputs_; }
  const std::vector<OutputDecl>& outputs() const noexcept { return outputs_; }

  bool is_state(NodeId id) const { return state_index_.count(id) != 0; }
  bool is_output(NodeId id) const { return output_index_.count(id) != 0; }
  const StateDecl& state_decl(NodeId id) const {
    auto it = state_index_.find(id);
    if (it == state_index_.end()) throw Error("not a state: " + std::to_string(id));
    return states_[it->second];
  }
  const OutputDecl& output_decl(NodeId id) const {
    auto it = output_index_.find(id);
    if (it == output_index_.end()) throw Error("not an output: " + std::to_string(id));
    return outputs_[it->second];
  }

  std::optional<Signal> find_signal(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }
  Signal signal(std::string_view name) const {
    auto s = find_signal(name);
    if (!s) throw Error("unknown signal '" + std::string(name) + "'");
    return *s;
  }

  // Name of a state, input or output id; "n<id>" for anonymous nodes.
  std::string name_of(NodeId id) const {
    if (auto it = output_index_.find(id); it != output_index_.end())
      return outputs_[it->second].name;
    if (has_node(id) && !node(id).name.empty()) return node(id).name;
    return "n" + std::to_string(id);
  }

  // Sort of a state or output member.
  const Sort& member_sort(NodeId id) const {
    if (is_output(id)) return sort_of(output_decl(id).expr);
    return sort_of(id);
  }

  std::uint64_t total_state_bits() const {
    std::uint64_t n = 0;
    for (const auto& s : states_) n += sort_of(s.node).bit_count();
    return n;
  }

private:
  friend class NetlistParser;

  void add_node(Node n) {
    n.arg_index.clear();
    for (auto a : n.args) n.arg_index.push_back(index_of(a));
    index_[n.id] = nodes_.size();
    nodes_.push_back(std::move(n));
  }

  std::map<NodeId, Sort> sorts_;
  std::vector<Node> nodes_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<StateDecl> states_;
  std::unordered_map<NodeId, std::size_t> state_index_;
  std::vector<NodeId> inputs_;
  std::vector<OutputDecl> outputs_;
  std::unordered_map<NodeId, std::size_t> output_index_;
  std::unordered_map<std::string, Signal> by_name_;
};

}  // namespace upec
