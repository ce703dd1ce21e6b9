#pragma once

// Text format, one declaration per line, ';' starts a comment:
//
//   <id> sort bitvec <w>
//   <id> sort array <index_sort> <element_sort>
//   <id> input <sort> <name>
//   <id> state <sort> <name>
//   <id> const <sort> <hex>            (array sort: hex is the default element)
//   <id> <op> <sort> <args...>
//   <id> slice <sort> <arg> <hi> <lo>
//   <id> next <state> <expr>
//   <id> init <state> <const>
//   <id> hold <state>                  (state keeps its value forever)
//   <id> output <expr> <name>

#include <algorithm>
#include <charconv>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "upec/netlist.hpp"

namespace upec {

class NetlistParser {
public:
  Netlist parse(std::istream& in) {
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      if (auto c = raw.find(';'); c != std::string::npos) raw.erase(c);
      std::istringstream ss(raw);
      std::vector<std::string> tok;
      for (std::string t; ss >> t;) tok.push_back(t);
      if (tok.empty()) continue;
      line_ = lineno;
      parse_line(tok);
    }
    for (const auto& s : net_.states_) {
      if (!s.next && !s.hold)
        throw ParseError(state_line_.at(s.node), "state '" + net_.node(s.node).name +
                                                     "' has neither a next function nor hold");
    }
    return std::move(net_);
  }

private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line_, "(id " + std::to_string(cur_id_) + ") " + msg);
  }

  NodeId parse_id(const std::string& s, const char* what) const {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v == 0 || v > 0xffffffffu)
      fail(std::string("expected positive integer for ") + what + ", got '" + s + "'");
    return static_cast<NodeId>(v);
  }

  unsigned parse_uint(const std::string& s, const char* what) const {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      fail(std::string("expected unsigned integer for ") + what + ", got '" + s + "'");
    return v;
  }

  std::uint64_t parse_hex(std::string s) const {
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s = s.substr(2);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size())
      fail("malformed hex constant '" + s + "'");
    return v;
  }

  // A reference must name an already declared entity with a smaller id.
  void check_ref(NodeId ref) const {
    if (ref >= cur_id_)
      fail("reference to id " + std::to_string(ref) + " is not smaller than the line id");
    if (!declared_.count(ref)) fail("forward or dangling reference to id " + std::to_string(ref));
  }

  const Sort& sort_ref(const std::string& s) const {
    NodeId id = parse_id(s, "sort");
    check_ref(id);
    auto it = net_.sorts_.find(id);
    if (it == net_.sorts_.end()) fail("id " + std::to_string(id) + " is not a sort");
    return it->second;
  }

  NodeId node_ref(const std::string& s) const {
    NodeId id = parse_id(s, "argument");
    check_ref(id);
    if (!net_.has_node(id)) fail("id " + std::to_string(id) + " is not an expression node");
    return id;
  }

  void expect_args(const std::vector<std::string>& tok, std::size_t n, const std::string& what) const {
    if (tok.size() != n)
      fail(what + " expects " + std::to_string(n - 2) + " operands, got " +
           std::to_string(tok.size() - 2));
  }

  // Tokens on a line for each operator, id and keyword included.
  static std::size_t token_count(Op op) {
    switch (op) {
      case Op::Input:
      case Op::State:
      case Op::Const:
      case Op::Not: return 4;
      case Op::Ite:
      case Op::Slice:
      case Op::Write: return 6;
      default: return 5;
    }
  }

  void claim_name(const std::string& name, Signal sig) {
    if (!net_.by_name_.emplace(name, sig).second) fail("duplicate name '" + name + "'");
  }

  void parse_line(const std::vector<std::string>& tok) {
    cur_id_ = 0;
    NodeId id = parse_id(tok[0], "line id");
    cur_id_ = id;
    if (tok.size() < 2) fail("missing keyword");
    if (declared_.count(id)) fail("duplicate id " + std::to_string(id));
    const std::string& kw = tok[1];

    if (kw == "sort") {
      parse_sort(id, tok);
    } else if (kw == "next" || kw == "init") {
      parse_next_init(id, tok, kw == "next");
    } else if (kw == "hold") {
      expect_args(tok, 3, "hold");
      NodeId s = node_ref(tok[2]);
      if (!net_.is_state(s)) fail("hold target is not a state");
      auto& decl = net_.states_[net_.state_index_.at(s)];
      if (decl.next || decl.hold) fail("state already has a next function or hold");
      decl.hold = true;
      decl.hold_line = id;
    } else if (kw == "output") {
      expect_args(tok, 4, "output");
      NodeId e = node_ref(tok[2]);
      claim_name(tok[3], Signal{Signal::Kind::Output, id, e});
      net_.output_index_[id] = net_.outputs_.size();
      net_.outputs_.push_back(OutputDecl{id, e, tok[3]});
    } else {
      parse_node(id, tok);
    }
    declared_.insert(id);
  }

  void parse_sort(NodeId id, const std::vector<std::string>& tok) {
    if (tok.size() < 3) fail("sort needs a kind");
    if (tok[2] == "bitvec") {
      expect_args(tok, 4, "sort bitvec");
      unsigned w = parse_uint(tok[3], "width");
      if (w < 1 || w > kMaxBitVecWidth)
        fail("bit-vector width must be in 1.." + std::to_string(kMaxBitVecWidth));
      net_.sorts_[id] = Sort::bitvec(w);
    } else if (tok[2] == "array") {
      expect_args(tok, 5, "sort array");
      const Sort& is = sort_ref(tok[3]);
      const Sort& es = sort_ref(tok[4]);
      NodeId is_id = parse_id(tok[3], "sort"), es_id = parse_id(tok[4], "sort");
      if (is.is_array() || es.is_array()) fail("array index and element sorts must be bit-vectors");
      if (is.width > kMaxArrayIndexWidth)
        fail("array index width " + std::to_string(is.width) + " exceeds cap of " +
             std::to_string(kMaxArrayIndexWidth));
      Sort a = Sort::array(is.width, es.width);
      a.index_sort = is_id;
      a.element_sort = es_id;
      net_.sorts_[id] = a;
    } else {
      fail("unknown sort kind '" + tok[2] + "'");
    }
  }

  void parse_next_init(NodeId id, const std::vector<std::string>& tok, bool is_next) {
    expect_args(tok, 4, is_next ? "next" : "init");
    NodeId s = node_ref(tok[2]);
    NodeId e = node_ref(tok[3]);
    if (!net_.is_state(s)) fail("target of next/init is not a state");
    if (!(net_.sort_of(s) == net_.sort_of(e))) fail("sort mismatch between state and expression");
    auto& decl = net_.states_[net_.state_index_.at(s)];
    if (is_next) {
      if (decl.next || decl.hold) fail("state already has a next function or hold");
      decl.next = e;
      decl.next_line = id;
    } else {
      if (decl.init) fail("state already has an init");
      if (net_.node(e).op != Op::Const) fail("init expression must be a constant");
      decl.init = e;
      decl.init_line = id;
    }
  }

  void parse_node(NodeId id, const std::vector<std::string>& tok) {
    auto op = op_from_name(tok[1]);
    if (!op) fail("unknown keyword '" + tok[1] + "'");
    if (tok.size() < 3) fail("missing sort");
    if (tok.size() != token_count(*op))
      fail(std::string(op_name(*op)) + " expects " + std::to_string(token_count(*op) - 3) + " operands, got " +
           std::to_string(tok.size() - 3));
    Node n;
    n.id = id;
    n.op = *op;
    n.sort = parse_id(tok[2], "sort");
    const Sort& rs = sort_ref(tok[2]);
    const std::string opname(op_name(*op));

    auto bv_arg = [&](NodeId a) -> const Sort& {
      const Sort& s = net_.sort_of(a);
      if (s.is_array()) fail(opname + " operand " + std::to_string(a) + " must be a bit-vector");
      return s;
    };
    auto need_bv_result = [&] {
      if (rs.is_array()) fail(opname + " result sort must be a bit-vector");
    };

    switch (*op) {
      case Op::Input:
      case Op::State: {
        expect_args(tok, 4, opname);
        if (*op == Op::Input && rs.is_array()) fail("inputs must be bit-vectors");
        n.name = tok[3];
        break;
      }
      case Op::Const: {
        expect_args(tok, 4, "const");
        n.value = parse_hex(tok[3]);
        unsigned w = rs.is_array() ? rs.element_width : rs.width;
        if ((n.value & ~width_mask(w)) != 0) fail("constant does not fit in " + std::to_string(w) + " bits");
        break;
      }
      case Op::Not: {
        expect_args(tok, 4, opname);
        n.args = {node_ref(tok[3])};
        need_bv_result();
        if (bv_arg(n.args[0]) != rs) fail("not: operand sort must equal result sort");
        break;
      }
      case Op::And:
      case Op::Or:
      case Op::Xor:
      case Op::Add:
      case Op::Sub:
      case Op::Mul: {
        expect_args(tok, 5, opname);
        n.args = {node_ref(tok[3]), node_ref(tok[4])};
        need_bv_result();
        if (bv_arg(n.args[0]) != rs || bv_arg(n.args[1]) != rs)
          fail(opname + ": operand sorts must equal result sort");
        break;
      }
      case Op::Eq:
      case Op::Ult: {
        expect_args(tok, 5, opname);
        n.args = {node_ref(tok[3]), node_ref(tok[4])};
        need_bv_result();
        if (rs.width != 1) fail(opname + " produces a width-1 result");
        if (bv_arg(n.args[0]) != bv_arg(n.args[1])) fail(opname + ": operand sorts differ");
        break;
      }
      case Op::Ite: {
        expect_args(tok, 6, opname);
        n.args = {node_ref(tok[3]), node_ref(tok[4]), node_ref(tok[5])};
        if (bv_arg(n.args[0]).width != 1) fail("ite condition must have width 1");
        if (net_.sort_of(n.args[1]) != rs || net_.sort_of(n.args[2]) != rs)
          fail("ite branches must have the result sort");
        break;
      }
      case Op::Concat: {
        expect_args(tok, 5, opname);
        n.args = {node_ref(tok[3]), node_ref(tok[4])};
        need_bv_result();
        if (bv_arg(n.args[0]).width + bv_arg(n.args[1]).width != rs.width)
          fail("concat result width must be the sum of operand widths");
        break;
      }
      case Op::Slice: {
        expect_args(tok, 6, opname);
        n.args = {node_ref(tok[3])};
        n.hi = parse_uint(tok[4], "hi");
        n.lo = parse_uint(tok[5], "lo");
        need_bv_result();
        const Sort& a = bv_arg(n.args[0]);
        if (n.hi < n.lo) fail("slice requires hi >= lo");
        if (n.hi >= a.width) fail("slice hi out of range");
        if (rs.width != n.hi - n.lo + 1) fail("slice result width must be hi - lo + 1");
        break;
      }
      case Op::Read: {
        expect_args(tok, 5, opname);
        n.args = {node_ref(tok[3]), node_ref(tok[4])};
        need_bv_result();
        const Sort& a = net_.sort_of(n.args[0]);
        if (!a.is_array()) fail("read: first operand must be an array");
        if (bv_arg(n.args[1]).width != a.index_width) fail("read: index width mismatch");
        if (rs.width != a.element_width) fail("read: result width must equal element width");
        break;
      }
      case Op::Write: {
        expect_args(tok, 6, opname);
        n.args = {node_ref(tok[3]), node_ref(tok[4]), node_ref(tok[5])};
        const Sort& a = net_.sort_of(n.args[0]);
        if (!a.is_array() || a != rs) fail("write: first operand must have the (array) result sort");
        if (bv_arg(n.args[1]).width != a.index_width) fail("write: index width mismatch");
        if (bv_arg(n.args[2]).width != a.element_width) fail("write: value width mismatch");
        break;
      }
    }

    if (n.op == Op::Input || n.op == Op::State) {
      auto kind = n.op == Op::Input ? Signal::Kind::Input : Signal::Kind::State;
      claim_name(n.name, Signal{kind, id, id});
    }
    if (n.op == Op::Input) net_.inputs_.push_back(id);
    if (n.op == Op::State) {
      net_.state_index_[id] = net_.states_.size();
      StateDecl decl;
      decl.node = id;
      net_.states_.push_back(decl);
      state_line_[id] = line_;
    }
    net_.add_node(std::move(n));
  }

  Netlist net_;
  std::unordered_set<NodeId> declared_;
  std::unordered_map<NodeId, std::size_t> state_line_;
  std::size_t line_ = 0;
  NodeId cur_id_ = 0;
};

inline Netlist parse_netlist(std::istream& in) { return NetlistParser{}.parse(in); }

inline Netlist parse_netlist(const std::string& text) {
  std::istringstream in(text);
  return parse_netlist(in);
}

inline std::string hex_string(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

inline std::string print_netlist(const Netlist& n) {
  std::vector<std::pair<NodeId, std::string>> lines;
  for (const auto& [id, s] : n.sorts()) {
    if (s.is_array()) {
      lines.emplace_back(id, std::to_string(id) + " sort array " + std::to_string(s.index_sort) +
                                 " " + std::to_string(s.element_sort));
    } else {
      lines.emplace_back(id, std::to_string(id) + " sort bitvec " + std::to_string(s.width));
    }
  }
  for (const auto& nd : n.nodes()) {
    std::string l = std::to_string(nd.id) + " " + std::string(op_name(nd.op)) + " " +
                    std::to_string(nd.sort);
    switch (nd.op) {
      case Op::Input:
      case Op::State: l += " " + nd.name; break;
      case Op::Const: l += " " + hex_string(nd.value); break;
      case Op::Slice:
        l += " " + std::to_string(nd.args[0]) + " " + std::to_string(nd.hi) + " " + std::to_string(nd.lo);
        break;
      default:
        for (auto a : nd.args) l += " " + std::to_string(a);
    }
    lines.emplace_back(nd.id, std::move(l));
  }
  for (const auto& s : n.states()) {
    auto sid = std::to_string(s.node);
    if (s.next) lines.emplace_back(s.next_line, std::to_string(s.next_line) + " next " + sid + " " + std::to_string(*s.next));
    if (s.init) lines.emplace_back(s.init_line, std::to_string(s.init_line) + " init " + sid + " " + std::to_string(*s.init));
    if (s.hold) lines.emplace_back(s.hold_line, std::to_string(s.hold_line) + " hold " + sid);
  }
  for (const auto& o : n.outputs())
    lines.emplace_back(o.id, std::to_string(o.id) + " output " + std::to_string(o.expr) + " " + o.name);
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (auto& [id, l] : lines) out += l + "\n";
  return out;
}

// Programmatic construction that goes through the same validation as parsing.
class NetlistBuilder {
public:
  NodeId bv(unsigned w) {
    if (auto it = bv_sorts_.find(w); it != bv_sorts_.end()) return it->second;
    NodeId id = emit("sort bitvec " + std::to_string(w));
    bv_sorts_[w] = id;
    sorts_[id] = Sort::bitvec(w);
    return id;
  }

  NodeId array(unsigned iw, unsigned ew) {
    auto key = std::make_pair(iw, ew);
    if (auto it = arr_sorts_.find(key); it != arr_sorts_.end()) return it->second;
    NodeId is = bv(iw), es = bv(ew);
    NodeId id = emit("sort array " + std::to_string(is) + " " + std::to_string(es));
    arr_sorts_[key] = id;
    sorts_[id] = Sort::array(iw, ew);
    return id;
  }

  NodeId input(const std::string& name, unsigned w) { return node(bv(w), "input " + sid(bv(w)) + " " + name); }
  NodeId state(const std::string& name, unsigned w) { return node(bv(w), "state " + sid(bv(w)) + " " + name); }
  NodeId state_array(const std::string& name, unsigned iw, unsigned ew) {
    NodeId s = array(iw, ew);
    return node(s, "state " + sid(s) + " " + name);
  }

  NodeId constant(unsigned w, std::uint64_t v) {
    auto key = std::make_pair(w, v & width_mask(w));
    if (auto it = consts_.find(key); it != consts_.end()) return it->second;
    NodeId id = node(bv(w), "const " + sid(bv(w)) + " " + hex_string(key.second));
    consts_[key] = id;
    return id;
  }
  NodeId const_array(unsigned iw, unsigned ew, std::uint64_t dflt) {
    NodeId s = array(iw, ew);
    return node(s, "const " + sid(s) + " " + hex_string(dflt & width_mask(ew)));
  }

  NodeId not_(NodeId a) { return op("not", sort_of(a), {a}); }
  NodeId and_(NodeId a, NodeId b) { return op("and", sort_of(a), {a, b}); }
  NodeId or_(NodeId a, NodeId b) { return op("or", sort_of(a), {a, b}); }
  NodeId xor_(NodeId a, NodeId b) { return op("xor", sort_of(a), {a, b}); }
  NodeId add(NodeId a, NodeId b) { return op("add", sort_of(a), {a, b}); }
  NodeId sub(NodeId a, NodeId b) { return op("sub", sort_of(a), {a, b}); }
  NodeId mul(NodeId a, NodeId b) { return op("mul", sort_of(a), {a, b}); }
  NodeId eq(NodeId a, NodeId b) { return op("eq", bv(1), {a, b}); }
  NodeId ult(NodeId a, NodeId b) { return op("ult", bv(1), {a, b}); }
  NodeId ite(NodeId c, NodeId a, NodeId b) { return op("ite", sort_of(a), {c, a, b}); }
  NodeId concat(NodeId a, NodeId b) { return op("concat", bv(width(a) + width(b)), {a, b}); }
  NodeId slice(NodeId a, unsigned hi, unsigned lo) {
    return node(bv(hi - lo + 1), "slice " + sid(bv(hi - lo + 1)) + " " + sid(a) + " " +
                                     std::to_string(hi) + " " + std::to_string(lo));
  }
  NodeId read(NodeId arr, NodeId idx) { return op("read", bv(sorts_.at(sort_of(arr)).element_width), {arr, idx}); }
  NodeId write(NodeId arr, NodeId idx, NodeId v) { return op("write", sort_of(arr), {arr, idx, v}); }

  // Convenience combinators.
  NodeId eq_const(NodeId a, std::uint64_t v) { return eq(a, constant(width(a), v)); }
  NodeId ne_const(NodeId a, std::uint64_t v) { return not_(eq_const(a, v)); }
  NodeId inc(NodeId a, NodeId by1) { return add(a, zext(by1, width(a))); }
  NodeId zext(NodeId a, unsigned w) {
    unsigned aw = width(a);
    if (aw == w) return a;
    return concat(constant(w - aw, 0), a);
  }

  void next(NodeId s, NodeId e) { emit("next " + sid(s) + " " + sid(e)); }
  void init(NodeId s, NodeId c) { emit("init " + sid(s) + " " + sid(c)); }
  void hold(NodeId s) { emit("hold " + sid(s)); }
  NodeId output(NodeId e, const std::string& name) { return emit("output " + sid(e) + " " + name); }

  void comment(const std::string& text) { text_ += "; " + text + "\n"; }

  unsigned width(NodeId n) const { return sorts_.at(sort_of(n)).width; }
  NodeId sort_of(NodeId n) const { return node_sort_.at(n); }

  const std::string& text() const noexcept { return text_; }
  Netlist build() const { return parse_netlist(text_); }

private:
  static std::string sid(NodeId id) { return std::to_string(id); }

  NodeId emit(const std::string& rest) {
    NodeId id = next_id_++;
    text_ += std::to_string(id) + " " + rest + "\n";
    return id;
  }
  NodeId node(NodeId sort, const std::string& rest) {
    NodeId id = emit(rest);
    node_sort_[id] = sort;
    return id;
  }
  NodeId op(const std::string& name, NodeId sort, std::initializer_list<NodeId> args) {
    std::string rest = name + " " + sid(sort);
    for (auto a : args) rest += " " + sid(a);
    return node(sort, rest);
  }

  NodeId next_id_ = 1;
  std::string text_;
  std::map<unsigned, NodeId> bv_sorts_;
  std::map<std::pair<unsigned, unsigned>, NodeId> arr_sorts_;
  std::map<std::pair<unsigned, std::uint64_t>, NodeId> consts_;
  std::map<NodeId, Sort> sorts_;
  std::unordered_map<NodeId, NodeId> node_sort_;
};

}  // namespace upec
