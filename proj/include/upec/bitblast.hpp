#pragma once

// Tseitin encoding of word-level netlist nodes into clauses. Gates are
// structurally hashed and constant-folded; arrays are expanded element-wise.

#include <array>
#include <functional>
#include <map>
#include <unordered_map>
#include <vector>

#include "upec/cnf.hpp"
#include "upec/netlist.hpp"

namespace upec {

inline constexpr std::uint64_t kMaxExpandedArrayEntries = 64;

using Bits = std::vector<Lit>;

// Bit-level image of a node value. Bit-vectors use `bits`; arrays use one
// Bits per element in `elems`.
struct Word {
  Bits bits;
  std::vector<Bits> elems;

  bool is_array() const noexcept { return !elems.empty(); }
};

class GateBuilder {
public:
  explicit GateBuilder(ClauseSet& cs) : cs_(cs) {
    true_ = Lit::pos(cs_.new_var());
    cs_.add_unit(true_);
  }

  Lit t() const noexcept { return true_; }
  Lit f() const noexcept { return ~true_; }
  Lit constant(bool b) const noexcept { return b ? true_ : ~true_; }
  bool is_const(Lit a) const noexcept { return a.var() == true_.var(); }
  ClauseSet& clauses() noexcept { return cs_; }

  Lit fresh() { return Lit::pos(cs_.new_var()); }

  Lit and2(Lit a, Lit b) {
    if (a == f() || b == f() || a == ~b) return f();
    if (a == t() || a == b) return b;
    if (b == t()) return a;
    if (b < a) std::swap(a, b);
    std::uint64_t key = (std::uint64_t(a.code()) << 32) | b.code();
    if (auto it = and_cache_.find(key); it != and_cache_.end()) return it->second;
    Lit x = fresh();
    cs_.add({~x, a});
    cs_.add({~x, b});
    cs_.add({x, ~a, ~b});
    and_cache_.emplace(key, x);
    return x;
  }
  Lit or2(Lit a, Lit b) { return ~and2(~a, ~b); }

  Lit xor2(Lit a, Lit b) {
    if (a == f()) return b;
    if (b == f()) return a;
    if (a == t()) return ~b;
    if (b == t()) return ~a;
    if (a == b) return f();
    if (a == ~b) return t();
    bool flip = a.negative() != b.negative();
    a = Lit::pos(a.var());
    b = Lit::pos(b.var());
    if (b < a) std::swap(a, b);
    std::uint64_t key = (std::uint64_t(a.code()) << 32) | b.code();
    Lit x;
    if (auto it = xor_cache_.find(key); it != xor_cache_.end()) {
      x = it->second;
    } else {
      x = fresh();
      cs_.add({~x, a, b});
      cs_.add({~x, ~a, ~b});
      cs_.add({x, ~a, b});
      cs_.add({x, a, ~b});
      xor_cache_.emplace(key, x);
    }
    return x ^ flip;
  }
  Lit xnor2(Lit a, Lit b) { return ~xor2(a, b); }

  Lit mux(Lit c, Lit a, Lit b) {  // c ? a : b
    if (c == t() || a == b) return a;
    if (c == f()) return b;
    if (a == t() && b == f()) return c;
    if (a == f() && b == t()) return ~c;
    if (a == t()) return or2(c, b);
    if (a == f()) return and2(~c, b);
    if (b == t()) return or2(~c, a);
    if (b == f()) return and2(c, a);
    if (c.negative()) {
      c = ~c;
      std::swap(a, b);
    }
    std::array<std::uint32_t, 3> key{c.code(), a.code(), b.code()};
    if (auto it = mux_cache_.find(key); it != mux_cache_.end()) return it->second;
    Lit x = fresh();
    cs_.add({~c, ~a, x});
    cs_.add({~c, a, ~x});
    cs_.add({c, ~b, x});
    cs_.add({c, b, ~x});
    cs_.add({~a, ~b, x});
    cs_.add({a, b, ~x});
    mux_cache_.emplace(key, x);
    return x;
  }

  Lit and_all(const Bits& v) {
    Lit r = t();
    for (auto l : v) r = and2(r, l);
    return r;
  }
  Lit or_all(const Bits& v) {
    Lit r = f();
    for (auto l : v) r = or2(r, l);
    return r;
  }

  Lit eq(const Bits& a, const Bits& b) {
    Bits x;
    for (std::size_t i = 0; i < a.size(); ++i) x.push_back(xnor2(a[i], b[i]));
    return and_all(x);
  }
  Lit eq_const(const Bits& a, std::uint64_t v) {
    Bits x;
    for (std::size_t i = 0; i < a.size(); ++i) x.push_back(((v >> i) & 1) ? a[i] : ~a[i]);
    return and_all(x);
  }
  Lit ult(const Bits& a, const Bits& b) {
    Lit lt = f();
    for (std::size_t i = 0; i < a.size(); ++i) lt = mux(xor2(a[i], b[i]), b[i], lt);
    return lt;
  }
  Bits add(const Bits& a, const Bits& b, Lit carry) {
    Bits s(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      Lit axb = xor2(a[i], b[i]);
      s[i] = xor2(axb, carry);
      carry = or2(and2(a[i], b[i]), and2(carry, axb));
    }
    return s;
  }
  Bits mul(const Bits& a, const Bits& b) {
    Bits acc(a.size(), f());
    for (std::size_t i = 0; i < b.size(); ++i) {
      Bits partial(a.size(), f());
      for (std::size_t j = 0; j + i < a.size(); ++j) partial[j + i] = and2(a[j], b[i]);
      acc = add(acc, partial, f());
    }
    return acc;
  }
  Bits mux(Lit c, const Bits& a, const Bits& b) {
    Bits r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = mux(c, a[i], b[i]);
    return r;
  }
  Bits constant_bits(std::uint64_t v, unsigned w) const {
    Bits r(w);
    for (unsigned i = 0; i < w; ++i) r[i] = constant((v >> i) & 1);
    return r;
  }

  // True iff the two words differ anywhere.
  Lit differs(const Word& a, const Word& b) {
    if (!a.is_array()) return ~eq(a.bits, b.bits);
    Bits d;
    for (std::size_t e = 0; e < a.elems.size(); ++e) d.push_back(~eq(a.elems[e], b.elems[e]));
    return or_all(d);
  }

private:
  struct ArrayHash {
    std::size_t operator()(const std::array<std::uint32_t, 3>& k) const noexcept {
      std::uint64_t h = k[0];
      h = h * 0x9E3779B97F4A7C15ULL ^ k[1];
      h = h * 0x9E3779B97F4A7C15ULL ^ k[2];
      return std::size_t(h);
    }
  };

  ClauseSet& cs_;
  Lit true_;
  std::unordered_map<std::uint64_t, Lit> and_cache_;
  std::unordered_map<std::uint64_t, Lit> xor_cache_;
  std::unordered_map<std::array<std::uint32_t, 3>, Lit, ArrayHash> mux_cache_;
};

struct FrameContext {
  std::uint8_t instance = 0;
  std::uint32_t cycle = 0;
};

class Encoder {
public:
  Encoder(const Netlist& n, GateBuilder& g) : net_(n), g_(g) {}

  const Netlist& netlist() const noexcept { return net_; }
  GateBuilder& gates() noexcept { return g_; }

  static void check_expandable(const Sort& s) {
    if (s.is_array() && s.entries() > kMaxExpandedArrayEntries)
      throw Error("array with " + std::to_string(s.entries()) + " entries is too large to expand (max " +
                  std::to_string(kMaxExpandedArrayEntries) + ")");
  }

  // Fresh variables for a leaf (state or input), tagged in the variable map.
  Word fresh_leaf(NodeId id, const FrameContext& ctx) {
    const Sort& s = net_.sort_of(id);
    check_expandable(s);
    auto& cs = g_.clauses();
    auto make = [&](unsigned w, std::uint32_t base) {
      Bits b(w);
      for (unsigned i = 0; i < w; ++i) {
        Var v = cs.new_var();
        cs.tag(v, VarKey{ctx.instance, ctx.cycle, id, base + i});
        b[i] = Lit::pos(v);
      }
      return b;
    };
    Word w;
    if (s.is_array()) {
      for (std::uint64_t e = 0; e < s.entries(); ++e)
        w.elems.push_back(make(s.element_width, std::uint32_t(e * s.element_width)));
    } else {
      w.bits = make(s.width, 0);
    }
    return w;
  }

  // Encodes every node of one time frame. `leaf` supplies the words of
  // state and input nodes; the result is indexed like Netlist::nodes().
  std::vector<Word> encode_frame(const FrameContext& ctx, const std::function<Word(NodeId)>& leaf) {
    std::vector<Word> out(net_.nodes().size());
    auto& cs = g_.clauses();
    for (std::size_t i = 0; i < net_.nodes().size(); ++i) {
      const Node& nd = net_.nodes()[i];
      const Sort& s = net_.sort(nd.sort);
      check_expandable(s);
      Var before = cs.var_count;
      out[i] = encode_node(nd, s, out, leaf);
      if (nd.op != Op::Input && nd.op != Op::State) tag_fresh(nd, s, out[i], before, ctx);
    }
    return out;
  }

private:
  void tag_fresh(const Node& nd, const Sort& s, const Word& w, Var before, const FrameContext& ctx) {
    auto& cs = g_.clauses();
    auto tag = [&](const Bits& b, std::uint32_t base) {
      for (std::size_t i = 0; i < b.size(); ++i)
        if (b[i].var() > before) cs.tag(b[i].var(), VarKey{ctx.instance, ctx.cycle, nd.id, base + std::uint32_t(i)});
    };
    if (s.is_array()) {
      for (std::size_t e = 0; e < w.elems.size(); ++e) tag(w.elems[e], std::uint32_t(e * s.element_width));
    } else {
      tag(w.bits, 0);
    }
  }

  Word encode_node(const Node& nd, const Sort& s, const std::vector<Word>& val,
                   const std::function<Word(NodeId)>& leaf) {
    auto a = [&](std::size_t k) -> const Word& { return val[nd.arg_index[k]]; };
    Word w;
    switch (nd.op) {
      case Op::Input:
      case Op::State: return leaf(nd.id);
      case Op::Const:
        if (s.is_array())
          w.elems.assign(s.entries(), g_.constant_bits(nd.value, s.element_width));
        else
          w.bits = g_.constant_bits(nd.value, s.width);
        return w;
      case Op::Not:
        for (auto l : a(0).bits) w.bits.push_back(~l);
        return w;
      case Op::And:
      case Op::Or:
      case Op::Xor:
        for (std::size_t i = 0; i < s.width; ++i) {
          Lit x = a(0).bits[i], y = a(1).bits[i];
          w.bits.push_back(nd.op == Op::And ? g_.and2(x, y) : nd.op == Op::Or ? g_.or2(x, y) : g_.xor2(x, y));
        }
        return w;
      case Op::Add: w.bits = g_.add(a(0).bits, a(1).bits, g_.f()); return w;
      case Op::Sub: {
        Bits nb;
        for (auto l : a(1).bits) nb.push_back(~l);
        w.bits = g_.add(a(0).bits, nb, g_.t());
        return w;
      }
      case Op::Mul: w.bits = g_.mul(a(0).bits, a(1).bits); return w;
      case Op::Eq: w.bits = {g_.eq(a(0).bits, a(1).bits)}; return w;
      case Op::Ult: w.bits = {g_.ult(a(0).bits, a(1).bits)}; return w;
      case Op::Ite: {
        Lit c = a(0).bits[0];
        if (s.is_array()) {
          for (std::size_t e = 0; e < a(1).elems.size(); ++e) w.elems.push_back(g_.mux(c, a(1).elems[e], a(2).elems[e]));
        } else {
          w.bits = g_.mux(c, a(1).bits, a(2).bits);
        }
        return w;
      }
      case Op::Concat:
        w.bits = a(1).bits;  // low part is the second operand
        w.bits.insert(w.bits.end(), a(0).bits.begin(), a(0).bits.end());
        return w;
      case Op::Slice:
        w.bits.assign(a(0).bits.begin() + nd.lo, a(0).bits.begin() + nd.hi + 1);
        return w;
      case Op::Read: {
        const Word& arr = a(0);
        const Bits& idx = a(1).bits;
        w.bits = arr.elems[0];
        for (std::size_t e = 1; e < arr.elems.size(); ++e) w.bits = g_.mux(g_.eq_const(idx, e), arr.elems[e], w.bits);
        return w;
      }
      case Op::Write: {
        const Word& arr = a(0);
        const Bits& idx = a(1).bits;
        const Bits& v = a(2).bits;
        for (std::size_t e = 0; e < arr.elems.size(); ++e) w.elems.push_back(g_.mux(g_.eq_const(idx, e), v, arr.elems[e]));
        return w;
      }
    }
    throw Error("unsupported operator " + std::string(op_name(nd.op)));
  }

  const Netlist& net_;
  GateBuilder& g_;
};

// Reads a word's concrete value out of a satisfying assignment.
template <class Model>
std::uint64_t decode_bits(const Bits& b, const Model& model) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (model(b[i])) v |= std::uint64_t{1} << i;
  return v;
}

}  // namespace upec
