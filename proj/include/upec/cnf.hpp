#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "upec/netlist.hpp"

namespace upec {

using Var = std::uint32_t;  // 1-based

class Lit {
public:
  constexpr Lit() = default;
  static constexpr Lit pos(Var v) { return Lit(v << 1); }
  static constexpr Lit neg(Var v) { return Lit((v << 1) | 1u); }
  static constexpr Lit from_code(std::uint32_t c) { return Lit(c); }
  static constexpr Lit from_dimacs(int d) { return d > 0 ? pos(Var(d)) : neg(Var(-d)); }

  constexpr Var var() const noexcept { return code_ >> 1; }
  constexpr bool negative() const noexcept { return code_ & 1u; }
  constexpr std::uint32_t code() const noexcept { return code_; }
  constexpr int dimacs() const noexcept { return negative() ? -int(var()) : int(var()); }
  constexpr Lit operator~() const noexcept { return Lit(code_ ^ 1u); }
  constexpr Lit operator^(bool flip) const noexcept { return Lit(code_ ^ unsigned(flip)); }

  friend constexpr auto operator<=>(Lit, Lit) = default;

private:
  constexpr explicit Lit(std::uint32_t c) : code_(c) {}
  std::uint32_t code_ = 0;
};

// Which copy of the design a variable belongs to: 0 for a single-instance
// query, 1 and 2 for the two miter instances.
struct VarKey {
  std::uint8_t instance = 0;
  std::uint32_t cycle = 0;
  NodeId node = 0;
  std::uint32_t bit = 0;  // element * element_width + bit for arrays

  friend auto operator<=>(const VarKey&, const VarKey&) = default;
};

struct ClauseSet {
  std::uint32_t var_count = 0;
  std::vector<std::vector<Lit>> clauses;
  std::map<VarKey, Var> var_map;
  std::vector<std::optional<VarKey>> key_of{std::nullopt};  // indexed by var

  Var new_var() {
    ++var_count;
    key_of.emplace_back();
    return var_count;
  }
  void tag(Var v, const VarKey& k) {
    if (key_of[v] || var_map.count(k)) return;  // keep the map injective
    key_of[v] = k;
    var_map.emplace(k, v);
  }
  void add(std::vector<Lit> c) { clauses.push_back(std::move(c)); }
  void add_unit(Lit a) { clauses.push_back({a}); }
};

}  // namespace upec
