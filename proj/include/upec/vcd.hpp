#pragma once

// Value change dump of a counterexample. Each instance is a top scope
// (inst1, inst2); dotted signal names become nested scopes, and array
// elements are separate variables named <array>_<index>.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "upec/miter.hpp"

namespace upec {

namespace detail {

inline std::string vcd_code(std::size_t n) {
  std::string s;
  do {
    s += char('!' + n % 94);
    n /= 94;
  } while (n);
  return s;
}

inline std::string vcd_value(std::uint64_t v, unsigned width, const std::string& code) {
  if (width == 1) return std::to_string(v & 1) + code;
  std::string b;
  for (unsigned i = width; i-- > 0;) b += ((v >> i) & 1) ? '1' : '0';
  auto first = b.find('1');
  return "b" + (first == std::string::npos ? std::string("0") : b.substr(first)) + " " + code;
}

struct VcdVar {
  std::string code;
  unsigned width;
  std::vector<std::uint64_t> values;  // per cycle
};

// Scope tree: leaves hold variable indices.
struct VcdScope {
  std::map<std::string, VcdScope> children;
  std::vector<std::pair<std::string, std::size_t>> vars;
};

inline void vcd_add(VcdScope& root, const std::string& name, std::size_t var) {
  VcdScope* s = &root;
  std::size_t start = 0;
  while (true) {
    auto dot = name.find('.', start);
    if (dot == std::string::npos) break;
    s = &s->children[name.substr(start, dot - start)];
    start = dot + 1;
  }
  s->vars.emplace_back(name.substr(start), var);
}

inline void vcd_emit_scope(std::ostream& out, const std::string& name, const VcdScope& s,
                           const std::vector<VcdVar>& vars) {
  out << "$scope module " << name << " $end\n";
  for (const auto& [leaf, idx] : s.vars)
    out << "$var wire " << vars[idx].width << " " << vars[idx].code << " " << leaf << " $end\n";
  for (const auto& [child, sub] : s.children) vcd_emit_scope(out, child, sub, vars);
  out << "$upscope $end\n";
}

}  // namespace detail

inline std::string write_vcd(const Netlist& n, const Counterexample& cex) {
  using namespace detail;
  std::vector<VcdVar> vars;
  std::vector<std::pair<std::string, VcdScope>> tops;
  unsigned instances = cex.two_instances ? 2 : 1;
  std::size_t cycles = cex.trace[0].size();

  for (unsigned inst = 0; inst < instances; ++inst) {
    VcdScope root;
    const auto& tr = cex.trace[inst];
    auto add = [&](const std::string& name, unsigned width, auto&& value_at) {
      VcdVar v{vcd_code(vars.size()), width, {}};
      for (std::size_t c = 0; c < cycles; ++c) v.values.push_back(value_at(tr[c]));
      vcd_add(root, name, vars.size());
      vars.push_back(std::move(v));
    };
    auto add_member = [&](const std::string& name, const Sort& so, auto&& get) {
      if (!so.is_array()) {
        add(name, so.width, [&](const TraceFrame& f) { return as_bits(get(f)); });
        return;
      }
      for (std::uint64_t e = 0; e < so.entries(); ++e)
        add(name + "_" + std::to_string(e), so.element_width,
            [&, e](const TraceFrame& f) { return as_array(get(f)).get(e); });
    };
    for (auto id : n.inputs())
      add_member(n.name_of(id), n.sort_of(id), [&](const TraceFrame& f) -> const Value& { return f.inputs.at(id); });
    for (const auto& s : n.states())
      add_member(n.name_of(s.node), n.sort_of(s.node),
                 [&](const TraceFrame& f) -> const Value& { return f.states.at(s.node); });
    for (const auto& o : n.outputs())
      add_member(o.name, n.sort_of(o.expr), [&](const TraceFrame& f) -> const Value& { return f.outputs.at(o.id); });
    tops.emplace_back("inst" + std::to_string(inst + 1), std::move(root));
  }

  std::ostringstream out;
  out << "$comment counterexample k=" << cex.k << " failing_cycle=" << cex.failing_cycle << " $end\n";
  out << "$timescale 1ns $end\n";
  for (const auto& [name, scope] : tops) vcd_emit_scope(out, name, scope, vars);
  out << "$enddefinitions $end\n";
  for (std::size_t c = 0; c < cycles; ++c) {
    out << "#" << c << "\n";
    if (c == 0) out << "$dumpvars\n";
    for (const auto& v : vars)
      if (c == 0 || v.values[c] != v.values[c - 1]) out << vcd_value(v.values[c], v.width, v.code) << "\n";
    if (c == 0) out << "$end\n";
  }
  out << "#" << cycles << "\n";
  return out.str();
}

}  // namespace upec
