#pragma once

#include <ostream>
#include <span>
#include <sstream>
#include <string>

#include "upec/cnf.hpp"
#include "upec/netlist.hpp"

namespace upec {

// Writes DIMACS CNF. Comment lines before the header map variables back to
// (instance, cycle, signal, bit); assumptions become unit clauses.
inline void export_dimacs(std::ostream& os, const ClauseSet& cs, std::span<const Lit> assumptions = {},
                          const Netlist* names = nullptr) {
  for (const auto& [key, var] : cs.var_map) {
    os << "c var " << var << " inst" << unsigned(key.instance) << " cycle" << key.cycle << " "
       << (names ? names->name_of(key.node) : "n" + std::to_string(key.node)) << "[" << key.bit
       << "]\n";
  }
  os << "p cnf " << cs.var_count << " " << cs.clauses.size() + assumptions.size() << "\n";
  for (const auto& c : cs.clauses) {
    for (auto l : c) os << l.dimacs() << " ";
    os << "0\n";
  }
  for (auto a : assumptions) os << a.dimacs() << " 0\n";
}

inline std::string export_dimacs(const ClauseSet& cs, std::span<const Lit> assumptions = {},
                                 const Netlist* names = nullptr) {
  std::ostringstream os;
  export_dimacs(os, cs, assumptions, names);
  return os.str();
}

}  // namespace upec
