#pragma once

#include <fnmatch.h>

#include <algorithm>
#include <initializer_list>
#include <string>
#include <vector>

#include "upec/netlist.hpp"

namespace upec {

// Deduplicated set of state (or output pseudo-state) ids, kept sorted.
class StateSet {
public:
  StateSet() = default;
  StateSet(std::initializer_list<NodeId> ids) : ids_(ids) { normalize(); }
  explicit StateSet(std::vector<NodeId> ids) : ids_(std::move(ids)) { normalize(); }

  void insert(NodeId id) {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) ids_.insert(it, id);
  }
  bool contains(NodeId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t size() const noexcept { return ids_.size(); }
  auto begin() const noexcept { return ids_.begin(); }
  auto end() const noexcept { return ids_.end(); }
  const std::vector<NodeId>& ids() const noexcept { return ids_; }

  StateSet operator-(const StateSet& o) const {
    std::vector<NodeId> r;
    std::set_difference(ids_.begin(), ids_.end(), o.ids_.begin(), o.ids_.end(), std::back_inserter(r));
    return StateSet(std::move(r));
  }
  StateSet operator&(const StateSet& o) const {
    std::vector<NodeId> r;
    std::set_intersection(ids_.begin(), ids_.end(), o.ids_.begin(), o.ids_.end(), std::back_inserter(r));
    return StateSet(std::move(r));
  }
  StateSet operator|(const StateSet& o) const {
    std::vector<NodeId> r;
    std::set_union(ids_.begin(), ids_.end(), o.ids_.begin(), o.ids_.end(), std::back_inserter(r));
    return StateSet(std::move(r));
  }
  bool subset_of(const StateSet& o) const {
    return std::includes(o.ids_.begin(), o.ids_.end(), ids_.begin(), ids_.end());
  }

  std::vector<std::string> names(const Netlist& n) const {
    std::vector<std::string> out;
    for (auto id : ids_) out.push_back(n.name_of(id));
    return out;
  }

  friend bool operator==(const StateSet&, const StateSet&) = default;

private:
  void normalize() {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  std::vector<NodeId> ids_;
};

// '*' matches any run of characters, dots included.
inline bool glob_match(const std::string& pattern, const std::string& name) {
  return ::fnmatch(pattern.c_str(), name.c_str(), 0) == 0;
}

inline bool matches_any(const std::vector<std::string>& patterns, const std::string& name) {
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const std::string& p) { return glob_match(p, name); });
}

struct Selection {
  StateSet set;
  std::vector<std::string> warnings;  // patterns that matched nothing
};

// States (and outputs, if requested) whose names match the patterns. A
// pattern prefixed with '!' removes matches of the remaining pattern.
inline Selection select_states(const Netlist& n, const std::vector<std::string>& patterns,
                               bool include_outputs = false) {
  std::vector<std::pair<NodeId, std::string>> candidates;
  for (const auto& s : n.states()) candidates.emplace_back(s.node, n.name_of(s.node));
  if (include_outputs)
    for (const auto& o : n.outputs()) candidates.emplace_back(o.id, o.name);

  Selection sel;
  std::vector<std::string> include, exclude;
  for (const auto& p : patterns) {
    if (!p.empty() && p[0] == '!')
      exclude.push_back(p.substr(1));
    else
      include.push_back(p);
  }
  for (const auto& p : patterns) {
    std::string body = (!p.empty() && p[0] == '!') ? p.substr(1) : p;
    bool hit = std::any_of(candidates.begin(), candidates.end(),
                           [&](const auto& c) { return glob_match(body, c.second); });
    if (!hit) sel.warnings.push_back("pattern '" + p + "' matches no state");
  }
  for (const auto& [id, name] : candidates)
    if (matches_any(include, name) && !matches_any(exclude, name)) sel.set.insert(id);
  return sel;
}

}  // namespace upec
