#pragma once

// Conflict-driven clause-learning SAT solver: two watched literals, first-UIP
// learning with local minimization, VSIDS with lowest-index tie-breaking,
// phase saving, Luby restarts and activity-based clause deletion. There is no
// randomness anywhere, so identical input gives an identical model.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "upec/cnf.hpp"

namespace upec {

inline constexpr unsigned long long kDefaultConflictBudget = 10'000'000ULL;

enum class SatStatus { Sat, Unsat, Unknown };

struct SolverStats {
  unsigned long long conflicts = 0;
  unsigned long long decisions = 0;
  unsigned long long propagations = 0;
  unsigned long long restarts = 0;
};

struct SatResult {
  SatStatus status = SatStatus::Unknown;
  std::vector<bool> model;  // indexed by variable; entry 0 unused
  SolverStats stats;

  bool value(Lit l) const { return model[l.var()] != l.negative(); }
};

class CdclSolver {
public:
  explicit CdclSolver(unsigned long long conflict_budget = kDefaultConflictBudget)
      : budget_(conflict_budget) {}

  SatResult solve(const ClauseSet& cs, std::span<const Lit> assumptions = {}) {
    init(cs.var_count);
    SatResult res;
    bool ok = true;
    for (const auto& c : cs.clauses) {
      if (!add_input_clause(c)) {
        ok = false;
        break;
      }
    }
    if (ok && propagate() != kNoReason) ok = false;
    if (!ok) {
      res.status = SatStatus::Unsat;
      res.stats = stats_;
      return res;
    }
    res.status = search(assumptions);
    res.stats = stats_;
    if (res.status == SatStatus::Sat) {
      res.model.assign(num_vars_ + 1, false);
      for (Var v = 1; v <= num_vars_; ++v) res.model[v] = assign_[v] == kTrue;
    }
    return res;
  }

private:
  static constexpr std::uint32_t kNoReason = std::numeric_limits<std::uint32_t>::max();
  static constexpr std::int8_t kUndef = -1, kFalse = 0, kTrue = 1;

  struct Clause {
    std::vector<Lit> lits;
    bool learnt = false;
    bool deleted = false;
    double activity = 0;
  };
  struct Watch {
    std::uint32_t cref;
    Lit blocker;
  };

  void init(Var n) {
    num_vars_ = n;
    clauses_.clear();
    learnts_.clear();
    watches_.assign(2 * (n + 1), {});
    assign_.assign(n + 1, kUndef);
    level_.assign(n + 1, 0);
    reason_.assign(n + 1, kNoReason);
    activity_.assign(n + 1, 0.0);
    polarity_.assign(n + 1, false);
    seen_.assign(n + 1, 0);
    heap_pos_.assign(n + 1, -1);
    heap_.clear();
    trail_.clear();
    trail_lim_.clear();
    qhead_ = 0;
    var_inc_ = 1.0;
    cla_inc_ = 1.0;
    stats_ = {};
    for (Var v = 1; v <= n; ++v) heap_insert(v);
  }

  std::int8_t value(Lit l) const {
    std::int8_t a = assign_[l.var()];
    if (a == kUndef) return kUndef;
    return l.negative() ? std::int8_t(1 - a) : a;
  }
  int decision_level() const { return int(trail_lim_.size()); }

  bool add_input_clause(const std::vector<Lit>& in) {
    std::vector<Lit> c(in);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    std::vector<Lit> kept;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i + 1 < c.size() && c[i + 1] == ~c[i]) return true;  // tautology
      auto v = value(c[i]);
      if (v == kTrue) return true;
      if (v == kUndef) kept.push_back(c[i]);
    }
    if (kept.empty()) return false;
    if (kept.size() == 1) {
      enqueue(kept[0], kNoReason);
      return true;
    }
    attach(std::move(kept), false);
    return true;
  }

  std::uint32_t attach(std::vector<Lit> lits, bool learnt) {
    auto cref = std::uint32_t(clauses_.size());
    watches_[lits[0].code()].push_back({cref, lits[1]});
    watches_[lits[1].code()].push_back({cref, lits[0]});
    clauses_.push_back(Clause{std::move(lits), learnt, false, 0});
    if (learnt) learnts_.push_back(cref);
    return cref;
  }

  void enqueue(Lit p, std::uint32_t from) {
    assign_[p.var()] = p.negative() ? kFalse : kTrue;
    level_[p.var()] = decision_level();
    reason_[p.var()] = from;
    trail_.push_back(p);
  }

  std::uint32_t propagate() {
    while (qhead_ < trail_.size()) {
      Lit p = trail_[qhead_++];
      Lit false_lit = ~p;
      ++stats_.propagations;
      auto& ws = watches_[false_lit.code()];
      std::size_t i = 0, j = 0;
      while (i < ws.size()) {
        Watch w = ws[i++];
        if (value(w.blocker) == kTrue) {
          ws[j++] = w;
          continue;
        }
        Clause& c = clauses_[w.cref];
        if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
        Lit first = c.lits[0];
        if (first != w.blocker && value(first) == kTrue) {
          ws[j++] = Watch{w.cref, first};
          continue;
        }
        bool moved = false;
        for (std::size_t k = 2; k < c.lits.size(); ++k) {
          if (value(c.lits[k]) != kFalse) {
            std::swap(c.lits[1], c.lits[k]);
            watches_[c.lits[1].code()].push_back({w.cref, first});
            moved = true;
            break;
          }
        }
        if (moved) continue;
        ws[j++] = Watch{w.cref, first};
        if (value(first) == kFalse) {
          while (i < ws.size()) ws[j++] = ws[i++];
          ws.resize(j);
          qhead_ = trail_.size();
          return w.cref;
        }
        enqueue(first, w.cref);
      }
      ws.resize(j);
    }
    return kNoReason;
  }

  // First-UIP conflict analysis. Returns the learnt clause with the asserting
  // literal first and the highest remaining level second.
  std::vector<Lit> analyze(std::uint32_t confl, int& out_level) {
    std::vector<Lit> learnt{Lit{}};
    int path = 0;
    bool have_p = false;
    Lit p{};
    std::size_t idx = trail_.size();
    do {
      Clause& c = clauses_[confl];
      if (c.learnt) bump_clause(c);
      for (std::size_t k = have_p ? 1 : 0; k < c.lits.size(); ++k) {
        Lit q = c.lits[k];
        Var v = q.var();
        if (!seen_[v] && level_[v] > 0) {
          bump_var(v);
          seen_[v] = 1;
          if (level_[v] >= decision_level())
            ++path;
          else
            learnt.push_back(q);
        }
      }
      while (!seen_[trail_[idx - 1].var()]) --idx;
      p = trail_[--idx];
      have_p = true;
      confl = reason_[p.var()];
      seen_[p.var()] = 0;
      --path;
    } while (path > 0);
    learnt[0] = ~p;

    // Drop literals implied by other literals of the clause.
    std::vector<Lit> out{learnt[0]};
    for (std::size_t k = 1; k < learnt.size(); ++k) {
      Var v = learnt[k].var();
      std::uint32_t r = reason_[v];
      bool redundant = r != kNoReason;
      if (redundant) {
        for (std::size_t m = 1; m < clauses_[r].lits.size(); ++m) {
          Var u = clauses_[r].lits[m].var();
          if (!seen_[u] && level_[u] > 0) {
            redundant = false;
            break;
          }
        }
      }
      if (!redundant) out.push_back(learnt[k]);
    }
    for (auto l : learnt) seen_[l.var()] = 0;

    out_level = 0;
    if (out.size() > 1) {
      std::size_t max_i = 1;
      for (std::size_t k = 2; k < out.size(); ++k)
        if (level_[out[k].var()] > level_[out[max_i].var()]) max_i = k;
      std::swap(out[1], out[max_i]);
      out_level = level_[out[1].var()];
    }
    return out;
  }

  void backtrack(int lvl) {
    if (decision_level() <= lvl) return;
    for (std::size_t i = trail_.size(); i > trail_lim_[lvl]; --i) {
      Var v = trail_[i - 1].var();
      polarity_[v] = !trail_[i - 1].negative();
      assign_[v] = kUndef;
      reason_[v] = kNoReason;
      if (heap_pos_[v] < 0) heap_insert(v);
    }
    trail_.resize(trail_lim_[lvl]);
    trail_lim_.resize(lvl);
    qhead_ = trail_.size();
  }

  static double luby(double y, int x) {
    int size = 1, seq = 0;
    while (size < x + 1) {
      ++seq;
      size = 2 * size + 1;
    }
    while (size - 1 != x) {
      size = (size - 1) >> 1;
      --seq;
      x = x % size;
    }
    double r = 1;
    for (int i = 0; i < seq; ++i) r *= y;
    return r;
  }

  SatStatus search(std::span<const Lit> assumptions) {
    double max_learnts = std::max(1000.0, double(clauses_.size()) / 3.0);
    int restart_no = 0;
    for (;;) {
      auto limit = static_cast<unsigned long long>(100 * luby(2, restart_no++));
      unsigned long long here = 0;
      for (;;) {
        std::uint32_t confl = propagate();
        if (confl != kNoReason) {
          ++stats_.conflicts;
          ++here;
          if (decision_level() == 0) return SatStatus::Unsat;
          if (stats_.conflicts > budget_) return SatStatus::Unknown;
          int bt = 0;
          auto learnt = analyze(confl, bt);
          backtrack(bt);
          if (learnt.size() == 1) {
            enqueue(learnt[0], kNoReason);
          } else {
            Lit first = learnt[0];
            std::uint32_t cref = attach(std::move(learnt), true);
            bump_clause(clauses_[cref]);
            enqueue(first, cref);
          }
          var_inc_ /= 0.95;
          cla_inc_ /= 0.999;
          continue;
        }
        if (here >= limit) {
          ++stats_.restarts;
          backtrack(0);
          break;
        }
        if (double(learnts_.size()) - double(trail_.size()) >= max_learnts) {
          reduce_db();
          max_learnts *= 1.1;
        }
        Lit next{};
        bool have = false;
        while (decision_level() < int(assumptions.size())) {
          Lit a = assumptions[decision_level()];
          if (value(a) == kTrue) {
            trail_lim_.push_back(trail_.size());
          } else if (value(a) == kFalse) {
            return SatStatus::Unsat;
          } else {
            next = a;
            have = true;
            break;
          }
        }
        if (!have) {
          Var v = 0;
          while (!heap_.empty()) {
            Var cand = heap_pop();
            if (assign_[cand] == kUndef) {
              v = cand;
              break;
            }
          }
          if (v == 0) return SatStatus::Sat;
          next = polarity_[v] ? Lit::pos(v) : Lit::neg(v);
        }
        ++stats_.decisions;
        trail_lim_.push_back(trail_.size());
        enqueue(next, kNoReason);
      }
    }
  }

  bool locked(std::uint32_t cref) const {
    const Clause& c = clauses_[cref];
    Var v = c.lits[0].var();
    return reason_[v] == cref && value(c.lits[0]) == kTrue;
  }

  void reduce_db() {
    std::vector<std::uint32_t> cand;
    for (auto cref : learnts_)
      if (!clauses_[cref].deleted && clauses_[cref].lits.size() > 2 && !locked(cref)) cand.push_back(cref);
    std::sort(cand.begin(), cand.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (clauses_[a].activity != clauses_[b].activity) return clauses_[a].activity < clauses_[b].activity;
      return a < b;
    });
    for (std::size_t i = 0; i < cand.size() / 2; ++i) {
      clauses_[cand[i]].deleted = true;
      clauses_[cand[i]].lits.clear();
      clauses_[cand[i]].lits.shrink_to_fit();
    }
    std::vector<std::uint32_t> keep;
    for (auto cref : learnts_)
      if (!clauses_[cref].deleted) keep.push_back(cref);
    learnts_ = std::move(keep);
    for (auto& ws : watches_)
      ws.erase(std::remove_if(ws.begin(), ws.end(), [&](const Watch& w) { return clauses_[w.cref].deleted; }),
               ws.end());
  }

  void bump_clause(Clause& c) {
    c.activity += cla_inc_;
    if (c.activity > 1e20) {
      for (auto cref : learnts_) clauses_[cref].activity *= 1e-20;
      cla_inc_ *= 1e-20;
    }
  }

  void bump_var(Var v) {
    activity_[v] += var_inc_;
    if (activity_[v] > 1e100) {
      for (Var u = 1; u <= num_vars_; ++u) activity_[u] *= 1e-100;
      var_inc_ *= 1e-100;
    }
    if (heap_pos_[v] >= 0) heap_up(std::size_t(heap_pos_[v]));
  }

  // Max-heap on activity; ties go to the lower variable index.
  bool heap_before(Var a, Var b) const {
    return activity_[a] > activity_[b] || (activity_[a] == activity_[b] && a < b);
  }
  void heap_insert(Var v) {
    heap_pos_[v] = int(heap_.size());
    heap_.push_back(v);
    heap_up(heap_.size() - 1);
  }
  void heap_up(std::size_t i) {
    Var v = heap_[i];
    while (i > 0) {
      std::size_t parent = (i - 1) / 2;
      if (!heap_before(v, heap_[parent])) break;
      heap_[i] = heap_[parent];
      heap_pos_[heap_[i]] = int(i);
      i = parent;
    }
    heap_[i] = v;
    heap_pos_[v] = int(i);
  }
  void heap_down(std::size_t i) {
    Var v = heap_[i];
    for (;;) {
      std::size_t l = 2 * i + 1;
      if (l >= heap_.size()) break;
      std::size_t best = (l + 1 < heap_.size() && heap_before(heap_[l + 1], heap_[l])) ? l + 1 : l;
      if (!heap_before(heap_[best], v)) break;
      heap_[i] = heap_[best];
      heap_pos_[heap_[i]] = int(i);
      i = best;
    }
    heap_[i] = v;
    heap_pos_[v] = int(i);
  }
  Var heap_pop() {
    Var top = heap_[0];
    heap_pos_[top] = -1;
    Var last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_[0] = last;
      heap_pos_[last] = 0;
      heap_down(0);
    }
    return top;
  }

  unsigned long long budget_;
  Var num_vars_ = 0;
  std::vector<Clause> clauses_;
  std::vector<std::uint32_t> learnts_;
  std::vector<std::vector<Watch>> watches_;
  std::vector<std::int8_t> assign_;
  std::vector<int> level_;
  std::vector<std::uint32_t> reason_;
  std::vector<double> activity_;
  std::vector<bool> polarity_;
  std::vector<char> seen_;
  std::vector<int> heap_pos_;
  std::vector<Var> heap_;
  std::vector<Lit> trail_;
  std::vector<std::size_t> trail_lim_;
  std::size_t qhead_ = 0;
  double var_inc_ = 1.0, cla_inc_ = 1.0;
  SolverStats stats_;
};

inline SatResult solve(const ClauseSet& cs, std::span<const Lit> assumptions = {},
                       unsigned long long conflict_budget = kDefaultConflictBudget) {
  return CdclSolver(conflict_budget).solve(cs, assumptions);
}

}  // namespace upec
