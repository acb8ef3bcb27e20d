#ifndef DSAUDIT_SAT_HPP
#define DSAUDIT_SAT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dsaudit::sat {

// Clauses use DIMACS conventions: variable v >= 1 is the literal v, its
// negation is -v.
using Clause = std::vector<int>;

struct CnfFormula {
  int num_vars = 0;
  std::vector<Clause> clauses;

  // Sorts literals, drops duplicates and removes tautological clauses.
  CnfFormula normalized() const {
    CnfFormula out;
    out.num_vars = num_vars;
    for (const Clause& c : clauses) {
      Clause n = c;
      std::sort(n.begin(), n.end(), [](int a, int b) {
        return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
      });
      n.erase(std::unique(n.begin(), n.end()), n.end());
      bool tautology = false;
      for (std::size_t k = 1; k < n.size(); ++k) {
        if (n[k] == -n[k - 1]) tautology = true;
      }
      if (!tautology) out.clauses.push_back(std::move(n));
    }
    return out;
  }

  // `model` is indexed by variable (index 0 unused).
  bool satisfied_by(const std::vector<bool>& model) const {
    for (const Clause& c : clauses) {
      bool sat = false;
      for (int lit : c) {
        int v = std::abs(lit);
        if (v < static_cast<int>(model.size()) && model[static_cast<std::size_t>(v)] == (lit > 0)) {
          sat = true;
          break;
        }
      }
      if (!sat) return false;
    }
    return true;
  }

  bool operator==(const CnfFormula&) const = default;
};

enum class Status { Sat, Unsat, Timeout };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Sat: return "SAT";
    case Status::Unsat: return "UNSAT";
    case Status::Timeout: return "TIMEOUT";
  }
  return "?";
}

struct SolveStats {
  std::uint64_t decisions = 0;
  std::uint64_t propagations = 0;
  std::uint64_t conflicts = 0;
  double seconds = 0.0;
};

struct SatResult {
  Status status = Status::Timeout;
  std::vector<bool> model;  // total assignment when SAT, indexed by variable
  SolveStats stats;
};

struct Limits {
  std::optional<std::uint64_t> conflicts;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct SolverOptions {
  double var_decay = 0.95;
  double clause_decay = 0.999;
  double random_var_freq = 0.0;
  std::uint64_t seed = 1;
  bool phase_saving = false;
  std::uint64_t restart_base = 100;
};

// CDCL solver: two watched literals, first-UIP learning, VSIDS, Luby
// restarts, activity-based learnt clause deletion. Incremental: clauses may be
// added between calls and each call may pass assumptions.
class Solver {
 public:
  explicit Solver(SolverOptions options = {}) : options_(options), rng_(options.seed) {}

  int num_vars() const { return static_cast<int>(assigns_.size()); }

  int new_var() {
    int v = num_vars();
    assigns_.push_back(kUndef);
    level_.push_back(0);
    reason_.push_back(kNoReason);
    activity_.push_back(0.0);
    seen_.push_back(0);
    polarity_.push_back(true);  // true = decide negative
    heap_index_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(v);
    return v + 1;
  }

  void reserve_vars(int n) {
    while (num_vars() < n) new_var();
  }

  // Returns false once the clause database is unsatisfiable at level 0.
  bool add_clause(std::span<const int> dimacs) {
    Clause original(dimacs.begin(), dimacs.end());
    for (int lit : original) {
      if (lit == 0) throw std::invalid_argument("literal 0 in clause");
      reserve_vars(std::abs(lit));
    }
    originals_.push_back(original);
    if (!ok_) return false;
    cancel_until(0);
    std::vector<Lit> lits;
    for (int d : original) lits.push_back(from_dimacs(d));
    std::sort(lits.begin(), lits.end());
    std::vector<Lit> kept;
    Lit prev = kNoLit;
    for (Lit p : lits) {
      if (value(p) == kTrue || p == neg(prev)) return true;
      if (value(p) != kFalse && p != prev) {
        kept.push_back(p);
        prev = p;
      }
    }
    if (kept.empty()) {
      ok_ = false;
      return false;
    }
    if (kept.size() == 1) {
      enqueue(kept[0], kNoReason);
      if (propagate() != kNoReason) ok_ = false;
      return ok_;
    }
    attach(new_clause(std::move(kept), false));
    return true;
  }

  bool add_clause(std::initializer_list<int> lits) {
    return add_clause(std::span<const int>(lits.begin(), lits.size()));
  }

  void add_formula(const CnfFormula& f) {
    reserve_vars(f.num_vars);
    for (const Clause& c : f.clauses) add_clause(c);
  }

  SatResult solve(std::span<const int> assumptions = {}, const Limits& limits = {}) {
    auto start = std::chrono::steady_clock::now();
    SatResult result;
    std::uint64_t conflicts_at_start = conflicts_;
    std::uint64_t decisions_at_start = decisions_;
    std::uint64_t props_at_start = propagations_;
    auto finish = [&](Status s) {
      result.status = s;
      result.stats.conflicts = conflicts_ - conflicts_at_start;
      result.stats.decisions = decisions_ - decisions_at_start;
      result.stats.propagations = propagations_ - props_at_start;
      result.stats.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (s == Status::Sat) {
        result.model.assign(static_cast<std::size_t>(num_vars()) + 1, false);
        for (int v = 0; v < num_vars(); ++v) {
          result.model[static_cast<std::size_t>(v) + 1] = assigns_[static_cast<std::size_t>(v)] == kTrue;
        }
        verify_model(result.model, assumptions);
      }
      cancel_until(0);
      return result;
    };

    for (int lit : assumptions) {
      if (lit == 0) throw std::invalid_argument("literal 0 in assumptions");
      reserve_vars(std::abs(lit));
    }
    if (!ok_) return finish(Status::Unsat);
    assumptions_.clear();
    for (int d : assumptions) assumptions_.push_back(from_dimacs(d));

    std::uint64_t restart_index = 0;
    while (true) {
      if (deadline_passed(limits)) return finish(Status::Timeout);
      std::uint64_t allowed = luby(restart_index++) * options_.restart_base;
      Status s = search(allowed, limits, conflicts_at_start);
      if (s != Status::Timeout) return finish(s);
      if (limits_reached(limits, conflicts_at_start)) return finish(Status::Timeout);
      cancel_until(0);
      if (learnts_.size() >= max_learnts()) reduce_db();
    }
  }

 private:
  using Lit = std::uint32_t;
  using ClauseRef = std::uint32_t;
  static constexpr Lit kNoLit = 0xffffffffu;
  static constexpr ClauseRef kNoReason = 0xffffffffu;
  static constexpr std::int8_t kTrue = 1;
  static constexpr std::int8_t kFalse = 0;
  static constexpr std::int8_t kUndef = -1;

  struct StoredClause {
    std::vector<Lit> lits;
    bool learnt = false;
    bool deleted = false;
    double activity = 0.0;
  };

  struct Watcher {
    ClauseRef cref;
    Lit blocker;
  };

  static Lit from_dimacs(int d) {
    return static_cast<Lit>((std::abs(d) - 1) * 2 + (d < 0 ? 1 : 0));
  }
  static Lit neg(Lit p) { return p ^ 1u; }
  static std::size_t var(Lit p) { return p >> 1; }
  static bool sign(Lit p) { return (p & 1u) != 0; }  // true = negative literal

  std::int8_t value(Lit p) const {
    std::int8_t a = assigns_[var(p)];
    if (a == kUndef) return kUndef;
    return static_cast<std::int8_t>((a == kTrue) != sign(p) ? kTrue : kFalse);
  }

  int decision_level() const { return static_cast<int>(trail_lim_.size()); }

  ClauseRef new_clause(std::vector<Lit> lits, bool learnt) {
    auto cref = static_cast<ClauseRef>(clauses_.size());
    clauses_.push_back(StoredClause{std::move(lits), learnt, false, 0.0});
    if (learnt) learnts_.push_back(cref);
    return cref;
  }

  void attach(ClauseRef cref) {
    const auto& c = clauses_[cref].lits;
    watches_[neg(c[0])].push_back(Watcher{cref, c[1]});
    watches_[neg(c[1])].push_back(Watcher{cref, c[0]});
  }

  void enqueue(Lit p, ClauseRef from) {
    std::size_t v = var(p);
    assigns_[v] = sign(p) ? kFalse : kTrue;
    level_[v] = decision_level();
    reason_[v] = from;
    trail_.push_back(p);
  }

  ClauseRef propagate() {
    ClauseRef conflict = kNoReason;
    while (qhead_ < trail_.size()) {
      Lit p = trail_[qhead_++];
      Lit false_lit = neg(p);
      ++propagations_;
      std::vector<Watcher>& ws = watches_[p];
      std::size_t i = 0;
      std::size_t j = 0;
      while (i < ws.size()) {
        Watcher w = ws[i++];
        if (clauses_[w.cref].deleted) continue;
        if (value(w.blocker) == kTrue) {
          ws[j++] = w;
          continue;
        }
        std::vector<Lit>& c = clauses_[w.cref].lits;
        if (c[0] == false_lit) std::swap(c[0], c[1]);
        Lit first = c[0];
        Watcher kept{w.cref, first};
        if (first != w.blocker && value(first) == kTrue) {
          ws[j++] = kept;
          continue;
        }
        bool moved = false;
        for (std::size_t k = 2; k < c.size(); ++k) {
          if (value(c[k]) != kFalse) {
            std::swap(c[1], c[k]);
            watches_[neg(c[1])].push_back(kept);
            moved = true;
            break;
          }
        }
        if (moved) continue;
        ws[j++] = kept;
        if (value(first) == kFalse) {
          conflict = w.cref;
          qhead_ = trail_.size();
          while (i < ws.size()) ws[j++] = ws[i++];
        } else {
          enqueue(first, w.cref);
        }
      }
      ws.resize(j);
      if (conflict != kNoReason) break;
    }
    return conflict;
  }

  void analyze(ClauseRef conflict, std::vector<Lit>& learnt, int& backtrack_level) {
    learnt.clear();
    learnt.push_back(kNoLit);
    int path_count = 0;
    Lit p = kNoLit;
    std::size_t index = trail_.size();
    ClauseRef cref = conflict;
    do {
      StoredClause& c = clauses_[cref];
      if (c.learnt) bump_clause(c);
      for (std::size_t k = (p == kNoLit ? 0 : 1); k < c.lits.size(); ++k) {
        Lit q = c.lits[k];
        std::size_t v = var(q);
        if (!seen_[v] && level_[v] > 0) {
          bump_var(v);
          seen_[v] = 1;
          if (level_[v] >= decision_level()) {
            ++path_count;
          } else {
            learnt.push_back(q);
          }
        }
      }
      do {
        --index;
      } while (!seen_[var(trail_[index])]);
      p = trail_[index];
      cref = reason_[var(p)];
      seen_[var(p)] = 0;
      --path_count;
    } while (path_count > 0);
    learnt[0] = neg(p);

    // Drop literals implied by the rest of the clause (local minimization).
    std::vector<Lit> to_clear(learnt.begin() + 1, learnt.end());
    std::size_t j = 1;
    for (std::size_t i = 1; i < learnt.size(); ++i) {
      ClauseRef r = reason_[var(learnt[i])];
      bool redundant = r != kNoReason;
      if (redundant) {
        const auto& rc = clauses_[r].lits;
        for (std::size_t k = 1; k < rc.size(); ++k) {
          std::size_t v = var(rc[k]);
          if (!seen_[v] && level_[v] > 0) {
            redundant = false;
            break;
          }
        }
      }
      if (!redundant) learnt[j++] = learnt[i];
    }
    learnt.resize(j);
    for (Lit q : to_clear) seen_[var(q)] = 0;

    backtrack_level = 0;
    if (learnt.size() > 1) {
      std::size_t max_i = 1;
      for (std::size_t i = 2; i < learnt.size(); ++i) {
        if (level_[var(learnt[i])] > level_[var(learnt[max_i])]) max_i = i;
      }
      std::swap(learnt[1], learnt[max_i]);
      backtrack_level = level_[var(learnt[1])];
    }
  }

  void cancel_until(int level) {
    if (decision_level() <= level) return;
    for (std::size_t c = trail_.size(); c-- > trail_lim_[static_cast<std::size_t>(level)];) {
      std::size_t v = var(trail_[c]);
      if (options_.phase_saving) polarity_[v] = sign(trail_[c]);
      assigns_[v] = kUndef;
      reason_[v] = kNoReason;
      if (heap_index_[v] < 0) heap_insert(static_cast<int>(v));
    }
    trail_.resize(trail_lim_[static_cast<std::size_t>(level)]);
    trail_lim_.resize(static_cast<std::size_t>(level));
    qhead_ = trail_.size();
  }

  Lit pick_branch() {
    if (options_.random_var_freq > 0.0 && !heap_.empty()) {
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      if (coin(rng_) < options_.random_var_freq) {
        std::uniform_int_distribution<std::size_t> pick(0, heap_.size() - 1);
        int v = heap_[pick(rng_)];
        if (assigns_[static_cast<std::size_t>(v)] == kUndef) {
          return static_cast<Lit>(v) * 2 + (polarity_[static_cast<std::size_t>(v)] ? 1u : 0u);
        }
      }
    }
    while (!heap_.empty()) {
      int v = heap_pop();
      if (assigns_[static_cast<std::size_t>(v)] == kUndef) {
        return static_cast<Lit>(v) * 2 + (polarity_[static_cast<std::size_t>(v)] ? 1u : 0u);
      }
    }
    return kNoLit;
  }

  Status search(std::uint64_t allowed_conflicts, const Limits& limits,
                std::uint64_t conflicts_at_start) {
    std::uint64_t local_conflicts = 0;
    std::vector<Lit> learnt;
    while (true) {
      ClauseRef conflict = propagate();
      if (conflict != kNoReason) {
        ++conflicts_;
        ++local_conflicts;
        if (decision_level() == 0) {
          ok_ = false;
          return Status::Unsat;
        }
        int backtrack_level = 0;
        analyze(conflict, learnt, backtrack_level);
        cancel_until(backtrack_level);
        if (learnt.size() == 1) {
          enqueue(learnt[0], kNoReason);
        } else {
          ClauseRef cref = new_clause(learnt, true);
          attach(cref);
          bump_clause(clauses_[cref]);
          enqueue(learnt[0], cref);
        }
        var_inc_ /= options_.var_decay;
        clause_inc_ /= options_.clause_decay;
        if ((conflicts_ & 63u) == 0 && deadline_passed(limits)) return Status::Timeout;
        if (limits.conflicts && conflicts_ - conflicts_at_start >= *limits.conflicts) {
          return Status::Timeout;
        }
        continue;
      }
      if (local_conflicts >= allowed_conflicts) return Status::Timeout;  // restart
      Lit next = kNoLit;
      while (decision_level() < static_cast<int>(assumptions_.size())) {
        Lit a = assumptions_[static_cast<std::size_t>(decision_level())];
        if (value(a) == kTrue) {
          trail_lim_.push_back(trail_.size());
        } else if (value(a) == kFalse) {
          return Status::Unsat;
        } else {
          next = a;
          break;
        }
      }
      if (next == kNoLit) {
        ++decisions_;
        if ((decisions_ & 1023u) == 0 && deadline_passed(limits)) return Status::Timeout;
        next = pick_branch();
        if (next == kNoLit) return Status::Sat;
      }
      trail_lim_.push_back(trail_.size());
      enqueue(next, kNoReason);
    }
  }

  bool deadline_passed(const Limits& limits) const {
    return limits.deadline && std::chrono::steady_clock::now() >= *limits.deadline;
  }

  bool limits_reached(const Limits& limits, std::uint64_t conflicts_at_start) const {
    if (limits.conflicts && conflicts_ - conflicts_at_start >= *limits.conflicts) return true;
    return deadline_passed(limits);
  }

  std::size_t max_learnts() const {
    return std::max<std::size_t>(2000, originals_.size() / 3) + reduce_rounds_ * 500;
  }

  bool locked(ClauseRef cref) const {
    const auto& c = clauses_[cref].lits;
    std::size_t v = var(c[0]);
    return reason_[v] == cref && value(c[0]) == kTrue;
  }

  void reduce_db() {
    ++reduce_rounds_;
    std::vector<ClauseRef> live;
    for (ClauseRef cref : learnts_) {
      if (!clauses_[cref].deleted) live.push_back(cref);
    }
    std::stable_sort(live.begin(), live.end(), [&](ClauseRef a, ClauseRef b) {
      return clauses_[a].activity < clauses_[b].activity;
    });
    std::size_t half = live.size() / 2;
    std::vector<ClauseRef> kept;
    for (std::size_t k = 0; k < live.size(); ++k) {
      StoredClause& c = clauses_[live[k]];
      if (k < half && c.lits.size() > 2 && !locked(live[k])) {
        c.deleted = true;
        std::vector<Lit>().swap(c.lits);
      } else {
        kept.push_back(live[k]);
      }
    }
    learnts_ = std::move(kept);
    for (auto& ws : watches_) {
      ws.erase(std::remove_if(ws.begin(), ws.end(),
                              [&](const Watcher& w) { return clauses_[w.cref].deleted; }),
               ws.end());
    }
  }

  void bump_var(std::size_t v) {
    activity_[v] += var_inc_;
    if (activity_[v] > 1e100) {
      for (double& a : activity_) a *= 1e-100;
      var_inc_ *= 1e-100;
    }
    if (heap_index_[v] >= 0) heap_up(heap_index_[v]);
  }

  void bump_clause(StoredClause& c) {
    c.activity += clause_inc_;
    if (c.activity > 1e20) {
      for (ClauseRef cref : learnts_) clauses_[cref].activity *= 1e-20;
      clause_inc_ *= 1e-20;
    }
  }

  // Max-heap on activity; ties broken by lower variable index for determinism.
  bool heap_before(int a, int b) const {
    double aa = activity_[static_cast<std::size_t>(a)];
    double bb = activity_[static_cast<std::size_t>(b)];
    return aa > bb || (aa == bb && a < b);
  }
  void heap_insert(int v) {
    heap_index_[static_cast<std::size_t>(v)] = static_cast<int>(heap_.size());
    heap_.push_back(v);
    heap_up(static_cast<int>(heap_.size()) - 1);
  }
  void heap_up(int i) {
    int v = heap_[static_cast<std::size_t>(i)];
    while (i > 0) {
      int parent = (i - 1) / 2;
      if (!heap_before(v, heap_[static_cast<std::size_t>(parent)])) break;
      heap_[static_cast<std::size_t>(i)] = heap_[static_cast<std::size_t>(parent)];
      heap_index_[static_cast<std::size_t>(heap_[static_cast<std::size_t>(i)])] = i;
      i = parent;
    }
    heap_[static_cast<std::size_t>(i)] = v;
    heap_index_[static_cast<std::size_t>(v)] = i;
  }
  void heap_down(int i) {
    int v = heap_[static_cast<std::size_t>(i)];
    int n = static_cast<int>(heap_.size());
    while (2 * i + 1 < n) {
      int child = 2 * i + 1;
      if (child + 1 < n && heap_before(heap_[static_cast<std::size_t>(child) + 1],
                                       heap_[static_cast<std::size_t>(child)])) {
        ++child;
      }
      if (!heap_before(heap_[static_cast<std::size_t>(child)], v)) break;
      heap_[static_cast<std::size_t>(i)] = heap_[static_cast<std::size_t>(child)];
      heap_index_[static_cast<std::size_t>(heap_[static_cast<std::size_t>(i)])] = i;
      i = child;
    }
    heap_[static_cast<std::size_t>(i)] = v;
    heap_index_[static_cast<std::size_t>(v)] = i;
  }
  int heap_pop() {
    int top = heap_.front();
    heap_index_[static_cast<std::size_t>(top)] = -1;
    int last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_[0] = last;
      heap_index_[static_cast<std::size_t>(last)] = 0;
      heap_down(0);
    }
    return top;
  }

  static std::uint64_t luby(std::uint64_t x) {
    std::uint64_t size = 1;
    std::uint64_t seq = 0;
    while (size < x + 1) {
      ++seq;
      size = 2 * size + 1;
    }
    std::uint64_t result = 1;
    while (size - 1 != x) {
      size = (size - 1) >> 1;
      --seq;
      x = x % size;
    }
    for (std::uint64_t k = 0; k < seq; ++k) result *= 2;
    return result;
  }

  void verify_model(const std::vector<bool>& model, std::span<const int> assumptions) const {
    for (const Clause& c : originals_) {
      bool sat = std::any_of(c.begin(), c.end(), [&](int lit) {
        return model[static_cast<std::size_t>(std::abs(lit))] == (lit > 0);
      });
      if (!sat) throw std::logic_error("SAT model violates an input clause");
    }
    for (int lit : assumptions) {
      if (model[static_cast<std::size_t>(std::abs(lit))] != (lit > 0)) {
        throw std::logic_error("SAT model violates an assumption");
      }
    }
  }

  SolverOptions options_;
  std::mt19937_64 rng_;
  bool ok_ = true;

  std::vector<StoredClause> clauses_;
  std::vector<ClauseRef> learnts_;
  std::vector<Clause> originals_;
  std::vector<std::vector<Watcher>> watches_;

  std::vector<std::int8_t> assigns_;
  std::vector<int> level_;
  std::vector<ClauseRef> reason_;
  std::vector<double> activity_;
  std::vector<char> seen_;
  std::vector<bool> polarity_;
  std::vector<int> heap_;
  std::vector<int> heap_index_;

  std::vector<Lit> trail_;
  std::vector<std::size_t> trail_lim_;
  std::size_t qhead_ = 0;
  std::vector<Lit> assumptions_;

  double var_inc_ = 1.0;
  double clause_inc_ = 1.0;
  std::uint64_t conflicts_ = 0;
  std::uint64_t decisions_ = 0;
  std::uint64_t propagations_ = 0;
  std::size_t reduce_rounds_ = 0;
};

inline SatResult solve(const CnfFormula& f, std::span<const int> assumptions = {},
                       const Limits& limits = {}, const SolverOptions& options = {}) {
  Solver s(options);
  s.add_formula(f);
  return s.solve(assumptions, limits);
}

// f ∧ cube ∧ ⋀_k ¬negated[k] unsatisfiable? nullopt on timeout.
inline std::optional<bool> entails(const CnfFormula& f, std::span<const int> cube,
                                   const std::vector<Clause>& negated_cubes,
                                   const Limits& limits = {}) {
  Solver s;
  s.add_formula(f);
  for (const Clause& c : negated_cubes) {
    Clause neg;
    for (int lit : c) neg.push_back(-lit);
    s.add_clause(neg);
  }
  SatResult r = s.solve(cube, limits);
  if (r.status == Status::Timeout) return std::nullopt;
  return r.status == Status::Unsat;
}

}  // namespace dsaudit::sat

#endif  // DSAUDIT_SAT_HPP
