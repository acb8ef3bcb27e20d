#ifndef DSAUDIT_BACKGROUND_HPP
#define DSAUDIT_BACKGROUND_HPP

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsaudit/model.hpp"
#include "dsaudit/sat.hpp"

namespace dsaudit {

// Bijection between canonical atoms and SAT variables (1-based, in order of
// first registration).
class AtomTable {
 public:
  int intern(const Atom& atom) {
    auto it = index_.find(atom);
    if (it != index_.end()) return it->second;
    atoms_.push_back(atom);
    int var = static_cast<int>(atoms_.size());
    index_.emplace(atom, var);
    return var;
  }

  std::optional<int> find(const Atom& atom) const {
    auto it = index_.find(atom);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int var(const Atom& atom) const {
    auto v = find(atom);
    if (!v) throw ModelError("atom is not registered in the atom table");
    return *v;
  }

  // Signed DIMACS literal.
  int lit(const Literal& l) const { return l.positive ? var(l.atom) : -var(l.atom); }

  std::vector<int> lits(const Cube& cube) const {
    std::vector<int> out;
    out.reserve(cube.size());
    for (const Literal& l : cube) out.push_back(lit(l));
    return out;
  }

  const Atom& atom(int var) const { return atoms_.at(static_cast<std::size_t>(var - 1)); }
  int num_vars() const { return static_cast<int>(atoms_.size()); }
  bool empty() const { return atoms_.empty(); }
  const std::vector<Atom>& atoms() const { return atoms_; }

  // Features with at least one registered atom, ascending.
  std::vector<FeatureId> features() const {
    std::set<FeatureId> out;
    for (const Atom& a : atoms_) out.insert(a.feature);
    return {out.begin(), out.end()};
  }

  // Val_f: distinct thresholds used for f, strictly increasing.
  std::vector<Value> values(FeatureId f) const {
    std::set<Value> out;
    for (const Atom& a : atoms_) {
      if (a.feature == f) out.insert(a.value);
    }
    return {out.begin(), out.end()};
  }

  // Relations_f over canonical operators.
  std::set<AtomOp> relations(FeatureId f) const {
    std::set<AtomOp> out;
    for (const Atom& a : atoms_) {
      if (a.feature == f) out.insert(a.op);
    }
    return out;
  }

  friend bool operator==(const AtomTable& a, const AtomTable& b) { return a.atoms_ == b.atoms_; }

 private:
  std::vector<Atom> atoms_;
  std::map<Atom, int> index_;
};

inline AtomTable collect_atoms(const DecisionSet& ds, std::span<const Cube> extra = {}) {
  AtomTable table;
  for (const Rule& r : ds.rules()) {
    for (const Literal& l : r.body) table.intern(l.atom);
  }
  for (const Cube& c : extra) {
    for (const Literal& l : c) table.intern(l.atom);
  }
  return table;
}

enum class BackgroundMode { Alg2, CompleteOrder };

inline const char* to_string(BackgroundMode m) {
  return m == BackgroundMode::Alg2 ? "alg2" : "complete-order";
}

inline std::optional<BackgroundMode> parse_background_mode(std::string_view s) {
  if (s == "alg2" || s == "paper-alg2") return BackgroundMode::Alg2;
  if (s == "complete-order") return BackgroundMode::CompleteOrder;
  return std::nullopt;
}

// Background knowledge B: domain-coherence clauses followed by user clauses,
// all over atom-table variables.
class BackgroundKnowledge {
 public:
  BackgroundKnowledge() = default;
  BackgroundKnowledge(BackgroundMode mode, int num_vars, std::vector<sat::Clause> coherence,
                      std::vector<LiteralClause> user_literals = {},
                      std::vector<sat::Clause> user = {})
      : mode_(mode),
        num_vars_(num_vars),
        coherence_(std::move(coherence)),
        user_literals_(std::move(user_literals)),
        user_(std::move(user)) {}

  BackgroundMode mode() const { return mode_; }
  int num_vars() const { return num_vars_; }
  const std::vector<sat::Clause>& coherence() const { return coherence_; }
  const std::vector<sat::Clause>& user_clauses() const { return user_; }
  const std::vector<LiteralClause>& user_literal_clauses() const { return user_literals_; }

  // BS statistic.
  std::size_t size() const { return coherence_.size() + user_.size(); }

  sat::CnfFormula cnf() const {
    sat::CnfFormula f;
    f.num_vars = num_vars_;
    f.clauses = coherence_;
    f.clauses.insert(f.clauses.end(), user_.begin(), user_.end());
    return f;
  }

 private:
  BackgroundMode mode_ = BackgroundMode::CompleteOrder;
  int num_vars_ = 0;
  std::vector<sat::Clause> coherence_;
  std::vector<LiteralClause> user_literals_;
  std::vector<sat::Clause> user_;
};

namespace detail {

inline sat::Clause sorted_clause(sat::Clause c) {
  std::sort(c.begin(), c.end(), [](int a, int b) {
    return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
  });
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

class ClauseSink {
 public:
  void add(sat::Clause c) {
    c = sorted_clause(std::move(c));
    if (seen_.insert(c).second) clauses_.push_back(std::move(c));
  }
  bool contains(const sat::Clause& c) const { return seen_.count(sorted_clause(c)) != 0; }
  std::vector<sat::Clause> take() { return std::move(clauses_); }

 private:
  std::set<sat::Clause> seen_;
  std::vector<sat::Clause> clauses_;
};

// Emits the clause families of the domain-coherence procedure for one
// feature. A family is only emitted when its operator guard holds, and a
// clause only when every atom it mentions is registered.
inline void emit_alg2_feature(const AtomTable& table, FeatureId f, ClauseSink& sink) {
  const std::vector<Value> val = table.values(f);
  const std::set<AtomOp> rel = table.relations(f);
  const std::size_t n = val.size();
  auto has = [&](AtomOp op) { return rel.count(op) != 0; };
  auto v = [&](AtomOp op, std::size_t i) { return table.find(Atom{f, op, val[i]}); };
  auto emit = [&](std::initializer_list<std::pair<std::optional<int>, bool>> lits) {
    sat::Clause c;
    for (const auto& [var, positive] : lits) {
      if (!var) return;
      c.push_back(positive ? *var : -*var);
    }
    sink.add(std::move(c));
  };
  using enum AtomOp;
  if (has(Eq)) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) emit({{v(Eq, i), false}, {v(Eq, j), false}});
    }
  }
  if (has(Gt)) {
    for (std::size_t i = 0; i + 1 < n; ++i) emit({{v(Gt, i + 1), false}, {v(Gt, i), true}});
  }
  if (has(Ge)) {
    for (std::size_t i = 0; i + 1 < n; ++i) emit({{v(Ge, i + 1), false}, {v(Ge, i), true}});
  }
  if (has(Eq) && has(Ge)) {
    for (std::size_t i = 0; i < n; ++i) emit({{v(Eq, i), false}, {v(Ge, i), true}});
    for (std::size_t i = 0; i + 1 < n; ++i) emit({{v(Eq, i), false}, {v(Ge, i + 1), false}});
  }
  if (has(Eq) && has(Gt)) {
    for (std::size_t i = 0; i < n; ++i) emit({{v(Eq, i), false}, {v(Gt, i), false}});
    for (std::size_t i = 0; i + 1 < n; ++i) emit({{v(Eq, i + 1), false}, {v(Gt, i), true}});
  }
  if (has(Ge) && has(Gt)) {
    for (std::size_t i = 0; i < n; ++i) emit({{v(Gt, i), false}, {v(Ge, i), true}});
  }
  if (has(Eq) && has(Ge) && has(Gt)) {
    for (std::size_t i = 0; i < n; ++i) {
      emit({{v(Ge, i), false}, {v(Eq, i), true}, {v(Gt, i), true}});
    }
  }
}

// Order encoding of a feature's line: with sorted thresholds v_0 < ... <
// v_{n-1}, region 2k+1 is the point v_k and the even regions are the open
// intervals below, between and above them. Categorical features use one
// region per value plus one for every unmentioned value.
inline std::vector<bool> atom_regions(FeatureKind kind, const std::vector<Value>& val,
                                      const Atom& atom) {
  std::size_t k = static_cast<std::size_t>(
      std::lower_bound(val.begin(), val.end(), atom.value) - val.begin());
  if (kind == FeatureKind::Categorical) {
    std::vector<bool> regions(val.size() + 1, false);
    regions[k] = true;
    return regions;
  }
  std::vector<bool> regions(2 * val.size() + 1, false);
  std::size_t point = 2 * k + 1;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    switch (atom.op) {
      case AtomOp::Eq: regions[r] = r == point; break;
      case AtomOp::Gt: regions[r] = r > point; break;
      case AtomOp::Ge: regions[r] = r >= point; break;
    }
  }
  return regions;
}

}  // namespace detail

inline BackgroundKnowledge build_alg2(const AtomTable& table) {
  detail::ClauseSink sink;
  for (FeatureId f : table.features()) detail::emit_alg2_feature(table, f, sink);
  return BackgroundKnowledge(BackgroundMode::Alg2, table.num_vars(), sink.take());
}

// Sound and complete for the mentioned atoms over a dense order: every valid
// binary clause between two atoms of the same feature, plus the three-way
// split (f >= v) -> (f = v) | (f > v). On a line, convex literals are jointly
// consistent iff pairwise consistent, and an interval minus finitely many
// points is empty only when it is a single point, which the three-way clause
// covers; so these clauses admit exactly the realizable assignments.
inline BackgroundKnowledge build_complete_order(const AtomTable& table, const FeatureSpace& space) {
  detail::ClauseSink sink;
  for (FeatureId f : table.features()) detail::emit_alg2_feature(table, f, sink);
  for (FeatureId f : table.features()) {
    const FeatureKind kind = space.at(f).kind;
    const std::vector<Value> val = table.values(f);
    std::vector<int> vars;
    std::vector<std::vector<bool>> regions;
    for (int var = 1; var <= table.num_vars(); ++var) {
      if (table.atom(var).feature != f) continue;
      vars.push_back(var);
      regions.push_back(detail::atom_regions(kind, val, table.atom(var)));
    }
    for (std::size_t a = 0; a < vars.size(); ++a) {
      for (std::size_t b = a + 1; b < vars.size(); ++b) {
        for (int signs = 0; signs < 4; ++signs) {
          bool pa = (signs & 1) != 0;
          bool pb = (signs & 2) != 0;
          bool meet = false;
          for (std::size_t r = 0; r < regions[a].size() && !meet; ++r) {
            meet = regions[a][r] == pa && regions[b][r] == pb;
          }
          if (!meet) sink.add({pa ? -vars[a] : vars[a], pb ? -vars[b] : vars[b]});
        }
      }
    }
    if (kind == FeatureKind::Numeric) {
      for (const Value& v : val) {
        auto eq = table.find(Atom{f, AtomOp::Eq, v});
        auto gt = table.find(Atom{f, AtomOp::Gt, v});
        auto ge = table.find(Atom{f, AtomOp::Ge, v});
        if (eq && gt && ge) sink.add({-*ge, *eq, *gt});
      }
    }
  }
  return BackgroundKnowledge(BackgroundMode::CompleteOrder, table.num_vars(), sink.take());
}

inline BackgroundKnowledge build_background(const AtomTable& table, const FeatureSpace& space,
                                            BackgroundMode mode) {
  return mode == BackgroundMode::Alg2 ? build_alg2(table) : build_complete_order(table, space);
}

// B' = B ∧ user CNF. Atoms first seen in the user clauses are registered and
// the coherence clauses regenerated. Clauses already present are dropped.
inline BackgroundKnowledge merge_user_constraints(const BackgroundKnowledge& bk, AtomTable& table,
                                                  const FeatureSpace& space,
                                                  const std::vector<LiteralClause>& user) {
  for (const LiteralClause& c : user) {
    if (c.empty()) throw ModelError("empty background clause");
    for (const Literal& l : c) {
      space.at(l.atom.feature);
      table.intern(l.atom);
    }
  }
  BackgroundKnowledge base = build_background(table, space, bk.mode());
  detail::ClauseSink sink;
  for (const sat::Clause& c : base.coherence()) sink.add(c);
  std::vector<sat::Clause> coherence = base.coherence();
  std::vector<LiteralClause> literals = bk.user_literal_clauses();
  std::vector<sat::Clause> clauses;
  for (const LiteralClause& c : literals) {
    sat::Clause cl = detail::sorted_clause(table.lits(c));
    if (!sink.contains(cl)) {
      sink.add(cl);
      clauses.push_back(detail::sorted_clause(cl));
    }
  }
  for (const LiteralClause& c : user) {
    sat::Clause cl = detail::sorted_clause(table.lits(c));
    if (sink.contains(cl)) continue;
    sink.add(cl);
    clauses.push_back(std::move(cl));
    literals.push_back(c);
  }
  return BackgroundKnowledge(bk.mode(), table.num_vars(), std::move(coherence), std::move(literals),
                             std::move(clauses));
}

// The background theory and the atom table it is expressed over.
struct Theory {
  AtomTable table;
  BackgroundKnowledge bk;
};

inline Theory build_theory(const DecisionSet& ds, const std::vector<LiteralClause>& user,
                           BackgroundMode mode, std::span<const Cube> extra = {}) {
  Theory t;
  t.table = collect_atoms(ds, extra);
  t.bk = build_background(t.table, ds.space(), mode);
  if (!user.empty()) t.bk = merge_user_constraints(t.bk, t.table, ds.space(), user);
  return t;
}

// "c atom <var> <feature> <op> <value>" legend lines for DIMACS export.
inline std::vector<std::string> atom_legend(const AtomTable& table, const FeatureSpace& space) {
  std::vector<std::string> out;
  for (int v = 1; v <= table.num_vars(); ++v) {
    const Atom& a = table.atom(v);
    out.push_back("atom " + std::to_string(v) + " " + space.at(a.feature).name + " " +
                  to_string(a.op) + " " + value_to_string(a.value));
  }
  return out;
}

inline bool fires(const AtomTable& table, const Cube& body, const std::vector<bool>& assignment) {
  for (const Literal& l : body) {
    if (assignment[static_cast<std::size_t>(table.var(l.atom))] != l.positive) return false;
  }
  return true;
}

// Atom truth values of a concrete point, index 0 unused.
inline std::vector<bool> point_assignment(const AtomTable& table, const Point& x) {
  std::vector<bool> out(static_cast<std::size_t>(table.num_vars()) + 1, false);
  for (int v = 1; v <= table.num_vars(); ++v) {
    out[static_cast<std::size_t>(v)] = literal_holds(x, Literal{table.atom(v), true});
  }
  return out;
}

// The classifier over atom assignments (index 0 unused). Points violating B
// map to Kind::Invalid.
inline Prediction predict(const DecisionSet& ds, const AtomTable& table,
                          const BackgroundKnowledge& bk, const std::vector<bool>& assignment) {
  if (!bk.cnf().satisfied_by(assignment)) return Prediction{};
  std::vector<bool> firing;
  for (const Rule& r : ds.rules()) firing.push_back(fires(table, r.body, assignment));
  return resolve_prediction(ds, firing);
}

}  // namespace dsaudit

#endif  // DSAUDIT_BACKGROUND_HPP
