#ifndef DSAUDIT_ORACLE_HPP
#define DSAUDIT_ORACLE_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dsaudit/analysis.hpp"
#include "dsaudit/background.hpp"
#include "dsaudit/model.hpp"

// Brute-force ground truth over an interval-representative grid. Nothing in
// here goes through the SAT encoding: literals are evaluated arithmetically
// and user background clauses are evaluated literal by literal.
namespace dsaudit::oracle {

using dsaudit::Point;

inline bool eval_literal(const Point& x, const Literal& lit) {
  const Value& v = x.at(lit.atom.feature - 1);
  bool truth = false;
  switch (lit.atom.op) {
    case AtomOp::Eq: truth = v == lit.atom.value; break;
    case AtomOp::Gt: truth = std::get<Decimal>(v) > std::get<Decimal>(lit.atom.value); break;
    case AtomOp::Ge: truth = std::get<Decimal>(v) >= std::get<Decimal>(lit.atom.value); break;
  }
  return truth == lit.positive;
}

inline bool eval_cube(const Point& x, const Cube& cube) {
  return std::all_of(cube.begin(), cube.end(), [&](const Literal& l) { return eval_literal(x, l); });
}

inline bool eval_clause(const Point& x, const LiteralClause& clause) {
  return std::any_of(clause.begin(), clause.end(),
                     [&](const Literal& l) { return eval_literal(x, l); });
}

class GridTooLarge : public std::runtime_error {
 public:
  explicit GridTooLarge(std::uint64_t estimate)
      : std::runtime_error("grid has ~" + std::to_string(estimate) +
                           " cells, above the configured bound"),
        estimate_(estimate) {}
  std::uint64_t estimate() const { return estimate_; }

 private:
  std::uint64_t estimate_;
};

struct OracleOptions {
  std::uint64_t cell_bound = 1'000'000;
};

// Per numeric feature: every mentioned threshold, the exact midpoint between
// consecutive thresholds, one value below the minimum and one above the
// maximum. Per categorical feature: every mentioned value plus one fresh
// token. Every region of the line cut by the thresholds gets a point.
class FiniteGrid {
 public:
  FiniteGrid(const FeatureSpace& space, const std::vector<std::set<Value>>& mentioned) {
    for (const Feature& f : space.features()) {
      const std::set<Value>& vals = mentioned.at(f.id - 1);
      std::vector<Value> reps;
      if (f.kind == FeatureKind::Numeric) {
        std::vector<Decimal> sorted;
        for (const Value& v : vals) sorted.push_back(std::get<Decimal>(v));
        if (sorted.empty()) {
          reps.emplace_back(Decimal(0));
        } else {
          reps.emplace_back(sorted.front() - Decimal(1));
          for (std::size_t k = 0; k < sorted.size(); ++k) {
            if (k > 0) reps.emplace_back(sorted[k - 1].midpoint(sorted[k]));
            reps.emplace_back(sorted[k]);
          }
          reps.emplace_back(sorted.back() + Decimal(1));
        }
      } else {
        std::string other = "<other>";
        while (vals.count(Value(other)) != 0) other += "'";
        for (const Value& v : vals) reps.push_back(v);
        reps.emplace_back(other);
      }
      reps_.push_back(std::move(reps));
    }
  }

  // Collects every value mentioned by the decision sets, the user clauses
  // and the extra points.
  static FiniteGrid covering(const FeatureSpace& space, std::span<const DecisionSet* const> models,
                             const std::vector<LiteralClause>& user,
                             std::span<const Point> extra = {}) {
    std::vector<std::set<Value>> mentioned(space.size());
    auto note = [&](const Literal& l) { mentioned.at(l.atom.feature - 1).insert(l.atom.value); };
    for (const DecisionSet* ds : models) {
      for (const Rule& r : ds->rules()) {
        for (const Literal& l : r.body) note(l);
      }
    }
    for (const LiteralClause& c : user) {
      for (const Literal& l : c) note(l);
    }
    for (const Point& p : extra) {
      for (std::size_t f = 0; f < p.size(); ++f) mentioned.at(f).insert(p[f]);
    }
    return FiniteGrid(space, mentioned);
  }

  std::size_t dimensions() const { return reps_.size(); }
  const std::vector<Value>& representatives(FeatureId f) const { return reps_.at(f - 1); }

  // Number of cells, saturating at uint64 max.
  std::uint64_t size() const {
    std::uint64_t n = 1;
    for (const auto& r : reps_) {
      if (n > std::numeric_limits<std::uint64_t>::max() / r.size()) {
        return std::numeric_limits<std::uint64_t>::max();
      }
      n *= r.size();
    }
    return n;
  }

  Point point(const std::vector<std::uint32_t>& index) const {
    Point p;
    p.reserve(reps_.size());
    for (std::size_t f = 0; f < reps_.size(); ++f) p.push_back(reps_[f][index[f]]);
    return p;
  }

  // Odometer enumeration: calls fn(index vector) for every cell.
  template <class F>
  void for_each_index(F&& fn) const {
    std::vector<std::uint32_t> index(reps_.size(), 0);
    while (true) {
      fn(index);
      std::size_t f = 0;
      while (f < reps_.size()) {
        if (++index[f] < reps_[f].size()) break;
        index[f] = 0;
        ++f;
      }
      if (f == reps_.size()) return;
    }
  }

 private:
  std::vector<std::vector<Value>> reps_;
};

// Literal truth per (valid point, rule, position) for one decision set.
class Evaluation {
 public:
  Evaluation(const DecisionSet& ds, const std::vector<Point>& points) : ds_(&ds) {
    rules_ = ds.rules().size();
    for (const Rule& r : ds.rules()) {
      if (r.body.size() > 63) throw std::invalid_argument("oracle supports bodies up to 63 literals");
      full_.push_back((std::uint64_t{1} << r.body.size()) - 1);
    }
    masks_.reserve(points.size() * rules_);
    for (const Point& x : points) {
      for (const Rule& r : ds.rules()) {
        std::uint64_t m = 0;
        for (std::size_t k = 0; k < r.body.size(); ++k) {
          if (eval_literal(x, r.body[k])) m |= std::uint64_t{1} << k;
        }
        masks_.push_back(m);
      }
    }
    points_ = points.size();
  }

  const DecisionSet& ds() const { return *ds_; }
  std::size_t points() const { return points_; }

  // Rule at position `r` of ds().rules().
  bool fires(std::size_t p, std::size_t r) const { return masks_[p * rules_ + r] == full_[r]; }

  // The rule with literal `skip` deleted fires.
  bool fires_without(std::size_t p, std::size_t r, std::size_t skip) const {
    return (masks_[p * rules_ + r] | (std::uint64_t{1} << skip)) == full_[r];
  }

  bool literal(std::size_t p, std::size_t r, std::size_t k) const {
    return ((masks_[p * rules_ + r] >> k) & 1u) != 0;
  }

  // x ∈ S_DS(o)
  bool covered(std::size_t p, const Outcome& o) const {
    for (std::size_t r = 0; r < rules_; ++r) {
      if (ds_->rules()[r].outcome == o && fires(p, r)) return true;
    }
    return false;
  }

  Prediction predict(std::size_t p) const {
    std::vector<bool> firing(rules_);
    for (std::size_t r = 0; r < rules_; ++r) firing[r] = fires(p, r);
    return resolve_prediction(*ds_, firing);
  }

 private:
  const DecisionSet* ds_;
  std::size_t rules_ = 0;
  std::size_t points_ = 0;
  std::vector<std::uint64_t> full_;
  std::vector<std::uint64_t> masks_;
};

class Oracle {
 public:
  Oracle(FiniteGrid grid, std::vector<LiteralClause> user, OracleOptions options = {})
      : grid_(std::move(grid)), user_(std::move(user)) {
    std::uint64_t cells = grid_.size();
    if (cells > options.cell_bound) throw GridTooLarge(cells);
    grid_.for_each_index([&](const std::vector<std::uint32_t>& index) {
      Point x = grid_.point(index);
      if (valid(x)) valid_.push_back(std::move(x));
    });
  }

  // Grid over everything `ds` and `user` mention, plus the extra points.
  static Oracle for_model(const DecisionSet& ds, const std::vector<LiteralClause>& user,
                          std::span<const Point> extra = {}, OracleOptions options = {}) {
    const DecisionSet* models[] = {&ds};
    return Oracle(FiniteGrid::covering(ds.space(), models, user, extra), user, options);
  }

  const FiniteGrid& grid() const { return grid_; }
  const std::vector<Point>& valid_points() const { return valid_; }

  bool valid(const Point& x) const {
    return std::all_of(user_.begin(), user_.end(),
                       [&](const LiteralClause& c) { return eval_clause(x, c); });
  }

  Evaluation evaluate(const DecisionSet& ds) const { return Evaluation(ds, valid_); }

  // cov(F, L, B)
  std::vector<Point> cover(const Cube& cube) const {
    std::vector<Point> out;
    for (const Point& x : valid_) {
      if (eval_cube(x, cube)) out.push_back(x);
    }
    return out;
  }

  Prediction predict(const DecisionSet& ds, const Point& x) const {
    if (!valid(x)) return Prediction{};
    std::vector<bool> firing;
    for (const Rule& r : ds.rules()) firing.push_back(eval_cube(x, r.body));
    return resolve_prediction(ds, firing);
  }

  static bool overlap(const Evaluation& e, std::size_t i, std::size_t j) {
    std::size_t ri = *e.ds().position_of(i);
    std::size_t rj = *e.ds().position_of(j);
    for (std::size_t p = 0; p < e.points(); ++p) {
      if (e.fires(p, ri) && e.fires(p, rj)) return true;
    }
    return false;
  }
  bool overlap(const DecisionSet& ds, std::size_t i, std::size_t j) const {
    return overlap(evaluate(ds), i, j);
  }

  static bool default_reachable(const Evaluation& e) {
    for (std::size_t p = 0; p < e.points(); ++p) {
      bool any = false;
      for (std::size_t r = 0; r < e.ds().rules().size() && !any; ++r) any = e.fires(p, r);
      if (!any) return true;
    }
    return false;
  }
  bool default_reachable(const DecisionSet& ds) const { return default_reachable(evaluate(ds)); }

  // S_DS(o_i) is unchanged when rule i is dropped.
  static bool rule_redundant(const Evaluation& e, std::size_t id) {
    const std::size_t ri = *e.ds().position_of(id);
    const Outcome& o = e.ds().rules()[ri].outcome;
    for (std::size_t p = 0; p < e.points(); ++p) {
      if (!e.fires(p, ri)) continue;
      bool other = false;
      for (std::size_t r = 0; r < e.ds().rules().size() && !other; ++r) {
        other = r != ri && e.ds().rules()[r].outcome == o && e.fires(p, r);
      }
      if (!other) return false;
    }
    return true;
  }
  bool rule_redundant(const DecisionSet& ds, std::size_t id) const {
    return rule_redundant(evaluate(ds), id);
  }

  // Deleting the literal leaves every S_DS(o) unchanged. Local when no valid
  // point satisfies the rest of the body together with the literal's
  // negation.
  static LiteralVerdict literal_redundant(const Evaluation& e, std::size_t id, std::size_t pos) {
    const std::size_t ri = *e.ds().position_of(id);
    const Outcome& o = e.ds().rules()[ri].outcome;
    bool local = true;
    for (std::size_t p = 0; p < e.points(); ++p) {
      bool widened = e.fires_without(p, ri, pos);
      if (!widened || e.fires(p, ri)) continue;
      local = false;
      if (!e.covered(p, o)) return LiteralVerdict::NotRedundant;
    }
    return local ? LiteralVerdict::Local : LiteralVerdict::Global;
  }
  LiteralVerdict literal_redundant(const DecisionSet& ds, std::size_t id, std::size_t pos) const {
    return literal_redundant(evaluate(ds), id, pos);
  }

  // For every outcome o of either set, S_DS1(o) = S_DS2(o).
  bool equivalent(const DecisionSet& a, const DecisionSet& b) const {
    Evaluation ea = evaluate(a);
    Evaluation eb = evaluate(b);
    std::vector<Outcome> outcomes = distinct_outcomes(a);
    for (const Outcome& o : distinct_outcomes(b)) outcomes.push_back(o);
    for (std::size_t p = 0; p < valid_.size(); ++p) {
      for (const Outcome& o : outcomes) {
        if (ea.covered(p, o) != eb.covered(p, o)) return false;
      }
    }
    return true;
  }

  // Fixing the features in X to v's values forces κ(x) = κ(v) on every valid
  // grid point. v's values must be grid representatives.
  bool waxp_holds(const DecisionSet& ds, const Point& v, const std::vector<FeatureId>& features) const {
    for (FeatureId f : features) {
      const auto& reps = grid_.representatives(f);
      if (std::find(reps.begin(), reps.end(), v.at(f - 1)) == reps.end()) {
        throw std::invalid_argument("instance value is not on the grid");
      }
    }
    Prediction target = predict(ds, v);
    if (target.kind == Prediction::Kind::Invalid) throw std::invalid_argument("instance violates B");
    if (!target.outcome) return false;
    for (const Point& x : valid_) {
      bool agrees = std::all_of(features.begin(), features.end(),
                                [&](FeatureId f) { return x[f - 1] == v[f - 1]; });
      if (!agrees) continue;
      Prediction got = predict(ds, x);
      if (!got.outcome || !(*got.outcome == *target.outcome)) return false;
    }
    return true;
  }

  // WAXp whose every proper subset fails. Checking the maximal proper subsets
  // suffices: supersets of a WAXp are WAXps.
  bool axp_holds(const DecisionSet& ds, const Point& v, const std::vector<FeatureId>& features) const {
    if (!waxp_holds(ds, v, features)) return false;
    for (std::size_t k = 0; k < features.size(); ++k) {
      std::vector<FeatureId> smaller = features;
      smaller.erase(smaller.begin() + static_cast<std::ptrdiff_t>(k));
      if (waxp_holds(ds, v, smaller)) return false;
    }
    return true;
  }

 private:
  FiniteGrid grid_;
  std::vector<LiteralClause> user_;
  std::vector<Point> valid_;
};

// Turns an atom assignment into a grid point with the same atom truth
// values, or nullopt when no such point exists (the assignment has no
// arithmetic witness).
inline std::optional<Point> lift_witness(const FiniteGrid& grid, const FeatureSpace& space,
                                         const AtomTable& table, const std::vector<bool>& assignment) {
  Point out;
  for (const Feature& f : space.features()) {
    const auto& reps = grid.representatives(f.id);
    std::optional<Value> chosen;
    for (const Value& candidate : reps) {
      bool ok = true;
      for (int var = 1; var <= table.num_vars() && ok; ++var) {
        const Atom& a = table.atom(var);
        if (a.feature != f.id) continue;
        Point probe(space.size(), Value(Decimal(0)));
        probe[f.id - 1] = candidate;
        ok = eval_literal(probe, Literal{a, true}) == assignment.at(static_cast<std::size_t>(var));
      }
      if (ok) {
        chosen = candidate;
        break;
      }
    }
    if (!chosen) return std::nullopt;
    out.push_back(*chosen);
  }
  return out;
}

}  // namespace dsaudit::oracle

#endif  // DSAUDIT_ORACLE_HPP
