// Shared fixtures for the test suites: seeded random decision sets and an
// interval-arithmetic satisfiability check that shares no code with the SAT
// encoding or the grid oracle.
#ifndef DSAUDIT_TESTS_SUPPORT_HPP
#define DSAUDIT_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dsaudit/model.hpp"

namespace dsaudit::fixtures {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

struct RandomShape {
  std::size_t max_features = 4;
  std::size_t max_thresholds = 4;
  std::size_t max_rules = 8;
  std::size_t max_body = 3;
  std::size_t max_user_clauses = 2;
  std::size_t outcomes = 3;
  bool categorical = true;
  bool numeric = true;
  bool equality_only = false;  // positive equality literals only
};

struct RandomModel {
  DecisionSet ds;
  std::vector<LiteralClause> user;
  std::vector<std::vector<Value>> values;  // thresholds per feature
};

inline const std::vector<std::string>& numeric_pool() {
  static const std::vector<std::string> pool = {"-2", "0", "1", "1.5", "2", "3.25", "5", "7"};
  return pool;
}

inline const std::vector<std::string>& categorical_pool() {
  static const std::vector<std::string> pool = {"a", "b", "c", "d", "e"};
  return pool;
}

inline Literal random_literal(Rng& rng, const FeatureSpace& space,
                              const std::vector<std::vector<Value>>& values, bool equality_only) {
  FeatureId f = pick(rng, space.size()) + 1;
  const Value& v = values[f - 1][pick(rng, values[f - 1].size())];
  if (equality_only) return Literal{Atom{f, AtomOp::Eq, v}, true};
  const Feature& feat = space.at(f);
  RelOp op;
  if (feat.kind == FeatureKind::Categorical) {
    op = coin(rng, 0.7) ? RelOp::Eq : RelOp::Ne;
  } else {
    static const RelOp ops[] = {RelOp::Eq, RelOp::Ne, RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge};
    op = ops[pick(rng, 6)];
  }
  return canonicalize(space, RawLiteral{f, op, v});
}

inline RandomModel random_model(Rng& rng, const RandomShape& shape = {}) {
  while (true) {
    FeatureSpace space;
    std::vector<std::vector<Value>> values;
    std::size_t m = 1 + pick(rng, shape.max_features);
    for (std::size_t k = 0; k < m; ++k) {
      bool cat = shape.categorical && (!shape.numeric || coin(rng));
      space.add("x" + std::to_string(k + 1), cat ? FeatureKind::Categorical : FeatureKind::Numeric);
      const auto& pool = cat ? categorical_pool() : numeric_pool();
      std::vector<std::string> names = pool;
      std::shuffle(names.begin(), names.end(), rng);
      std::size_t n = 1 + pick(rng, shape.max_thresholds);
      std::vector<Value> vals;
      for (std::size_t t = 0; t < n; ++t) {
        if (cat) vals.emplace_back(names[t]);
        else vals.emplace_back(*Decimal::parse(names[t]));
      }
      values.push_back(std::move(vals));
    }
    std::vector<std::pair<Cube, Outcome>> rules;
    std::size_t r = 1 + pick(rng, shape.max_rules);
    for (std::size_t k = 0; k < r; ++k) {
      Cube body;
      std::size_t len = 1 + pick(rng, shape.max_body);
      for (std::size_t t = 0; t < len; ++t) body.push_back(random_literal(rng, space, values, shape.equality_only));
      body = dedup_cube(body);
      if (syntactically_contradictory(body)) continue;
      rules.emplace_back(body, Outcome(std::to_string(pick(rng, shape.outcomes))));
    }
    std::vector<LiteralClause> user;
    std::size_t u = pick(rng, shape.max_user_clauses + 1);
    for (std::size_t k = 0; k < u; ++k) {
      LiteralClause c;
      std::size_t len = 1 + pick(rng, 2);
      for (std::size_t t = 0; t < len; ++t) c.push_back(random_literal(rng, space, values, false));
      user.push_back(std::move(c));
    }
    if (rules.empty()) continue;
    try {
      DecisionSet ds = DecisionSet::numbered(space, std::move(rules),
                                             Outcome(std::to_string(pick(rng, shape.outcomes))));
      return RandomModel{std::move(ds), std::move(user), std::move(values)};
    } catch (const ModelError&) {
      continue;
    }
  }
}

// Does some assignment of real values (numeric) or strings from an open
// domain (categorical) satisfy every literal? Decided per feature from the
// bounds the literals impose.
inline bool arithmetic_sat(const FeatureSpace& space, const std::vector<Literal>& lits) {
  std::map<FeatureId, std::vector<Literal>> by_feature;
  for (const Literal& l : lits) by_feature[l.atom.feature].push_back(l);
  for (const auto& [f, ls] : by_feature) {
    if (space.at(f).kind == FeatureKind::Categorical) {
      std::set<std::string> eq;
      std::set<std::string> ne;
      for (const Literal& l : ls) (l.positive ? eq : ne).insert(std::get<std::string>(l.atom.value));
      if (eq.size() > 1) return false;
      if (eq.size() == 1 && ne.count(*eq.begin())) return false;
      continue;
    }
    // lower bound (value, strict), upper bound (value, strict)
    std::optional<std::pair<Decimal, bool>> lo;
    std::optional<std::pair<Decimal, bool>> hi;
    std::set<Decimal> eq;
    std::set<Decimal> ne;
    auto raise = [&](Decimal v, bool strict) {
      if (!lo || v > lo->first || (v == lo->first && strict)) lo = std::pair{v, strict};
    };
    auto lower = [&](Decimal v, bool strict) {
      if (!hi || v < hi->first || (v == hi->first && strict)) hi = std::pair{v, strict};
    };
    for (const Literal& l : ls) {
      Decimal v = std::get<Decimal>(l.atom.value);
      switch (l.atom.op) {
        case AtomOp::Eq: (l.positive ? eq : ne).insert(v); break;
        case AtomOp::Gt: l.positive ? raise(v, true) : lower(v, false); break;
        case AtomOp::Ge: l.positive ? raise(v, false) : lower(v, true); break;
      }
    }
    auto inside = [&](const Decimal& x) {
      if (lo && (x < lo->first || (x == lo->first && lo->second))) return false;
      if (hi && (x > hi->first || (x == hi->first && hi->second))) return false;
      return ne.count(x) == 0;
    };
    if (eq.size() > 1) return false;
    if (eq.size() == 1) {
      if (!inside(*eq.begin())) return false;
      continue;
    }
    if (lo && hi) {
      if (lo->first > hi->first) return false;
      if (lo->first == hi->first) {
        if (lo->second || hi->second || ne.count(lo->first)) return false;
      }
    }
    // a non-degenerate interval is infinite, finitely many exclusions cannot empty it
  }
  return true;
}

}  // namespace dsaudit::fixtures

#endif  // DSAUDIT_TESTS_SUPPORT_HPP
