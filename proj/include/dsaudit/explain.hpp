#ifndef DSAUDIT_EXPLAIN_HPP
#define DSAUDIT_EXPLAIN_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dsaudit/analysis.hpp"
#include "dsaudit/background.hpp"
#include "dsaudit/model.hpp"
#include "dsaudit/oracle.hpp"

namespace dsaudit {

enum class ExplanationKind { WAXp, AXp };

inline const char* to_string(ExplanationKind k) { return k == ExplanationKind::AXp ? "AXp" : "WAXp"; }

struct Explanation {
  Point instance;
  Outcome prediction;
  std::vector<FeatureId> features;  // sorted
  ExplanationKind kind = ExplanationKind::WAXp;
  std::size_t rule_id = 0;
  std::vector<std::string> justification;
};

struct Refusal {
  std::string reason;
  std::optional<std::pair<std::size_t, std::size_t>> pair;
  std::optional<Literal> literal;
  std::optional<Certificate> certificate;
};

using ExplainResult = std::variant<Explanation, Refusal>;

inline bool explained(const ExplainResult& r) { return std::holds_alternative<Explanation>(r); }

namespace detail {

inline std::vector<FeatureId> body_features(const Cube& body) {
  std::vector<FeatureId> out;
  for (const Literal& l : body) out.push_back(l.atom.feature);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Gates shared by both kinds. Returns the refusal, or nullopt when R_k fires
// on a valid point and has an equality-only body.
inline std::optional<Refusal> rule_gate(const Analyzer& analyzer, const DecisionSet& ds,
                                        std::size_t k, const Point& point) {
  if (!ds.position_of(k)) return Refusal{"no rule with id " + std::to_string(k), {}, {}, {}};
  if (point.size() != ds.space().size()) {
    return Refusal{"point does not assign every feature", {}, {}, {}};
  }
  const Theory& t = analyzer.theory();
  for (const Literal& l : ds.rule(k).body) {
    if (!t.table.find(l.atom)) return Refusal{"rule atoms missing from the theory", {}, {}, {}};
  }
  if (!t.bk.cnf().satisfied_by(point_assignment(t.table, point))) {
    return Refusal{"point violates the background knowledge", {}, {}, {}};
  }
  for (const Literal& l : ds.rule(k).body) {
    if (!literal_holds(point, l)) return Refusal{"rule does not fire on the point", {}, {}, {}};
  }
  for (const Literal& l : ds.rule(k).body) {
    if (l.atom.op != AtomOp::Eq || !l.positive) {
      return Refusal{"proposition precondition violated", {}, l, {}};
    }
  }
  return std::nullopt;
}

inline std::optional<Refusal> overlap_gate(Analyzer& analyzer, const DecisionSet& ds, std::size_t k) {
  const Rule& rk = ds.rule(k);
  for (const Rule& rj : ds.rules()) {
    if (rj.outcome == rk.outcome) continue;
    Certificate c = analyzer.check(Query{[&] {
      Cube both = rk.body;
      both.insert(both.end(), rj.body.begin(), rj.body.end());
      return both;
    }(), {}});
    auto pair = std::minmax(rk.id, rj.id);
    if (c.status == sat::Status::Sat) {
      return Refusal{"negative overlap", std::pair{pair.first, pair.second}, {}, std::move(c)};
    }
    if (c.status == sat::Status::Timeout) {
      return Refusal{"overlap undecided", std::pair{pair.first, pair.second}, {}, std::move(c)};
    }
  }
  return std::nullopt;
}

}  // namespace detail

// The features of L_k form a WAXp for a point where R_k fires, provided
// L_k is a cube of equalities and no rule with another outcome can fire
// together with R_k.
inline ExplainResult waxp_from_rule(Analyzer& analyzer, const DecisionSet& ds, std::size_t k,
                                    const Point& point) {
  if (auto r = detail::rule_gate(analyzer, ds, k, point)) return *r;
  if (auto r = detail::overlap_gate(analyzer, ds, k)) return *r;
  const Rule& rk = ds.rule(k);
  return Explanation{point,
                     rk.outcome,
                     detail::body_features(rk.body),
                     ExplanationKind::WAXp,
                     k,
                     {"rule " + std::to_string(k) + " fires", "no negative overlap involving rule " +
                                                               std::to_string(k)}};
}

// AXp: the WAXp gates, no negative overlap anywhere in the set, and no
// literal of L_k is locally or globally redundant. Also refused when the
// default rule is reachable and predicts o_k: a point firing no rule then
// agrees with the prediction, and dropping a feature may keep it sufficient.
inline ExplainResult axp_from_rule(Analyzer& analyzer, const DecisionSet& ds, std::size_t k,
                                   const Point& point) {
  if (auto r = detail::rule_gate(analyzer, ds, k, point)) return *r;
  OverlapResult overlap = analyzer.overlap_pairs(ds);
  for (const OverlapPair& p : overlap.pairs) {
    if (p.kind != OverlapKind::Negative) continue;
    Cube both = ds.rule(p.i).body;
    const Cube& other = ds.rule(p.j).body;
    both.insert(both.end(), other.begin(), other.end());
    return Refusal{"negative overlap", std::pair{p.i, p.j}, {},
                   Certificate{Query{both, {}}, sat::Status::Sat, p.witness}};
  }
  if (!overlap.undecided.empty()) {
    return Refusal{"overlap undecided", overlap.undecided.front(), {}, {}};
  }
  const Rule& rk = ds.rule(k);
  if (ds.default_outcome() == rk.outcome) {
    DefaultReachability d = analyzer.default_reachable(ds);
    if (d.reachable != Verdict::No) {
      return Refusal{d.reachable == Verdict::Yes ? "default rule reachable with the same outcome"
                                                 : "default reachability undecided",
                     {}, {}, std::move(d.certificate)};
    }
  }
  for (std::size_t pos = 0; pos < rk.body.size(); ++pos) {
    LiteralCheck c = analyzer.literal_redundant(ds, k, pos, rk.body.size() - pos, true);
    if (c.verdict == LiteralVerdict::NotRedundant) continue;
    std::string reason = c.verdict == LiteralVerdict::Undecided
                             ? "literal redundancy undecided"
                             : std::string(to_string(c.verdict)) + " redundant literal";
    return Refusal{reason, {}, rk.body[pos], std::move(c.certificate)};
  }
  return Explanation{point,
                     rk.outcome,
                     detail::body_features(rk.body),
                     ExplanationKind::AXp,
                     k,
                     {"rule " + std::to_string(k) + " fires", "no negative overlap",
                      "no redundant literal in rule " + std::to_string(k)}};
}

enum class Validity { ValidAXp, ValidWAXp, Invalid };

inline const char* to_string(Validity v) {
  switch (v) {
    case Validity::ValidAXp: return "valid-AXp";
    case Validity::ValidWAXp: return "valid-WAXp";
    case Validity::Invalid: return "invalid";
  }
  return "?";
}

// Exhausts the grid points that agree with the instance on X. Throws
// oracle::GridTooLarge when the grid exceeds the cell bound.
inline Validity verify_explanation(const DecisionSet& ds, const std::vector<LiteralClause>& user,
                                   const Explanation& e, oracle::OracleOptions options = {}) {
  const Point points[] = {e.instance};
  oracle::Oracle o = oracle::Oracle::for_model(ds, user, points, options);
  Prediction p = o.predict(ds, e.instance);
  if (!p.outcome || !(*p.outcome == e.prediction)) return Validity::Invalid;
  if (!o.waxp_holds(ds, e.instance, e.features)) return Validity::Invalid;
  return o.axp_holds(ds, e.instance, e.features) ? Validity::ValidAXp : Validity::ValidWAXp;
}

}  // namespace dsaudit

#endif  // DSAUDIT_EXPLAIN_HPP
