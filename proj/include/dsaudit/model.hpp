#ifndef DSAUDIT_MODEL_HPP
#define DSAUDIT_MODEL_HPP

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dsaudit/decimal.hpp"

namespace dsaudit {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FeatureKind { Numeric, Categorical };

// Dense, 1-based feature identifier.
using FeatureId = std::size_t;

struct Feature {
  FeatureId id = 0;
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
};

class FeatureSpace {
 public:
  FeatureId add(std::string name, FeatureKind kind) {
    if (by_name_.count(name) != 0) {
      throw ModelError("duplicate feature '" + name + "'");
    }
    FeatureId id = features_.size() + 1;
    by_name_.emplace(name, id);
    features_.push_back(Feature{id, std::move(name), kind});
    return id;
  }

  std::optional<FeatureId> find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  const Feature& at(FeatureId id) const {
    if (id == 0 || id > features_.size()) {
      throw ModelError("unknown feature id " + std::to_string(id));
    }
    return features_[id - 1];
  }

  std::size_t size() const { return features_.size(); }
  const std::vector<Feature>& features() const { return features_; }

  friend bool operator==(const FeatureSpace& a, const FeatureSpace& b) {
    return a.by_name_ == b.by_name_ && a.features_.size() == b.features_.size() &&
           std::equal(a.features_.begin(), a.features_.end(), b.features_.begin(),
                      [](const Feature& x, const Feature& y) {
                        return x.id == y.id && x.name == y.name && x.kind == y.kind;
                      });
  }

 private:
  std::vector<Feature> features_;
  std::map<std::string, FeatureId> by_name_;
};

// Threshold value: exact decimal for numeric features, a token for
// categorical ones.
using Value = std::variant<Decimal, std::string>;

inline std::string value_to_string(const Value& v) {
  if (const auto* d = std::get_if<Decimal>(&v)) return d->to_string();
  return std::get<std::string>(v);
}

enum class RelOp { Eq, Ne, Lt, Le, Gt, Ge };

// Canonical operators. Ne, Le and Lt are negations of Eq, Gt and Ge.
enum class AtomOp { Eq, Gt, Ge };

inline const char* to_string(RelOp op) {
  switch (op) {
    case RelOp::Eq: return "=";
    case RelOp::Ne: return "!=";
    case RelOp::Lt: return "<";
    case RelOp::Le: return "<=";
    case RelOp::Gt: return ">";
    case RelOp::Ge: return ">=";
  }
  return "?";
}

inline const char* to_string(AtomOp op) {
  switch (op) {
    case AtomOp::Eq: return "=";
    case AtomOp::Gt: return ">";
    case AtomOp::Ge: return ">=";
  }
  return "?";
}

inline std::optional<RelOp> parse_rel_op(std::string_view text) {
  if (text == "=" || text == "==") return RelOp::Eq;
  if (text == "!=" || text == "<>" || text == "≠") return RelOp::Ne;
  if (text == "<") return RelOp::Lt;
  if (text == "<=" || text == "≤") return RelOp::Le;
  if (text == ">") return RelOp::Gt;
  if (text == ">=" || text == "≥") return RelOp::Ge;
  return std::nullopt;
}

struct Atom {
  FeatureId feature = 0;
  AtomOp op = AtomOp::Eq;
  Value value;

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom& a, const Atom& b) {
    if (auto c = a.feature <=> b.feature; c != 0) return c;
    if (auto c = a.value <=> b.value; c != 0) return c;
    return a.op <=> b.op;
  }
};

struct Literal {
  Atom atom;
  bool positive = true;

  Literal negated() const { return Literal{atom, !positive}; }

  friend bool operator==(const Literal&, const Literal&) = default;
  friend auto operator<=>(const Literal&, const Literal&) = default;
};

struct RawLiteral {
  FeatureId feature = 0;
  RelOp op = RelOp::Eq;
  Value value;

  friend bool operator==(const RawLiteral&, const RawLiteral&) = default;
};

inline bool admissible(FeatureKind kind, RelOp op) {
  return kind == FeatureKind::Numeric || op == RelOp::Eq || op == RelOp::Ne;
}

inline Literal canonicalize(const FeatureSpace& space, const RawLiteral& raw) {
  const Feature& f = space.at(raw.feature);
  if (!admissible(f.kind, raw.op)) {
    throw ModelError(std::string("operator '") + to_string(raw.op) +
                     "' is not admissible for categorical feature '" + f.name + "'");
  }
  bool numeric_value = std::holds_alternative<Decimal>(raw.value);
  if (numeric_value != (f.kind == FeatureKind::Numeric)) {
    throw ModelError("value '" + value_to_string(raw.value) + "' has the wrong type for feature '" +
                     f.name + "'");
  }
  switch (raw.op) {
    case RelOp::Eq: return Literal{Atom{raw.feature, AtomOp::Eq, raw.value}, true};
    case RelOp::Ne: return Literal{Atom{raw.feature, AtomOp::Eq, raw.value}, false};
    case RelOp::Gt: return Literal{Atom{raw.feature, AtomOp::Gt, raw.value}, true};
    case RelOp::Le: return Literal{Atom{raw.feature, AtomOp::Gt, raw.value}, false};
    case RelOp::Ge: return Literal{Atom{raw.feature, AtomOp::Ge, raw.value}, true};
    case RelOp::Lt: return Literal{Atom{raw.feature, AtomOp::Ge, raw.value}, false};
  }
  throw ModelError("unknown operator");
}

// Canonical literals are fixed points.
inline Literal canonicalize(const Literal& lit) { return lit; }

inline RawLiteral to_raw(const Literal& lit) {
  RelOp op = RelOp::Eq;
  switch (lit.atom.op) {
    case AtomOp::Eq: op = lit.positive ? RelOp::Eq : RelOp::Ne; break;
    case AtomOp::Gt: op = lit.positive ? RelOp::Gt : RelOp::Le; break;
    case AtomOp::Ge: op = lit.positive ? RelOp::Ge : RelOp::Lt; break;
  }
  return RawLiteral{lit.atom.feature, op, lit.atom.value};
}

inline std::string format_literal(const FeatureSpace& space, const Literal& lit) {
  RawLiteral raw = to_raw(lit);
  return space.at(raw.feature).name + " " + to_string(raw.op) + " " + value_to_string(raw.value);
}

inline std::string format_atom(const FeatureSpace& space, const Atom& atom) {
  return format_literal(space, Literal{atom, true});
}

// Conjunction of canonical literals; order is the literal position order.
using Cube = std::vector<Literal>;

// Disjunction of canonical literals (user background constraints).
using LiteralClause = std::vector<Literal>;

inline std::string format_cube(const FeatureSpace& space, const Cube& cube) {
  if (cube.empty()) return "true";
  std::string out;
  for (std::size_t k = 0; k < cube.size(); ++k) {
    if (k != 0) out += " & ";
    out += format_literal(space, cube[k]);
  }
  return out;
}

// A prediction value. Numeric outcomes compare as exact decimals ("1.0" equals
// "1"); any other outcome compares as a string.
class Outcome {
 public:
  Outcome() = default;
  explicit Outcome(std::string text) {
    if (auto d = Decimal::parse(text)) {
      numeric_ = true;
      label_ = d->to_string();
    } else {
      label_ = std::move(text);
    }
  }
  explicit Outcome(const Decimal& d) : label_(d.to_string()), numeric_(true) {}

  const std::string& label() const { return label_; }
  bool numeric() const { return numeric_; }

  friend bool operator==(const Outcome&, const Outcome&) = default;
  friend auto operator<=>(const Outcome&, const Outcome&) = default;

 private:
  std::string label_;
  bool numeric_ = false;
};

enum class TieBreak { ReportAmbiguity, LowestRuleIndex, MajorityThenLowestIndex };
enum class Task { Classification, Regression };

inline const char* to_string(TieBreak t) {
  switch (t) {
    case TieBreak::ReportAmbiguity: return "report-ambiguity";
    case TieBreak::LowestRuleIndex: return "lowest-rule-index";
    case TieBreak::MajorityThenLowestIndex: return "majority-then-lowest-index";
  }
  return "?";
}

inline std::optional<TieBreak> parse_tie_break(std::string_view s) {
  if (s == "report-ambiguity") return TieBreak::ReportAmbiguity;
  if (s == "lowest-rule-index") return TieBreak::LowestRuleIndex;
  if (s == "majority-then-lowest-index") return TieBreak::MajorityThenLowestIndex;
  return std::nullopt;
}

inline const char* to_string(Task t) {
  return t == Task::Classification ? "classification" : "regression";
}

struct Rule {
  // 1-based index in the original model; kept stable through every
  // transformation so findings always refer to the input numbering.
  std::size_t id = 0;
  Cube body;
  Outcome outcome;
};

// Removes repeated literals, keeping the first position of each.
inline Cube dedup_cube(const Cube& cube) {
  Cube out;
  for (const Literal& l : cube) {
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  }
  return out;
}

inline bool syntactically_contradictory(const Cube& cube) {
  for (const Literal& l : cube) {
    if (std::find(cube.begin(), cube.end(), l.negated()) != cube.end()) return true;
  }
  return false;
}

class DecisionSet {
 public:
  DecisionSet() = default;
  DecisionSet(FeatureSpace space, std::vector<Rule> rules, Outcome default_outcome,
              TieBreak tie_break = TieBreak::ReportAmbiguity, Task task = Task::Classification)
      : space_(std::move(space)),
        rules_(std::move(rules)),
        default_outcome_(std::move(default_outcome)),
        tie_break_(tie_break),
        task_(task) {
    for (Rule& r : rules_) {
      r.body = dedup_cube(r.body);
      if (r.body.empty()) {
        throw ModelError("rule " + std::to_string(r.id) + " has an empty body");
      }
      if (syntactically_contradictory(r.body)) {
        throw ModelError("rule " + std::to_string(r.id) + " contains a literal and its negation");
      }
      for (const Literal& l : r.body) {
        const Feature& f = space_.at(l.atom.feature);
        if (f.kind == FeatureKind::Categorical && l.atom.op != AtomOp::Eq) {
          throw ModelError("non-equality literal on categorical feature '" + f.name + "'");
        }
      }
    }
    for (std::size_t a = 0; a < rules_.size(); ++a) {
      for (std::size_t b = a + 1; b < rules_.size(); ++b) {
        if (rules_[a].id == rules_[b].id) {
          throw ModelError("duplicate rule id " + std::to_string(rules_[a].id));
        }
      }
    }
  }

  // Convenience: numbers rules 1..r in the given order.
  static DecisionSet numbered(FeatureSpace space, std::vector<std::pair<Cube, Outcome>> rules,
                              Outcome default_outcome,
                              TieBreak tie_break = TieBreak::ReportAmbiguity,
                              Task task = Task::Classification) {
    std::vector<Rule> out;
    for (std::size_t k = 0; k < rules.size(); ++k) {
      out.push_back(Rule{k + 1, std::move(rules[k].first), std::move(rules[k].second)});
    }
    return DecisionSet(std::move(space), std::move(out), std::move(default_outcome), tie_break,
                       task);
  }

  const FeatureSpace& space() const { return space_; }
  const std::vector<Rule>& rules() const { return rules_; }
  const Outcome& default_outcome() const { return default_outcome_; }
  TieBreak tie_break() const { return tie_break_; }
  Task task() const { return task_; }
  std::size_t size() const { return rules_.size(); }

  std::optional<std::size_t> position_of(std::size_t rule_id) const {
    for (std::size_t k = 0; k < rules_.size(); ++k) {
      if (rules_[k].id == rule_id) return k;
    }
    return std::nullopt;
  }

  const Rule& rule(std::size_t rule_id) const {
    auto pos = position_of(rule_id);
    if (!pos) throw ModelError("no rule with id " + std::to_string(rule_id));
    return rules_[*pos];
  }

  DecisionSet without_rule(std::size_t rule_id) const {
    std::vector<Rule> rest;
    for (const Rule& r : rules_) {
      if (r.id != rule_id) rest.push_back(r);
    }
    return DecisionSet(space_, std::move(rest), default_outcome_, tie_break_, task_);
  }

  DecisionSet with_body(std::size_t rule_id, Cube body) const {
    std::vector<Rule> next = rules_;
    for (Rule& r : next) {
      if (r.id == rule_id) r.body = std::move(body);
    }
    return DecisionSet(space_, std::move(next), default_outcome_, tie_break_, task_);
  }

  DecisionSet with_tie_break(TieBreak t) const {
    DecisionSet copy = *this;
    copy.tie_break_ = t;
    return copy;
  }

  // Rules whose outcome is `o`.
  std::vector<const Rule*> rules_for(const Outcome& o) const {
    std::vector<const Rule*> out;
    for (const Rule& r : rules_) {
      if (r.outcome == o) out.push_back(&r);
    }
    return out;
  }

  std::size_t literal_count() const {
    std::size_t n = 0;
    for (const Rule& r : rules_) n += r.body.size();
    return n;
  }

 private:
  FeatureSpace space_;
  std::vector<Rule> rules_;
  Outcome default_outcome_;
  TieBreak tie_break_ = TieBreak::ReportAmbiguity;
  Task task_ = Task::Classification;
};

// A concrete input: one value per feature, indexed by feature id - 1.
using Point = std::vector<Value>;

inline bool literal_holds(const Point& x, const Literal& lit) {
  const Value& v = x.at(lit.atom.feature - 1);
  bool truth = false;
  if (lit.atom.op == AtomOp::Eq) {
    truth = v == lit.atom.value;
  } else {
    const Decimal& a = std::get<Decimal>(v);
    const Decimal& b = std::get<Decimal>(lit.atom.value);
    truth = lit.atom.op == AtomOp::Gt ? a > b : a >= b;
  }
  return truth == lit.positive;
}

// Distinct outcomes of the non-default rules, in order of first appearance.
inline std::vector<Outcome> distinct_outcomes(const DecisionSet& ds) {
  std::vector<Outcome> out;
  for (const Rule& r : ds.rules()) {
    if (std::find(out.begin(), out.end(), r.outcome) == out.end()) out.push_back(r.outcome);
  }
  return out;
}

// Result of applying the decision set to one point.
struct Prediction {
  enum class Kind {
    Invalid,    // the point violates the background knowledge
    Default,    // no rule fires
    Unique,     // every firing rule agrees
    TieBroken,  // disagreement resolved by the configured strategy
    Ambiguous   // disagreement surfaced to the caller
  };
  Kind kind = Kind::Invalid;
  std::optional<Outcome> outcome;
  std::vector<Outcome> fired;  // distinct fired outcomes, first-appearance order

  bool operator==(const Prediction&) const = default;
};

// Core of the classifier: given which rules fire, produce the prediction.
// `fires[k]` refers to ds.rules()[k].
inline Prediction resolve_prediction(const DecisionSet& ds, const std::vector<bool>& fires) {
  Prediction p;
  std::vector<std::size_t> firing;
  for (std::size_t k = 0; k < ds.rules().size(); ++k) {
    if (fires[k]) {
      firing.push_back(k);
      const Outcome& o = ds.rules()[k].outcome;
      if (std::find(p.fired.begin(), p.fired.end(), o) == p.fired.end()) p.fired.push_back(o);
    }
  }
  if (firing.empty()) {
    p.kind = Prediction::Kind::Default;
    p.outcome = ds.default_outcome();
    return p;
  }
  if (p.fired.size() == 1) {
    p.kind = Prediction::Kind::Unique;
    p.outcome = p.fired.front();
    return p;
  }
  switch (ds.tie_break()) {
    case TieBreak::ReportAmbiguity:
      p.kind = Prediction::Kind::Ambiguous;
      return p;
    case TieBreak::LowestRuleIndex: {
      std::size_t best = firing.front();
      for (std::size_t k : firing) {
        if (ds.rules()[k].id < ds.rules()[best].id) best = k;
      }
      p.kind = Prediction::Kind::TieBroken;
      p.outcome = ds.rules()[best].outcome;
      return p;
    }
    case TieBreak::MajorityThenLowestIndex: {
      std::map<Outcome, std::pair<std::size_t, std::size_t>> votes;  // count, lowest id
      for (std::size_t k : firing) {
        const Rule& r = ds.rules()[k];
        auto [it, inserted] = votes.try_emplace(r.outcome, 0, r.id);
        it->second.first += 1;
        it->second.second = std::min(it->second.second, r.id);
      }
      const Outcome* best = nullptr;
      std::pair<std::size_t, std::size_t> best_score{0, 0};
      for (const auto& [o, score] : votes) {
        if (best == nullptr || score.first > best_score.first ||
            (score.first == best_score.first && score.second < best_score.second)) {
          best = &o;
          best_score = score;
        }
      }
      p.kind = Prediction::Kind::TieBroken;
      p.outcome = *best;
      return p;
    }
  }
  return p;
}

}  // namespace dsaudit

#endif  // DSAUDIT_MODEL_HPP
