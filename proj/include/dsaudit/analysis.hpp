#ifndef DSAUDIT_ANALYSIS_HPP
#define DSAUDIT_ANALYSIS_HPP

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "dsaudit/background.hpp"
#include "dsaudit/model.hpp"
#include "dsaudit/query.hpp"

namespace dsaudit {

enum class Verdict { No, Yes, Undecided };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::No: return "no";
    case Verdict::Yes: return "yes";
    case Verdict::Undecided: return "undecided";
  }
  return "?";
}

enum class OrderPolicy { Ascending, Descending };

inline const char* to_string(OrderPolicy p) {
  return p == OrderPolicy::Ascending ? "ascending" : "descending";
}

inline std::optional<OrderPolicy> parse_order_policy(std::string_view s) {
  if (s == "ascending") return OrderPolicy::Ascending;
  if (s == "descending") return OrderPolicy::Descending;
  return std::nullopt;
}

struct AnalyzerOptions {
  BudgetConfig budget;
  EngineOptions engine;
  unsigned jobs = 1;
  bool positive_overlap = false;
};

enum class OverlapKind { Negative, Positive };

struct OverlapPair {
  std::size_t i = 0;  // rule ids, i < j
  std::size_t j = 0;
  OverlapKind kind = OverlapKind::Negative;
  std::vector<bool> witness;  // atom assignment satisfying B ∧ L_i ∧ L_j
};

struct OverlapResult {
  std::vector<OverlapPair> pairs;  // negative first, then positive; each sorted by (i, j)
  std::vector<std::pair<std::size_t, std::size_t>> undecided;
  std::size_t total = 0;  // rule pairs with differing outcomes
  std::uint64_t sat_calls = 0;

  std::size_t negative_count() const {
    return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [](const auto& p) {
      return p.kind == OverlapKind::Negative;
    }));
  }
  bool contains(std::size_t i, std::size_t j, OverlapKind kind = OverlapKind::Negative) const {
    if (i > j) std::swap(i, j);
    return std::any_of(pairs.begin(), pairs.end(), [&](const OverlapPair& p) {
      return p.i == i && p.j == j && p.kind == kind;
    });
  }
};

struct DefaultReachability {
  Verdict reachable = Verdict::Undecided;
  Certificate certificate;
};

struct RuleCheck {
  Verdict redundant = Verdict::Undecided;
  Certificate certificate;
};

enum class LiteralVerdict { NotRedundant, Local, Global, Undecided };

inline const char* to_string(LiteralVerdict v) {
  switch (v) {
    case LiteralVerdict::NotRedundant: return "not-redundant";
    case LiteralVerdict::Local: return "local";
    case LiteralVerdict::Global: return "global";
    case LiteralVerdict::Undecided: return "undecided";
  }
  return "?";
}

struct LiteralCheck {
  LiteralVerdict verdict = LiteralVerdict::Undecided;
  Certificate certificate;  // the query that decided the verdict
};

struct RedundancyFinding {
  enum class Kind { RedundantRule, LocalLiteral, GlobalLiteral };
  Kind kind = Kind::RedundantRule;
  std::size_t rule_id = 0;
  std::optional<Literal> literal;
  std::size_t position = 0;  // literal position in the body at check time
  Certificate certificate;
};

inline const char* to_string(RedundancyFinding::Kind k) {
  switch (k) {
    case RedundancyFinding::Kind::RedundantRule: return "redundant-rule";
    case RedundancyFinding::Kind::LocalLiteral: return "local-literal";
    case RedundancyFinding::Kind::GlobalLiteral: return "global-literal";
  }
  return "?";
}

struct RemovedRule {
  std::size_t rule_id = 0;
  std::string reason;  // "duplicate" or "never-fires"
  std::optional<Certificate> certificate;
};

struct PreprocessResult {
  DecisionSet ds;
  std::vector<RemovedRule> removed;
  std::vector<std::size_t> unverified;  // never-fires check timed out
};

struct RuleReduction {
  DecisionSet ds;
  std::vector<RedundancyFinding> findings;
  std::size_t undecided = 0;
};

struct LiteralScan {
  std::vector<RedundancyFinding> findings;
  std::size_t checked = 0;
  std::size_t undecided = 0;
  std::size_t total_literals = 0;
};

struct SimplifyResult {
  DecisionSet ds;
  std::vector<RedundancyFinding> findings;
  bool partial = false;
};

// Runs the SAT-backed checks on decision sets over one background theory.
// Queries draw on a shared per-decision-set budget.
class Analyzer {
 public:
  Analyzer(Theory theory, AnalyzerOptions options = {})
      : theory_(std::move(theory)),
        options_(std::move(options)),
        budget_(options_.budget),
        engine_(theory_, options_.engine) {}

  Analyzer(const Analyzer&) = delete;
  Analyzer& operator=(const Analyzer&) = delete;

  const Theory& theory() const { return theory_; }
  const AnalyzerOptions& options() const { return options_; }
  Budget& budget() { return budget_; }
  std::uint64_t sat_calls() const { return engine_.calls() + worker_calls_; }
  std::uint64_t external_mismatches() const {
    return engine_.external_mismatches() + worker_external_mismatches_;
  }
  std::uint64_t external_checks() const { return engine_.external_checks() + worker_external_checks_; }

  Certificate check(const Query& q, std::size_t pending = 1) {
    return run_on(engine_, q, pending);
  }

  // Drops exact duplicates (same literal set and outcome, later copy removed)
  // and rules whose body is inconsistent with B.
  PreprocessResult preprocess(const DecisionSet& ds) {
    PreprocessResult out;
    DecisionSet cur = ds;
    for (std::size_t a = 0; a < ds.rules().size(); ++a) {
      const Rule& ra = ds.rules()[a];
      for (std::size_t b = 0; b < a; ++b) {
        const Rule& rb = ds.rules()[b];
        if (rb.outcome == ra.outcome && same_literals(ra.body, rb.body) && cur.position_of(rb.id)) {
          out.removed.push_back(RemovedRule{ra.id, "duplicate", std::nullopt});
          cur = cur.without_rule(ra.id);
          break;
        }
      }
    }
    std::vector<std::size_t> ids;
    for (const Rule& r : cur.rules()) ids.push_back(r.id);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Certificate c = check(Query{cur.rule(ids[k]).body, {}}, ids.size() - k);
      if (c.status == sat::Status::Unsat) {
        out.removed.push_back(RemovedRule{ids[k], "never-fires", c});
        cur = cur.without_rule(ids[k]);
      } else if (c.status == sat::Status::Timeout) {
        out.unverified.push_back(ids[k]);
      }
    }
    out.ds = std::move(cur);
    return out;
  }

  // Every rule pair with differing outcomes is checked exactly once, grouping
  // rules by distinct outcome in first-appearance order.
  OverlapResult overlap_pairs(const DecisionSet& ds) {
    struct Task {
      std::size_t i, j;
      OverlapKind kind;
    };
    std::vector<Task> tasks;
    const std::vector<Outcome> groups = distinct_outcomes(ds);
    for (std::size_t a = 0; a + 1 < groups.size(); ++a) {
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        for (const Rule* ri : ds.rules_for(groups[a])) {
          for (const Rule* rj : ds.rules_for(groups[b])) {
            tasks.push_back(Task{ri->id, rj->id, OverlapKind::Negative});
          }
        }
      }
    }
    OverlapResult out;
    out.total = tasks.size();
    if (options_.positive_overlap) {
      for (std::size_t a = 0; a < ds.rules().size(); ++a) {
        for (std::size_t b = a + 1; b < ds.rules().size(); ++b) {
          if (ds.rules()[a].outcome == ds.rules()[b].outcome) {
            tasks.push_back(Task{ds.rules()[a].id, ds.rules()[b].id, OverlapKind::Positive});
          }
        }
      }
    }
    std::vector<Certificate> results = run_parallel(tasks.size(), [&](std::size_t k) {
      Cube both = ds.rule(tasks[k].i).body;
      for (const Literal& l : ds.rule(tasks[k].j).body) both.push_back(l);
      return Query{dedup_cube(both), {}};
    });
    out.sat_calls = tasks.size();
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      auto [i, j] = std::minmax(tasks[k].i, tasks[k].j);
      if (results[k].status == sat::Status::Sat) {
        out.pairs.push_back(OverlapPair{i, j, tasks[k].kind, std::move(results[k].witness)});
      } else if (results[k].status == sat::Status::Timeout) {
        if (tasks[k].kind == OverlapKind::Negative) out.undecided.emplace_back(i, j);
      }
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const OverlapPair& a, const OverlapPair& b) {
      return std::tie(a.kind, a.i, a.j) < std::tie(b.kind, b.i, b.j);
    });
    std::sort(out.undecided.begin(), out.undecided.end());
    return out;
  }

  // One query: B ∧ ¬L_1 ∧ ... ∧ ¬L_r.
  DefaultReachability default_reachable(const DecisionSet& ds) {
    Query q;
    for (const Rule& r : ds.rules()) q.negated.push_back(r.body);
    Certificate c = check(q);
    return DefaultReachability{verdict_sat(c.status), std::move(c)};
  }

  // B ∧ L_i ∧ ¬L_{i1} ∧ ... ∧ ¬L_{iz} unsatisfiable, over same-outcome
  // siblings.
  RuleCheck rule_redundant(const DecisionSet& ds, std::size_t rule_id, std::size_t pending = 1) {
    const Rule& r = ds.rule(rule_id);
    Query q{r.body, siblings(ds, r)};
    Certificate c = check(q, pending);
    return RuleCheck{verdict_unsat(c.status), std::move(c)};
  }

  // Local check first: B ∧ (L_i \ {l}) ∧ ¬l unsatisfiable. Only if it fails,
  // the global check: B ∧ (L_i with l flipped) ∧ ¬siblings unsatisfiable.
  LiteralCheck literal_redundant(const DecisionSet& ds, std::size_t rule_id, std::size_t position,
                                 std::size_t pending = 1, bool allow_unit_body = false) {
    return literal_check_on(engine_, ds, rule_id, position, pending, allow_unit_body);
  }

  // Single ascending pass; removing a redundant rule never makes another
  // rule redundant, so one pass reaches the fixed point.
  RuleReduction remove_redundant_rules(const DecisionSet& ds, OrderPolicy order = OrderPolicy::Ascending) {
    RuleReduction out{ds, {}, 0};
    std::vector<std::size_t> ids = rule_order(ds, order);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      RuleCheck c = rule_redundant(out.ds, ids[k], ids.size() - k);
      if (c.redundant == Verdict::Yes) {
        out.findings.push_back(RedundancyFinding{RedundancyFinding::Kind::RedundantRule, ids[k],
                                                 std::nullopt, 0, std::move(c.certificate)});
        out.ds = out.ds.without_rule(ids[k]);
      } else if (c.redundant == Verdict::Undecided) {
        ++out.undecided;
      }
    }
    return out;
  }

  // Classifies every literal of every rule with at least two literals,
  // each against the unchanged decision set.
  LiteralScan classify_literals(const DecisionSet& ds) {
    struct Task {
      std::size_t rule_id, position;
    };
    std::vector<Task> tasks;
    LiteralScan out;
    out.total_literals = ds.literal_count();
    for (const Rule& r : ds.rules()) {
      if (r.body.size() < 2) continue;
      for (std::size_t p = 0; p < r.body.size(); ++p) tasks.push_back(Task{r.id, p});
    }
    std::vector<LiteralCheck> results(tasks.size());
    run_workers(tasks.size(), [&](QueryEngine& engine, std::size_t k) {
      results[k] = literal_check_on(engine, ds, tasks[k].rule_id, tasks[k].position,
                                    tasks.size() - k, false);
    });
    out.checked = tasks.size();
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      LiteralCheck& c = results[k];
      if (c.verdict == LiteralVerdict::Undecided) {
        ++out.undecided;
      } else if (c.verdict != LiteralVerdict::NotRedundant) {
        out.findings.push_back(RedundancyFinding{
            c.verdict == LiteralVerdict::Local ? RedundancyFinding::Kind::LocalLiteral
                                               : RedundancyFinding::Kind::GlobalLiteral,
            tasks[k].rule_id, ds.rule(tasks[k].rule_id).body[tasks[k].position],
            tasks[k].position, std::move(c.certificate)});
      }
    }
    return out;
  }

  // Fixed point: remove one redundant rule at a time; when none is left,
  // remove one redundant literal and start over.
  SimplifyResult simplify(const DecisionSet& ds, OrderPolicy order = OrderPolicy::Ascending) {
    SimplifyResult out{ds, {}, false};
    while (true) {
      bool changed = false;
      for (std::size_t id : rule_order(out.ds, order)) {
        RuleCheck c = rule_redundant(out.ds, id);
        if (c.redundant == Verdict::Undecided) out.partial = true;
        if (c.redundant == Verdict::Yes) {
          out.findings.push_back(RedundancyFinding{RedundancyFinding::Kind::RedundantRule, id,
                                                   std::nullopt, 0, std::move(c.certificate)});
          out.ds = out.ds.without_rule(id);
          changed = true;
          break;
        }
      }
      if (changed) continue;
      for (std::size_t id : rule_order(out.ds, order)) {
        const Rule& r = out.ds.rule(id);
        if (r.body.size() < 2) continue;
        std::vector<std::size_t> positions(r.body.size());
        for (std::size_t p = 0; p < positions.size(); ++p) positions[p] = p;
        if (order == OrderPolicy::Descending) std::reverse(positions.begin(), positions.end());
        for (std::size_t p : positions) {
          LiteralCheck c = literal_redundant(out.ds, id, p);
          if (c.verdict == LiteralVerdict::Undecided) out.partial = true;
          if (c.verdict == LiteralVerdict::Local || c.verdict == LiteralVerdict::Global) {
            Cube body = r.body;
            Literal lit = body[p];
            body.erase(body.begin() + static_cast<std::ptrdiff_t>(p));
            out.findings.push_back(RedundancyFinding{
                c.verdict == LiteralVerdict::Local ? RedundancyFinding::Kind::LocalLiteral
                                                   : RedundancyFinding::Kind::GlobalLiteral,
                id, lit, p, std::move(c.certificate)});
            out.ds = out.ds.with_body(id, std::move(body));
            changed = true;
            break;
          }
        }
        if (changed) break;
      }
      if (!changed) break;
    }
    return out;
  }

  // For each outcome, the union of same-outcome bodies must agree under B in
  // both directions. Each direction is one query using selector variables
  // for the disjunction.
  Verdict equivalent(const DecisionSet& a, const DecisionSet& b) {
    if (!(a.space() == b.space())) throw std::invalid_argument("different feature spaces");
    if (!(a.default_outcome() == b.default_outcome())) {
      throw std::invalid_argument("decision sets have different default outcomes");
    }
    std::vector<Outcome> outcomes = distinct_outcomes(a);
    for (const Outcome& o : distinct_outcomes(b)) {
      if (std::find(outcomes.begin(), outcomes.end(), o) == outcomes.end()) outcomes.push_back(o);
    }
    bool undecided = false;
    for (const Outcome& o : outcomes) {
      for (int dir = 0; dir < 2; ++dir) {
        const DecisionSet& left = dir == 0 ? a : b;
        const DecisionSet& right = dir == 0 ? b : a;
        sat::Status s = covered(left.rules_for(o), right.rules_for(o));
        if (s == sat::Status::Sat) return Verdict::No;
        if (s == sat::Status::Timeout) undecided = true;
      }
    }
    return undecided ? Verdict::Undecided : Verdict::Yes;
  }

 private:
  static Verdict verdict_sat(sat::Status s) {
    if (s == sat::Status::Timeout) return Verdict::Undecided;
    return s == sat::Status::Sat ? Verdict::Yes : Verdict::No;
  }
  static Verdict verdict_unsat(sat::Status s) {
    if (s == sat::Status::Timeout) return Verdict::Undecided;
    return s == sat::Status::Unsat ? Verdict::Yes : Verdict::No;
  }

  static bool same_literals(const Cube& a, const Cube& b) {
    Cube x = a;
    Cube y = b;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    return x == y;
  }

  static std::vector<Cube> siblings(const DecisionSet& ds, const Rule& r) {
    std::vector<Cube> out;
    for (const Rule* s : ds.rules_for(r.outcome)) {
      if (s->id != r.id) out.push_back(s->body);
    }
    return out;
  }

  static std::vector<std::size_t> rule_order(const DecisionSet& ds, OrderPolicy order) {
    std::vector<std::size_t> ids;
    for (const Rule& r : ds.rules()) ids.push_back(r.id);
    std::sort(ids.begin(), ids.end());
    if (order == OrderPolicy::Descending) std::reverse(ids.begin(), ids.end());
    return ids;
  }

  Certificate run_on(QueryEngine& engine, const Query& q, std::size_t pending) {
    sat::SatResult r = engine.run(q, budget_.limits_for(pending));
    budget_.charge(r.stats.conflicts);
    return Certificate{q, r.status, std::move(r.model)};
  }

  LiteralCheck literal_check_on(QueryEngine& engine, const DecisionSet& ds, std::size_t rule_id,
                                std::size_t position, std::size_t pending, bool allow_unit_body) {
    const Rule& r = ds.rule(rule_id);
    if (position >= r.body.size()) throw std::out_of_range("literal position out of range");
    if (r.body.size() < 2 && !allow_unit_body) {
      throw std::invalid_argument("literal redundancy needs a body with at least two literals");
    }
    Cube flipped = r.body;
    flipped[position] = flipped[position].negated();
    Certificate local = run_on(engine, Query{flipped, {}}, pending);
    if (local.status == sat::Status::Unsat) return LiteralCheck{LiteralVerdict::Local, std::move(local)};
    if (local.status == sat::Status::Timeout) {
      return LiteralCheck{LiteralVerdict::Undecided, std::move(local)};
    }
    Certificate global = run_on(engine, Query{flipped, siblings(ds, r)}, pending);
    switch (global.status) {
      case sat::Status::Unsat: return LiteralCheck{LiteralVerdict::Global, std::move(global)};
      case sat::Status::Sat: return LiteralCheck{LiteralVerdict::NotRedundant, std::move(global)};
      case sat::Status::Timeout: break;
    }
    return LiteralCheck{LiteralVerdict::Undecided, std::move(global)};
  }

  // Work item k goes to worker k % jobs; each worker owns a query engine, so
  // results do not depend on scheduling.
  void run_workers(std::size_t n, const std::function<void(QueryEngine&, std::size_t)>& fn) {
    unsigned jobs = std::max(1u, options_.jobs);
    if (jobs == 1 || n < 2) {
      for (std::size_t k = 0; k < n; ++k) fn(engine_, k);
      return;
    }
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    std::vector<std::unique_ptr<QueryEngine>> engines;
    for (unsigned w = 0; w < jobs; ++w) {
      engines.push_back(std::make_unique<QueryEngine>(theory_, options_.engine));
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < n; k += jobs) fn(*engines[w], k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : engines) {
      worker_calls_ += e->calls();
      worker_external_checks_ += e->external_checks();
      worker_external_mismatches_ += e->external_mismatches();
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<Certificate> run_parallel(std::size_t n,
                                        const std::function<Query(std::size_t)>& make) {
    std::vector<Certificate> out(n);
    run_workers(n, [&](QueryEngine& engine, std::size_t k) {
      out[k] = run_on(engine, make(k), n - k);
    });
    return out;
  }

  sat::Status covered(const std::vector<const Rule*>& left, const std::vector<const Rule*>& right) {
    if (left.empty()) return sat::Status::Unsat;
    sat::Solver s(options_.engine.solver);
    s.reserve_vars(theory_.table.num_vars());
    s.add_formula(theory_.bk.cnf());
    sat::Clause some;
    for (const Rule* r : left) {
      int sel = s.new_var();
      some.push_back(sel);
      for (const Literal& l : r->body) s.add_clause({-sel, theory_.table.lit(l)});
    }
    s.add_clause(some);
    for (const Rule* r : right) {
      sat::Clause cl;
      for (const Literal& l : r->body) cl.push_back(-theory_.table.lit(l));
      s.add_clause(cl);
    }
    ++worker_calls_;
    sat::SatResult res = s.solve({}, budget_.limits_for(1));
    budget_.charge(res.stats.conflicts);
    return res.status;
  }

  Theory theory_;
  AnalyzerOptions options_;
  Budget budget_;
  QueryEngine engine_;
  std::uint64_t worker_calls_ = 0;
  std::uint64_t worker_external_checks_ = 0;
  std::uint64_t worker_external_mismatches_ = 0;
};

}  // namespace dsaudit

#endif  // DSAUDIT_ANALYSIS_HPP
