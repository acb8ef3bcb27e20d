#ifndef DSAUDIT_QUERY_HPP
#define DSAUDIT_QUERY_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dsaudit/background.hpp"
#include "dsaudit/dimacs.hpp"
#include "dsaudit/sat.hpp"

namespace dsaudit {

// Per-decision-set budget. Each query receives an equal share of what is
// left: remaining conflicts / pending queries (at least one conflict), and
// whatever wall time remains.
struct BudgetConfig {
  double seconds = 3600.0;
  std::optional<std::uint64_t> conflicts;
};

class Budget {
 public:
  explicit Budget(BudgetConfig config = {})
      : config_(config),
        deadline_(std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(config.seconds))),
        remaining_(config.conflicts.value_or(0)) {}

  sat::Limits limits_for(std::size_t pending) const {
    std::lock_guard<std::mutex> lock(mutex_);
    sat::Limits limits;
    limits.deadline = deadline_;
    if (config_.conflicts) {
      limits.conflicts = std::max<std::uint64_t>(1, remaining_ / std::max<std::size_t>(1, pending));
    }
    return limits;
  }

  void charge(std::uint64_t conflicts) {
    std::lock_guard<std::mutex> lock(mutex_);
    remaining_ -= std::min(remaining_, conflicts);
  }

  bool expired() const { return std::chrono::steady_clock::now() >= deadline_; }
  const BudgetConfig& config() const { return config_; }

 private:
  BudgetConfig config_;
  std::chrono::steady_clock::time_point deadline_;
  mutable std::mutex mutex_;
  std::uint64_t remaining_;
};

// B ∧ cube ∧ ⋀_k ¬negated[k]
struct Query {
  Cube cube;
  std::vector<Cube> negated;
};

struct Certificate {
  Query query;
  sat::Status status = sat::Status::Timeout;
  std::vector<bool> witness;  // atom assignment when SAT, index 0 unused
};

struct EngineOptions {
  bool fresh_solver = false;
  sat::SolverOptions solver;
  std::string external_solver;  // cross-check every answer when non-empty
};

// Runs queries against one background theory. In incremental mode a single
// solver holds B and each query's negated cubes are guarded by a fresh
// activation literal that is retired afterwards.
class QueryEngine {
 public:
  QueryEngine(const Theory& theory, EngineOptions options = {})
      : theory_(&theory), options_(std::move(options)) {}

  sat::SatResult run(const Query& q, const sat::Limits& limits = {}) {
    ++calls_;
    std::vector<int> assumptions = theory_->table.lits(q.cube);
    sat::SatResult result;
    if (options_.fresh_solver) {
      sat::Solver s(options_.solver);
      s.add_formula(theory_->bk.cnf());
      for (const Cube& c : q.negated) s.add_clause(negated_clause(c));
      result = s.solve(assumptions, limits);
    } else {
      sat::Solver& s = incremental();
      int act = 0;
      if (!q.negated.empty()) {
        act = s.new_var();
        for (const Cube& c : q.negated) {
          sat::Clause cl = negated_clause(c);
          cl.push_back(-act);
          s.add_clause(cl);
        }
        assumptions.push_back(act);
      }
      result = s.solve(assumptions, limits);
      if (act != 0) s.add_clause({-act});
    }
    if (result.status == sat::Status::Sat) {
      result.model.resize(static_cast<std::size_t>(theory_->table.num_vars()) + 1);
    }
    if (!options_.external_solver.empty() && result.status != sat::Status::Timeout) {
      sat::Status other = sat::solve_external(options_.external_solver, as_cnf(q));
      ++external_checks_;
      if (other != result.status) ++external_mismatches_;
    }
    return result;
  }

  // The query as a self-contained formula over atom-table variables.
  sat::CnfFormula as_cnf(const Query& q) const {
    sat::CnfFormula f = theory_->bk.cnf();
    f.num_vars = std::max(f.num_vars, theory_->table.num_vars());
    for (const Cube& c : q.negated) f.clauses.push_back(negated_clause(c));
    for (int lit : theory_->table.lits(q.cube)) f.clauses.push_back({lit});
    return f;
  }

  Certificate certify(const Query& q, const sat::Limits& limits = {}) {
    sat::SatResult r = run(q, limits);
    return Certificate{q, r.status, std::move(r.model)};
  }

  std::uint64_t calls() const { return calls_; }
  std::uint64_t external_checks() const { return external_checks_; }
  std::uint64_t external_mismatches() const { return external_mismatches_; }
  const Theory& theory() const { return *theory_; }

 private:
  sat::Clause negated_clause(const Cube& c) const {
    sat::Clause cl;
    for (const Literal& l : c) cl.push_back(-theory_->table.lit(l));
    return cl;
  }

  sat::Solver& incremental() {
    if (!solver_) {
      solver_ = std::make_unique<sat::Solver>(options_.solver);
      solver_->reserve_vars(theory_->table.num_vars());
      solver_->add_formula(theory_->bk.cnf());
    }
    return *solver_;
  }

  const Theory* theory_;
  EngineOptions options_;
  std::unique_ptr<sat::Solver> solver_;
  std::uint64_t calls_ = 0;
  std::uint64_t external_checks_ = 0;
  std::uint64_t external_mismatches_ = 0;
};

// Re-runs a certificate's query on a fresh solver; true iff the status
// matches, and for SAT certificates the stored witness satisfies the query.
inline bool replay(const Theory& theory, const Certificate& cert) {
  EngineOptions fresh;
  fresh.fresh_solver = true;
  QueryEngine engine(theory, fresh);
  sat::SatResult r = engine.run(cert.query);
  if (r.status != cert.status) return false;
  if (cert.status != sat::Status::Sat) return true;
  if (!engine.as_cnf(cert.query).satisfied_by(cert.witness)) return false;
  return true;
}

}  // namespace dsaudit

#endif  // DSAUDIT_QUERY_HPP
