#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <random>
#include <sstream>

#include "dsaudit/dimacs.hpp"
#include "dsaudit/sat.hpp"

using namespace dsaudit::sat;

namespace {

struct MaskClause {
  std::uint32_t pos = 0;
  std::uint32_t neg = 0;
};

// Brute force over all 2^n assignments.
bool truth_table_sat(const CnfFormula& f, const std::vector<int>& assumptions) {
  std::vector<MaskClause> cls;
  for (const Clause& c : f.clauses) {
    MaskClause m;
    for (int l : c) (l > 0 ? m.pos : m.neg) |= 1u << (std::abs(l) - 1);
    cls.push_back(m);
  }
  for (int l : assumptions) {
    MaskClause m;
    (l > 0 ? m.pos : m.neg) |= 1u << (std::abs(l) - 1);
    cls.push_back(m);
  }
  const std::uint32_t n = static_cast<std::uint32_t>(f.num_vars);
  for (std::uint32_t a = 0; a < (1u << n); ++a) {
    bool ok = true;
    for (const MaskClause& m : cls) {
      if ((a & m.pos) == 0 && (~a & m.neg) == 0) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

CnfFormula random_formula(std::mt19937_64& rng, int vars) {
  CnfFormula f;
  f.num_vars = vars;
  if (vars == 0) return f;
  std::uniform_int_distribution<int> var(1, vars);
  std::uniform_int_distribution<int> len(1, 4);
  double ratio = std::uniform_real_distribution<double>(1.0, 7.0)(rng);
  int m = static_cast<int>(ratio * vars);
  for (int k = 0; k < m; ++k) {
    Clause c;
    int l = len(rng);
    for (int t = 0; t < l; ++t) c.push_back(rng() % 2 ? var(rng) : -var(rng));
    f.clauses.push_back(c);
  }
  return f;
}

}  // namespace

TEST(Solver, TrivialCases) {
  Solver s;
  s.reserve_vars(1);
  s.add_clause({1});
  s.add_clause({-1});
  EXPECT_EQ(s.solve().status, Status::Unsat);

  SatResult empty = solve(CnfFormula{});
  EXPECT_EQ(empty.status, Status::Sat);
  EXPECT_EQ(empty.model.size(), 1u);

  CnfFormula with_empty_clause{1, {{}}};
  EXPECT_EQ(solve(with_empty_clause).status, Status::Unsat);
}

TEST(Solver, AgreesWithTruthTables) {
  std::mt19937_64 rng(2024);
  int sat = 0;
  int unsat = 0;
  for (int k = 0; k < 10000; ++k) {
    int vars = static_cast<int>(rng() % 13);
    CnfFormula f = random_formula(rng, vars);
    std::vector<int> assumptions;
    if (vars > 0 && k % 3 == 0) {
      for (int t = 0; t < 2; ++t) {
        int v = 1 + static_cast<int>(rng() % static_cast<unsigned>(vars));
        assumptions.push_back(rng() % 2 ? v : -v);
      }
    }
    bool expected = truth_table_sat(f, assumptions);
    SatResult r = solve(f, assumptions);
    ASSERT_NE(r.status, Status::Timeout);
    ASSERT_EQ(r.status == Status::Sat, expected) << "formula " << k << "\n" << to_dimacs(f);
    if (expected) {
      ++sat;
      ASSERT_TRUE(f.satisfied_by(r.model));
      for (int l : assumptions) ASSERT_EQ(r.model[static_cast<std::size_t>(std::abs(l))], l > 0);
    } else {
      ++unsat;
    }
  }
  EXPECT_GT(sat, 1000);
  EXPECT_GT(unsat, 1000);
}

TEST(Solver, IncrementalAssumptionsMatchTruthTables) {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 300; ++k) {
    CnfFormula f = random_formula(rng, 10);
    Solver s;
    s.add_formula(f);
    for (int q = 0; q < 10; ++q) {
      std::vector<int> a;
      for (int t = 0; t < 3; ++t) {
        int v = 1 + static_cast<int>(rng() % 10);
        a.push_back(rng() % 2 ? v : -v);
      }
      SatResult r = s.solve(a);
      ASSERT_EQ(r.status == Status::Sat, truth_table_sat(f, a));
    }
  }
}

TEST(Solver, UnsatStableUnderClausePermutation) {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int k = 0; k < 400 && checked < 100; ++k) {
    CnfFormula f = random_formula(rng, 11);
    if (solve(f).status != Status::Unsat) continue;
    ++checked;
    for (int p = 0; p < 5; ++p) {
      std::shuffle(f.clauses.begin(), f.clauses.end(), rng);
      ASSERT_EQ(solve(f).status, Status::Unsat);
    }
  }
  EXPECT_EQ(checked, 100);
}

TEST(Solver, ConflictLimitYieldsTimeout) {
  // pigeonhole 8 into 7 needs many conflicts
  CnfFormula f;
  const int pigeons = 8;
  const int holes = 7;
  auto v = [&](int p, int h) { return p * holes + h + 1; };
  f.num_vars = pigeons * holes;
  for (int p = 0; p < pigeons; ++p) {
    Clause c;
    for (int h = 0; h < holes; ++h) c.push_back(v(p, h));
    f.clauses.push_back(c);
  }
  for (int h = 0; h < holes; ++h) {
    for (int p = 0; p < pigeons; ++p) {
      for (int q = p + 1; q < pigeons; ++q) f.clauses.push_back({-v(p, h), -v(q, h)});
    }
  }
  Limits limits;
  limits.conflicts = 10;
  SatResult r = solve(f, {}, limits);
  EXPECT_EQ(r.status, Status::Timeout);
  EXPECT_LE(r.stats.conflicts, 11u);

  Limits past;
  past.deadline = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  EXPECT_EQ(solve(f, {}, past).status, Status::Timeout);
}

TEST(Solver, DeterministicForFixedSeed) {
  std::mt19937_64 rng(17);
  SolverOptions opts;
  opts.seed = 42;
  opts.random_var_freq = 0.1;
  for (int k = 0; k < 50; ++k) {
    CnfFormula f = random_formula(rng, 12);
    SatResult a = solve(f, {}, {}, opts);
    SatResult b = solve(f, {}, {}, opts);
    ASSERT_EQ(a.status, b.status);
    ASSERT_EQ(a.model, b.model);
    ASSERT_EQ(a.stats.conflicts, b.stats.conflicts);
  }
}

TEST(Entails, Examples) {
  // a ∧ b ⊨ a
  CnfFormula top{2, {}};
  std::vector<int> ab = {1, 2};
  EXPECT_EQ(entails(top, ab, {{1}}), true);
  // a ⊭ b
  std::vector<int> a = {1};
  EXPECT_EQ(entails(top, a, {{2}}), false);
  // (b ∨ w) ∧ (¬d ∨ f), with c, d: f follows
  // vars: b=1 w=2 d=3 f=4 c=5
  CnfFormula bk{5, {{1, 2}, {-3, 4}}};
  std::vector<int> cd = {5, 3};
  EXPECT_EQ(entails(bk, cd, {{4}}), true);
}

TEST(Dimacs, ParsesAndRoundTrips) {
  std::istringstream in("c hello\np cnf 2 1\n1 -2 0\n");
  DimacsFile d = read_dimacs(in);
  EXPECT_EQ(d.formula.num_vars, 2);
  ASSERT_EQ(d.formula.clauses.size(), 1u);
  EXPECT_EQ(d.formula.clauses[0], (Clause{1, -2}));
  ASSERT_EQ(d.comments.size(), 1u);
  EXPECT_EQ(d.comments[0], "hello");

  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    CnfFormula f = random_formula(rng, 1 + static_cast<int>(rng() % 12)).normalized();
    std::istringstream back(to_dimacs(f, {"atom 1 x > 3"}));
    DimacsFile r = read_dimacs(back);
    ASSERT_EQ(r.formula, f);
    ASSERT_EQ(r.comments, std::vector<std::string>{"atom 1 x > 3"});
  }
}

TEST(Dimacs, ErrorsNameTheLine) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_dimacs(in);
    } catch (const DimacsError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("p cnf x 1\n1 0\n"), 1u);
  EXPECT_EQ(line_of("p dnf 2 1\n1 0\n"), 1u);
  EXPECT_EQ(line_of("p cnf 2 1\n3 0\n"), 2u);
  EXPECT_EQ(line_of("c x\np cnf 2 1\n1 a 0\n"), 3u);
  EXPECT_EQ(line_of("1 2 0\n"), 1u);
  EXPECT_NE(line_of("p cnf 2 2\n1 0\n"), 0u);
}

TEST(Dimacs, TautologiesNormalizedAway) {
  std::istringstream in("p cnf 2 2\n1 -1 0\n2 2 0\n");
  DimacsFile d = read_dimacs(in);
  ASSERT_EQ(d.formula.clauses.size(), 1u);
  EXPECT_EQ(d.formula.clauses[0], (Clause{2}));
}
