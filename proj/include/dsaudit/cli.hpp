#ifndef DSAUDIT_CLI_HPP
#define DSAUDIT_CLI_HPP

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dsaudit/analysis.hpp"
#include "dsaudit/background.hpp"
#include "dsaudit/dimacs.hpp"
#include "dsaudit/explain.hpp"
#include "dsaudit/ingest.hpp"
#include "dsaudit/report.hpp"

namespace dsaudit {

struct RunConfig {
  std::vector<std::string> inputs;
  InputKind kind = InputKind::Auto;
  BackgroundMode bk_mode = BackgroundMode::CompleteOrder;
  double budget_secs = 3600.0;
  std::optional<std::uint64_t> budget_conflicts;
  std::optional<TieBreak> tie_break;
  OrderPolicy order = OrderPolicy::Ascending;
  unsigned jobs = 1;
  Format format = Format::Table;
  std::string out;
  std::uint64_t seed = 1;
  double random_freq = 0.0;
  std::string tag;
  bool positive_overlap = false;
  bool fresh_solver = false;
  std::string external_solver;
};

inline AnalyzerOptions analyzer_options(const RunConfig& c) {
  AnalyzerOptions o;
  o.budget.seconds = c.budget_secs;
  o.budget.conflicts = c.budget_conflicts;
  o.jobs = c.jobs;
  o.positive_overlap = c.positive_overlap;
  o.engine.fresh_solver = c.fresh_solver;
  o.engine.external_solver = c.external_solver;
  o.engine.solver.seed = c.seed;
  o.engine.solver.random_var_freq = c.random_freq;
  return o;
}

inline RuleFile load_configured(const std::string& path, const RunConfig& c) {
  RuleFile rf = load_model(path, c.kind);
  if (c.tie_break) rf.ds = rf.ds.with_tie_break(*c.tie_break);
  return rf;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

}  // namespace detail

// Pipeline: background, preprocessing, overlap and default reachability,
// redundant rule removal, then literal classification on what remains.
inline AuditReport audit_model(const RuleFile& rf, const RunConfig& c, const std::string& source = "") {
  auto t0 = detail::Clock::now();
  Theory theory = build_theory(rf.ds, rf.background, c.bk_mode);
  Timings timings;
  timings.tb = detail::seconds_since(t0);

  Analyzer analyzer(std::move(theory), analyzer_options(c));
  auto t1 = detail::Clock::now();
  PreprocessResult pre = analyzer.preprocess(rf.ds);
  OverlapResult overlap = analyzer.overlap_pairs(pre.ds);
  DefaultReachability reach = analyzer.default_reachable(pre.ds);
  timings.to = detail::seconds_since(t1);

  auto t2 = detail::Clock::now();
  RuleReduction rules = analyzer.remove_redundant_rules(pre.ds, c.order);
  timings.tc = detail::seconds_since(t2);

  auto t3 = detail::Clock::now();
  LiteralScan literals = analyzer.classify_literals(rules.ds);
  timings.tr = detail::seconds_since(t3);

  AuditInputs in;
  in.input = &rf.ds;
  in.theory = &analyzer.theory();
  in.preprocess = &pre;
  in.overlap = &overlap;
  in.reachability = &reach;
  in.rules = &rules;
  in.literals = &literals;
  in.timings = timings;
  in.budget_expired = analyzer.budget().expired();
  return build_report(in, c.tag, source);
}

inline int combined_exit(const std::vector<AuditReport>& reports) {
  int code = 0;
  for (const AuditReport& r : reports) {
    int e = r.exit_code();
    if (e == 2) return 2;
    if (e == 3) code = 3;
  }
  return code;
}

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

namespace detail {

inline std::string certificate_text(const Theory& t, const FeatureSpace& space, const Certificate& c) {
  std::string out = "query: B";
  for (const Literal& l : c.query.cube) out += " & " + format_literal(space, l);
  for (const Cube& n : c.query.negated) out += " & !(" + format_cube(space, n) + ")";
  out += "  => ";
  out += c.status == sat::Status::Sat ? "SAT" : c.status == sat::Status::Unsat ? "UNSAT" : "TIMEOUT";
  if (c.status == sat::Status::Sat && !c.witness.empty()) {
    std::string w;
    for (int v = 1; v <= t.table.num_vars(); ++v) {
      w += (w.empty() ? "" : " ") + std::string(c.witness[static_cast<std::size_t>(v)] ? "" : "!") + "(" +
           format_atom(space, t.table.atom(v)) + ")";
    }
    out += "  witness: " + w;
  }
  return out;
}

}  // namespace detail

// Installs the shared options on a subcommand. Each mirrors an environment
// variable DSAUDIT_<NAME>.
inline void add_common(CLI::App* sub, RunConfig& c, std::string& bk_mode, std::string& tie_break,
                       std::string& order, std::string& format, std::string& kind) {
  sub->add_option("--input,-i", c.inputs, "input file(s)")->required()->envname("DSAUDIT_INPUT");
  sub->add_option("--kind", kind, "rules | tree | anchors | auto")
      ->envname("DSAUDIT_KIND")
      ->check(CLI::IsMember({"auto", "rules", "tree", "anchors"}));
  sub->add_option("--bk-mode", bk_mode, "complete-order | alg2")
      ->envname("DSAUDIT_BK_MODE")
      ->check(CLI::IsMember({"complete-order", "alg2", "paper-alg2"}));
  sub->add_option("--budget-secs", c.budget_secs, "wall-clock budget per decision set")
      ->envname("DSAUDIT_BUDGET_SECS")
      ->check(CLI::PositiveNumber);
  sub->add_option("--budget-conflicts", c.budget_conflicts, "conflict budget per decision set")
      ->envname("DSAUDIT_BUDGET_CONFLICTS")
      ->check(CLI::PositiveNumber);
  sub->add_option("--tie-break", tie_break, "report-ambiguity | lowest-rule-index | majority-then-lowest-index")
      ->envname("DSAUDIT_TIE_BREAK")
      ->check(CLI::IsMember({"report-ambiguity", "lowest-rule-index", "majority-then-lowest-index"}));
  sub->add_option("--order-policy", order, "ascending | descending")
      ->envname("DSAUDIT_ORDER_POLICY")
      ->check(CLI::IsMember({"ascending", "descending"}));
  sub->add_option("--jobs,-j", c.jobs, "worker threads")->envname("DSAUDIT_JOBS")->check(CLI::PositiveNumber);
  sub->add_option("--format,-f", format, "table | csv | json")
      ->envname("DSAUDIT_FORMAT")
      ->check(CLI::IsMember({"table", "human", "csv", "json", "jsonl", "json-lines"}));
  sub->add_option("--out,-o", c.out, "output path (default stdout)")->envname("DSAUDIT_OUT");
  sub->add_option("--seed", c.seed, "solver seed")->envname("DSAUDIT_SEED");
  sub->add_option("--random-freq", c.random_freq, "probability of a random decision")
      ->envname("DSAUDIT_RANDOM_FREQ")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--tag", c.tag, "model tag written into reports")->envname("DSAUDIT_TAG");
  sub->add_flag("--positive-overlap", c.positive_overlap, "also report same-outcome overlap")
      ->envname("DSAUDIT_POSITIVE_OVERLAP");
  sub->add_flag("--fresh-solver", c.fresh_solver, "one solver per query instead of incremental")
      ->envname("DSAUDIT_FRESH_SOLVER");
  sub->add_option("--external-solver", c.external_solver, "DIMACS solver used to cross-check every query")
      ->envname("DSAUDIT_EXTERNAL_SOLVER");
}

// Exit codes: 0 clean, 1 usage/input error, 2 negative overlap found,
// 3 budget exhausted.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Audit rule-based models for overlap and redundancy", "dsaudit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dsaudit 1.0.0");

  RunConfig c;
  std::string bk_mode = "complete-order";
  std::string tie_break;
  std::string order = "ascending";
  std::string format = "table";
  std::string kind = "auto";

  CLI::App* audit = app.add_subcommand("audit", "overlap, rule and literal redundancy report");
  add_common(audit, c, bk_mode, tie_break, order, format, kind);

  CLI::App* explain = app.add_subcommand("explain", "abductive explanation from a fired rule");
  add_common(explain, c, bk_mode, tie_break, order, format, kind);
  std::string point_text;
  std::optional<std::size_t> rule_id;
  std::string want = "axp";
  bool verify = false;
  explain->add_option("--point,-p", point_text, "instance as name=value,...")->required();
  explain->add_option("--rule", rule_id, "rule id (default: lowest firing rule)");
  explain->add_option("--explanation", want, "axp | waxp")->check(CLI::IsMember({"axp", "waxp"}));
  explain->add_flag("--verify", verify, "check the result on the brute-force grid");

  CLI::App* simplify = app.add_subcommand("simplify", "iteratively remove redundant rules and literals");
  add_common(simplify, c, bk_mode, tie_break, order, format, kind);
  std::string rules_out;
  simplify->add_option("--rules-out", rules_out, "simplified rule file (default stdout)");

  CLI::App* export_cnf = app.add_subcommand("export-cnf", "write B as DIMACS with an atom legend");
  add_common(export_cnf, c, bk_mode, tie_break, order, format, kind);

  CLI::App* agg = app.add_subcommand("aggregate", "average JSON-lines reports per model tag");
  agg->add_option("--input,-i", c.inputs, "report files or directories")->required();
  agg->add_option("--format,-f", format, "table | csv | json")
      ->check(CLI::IsMember({"table", "human", "csv", "json", "jsonl", "json-lines"}));
  agg->add_option("--out,-o", c.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  c.bk_mode = *parse_background_mode(bk_mode);
  c.kind = *parse_input_kind(kind);
  c.order = *parse_order_policy(order);
  c.format = *parse_format(format);
  if (!tie_break.empty()) c.tie_break = parse_tie_break(tie_break);

  try {
    if (audit->parsed()) {
      std::vector<AuditReport> reports;
      for (const std::string& path : c.inputs) reports.push_back(audit_model(load_configured(path, c), c, path));
      write_output(c.out, serialize(reports, c.format), out);
      return combined_exit(reports);
    }

    if (export_cnf->parsed()) {
      std::string text;
      for (const std::string& path : c.inputs) {
        RuleFile rf = load_configured(path, c);
        Theory t = build_theory(rf.ds, rf.background, c.bk_mode);
        std::vector<std::string> comments = {"source " + path, std::string("mode ") + to_string(c.bk_mode)};
        for (const std::string& l : atom_legend(t.table, rf.ds.space())) comments.push_back(l);
        text += sat::to_dimacs(t.bk.cnf(), comments);
      }
      write_output(c.out, text, out);
      return 0;
    }

    if (simplify->parsed()) {
      if (c.inputs.size() != 1) throw std::runtime_error("simplify takes exactly one input");
      const std::string& path = c.inputs.front();
      RuleFile rf = load_configured(path, c);
      auto t0 = detail::Clock::now();
      Theory theory = build_theory(rf.ds, rf.background, c.bk_mode);
      Timings timings;
      timings.tb = detail::seconds_since(t0);
      Analyzer analyzer(std::move(theory), analyzer_options(c));
      auto t1 = detail::Clock::now();
      PreprocessResult pre = analyzer.preprocess(rf.ds);
      OverlapResult overlap = analyzer.overlap_pairs(pre.ds);
      DefaultReachability reach = analyzer.default_reachable(pre.ds);
      timings.to = detail::seconds_since(t1);
      auto t2 = detail::Clock::now();
      SimplifyResult s = analyzer.simplify(pre.ds, c.order);
      timings.tr = detail::seconds_since(t2);
      AuditReport r =
          build_simplify_report(rf.ds, pre, analyzer.theory(), overlap, reach, s, timings, c.tag, path);
      write_output(rules_out, serialize_rules(RuleFile{s.ds, rf.background}), out);
      write_output(c.out, serialize(r, c.format), out);
      return r.ex ? 3 : 0;
    }

    if (explain->parsed()) {
      if (c.inputs.size() != 1) throw std::runtime_error("explain takes exactly one input");
      RuleFile rf = load_configured(c.inputs.front(), c);
      const DecisionSet& ds = rf.ds;
      Point point = parse_point(ds.space(), point_text);
      std::size_t k = 0;
      if (rule_id) {
        k = *rule_id;
      } else {
        for (const Rule& r : ds.rules()) {
          bool fires = std::all_of(r.body.begin(), r.body.end(),
                                   [&](const Literal& l) { return literal_holds(point, l); });
          if (fires && (k == 0 || r.id < k)) k = r.id;
        }
      }
      Analyzer analyzer(build_theory(ds, rf.background, c.bk_mode), analyzer_options(c));
      ExplainResult result = k == 0 ? ExplainResult{Refusal{"no rule fires on the point", {}, {}, {}}}
                             : want == "waxp" ? waxp_from_rule(analyzer, ds, k, point)
                                              : axp_from_rule(analyzer, ds, k, point);
      nlohmann::ordered_json j;
      j["point"] = format_point(ds.space(), point);
      if (const Explanation* e = std::get_if<Explanation>(&result)) {
        j["status"] = "explained";
        j["kind"] = to_string(e->kind);
        j["rule"] = e->rule_id;
        j["prediction"] = e->prediction.label();
        j["features"] = nlohmann::ordered_json::array();
        for (FeatureId f : e->features) j["features"].push_back(ds.space().at(f).name);
        j["justification"] = e->justification;
        if (verify) j["verified"] = to_string(verify_explanation(ds, analyzer.theory().bk.user_literal_clauses(), *e));
      } else {
        const Refusal& r = std::get<Refusal>(result);
        j["status"] = "refused";
        if (k != 0) j["rule"] = k;
        j["reason"] = r.reason;
        if (r.pair) j["pair"] = {r.pair->first, r.pair->second};
        if (r.literal) j["literal"] = format_literal(ds.space(), *r.literal);
        if (r.certificate) j["certificate"] = detail::certificate_text(analyzer.theory(), ds.space(), *r.certificate);
      }
      std::string text;
      if (c.format == Format::JsonLines) {
        text = j.dump() + "\n";
      } else if (c.format == Format::Csv) {
        text = "status,kind,rule,features,reason\n";
        text += csv_cell(j["status"]) + "," + csv_cell(j.value("kind", "")) + "," +
                (j.contains("rule") ? j["rule"].dump() : "") + ",";
        std::string fs;
        if (j.contains("features")) {
          for (const auto& f : j["features"]) fs += (fs.empty() ? "" : ";") + f.get<std::string>();
        }
        text += csv_cell(nlohmann::ordered_json(fs)) + "," + csv_cell(j.value("reason", "")) + "\n";
      } else {
        for (const auto& [key, value] : j.items()) {
          text += key + ": " + (value.is_string() ? value.get<std::string>() : value.dump()) + "\n";
        }
      }
      write_output(c.out, text, out);
      return std::holds_alternative<Explanation>(result) ? 0 : 4;
    }

    if (agg->parsed()) {
      std::vector<std::filesystem::path> files;
      for (const std::string& p : c.inputs) {
        if (std::filesystem::is_directory(p)) {
          for (const auto& e : std::filesystem::directory_iterator(p)) {
            if (e.is_regular_file()) files.push_back(e.path());
          }
        } else {
          files.emplace_back(p);
        }
      }
      std::sort(files.begin(), files.end());
      std::vector<nlohmann::json> reports;
      for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw std::runtime_error("cannot open " + f.string());
        std::string line;
        while (std::getline(in, line)) {
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          reports.push_back(nlohmann::json::parse(line));
        }
      }
      write_output(c.out, serialize_aggregate(aggregate(reports), c.format), out);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "dsaudit: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace dsaudit

#endif  // DSAUDIT_CLI_HPP
