#ifndef DSAUDIT_REPORT_HPP
#define DSAUDIT_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsaudit/analysis.hpp"
#include "dsaudit/background.hpp"
#include "dsaudit/model.hpp"
#include "dsaudit/oracle.hpp"

namespace dsaudit {

// Exact a/b. Zero denominators read as zero.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 0;

  // 100 * num / den, rounded half up to `digits` decimals.
  std::string percent(int digits = 4) const {
    if (den == 0) return digits > 0 ? "0." + std::string(static_cast<std::size_t>(digits), '0') : "0";
    unsigned __int128 scale = 1;
    for (int k = 0; k < digits; ++k) scale *= 10;
    unsigned __int128 scaled = (static_cast<unsigned __int128>(num) * 100 * scale * 2 + den) / (2 * den);
    auto whole = static_cast<unsigned long long>(scaled / scale);
    auto frac = static_cast<unsigned long long>(scaled % scale);
    std::string f = std::to_string(frac);
    if (digits == 0) return std::to_string(whole);
    return std::to_string(whole) + "." + std::string(static_cast<std::size_t>(digits) - f.size(), '0') + f;
  }
  double value() const { return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den); }
};

struct Timings {
  double tb = 0;  // background
  double to = 0;  // overlap and default reachability
  double tc = 0;  // rule redundancy
  double tr = 0;  // literal redundancy
};

// Seconds floored to whole milliseconds.
inline double floor_ms(double seconds) { return std::floor(std::max(0.0, seconds) * 1000.0) / 1000.0; }

inline std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", floor_ms(s));
  return buf;
}

struct ReportOverlap {
  std::size_t i = 0;
  std::size_t j = 0;
  std::string kind;     // "negative" or "positive"
  std::string witness;  // name=value,... or empty when no grid point realizes it
};

struct ReportFinding {
  std::string kind;
  std::size_t rule_id = 0;
  std::string literal;
};

struct ReportRemoval {
  std::size_t rule_id = 0;
  std::string reason;
};

struct AuditReport {
  std::string tag;
  std::string source;
  std::string mode;  // "audit" or "simplify"
  std::size_t input_rules = 0;
  std::size_t nr = 0;
  std::size_t np = 0;
  std::size_t no = 0;
  std::size_t total = 0;
  std::size_t positive = 0;
  Timings timings;
  std::size_t bs = 0;
  std::size_t rs = 0;
  std::size_t rm = 0;
  std::size_t redundant_rules = 0;
  std::size_t local_literals = 0;
  std::size_t global_literals = 0;
  std::size_t literals = 0;  // denominator of PL and PG
  bool ex = false;
  std::size_t undecided_overlap = 0;
  std::size_t undecided_rules = 0;
  std::size_t undecided_literals = 0;
  std::string default_reachable = "undecided";
  std::vector<ReportRemoval> removed;
  std::vector<ReportOverlap> overlaps;
  std::vector<ReportFinding> findings;

  Ratio po() const { return Ratio{no, total}; }
  Ratio pl() const { return Ratio{local_literals, literals}; }
  Ratio pg() const { return Ratio{global_literals, literals}; }
  bool ir() const { return redundant_rules > 0; }
  bool il() const { return local_literals > 0; }
  bool ig() const { return global_literals > 0; }
  bool no_cross_outcome_pairs() const { return total == 0; }
  bool degenerate() const { return nr == 0; }
  std::size_t undecided() const { return undecided_overlap + undecided_rules + undecided_literals; }

  // 2 on negative overlap, else 3 on timeout, else 0.
  int exit_code() const {
    if (no > 0) return 2;
    if (ex) return 3;
    return 0;
  }
};

// NR, NP, RS, RM of a decision set.
inline void fill_shape(AuditReport& r, const DecisionSet& ds) {
  r.nr = ds.size();
  r.np = distinct_outcomes(ds).size();
  r.rs = 0;
  r.rm = 0;
  for (const Rule& rule : ds.rules()) {
    r.rs += rule.body.size();
    r.rm = std::max(r.rm, rule.body.size());
  }
}

// Cross-outcome rule pairs.
inline std::size_t cross_outcome_pairs(const DecisionSet& ds) {
  std::size_t n = 0;
  for (std::size_t a = 0; a < ds.rules().size(); ++a) {
    for (std::size_t b = a + 1; b < ds.rules().size(); ++b) {
      if (!(ds.rules()[a].outcome == ds.rules()[b].outcome)) ++n;
    }
  }
  return n;
}

inline std::string witness_text(const DecisionSet& ds, const Theory& theory,
                                 const std::vector<bool>& assignment) {
  if (assignment.empty()) return "";
  const DecisionSet* models[] = {&ds};
  oracle::FiniteGrid grid =
      oracle::FiniteGrid::covering(ds.space(), models, theory.bk.user_literal_clauses());
  std::optional<Point> p = oracle::lift_witness(grid, ds.space(), theory.table, assignment);
  if (!p) return "";
  std::string out;
  for (const Feature& f : ds.space().features()) {
    if (!out.empty()) out += ',';
    out += f.name + "=" + value_to_string((*p)[f.id - 1]);
  }
  return out;
}

inline ReportFinding make_finding(const DecisionSet& ds, const RedundancyFinding& f) {
  return ReportFinding{to_string(f.kind), f.rule_id,
                       f.literal ? format_literal(ds.space(), *f.literal) : std::string()};
}

inline void fill_overlap(AuditReport& r, const DecisionSet& ds, const Theory& theory,
                         const OverlapResult* overlap, const DefaultReachability* reach) {
  if (overlap) {
    r.total = overlap->total - std::min(overlap->total, [&] {
      std::size_t n = 0;
      for (const auto& [i, j] : overlap->undecided) {
        if (!(ds.rule(i).outcome == ds.rule(j).outcome)) ++n;
      }
      return n;
    }());
    r.no = overlap->negative_count();
    r.undecided_overlap = overlap->undecided.size();
    for (const OverlapPair& p : overlap->pairs) {
      if (p.kind == OverlapKind::Positive) ++r.positive;
      r.overlaps.push_back({p.i, p.j, p.kind == OverlapKind::Negative ? "negative" : "positive",
                            witness_text(ds, theory, p.witness)});
    }
  }
  if (reach) {
    r.default_reachable = to_string(reach->reachable);
    if (reach->reachable == Verdict::Undecided) ++r.undecided_overlap;
  }
}

struct AuditInputs {
  const DecisionSet* input = nullptr;     // as read
  const Theory* theory = nullptr;
  const PreprocessResult* preprocess = nullptr;
  const OverlapResult* overlap = nullptr;
  const DefaultReachability* reachability = nullptr;
  const RuleReduction* rules = nullptr;
  const LiteralScan* literals = nullptr;
  Timings timings;
  bool budget_expired = false;
};

// Statistics describe the decision set after duplicate and never-firing
// rules are dropped.
inline AuditReport build_report(const AuditInputs& in, std::string tag = "", std::string source = "") {
  AuditReport r;
  r.tag = std::move(tag);
  r.source = std::move(source);
  r.mode = "audit";
  r.input_rules = in.input->size();
  const DecisionSet& ds = in.preprocess->ds;
  fill_shape(r, ds);
  r.bs = in.theory->bk.size();
  r.timings = in.timings;
  for (const RemovedRule& rm : in.preprocess->removed) r.removed.push_back({rm.rule_id, rm.reason});
  r.undecided_rules += in.preprocess->unverified.size();
  fill_overlap(r, ds, *in.theory, in.overlap, in.reachability);
  if (in.rules) {
    r.undecided_rules += in.rules->undecided;
    for (const RedundancyFinding& f : in.rules->findings) {
      ++r.redundant_rules;
      r.findings.push_back(make_finding(ds, f));
    }
  }
  if (in.literals) {
    const DecisionSet& reduced = in.rules ? in.rules->ds : ds;
    r.literals = in.literals->total_literals;
    r.undecided_literals = in.literals->undecided;
    for (const RedundancyFinding& f : in.literals->findings) {
      if (f.kind == RedundancyFinding::Kind::LocalLiteral) ++r.local_literals;
      if (f.kind == RedundancyFinding::Kind::GlobalLiteral) ++r.global_literals;
      r.findings.push_back(make_finding(reduced, f));
    }
  }
  r.ex = in.budget_expired || r.undecided() > 0;
  return r;
}

// Report of an iterative simplification; PL and PG are over the literals of
// the preprocessed input.
inline AuditReport build_simplify_report(const DecisionSet& input, const PreprocessResult& pre,
                                         const Theory& theory, const OverlapResult& overlap,
                                         const DefaultReachability& reach, const SimplifyResult& s,
                                         Timings timings, std::string tag = "", std::string source = "") {
  AuditReport r;
  r.tag = std::move(tag);
  r.source = std::move(source);
  r.mode = "simplify";
  r.input_rules = input.size();
  fill_shape(r, pre.ds);
  r.bs = theory.bk.size();
  r.timings = timings;
  r.literals = pre.ds.literal_count();
  fill_overlap(r, pre.ds, theory, &overlap, &reach);
  for (const RemovedRule& rm : pre.removed) r.removed.push_back({rm.rule_id, rm.reason});
  r.undecided_rules = pre.unverified.size();
  for (const RedundancyFinding& f : s.findings) {
    switch (f.kind) {
      case RedundancyFinding::Kind::RedundantRule: ++r.redundant_rules; break;
      case RedundancyFinding::Kind::LocalLiteral: ++r.local_literals; break;
      case RedundancyFinding::Kind::GlobalLiteral: ++r.global_literals; break;
    }
    r.findings.push_back(make_finding(pre.ds, f));
  }
  r.ex = s.partial || r.undecided() > 0;
  return r;
}

// ---- serialization ----

enum class Format { JsonLines, Csv, Table };

inline std::optional<Format> parse_format(std::string_view s) {
  if (s == "json" || s == "jsonl" || s == "json-lines") return Format::JsonLines;
  if (s == "csv") return Format::Csv;
  if (s == "table" || s == "human") return Format::Table;
  return std::nullopt;
}

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "tag", "source", "mode", "input_rules", "NR", "NP", "NO", "Total", "PO", "TO", "TB", "TC", "TR",
      "BS", "RS", "RM", "IR", "IL", "IG", "redundant_rules", "local_literals", "global_literals",
      "literals", "PL", "PG", "EX", "undecided_overlap", "undecided_rules", "undecided_literals",
      "default_reachable", "no_cross_outcome_pairs", "degenerate", "positive_overlaps"};
  return cols;
}

inline nlohmann::ordered_json to_json(const AuditReport& r) {
  nlohmann::ordered_json j;
  j["tag"] = r.tag;
  j["source"] = r.source;
  j["mode"] = r.mode;
  j["input_rules"] = r.input_rules;
  j["NR"] = r.nr;
  j["NP"] = r.np;
  j["NO"] = r.no;
  j["Total"] = r.total;
  j["PO"] = r.po().percent();
  j["TO"] = format_seconds(r.timings.to);
  j["TB"] = format_seconds(r.timings.tb);
  j["TC"] = format_seconds(r.timings.tc);
  j["TR"] = format_seconds(r.timings.tr);
  j["BS"] = r.bs;
  j["RS"] = r.rs;
  j["RM"] = r.rm;
  j["IR"] = r.ir() ? 1 : 0;
  j["IL"] = r.il() ? 1 : 0;
  j["IG"] = r.ig() ? 1 : 0;
  j["redundant_rules"] = r.redundant_rules;
  j["local_literals"] = r.local_literals;
  j["global_literals"] = r.global_literals;
  j["literals"] = r.literals;
  j["PL"] = r.pl().percent();
  j["PG"] = r.pg().percent();
  j["EX"] = r.ex ? 1 : 0;
  j["undecided_overlap"] = r.undecided_overlap;
  j["undecided_rules"] = r.undecided_rules;
  j["undecided_literals"] = r.undecided_literals;
  j["default_reachable"] = r.default_reachable;
  j["no_cross_outcome_pairs"] = r.no_cross_outcome_pairs();
  j["degenerate"] = r.degenerate();
  j["positive_overlaps"] = r.positive;
  j["removed"] = nlohmann::ordered_json::array();
  for (const auto& x : r.removed) j["removed"].push_back({{"rule", x.rule_id}, {"reason", x.reason}});
  j["overlaps"] = nlohmann::ordered_json::array();
  for (const auto& o : r.overlaps) {
    j["overlaps"].push_back({{"i", o.i}, {"j", o.j}, {"kind", o.kind}, {"witness", o.witness}});
  }
  j["findings"] = nlohmann::ordered_json::array();
  for (const auto& f : r.findings) {
    j["findings"].push_back({{"kind", f.kind}, {"rule", f.rule_id}, {"literal", f.literal}});
  }
  return j;
}

inline std::string csv_cell(const nlohmann::ordered_json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_header() {
  std::string out;
  for (const std::string& c : csv_columns()) out += (out.empty() ? "" : ",") + c;
  return out + "\n";
}

inline std::string csv_row(const AuditReport& r) {
  nlohmann::ordered_json j = to_json(r);
  std::string out;
  bool first = true;
  for (const std::string& c : csv_columns()) {
    if (!first) out += ',';
    first = false;
    out += csv_cell(j.at(c));
  }
  return out + "\n";
}

inline std::string clip(std::string s, std::size_t width) {
  if (s.size() <= width) return s;
  return s.substr(0, width - 3) + "...";
}

inline std::string table(const AuditReport& r) {
  std::ostringstream out;
  char buf[256];
  auto row = [&](const char* a, const std::string& x, const char* b, const std::string& y, const char* c,
                 const std::string& z) {
    std::snprintf(buf, sizeof buf, "  %-8s %12s   %-8s %12s   %-8s %12s\n", a, x.c_str(), b, y.c_str(), c,
                  z.c_str());
    out << buf;
  };
  out << clip("model " + (r.tag.empty() ? std::string("-") : r.tag) + "  source " +
                  (r.source.empty() ? std::string("-") : r.source) + "  mode " + r.mode,
              110)
      << "\n";
  row("NR", std::to_string(r.nr), "NP", std::to_string(r.np), "input", std::to_string(r.input_rules));
  row("NO", std::to_string(r.no), "Total", std::to_string(r.total), "PO%", r.po().percent());
  row("TB", format_seconds(r.timings.tb), "TO", format_seconds(r.timings.to), "TC",
      format_seconds(r.timings.tc));
  row("TR", format_seconds(r.timings.tr), "BS", std::to_string(r.bs), "EX", r.ex ? "1" : "0");
  row("RS", std::to_string(r.rs), "RM", std::to_string(r.rm), "literals", std::to_string(r.literals));
  row("IR", std::to_string(r.redundant_rules), "IL", std::to_string(r.local_literals), "IG",
      std::to_string(r.global_literals));
  row("PL%", r.pl().percent(), "PG%", r.pg().percent(), "default", r.default_reachable);
  if (r.undecided() > 0) {
    row("undec-ov", std::to_string(r.undecided_overlap), "undec-ru", std::to_string(r.undecided_rules),
        "undec-li", std::to_string(r.undecided_literals));
  }
  for (const auto& x : r.removed) {
    out << clip("  removed rule " + std::to_string(x.rule_id) + " (" + x.reason + ")", 110) << "\n";
  }
  for (const auto& o : r.overlaps) {
    out << clip("  " + o.kind + " overlap R" + std::to_string(o.i) + " R" + std::to_string(o.j) +
                    (o.witness.empty() ? "" : "  at " + o.witness),
                110)
        << "\n";
  }
  for (const auto& f : r.findings) {
    out << clip("  " + f.kind + " R" + std::to_string(f.rule_id) +
                    (f.literal.empty() ? "" : "  " + f.literal),
                110)
        << "\n";
  }
  return out.str();
}

inline std::string serialize(const std::vector<AuditReport>& reports, Format format) {
  std::string out;
  switch (format) {
    case Format::JsonLines:
      for (const auto& r : reports) out += to_json(r).dump() + "\n";
      break;
    case Format::Csv:
      out = csv_header();
      for (const auto& r : reports) out += csv_row(r);
      break;
    case Format::Table:
      for (std::size_t k = 0; k < reports.size(); ++k) {
        if (k != 0) out += "\n";
        out += table(reports[k]);
      }
      break;
  }
  return out;
}

inline std::string serialize(const AuditReport& r, Format format) { return serialize(std::vector{r}, format); }

// ---- aggregation ----
//
// Per model tag: DS reports, EX timed out. The remaining statistics average
// over reports that did not time out; PL (PG) averages only over reports with
// at least one locally (globally) redundant literal, and IR/IL/IG count
// reports.

struct AggregateRow {
  std::string tag;
  std::size_t ds = 0;
  std::size_t ex = 0;
  std::size_t ir = 0;
  std::size_t il = 0;
  std::size_t ig = 0;
  std::map<std::string, double> mean;  // NR NP NO PO TO TB TC TR BS RS RM PL PG
};

inline const std::vector<std::string>& aggregate_means() {
  static const std::vector<std::string> keys = {"NR", "NP", "NO", "PO", "TO", "TB", "TC",
                                                "TR", "BS", "RS", "RM", "PL", "PG"};
  return keys;
}

inline double json_number(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  return std::stod(v.get<std::string>());
}

inline std::vector<AggregateRow> aggregate(const std::vector<nlohmann::json>& reports) {
  std::map<std::string, std::vector<const nlohmann::json*>> by_tag;
  std::vector<std::string> order;
  for (const auto& r : reports) {
    std::string tag = r.value("tag", std::string());
    if (!by_tag.count(tag)) order.push_back(tag);
    by_tag[tag].push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const std::string& tag : order) {
    AggregateRow row;
    row.tag = tag;
    std::map<std::string, double> sum;
    std::map<std::string, std::size_t> count;
    for (const nlohmann::json* r : by_tag[tag]) {
      ++row.ds;
      if (json_number(r->at("EX")) != 0) {
        ++row.ex;
        continue;
      }
      bool il = json_number(r->at("IL")) != 0;
      bool ig = json_number(r->at("IG")) != 0;
      row.ir += json_number(r->at("IR")) != 0 ? 1 : 0;
      row.il += il ? 1 : 0;
      row.ig += ig ? 1 : 0;
      for (const std::string& k : aggregate_means()) {
        if ((k == "PL" && !il) || (k == "PG" && !ig)) continue;
        sum[k] += json_number(r->at(k));
        ++count[k];
      }
    }
    for (const std::string& k : aggregate_means()) {
      row.mean[k] = count[k] == 0 ? 0.0 : sum[k] / static_cast<double>(count[k]);
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string serialize_aggregate(const std::vector<AggregateRow>& rows, Format format) {
  std::vector<std::string> cols = {"tag", "DS", "EX", "IR", "IL", "IG"};
  for (const std::string& k : aggregate_means()) cols.push_back(k);
  auto cells = [&](const AggregateRow& r) {
    std::vector<std::string> c = {r.tag, std::to_string(r.ds), std::to_string(r.ex), std::to_string(r.ir),
                                  std::to_string(r.il), std::to_string(r.ig)};
    for (const std::string& k : aggregate_means()) c.push_back(fixed4(r.mean.at(k)));
    return c;
  };
  std::string out;
  switch (format) {
    case Format::JsonLines:
      for (const auto& r : rows) {
        nlohmann::ordered_json j;
        std::vector<std::string> c = cells(r);
        for (std::size_t k = 0; k < cols.size(); ++k) {
          if (k == 0) j[cols[k]] = c[k];
          else if (k < 6) j[cols[k]] = std::stoull(c[k]);
          else j[cols[k]] = c[k];
        }
        out += j.dump() + "\n";
      }
      break;
    case Format::Csv:
      for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k];
      out += "\n";
      for (const auto& r : rows) {
        std::vector<std::string> c = cells(r);
        for (std::size_t k = 0; k < c.size(); ++k) {
          out += (k ? "," : "") + csv_cell(nlohmann::ordered_json(c[k]));
        }
        out += "\n";
      }
      break;
    case Format::Table: {
      char buf[64];
      auto cell = [&](std::size_t k, const std::string& text) {
        std::snprintf(buf, sizeof buf, k == 0 ? "%-8s" : (k < 6 ? " %3s" : " %6s"), text.c_str());
        out += buf;
      };
      for (std::size_t k = 0; k < cols.size(); ++k) cell(k, cols[k]);
      out += "\n";
      for (const auto& r : rows) {
        cell(0, clip(r.tag, 8));
        std::vector<std::string> c = cells(r);
        for (std::size_t k = 1; k < 6; ++k) cell(k, c[k]);
        for (std::size_t k = 6; k < cols.size(); ++k) {
          double v = r.mean.at(cols[k]);
          std::snprintf(buf, sizeof buf, v >= 1000 ? "%.0f" : "%.2f", v);
          cell(k, buf);
        }
        out += "\n";
      }
      break;
    }
  }
  return out;
}

}  // namespace dsaudit

#endif  // DSAUDIT_REPORT_HPP
