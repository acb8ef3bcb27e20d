#ifndef DSAUDIT_INGEST_HPP
#define DSAUDIT_INGEST_HPP

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsaudit/model.hpp"

// Readers and writers for the three input formats: the rule DSL (plus its
// JSON form), decision-tree dumps and anchor records.
//
// Rule DSL, one statement per line, '#' starts a comment:
//
//   rulefile v1
//   task classification | regression
//   tie-break report-ambiguity | lowest-rule-index | majority-then-lowest-index
//   feature <name> numeric | categorical
//   clause <literal> | <literal> ...
//   rule [<id>] <literal> & <literal> ... => <outcome>
//   default <outcome>
//
// A literal is `<feature> <op> <value>` with op one of = == != <> < <= > >=
// ≠ ≤ ≥. Words containing spaces or operator characters are double-quoted.
// Rules without an explicit [id] are numbered by position.
namespace dsaudit {

class IngestError : public std::runtime_error {
 public:
  IngestError(std::size_t line, std::size_t col, const std::string& what)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ", col " +
                                           std::to_string(col) + ": " + what),
        line_(line),
        col_(col) {}
  std::size_t line() const { return line_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t line_;
  std::size_t col_;
};

struct RuleFile {
  DecisionSet ds;
  std::vector<LiteralClause> background;
};

enum class InputKind { Auto, Rules, Tree, Anchors };

inline std::optional<InputKind> parse_input_kind(std::string_view s) {
  if (s == "auto") return InputKind::Auto;
  if (s == "rules") return InputKind::Rules;
  if (s == "tree") return InputKind::Tree;
  if (s == "anchors") return InputKind::Anchors;
  return std::nullopt;
}

// Outcome of the default rule for models that have none (trees, anchors).
inline const std::string kNoDefault = "<none>";

namespace detail {

struct Token {
  enum class Kind { Word, Quoted, Op, Amp, Bar, Arrow, LBracket, RBracket };
  Kind kind;
  std::string text;
  std::size_t col;  // 1-based
};

inline bool op_char(char c) { return c == '=' || c == '!' || c == '<' || c == '>'; }

inline bool starts_with_unicode_op(std::string_view s) {
  return s.starts_with("≠") || s.starts_with("≤") || s.starts_with("≥");
}

inline std::vector<Token> tokenize(std::string_view line, std::size_t line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '#') break;
    std::size_t col = i + 1;
    if (c == '"') {
      std::string text;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '\\' && i + 1 < line.size()) {
          text += line[i + 1];
          i += 2;
        } else if (line[i] == '"') {
          closed = true;
          ++i;
          break;
        } else {
          text += line[i++];
        }
      }
      if (!closed) throw IngestError(line_no, col, "unterminated string");
      out.push_back({Token::Kind::Quoted, std::move(text), col});
    } else if (c == '&') {
      out.push_back({Token::Kind::Amp, "&", col});
      ++i;
    } else if (c == '|') {
      out.push_back({Token::Kind::Bar, "|", col});
      ++i;
    } else if (c == '[') {
      out.push_back({Token::Kind::LBracket, "[", col});
      ++i;
    } else if (c == ']') {
      out.push_back({Token::Kind::RBracket, "]", col});
      ++i;
    } else if (line.substr(i).starts_with("=>")) {
      out.push_back({Token::Kind::Arrow, "=>", col});
      i += 2;
    } else if (op_char(c)) {
      std::size_t j = i;
      while (j < line.size() && op_char(line[j])) ++j;
      out.push_back({Token::Kind::Op, std::string(line.substr(i, j - i)), col});
      i = j;
    } else if (starts_with_unicode_op(line.substr(i))) {
      out.push_back({Token::Kind::Op, std::string(line.substr(i, 3)), col});
      i += 3;
    } else {
      std::size_t j = i;
      while (j < line.size()) {
        char d = line[j];
        if (d == ' ' || d == '\t' || d == '\r' || d == '#' || d == '"' || d == '&' || d == '|' ||
            d == '[' || d == ']' || op_char(d) || starts_with_unicode_op(line.substr(j))) {
          break;
        }
        ++j;
      }
      out.push_back({Token::Kind::Word, std::string(line.substr(i, j - i)), col});
      i = j;
    }
  }
  return out;
}

inline bool is_word(const Token& t) { return t.kind == Token::Kind::Word || t.kind == Token::Kind::Quoted; }

// Value of a literal given the feature's kind.
inline Value make_value(const Feature& f, const std::string& text, std::size_t line, std::size_t col) {
  if (f.kind == FeatureKind::Categorical) return text;
  auto d = Decimal::parse(text);
  if (!d) throw IngestError(line, col, "'" + text + "' is not a number (feature '" + f.name + "')");
  return *d;
}

class Cursor {
 public:
  Cursor(const std::vector<Token>& tokens, std::size_t line, std::size_t line_len)
      : tokens_(tokens), line_(line), end_col_(line_len + 1) {}

  bool done() const { return pos_ >= tokens_.size(); }
  const Token* peek() const { return done() ? nullptr : &tokens_[pos_]; }
  std::size_t col() const { return done() ? end_col_ : tokens_[pos_].col; }
  std::size_t line() const { return line_; }

  const Token& next(const char* expected) {
    if (done()) throw IngestError(line_, end_col_, std::string("expected ") + expected);
    return tokens_[pos_++];
  }

  const Token& word(const char* expected) {
    const Token& t = next(expected);
    if (!is_word(t)) throw IngestError(line_, t.col, std::string("expected ") + expected);
    return t;
  }

  bool accept(Token::Kind k) {
    if (!done() && tokens_[pos_].kind == k) {
      ++pos_;
      return true;
    }
    return false;
  }

  void finish() {
    if (!done()) throw IngestError(line_, tokens_[pos_].col, "unexpected '" + tokens_[pos_].text + "'");
  }

 private:
  const std::vector<Token>& tokens_;
  std::size_t line_;
  std::size_t end_col_;
  std::size_t pos_ = 0;
};

inline Literal parse_literal(Cursor& cur, const FeatureSpace& space) {
  const Token& name = cur.word("feature name");
  auto id = space.find(name.text);
  if (!id) throw IngestError(cur.line(), name.col, "undeclared feature '" + name.text + "'");
  const Token& op_tok = cur.next("operator");
  auto op = op_tok.kind == Token::Kind::Op ? parse_rel_op(op_tok.text) : std::nullopt;
  if (!op) throw IngestError(cur.line(), op_tok.col, "expected operator, got '" + op_tok.text + "'");
  const Token& val = cur.word("value");
  const Feature& f = space.at(*id);
  if (!admissible(f.kind, *op)) {
    throw IngestError(cur.line(), op_tok.col,
                      "operator '" + op_tok.text + "' not allowed on categorical feature '" + f.name + "'");
  }
  return canonicalize(space, RawLiteral{*id, *op, make_value(f, val.text, cur.line(), val.col)});
}

// Standalone literal text such as "age <= 30" (JSON rule files, anchors).
inline Literal parse_literal_text(std::string_view text, const FeatureSpace& space) {
  std::vector<Token> tokens = tokenize(text, 0);
  Cursor cur(tokens, 0, text.size());
  Literal l = parse_literal(cur, space);
  cur.finish();
  return l;
}

inline bool plain_word(std::string_view s) {
  if (s.empty()) return false;
  std::vector<Token> t;
  try {
    t = tokenize(s, 0);
  } catch (const IngestError&) {
    return false;
  }
  return t.size() == 1 && t[0].kind == Token::Kind::Word && t[0].text == s;
}

inline std::string quote(std::string_view s) {
  if (plain_word(s)) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string literal_text(const FeatureSpace& space, const Literal& l) {
  RawLiteral raw = to_raw(l);
  return quote(space.at(raw.feature).name) + " " + to_string(raw.op) + " " +
         quote(value_to_string(raw.value));
}

inline std::optional<Task> parse_task(std::string_view s) {
  if (s == "classification") return Task::Classification;
  if (s == "regression") return Task::Regression;
  return std::nullopt;
}

inline std::optional<FeatureKind> parse_feature_kind(std::string_view s) {
  if (s == "numeric") return FeatureKind::Numeric;
  if (s == "categorical") return FeatureKind::Categorical;
  return std::nullopt;
}

inline const char* to_string(FeatureKind k) {
  return k == FeatureKind::Numeric ? "numeric" : "categorical";
}

// JSON numbers are read as doubles; the shortest round-trip form recovers the
// decimal that was written.
inline std::string json_scalar_text(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  if (j.is_number_unsigned()) return std::to_string(j.get<unsigned long long>());
  if (j.is_number_float()) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, j.get<double>());
    return std::string(buf, r.ptr);
  }
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  throw IngestError(0, 0, "expected a string or number, got " + j.dump());
}

inline nlohmann::json outcome_json(const Outcome& o) { return o.label(); }

}  // namespace detail

// ---- rule DSL ----

inline RuleFile parse_rules(std::istream& in) {
  FeatureSpace space;
  std::vector<Rule> rules;
  std::vector<LiteralClause> background;
  std::optional<Outcome> default_outcome;
  TieBreak tie_break = TieBreak::ReportAmbiguity;
  Task task = Task::Classification;
  bool header = false;
  std::size_t next_id = 1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<detail::Token> tokens = detail::tokenize(line, line_no);
    if (tokens.empty()) continue;
    detail::Cursor cur(tokens, line_no, line.size());
    const detail::Token& kw = cur.word("statement");
    if (!header) {
      const detail::Token* v = cur.peek();
      if (kw.text != "rulefile" || v == nullptr || v->text != "v1") {
        throw IngestError(line_no, kw.col, "expected header 'rulefile v1'");
      }
      cur.next("version");
      cur.finish();
      header = true;
      continue;
    }
    if (kw.text == "task") {
      const detail::Token& t = cur.word("task");
      auto parsed = detail::parse_task(t.text);
      if (!parsed) throw IngestError(line_no, t.col, "unknown task '" + t.text + "'");
      task = *parsed;
    } else if (kw.text == "tie-break") {
      const detail::Token& t = cur.word("tie-break strategy");
      auto parsed = parse_tie_break(t.text);
      if (!parsed) throw IngestError(line_no, t.col, "unknown tie-break '" + t.text + "'");
      tie_break = *parsed;
    } else if (kw.text == "feature") {
      const detail::Token& name = cur.word("feature name");
      const detail::Token& kind = cur.word("feature kind");
      auto parsed = detail::parse_feature_kind(kind.text);
      if (!parsed) throw IngestError(line_no, kind.col, "unknown feature kind '" + kind.text + "'");
      if (space.find(name.text)) {
        throw IngestError(line_no, name.col, "feature '" + name.text + "' declared twice");
      }
      space.add(name.text, *parsed);
    } else if (kw.text == "clause") {
      LiteralClause clause{detail::parse_literal(cur, space)};
      while (cur.accept(detail::Token::Kind::Bar)) clause.push_back(detail::parse_literal(cur, space));
      background.push_back(std::move(clause));
    } else if (kw.text == "rule") {
      std::size_t id = next_id;
      if (cur.accept(detail::Token::Kind::LBracket)) {
        const detail::Token& t = cur.word("rule id");
        std::size_t parsed = 0;
        auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), parsed);
        if (r.ec != std::errc{} || r.ptr != t.text.data() + t.text.size() || parsed == 0) {
          throw IngestError(line_no, t.col, "rule id must be a positive integer");
        }
        id = parsed;
        if (!cur.accept(detail::Token::Kind::RBracket)) throw IngestError(line_no, cur.col(), "expected ']'");
      }
      Cube body{detail::parse_literal(cur, space)};
      while (cur.accept(detail::Token::Kind::Amp)) body.push_back(detail::parse_literal(cur, space));
      if (!cur.accept(detail::Token::Kind::Arrow)) throw IngestError(line_no, cur.col(), "expected '=>'");
      const detail::Token& o = cur.word("outcome");
      for (const Rule& r : rules) {
        if (r.id == id) throw IngestError(line_no, kw.col, "duplicate rule id " + std::to_string(id));
      }
      rules.push_back(Rule{id, std::move(body), Outcome(o.text)});
      next_id = std::max(next_id, id) + 1;
    } else if (kw.text == "default") {
      const detail::Token& o = cur.word("outcome");
      if (default_outcome) throw IngestError(line_no, kw.col, "duplicate default");
      default_outcome = Outcome(o.text);
    } else {
      throw IngestError(line_no, kw.col, "unknown statement '" + kw.text + "'");
    }
    cur.finish();
  }
  if (!header) throw IngestError(1, 1, "expected header 'rulefile v1'");
  if (!default_outcome) throw IngestError(line_no, 1, "missing default outcome");
  try {
    return RuleFile{DecisionSet(std::move(space), std::move(rules), *default_outcome, tie_break, task),
                    std::move(background)};
  } catch (const ModelError& e) {
    throw IngestError(0, 0, e.what());
  }
}

inline RuleFile parse_rules_text(const std::string& text) {
  std::istringstream in(text);
  return parse_rules(in);
}

inline std::string serialize_rules(const RuleFile& rf) {
  const DecisionSet& ds = rf.ds;
  const FeatureSpace& space = ds.space();
  std::ostringstream out;
  out << "rulefile v1\n";
  out << "task " << to_string(ds.task()) << "\n";
  out << "tie-break " << to_string(ds.tie_break()) << "\n";
  for (const Feature& f : space.features()) {
    out << "feature " << detail::quote(f.name) << ' ' << detail::to_string(f.kind) << "\n";
  }
  for (const LiteralClause& c : rf.background) {
    out << "clause ";
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (k != 0) out << " | ";
      out << detail::literal_text(space, c[k]);
    }
    out << "\n";
  }
  bool sequential = true;
  for (std::size_t k = 0; k < ds.rules().size(); ++k) sequential = sequential && ds.rules()[k].id == k + 1;
  for (const Rule& r : ds.rules()) {
    out << "rule ";
    if (!sequential) out << '[' << r.id << "] ";
    for (std::size_t k = 0; k < r.body.size(); ++k) {
      if (k != 0) out << " & ";
      out << detail::literal_text(space, r.body[k]);
    }
    out << " => " << detail::quote(r.outcome.label()) << "\n";
  }
  out << "default " << detail::quote(ds.default_outcome().label()) << "\n";
  return out.str();
}

// ---- JSON rule file ----
//
// {"format": "rulefile", "version": 1, "task": ..., "tie_break": ...,
//  "features": [{"name": ..., "kind": ...}], "background": [[literal, ...]],
//  "rules": [{"id": n, "body": [literal, ...], "outcome": ...}], "default": ...}

inline RuleFile parse_rules_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "rulefile" || j.value("version", 0) != 1) {
      throw IngestError(0, 0, "expected \"format\": \"rulefile\" and \"version\": 1");
    }
    FeatureSpace space;
    for (const auto& f : j.at("features")) {
      auto kind = detail::parse_feature_kind(f.at("kind").get<std::string>());
      if (!kind) throw IngestError(0, 0, "unknown feature kind " + f.at("kind").dump());
      std::string name = f.at("name").get<std::string>();
      if (space.find(name)) throw IngestError(0, 0, "feature '" + name + "' declared twice");
      space.add(name, *kind);
    }
    std::vector<LiteralClause> background;
    for (const auto& c : j.value("background", nlohmann::json::array())) {
      LiteralClause clause;
      for (const auto& l : c) clause.push_back(detail::parse_literal_text(l.get<std::string>(), space));
      background.push_back(std::move(clause));
    }
    std::vector<Rule> rules;
    std::size_t next_id = 1;
    for (const auto& r : j.at("rules")) {
      std::size_t id = r.contains("id") ? r.at("id").get<std::size_t>() : next_id;
      Cube body;
      for (const auto& l : r.at("body")) body.push_back(detail::parse_literal_text(l.get<std::string>(), space));
      rules.push_back(Rule{id, std::move(body), Outcome(detail::json_scalar_text(r.at("outcome")))});
      next_id = std::max(next_id, id) + 1;
    }
    TieBreak tb = TieBreak::ReportAmbiguity;
    if (j.contains("tie_break")) {
      auto parsed = parse_tie_break(j.at("tie_break").get<std::string>());
      if (!parsed) throw IngestError(0, 0, "unknown tie-break " + j.at("tie_break").dump());
      tb = *parsed;
    }
    Task task = Task::Classification;
    if (j.contains("task")) {
      auto parsed = detail::parse_task(j.at("task").get<std::string>());
      if (!parsed) throw IngestError(0, 0, "unknown task " + j.at("task").dump());
      task = *parsed;
    }
    return RuleFile{DecisionSet(std::move(space), std::move(rules),
                                Outcome(detail::json_scalar_text(j.at("default"))), tb, task),
                    std::move(background)};
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(0, 0, std::string("malformed rule file: ") + e.what());
  } catch (const ModelError& e) {
    throw IngestError(0, 0, e.what());
  }
}

inline nlohmann::json serialize_rules_json(const RuleFile& rf) {
  const DecisionSet& ds = rf.ds;
  nlohmann::json j;
  j["format"] = "rulefile";
  j["version"] = 1;
  j["task"] = to_string(ds.task());
  j["tie_break"] = to_string(ds.tie_break());
  j["features"] = nlohmann::json::array();
  for (const Feature& f : ds.space().features()) {
    j["features"].push_back({{"name", f.name}, {"kind", detail::to_string(f.kind)}});
  }
  j["background"] = nlohmann::json::array();
  for (const LiteralClause& c : rf.background) {
    nlohmann::json clause = nlohmann::json::array();
    for (const Literal& l : c) clause.push_back(detail::literal_text(ds.space(), l));
    j["background"].push_back(clause);
  }
  j["rules"] = nlohmann::json::array();
  for (const Rule& r : ds.rules()) {
    nlohmann::json body = nlohmann::json::array();
    for (const Literal& l : r.body) body.push_back(detail::literal_text(ds.space(), l));
    j["rules"].push_back({{"id", r.id}, {"body", body}, {"outcome", detail::outcome_json(r.outcome)}});
  }
  j["default"] = detail::outcome_json(ds.default_outcome());
  return j;
}

// ---- decision trees ----
//
// {"features": [{"name": ..., "kind": ...}],   (optional: kinds inferred)
//  "task": ...,                                (optional)
//  "tree": node}
// node := {"feature": name, "op": ">", "threshold": v, "left": node, "right": node}
//       | {"leaf": outcome}
// The right child is taken when the split condition holds.

struct TreeNode {
  std::optional<Outcome> leaf;
  FeatureId feature = 0;
  RelOp op = RelOp::Gt;
  Value threshold;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;
};

struct TreeExport {
  FeatureSpace space;
  Task task = Task::Classification;
  TreeNode root;
};

namespace detail {

inline void infer_kind(std::map<std::string, FeatureKind>& kinds, std::vector<std::string>& order,
                       const std::string& name, const std::string& value, RelOp op) {
  bool numeric = Decimal::parse(value).has_value();
  auto it = kinds.find(name);
  if (it == kinds.end()) {
    order.push_back(name);
    it = kinds.emplace(name, FeatureKind::Numeric).first;
  }
  if (!numeric) {
    if (op != RelOp::Eq && op != RelOp::Ne) {
      throw IngestError(0, 0, "ordered comparison with non-numeric value on '" + name + "'");
    }
    it->second = FeatureKind::Categorical;
  }
}

inline FeatureSpace space_from_json(const nlohmann::json& j) {
  FeatureSpace space;
  for (const auto& f : j) {
    auto kind = parse_feature_kind(f.at("kind").get<std::string>());
    if (!kind) throw IngestError(0, 0, "unknown feature kind " + f.at("kind").dump());
    std::string name = f.at("name").get<std::string>();
    if (space.find(name)) throw IngestError(0, 0, "feature '" + name + "' declared twice");
    space.add(name, *kind);
  }
  return space;
}

inline nlohmann::json space_to_json(const FeatureSpace& space) {
  nlohmann::json out = nlohmann::json::array();
  for (const Feature& f : space.features()) out.push_back({{"name", f.name}, {"kind", to_string(f.kind)}});
  return out;
}

inline RelOp split_op(const nlohmann::json& node) {
  auto op = parse_rel_op(node.value("op", std::string(">")));
  if (!op) throw IngestError(0, 0, "unknown split operator in " + node.dump());
  return *op;
}

inline void scan_tree(const nlohmann::json& node, std::map<std::string, FeatureKind>& kinds,
                      std::vector<std::string>& order) {
  if (!node.is_object()) throw IngestError(0, 0, "malformed tree node " + node.dump());
  if (node.contains("leaf")) return;
  infer_kind(kinds, order, node.at("feature").get<std::string>(),
             json_scalar_text(node.at("threshold")), split_op(node));
  scan_tree(node.at("left"), kinds, order);
  scan_tree(node.at("right"), kinds, order);
}

inline TreeNode read_node(const nlohmann::json& node, const FeatureSpace& space) {
  TreeNode out;
  if (!node.is_object()) throw IngestError(0, 0, "malformed tree node " + node.dump());
  if (node.contains("leaf")) {
    out.leaf = Outcome(json_scalar_text(node.at("leaf")));
    return out;
  }
  if (!node.contains("left") || !node.contains("right") || !node.contains("feature") ||
      !node.contains("threshold")) {
    throw IngestError(0, 0, "malformed tree node " + node.dump());
  }
  std::string name = node.at("feature").get<std::string>();
  auto id = space.find(name);
  if (!id) throw IngestError(0, 0, "undeclared feature '" + name + "'");
  out.feature = *id;
  out.op = split_op(node);
  const Feature& f = space.at(*id);
  if (!admissible(f.kind, out.op)) {
    throw IngestError(0, 0, "operator not allowed on categorical feature '" + name + "'");
  }
  out.threshold = make_value(f, json_scalar_text(node.at("threshold")), 0, 0);
  out.left = std::make_unique<TreeNode>(read_node(node.at("left"), space));
  out.right = std::make_unique<TreeNode>(read_node(node.at("right"), space));
  return out;
}

inline nlohmann::json write_node(const TreeNode& node, const FeatureSpace& space) {
  if (node.leaf) return {{"leaf", node.leaf->label()}};
  return {{"feature", space.at(node.feature).name},
          {"op", to_string(node.op)},
          {"threshold", value_to_string(node.threshold)},
          {"left", write_node(*node.left, space)},
          {"right", write_node(*node.right, space)}};
}

inline void walk_tree(const TreeNode& node, const FeatureSpace& space, Cube& path,
                      std::vector<std::pair<Cube, Outcome>>& out) {
  if (node.leaf) {
    // a path repeating a split with both polarities can never be taken
    if (!syntactically_contradictory(path)) out.emplace_back(path, *node.leaf);
    return;
  }
  Literal split = canonicalize(space, RawLiteral{node.feature, node.op, node.threshold});
  path.push_back(split.negated());
  walk_tree(*node.left, space, path, out);
  path.back() = split;
  walk_tree(*node.right, space, path, out);
  path.pop_back();
}

}  // namespace detail

inline TreeExport parse_tree(const nlohmann::json& j) {
  try {
    TreeExport t;
    const nlohmann::json& root = j.at("tree");
    if (j.contains("features")) {
      t.space = detail::space_from_json(j.at("features"));
    } else {
      std::map<std::string, FeatureKind> kinds;
      std::vector<std::string> order;
      detail::scan_tree(root, kinds, order);
      for (const std::string& n : order) t.space.add(n, kinds.at(n));
    }
    if (j.contains("task")) {
      auto parsed = detail::parse_task(j.at("task").get<std::string>());
      if (!parsed) throw IngestError(0, 0, "unknown task " + j.at("task").dump());
      t.task = *parsed;
    }
    t.root = detail::read_node(root, t.space);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(0, 0, std::string("malformed tree: ") + e.what());
  } catch (const ModelError& e) {
    throw IngestError(0, 0, e.what());
  }
}

inline nlohmann::json serialize_tree(const TreeExport& t) {
  return {{"features", detail::space_to_json(t.space)},
          {"task", to_string(t.task)},
          {"tree", detail::write_node(t.root, t.space)}};
}

// One rule per root-to-leaf path. The default outcome is a sentinel that a
// tree never reaches. A single-leaf tree becomes a default-only set with the
// leaf's outcome.
inline DecisionSet tree_to_rules(const TreeExport& t) {
  if (t.root.leaf) return DecisionSet(t.space, {}, *t.root.leaf, TieBreak::ReportAmbiguity, t.task);
  std::vector<std::pair<Cube, Outcome>> paths;
  Cube path;
  detail::walk_tree(t.root, t.space, path, paths);
  try {
    return DecisionSet::numbered(t.space, std::move(paths), Outcome(kNoDefault),
                                 TieBreak::ReportAmbiguity, t.task);
  } catch (const ModelError& e) {
    throw IngestError(0, 0, e.what());
  }
}

inline DecisionSet tree_to_rules(const nlohmann::json& j) { return tree_to_rules(parse_tree(j)); }

// ---- anchors ----
//
// {"features": [...],   (optional: kinds inferred)
//  "anchors": [{"predicates": ["age > 30", "sex = male"], "class": 1}, ...]}

namespace detail {

// Splits "name op value" without a feature space, for kind inference.
inline std::tuple<std::string, RelOp, std::string> split_predicate(const std::string& text) {
  std::vector<Token> t = tokenize(text, 0);
  if (t.size() != 3 || !is_word(t[0]) || t[1].kind != Token::Kind::Op || !is_word(t[2])) {
    throw IngestError(0, 0, "malformed predicate '" + text + "'");
  }
  auto op = parse_rel_op(t[1].text);
  if (!op) throw IngestError(0, 0, "unknown operator in predicate '" + text + "'");
  return {t[0].text, *op, t[2].text};
}

}  // namespace detail

inline DecisionSet parse_anchors(const nlohmann::json& j) {
  try {
    const nlohmann::json& records = j.at("anchors");
    FeatureSpace space;
    if (j.contains("features")) {
      space = detail::space_from_json(j.at("features"));
    } else {
      std::map<std::string, FeatureKind> kinds;
      std::vector<std::string> order;
      for (const auto& a : records) {
        for (const auto& p : a.at("predicates")) {
          auto [name, op, value] = detail::split_predicate(p.get<std::string>());
          detail::infer_kind(kinds, order, name, value, op);
        }
      }
      for (const std::string& n : order) space.add(n, kinds.at(n));
    }
    std::vector<std::pair<Cube, Outcome>> rules;
    for (const auto& a : records) {
      Cube body;
      for (const auto& p : a.at("predicates")) body.push_back(detail::parse_literal_text(p.get<std::string>(), space));
      body = dedup_cube(body);
      std::sort(body.begin(), body.end());
      Outcome o(detail::json_scalar_text(a.at("class")));
      bool seen = std::any_of(rules.begin(), rules.end(), [&](const auto& r) {
        return r.second == o && r.first == body;
      });
      if (!seen) rules.emplace_back(std::move(body), std::move(o));
    }
    return DecisionSet::numbered(std::move(space), std::move(rules), Outcome(kNoDefault));
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(0, 0, std::string("malformed anchors record: ") + e.what());
  } catch (const ModelError& e) {
    throw IngestError(0, 0, e.what());
  }
}

inline nlohmann::json serialize_anchors(const DecisionSet& ds) {
  nlohmann::json j;
  j["features"] = detail::space_to_json(ds.space());
  j["anchors"] = nlohmann::json::array();
  for (const Rule& r : ds.rules()) {
    nlohmann::json preds = nlohmann::json::array();
    for (const Literal& l : r.body) preds.push_back(detail::literal_text(ds.space(), l));
    j["anchors"].push_back({{"predicates", preds}, {"class", r.outcome.label()}});
  }
  return j;
}

// ---- loading ----

inline RuleFile load_model(const std::filesystem::path& path, InputKind kind = InputKind::Auto) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  std::size_t first = text.find_first_not_of(" \t\r\n");
  bool json = first != std::string::npos && text[first] == '{';
  if (kind == InputKind::Rules && !json) return parse_rules_text(text);
  if (kind == InputKind::Auto && !json) return parse_rules_text(text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestError(0, 0, std::string("invalid JSON: ") + e.what());
  }
  if (kind == InputKind::Auto) {
    if (j.contains("tree")) kind = InputKind::Tree;
    else if (j.contains("anchors")) kind = InputKind::Anchors;
    else kind = InputKind::Rules;
  }
  switch (kind) {
    case InputKind::Tree: return RuleFile{tree_to_rules(j), {}};
    case InputKind::Anchors: return RuleFile{parse_anchors(j), {}};
    default: return parse_rules_json(j);
  }
}

// "name=value,name=value" with every feature assigned.
inline Point parse_point(const FeatureSpace& space, std::string_view text) {
  Point p(space.size());
  std::vector<bool> seen(space.size(), false);
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(start, end - start);
    std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) throw IngestError(0, 0, "expected name=value in '" + std::string(item) + "'");
    auto trim = [](std::string_view s) {
      while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
      while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
      return std::string(s);
    };
    std::string name = trim(item.substr(0, eq));
    std::string value = trim(item.substr(eq + 1));
    auto id = space.find(name);
    if (!id) throw IngestError(0, 0, "undeclared feature '" + name + "'");
    p[*id - 1] = detail::make_value(space.at(*id), value, 0, 0);
    seen[*id - 1] = true;
    start = end + 1;
  }
  for (const Feature& f : space.features()) {
    if (!seen[f.id - 1]) throw IngestError(0, 0, "point does not assign feature '" + f.name + "'");
  }
  return p;
}

inline std::string format_point(const FeatureSpace& space, const Point& p) {
  std::string out;
  for (const Feature& f : space.features()) {
    if (!out.empty()) out += ',';
    out += f.name + "=" + value_to_string(p.at(f.id - 1));
  }
  return out;
}

}  // namespace dsaudit

#endif  // DSAUDIT_INGEST_HPP
