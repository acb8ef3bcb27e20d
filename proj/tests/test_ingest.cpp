#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dsaudit/ingest.hpp"
#include "suites.hpp"

using namespace dsaudit;

namespace {

void expect_same(const DecisionSet& a, const DecisionSet& b) {
  ASSERT_TRUE(a.space() == b.space());
  ASSERT_EQ(a.default_outcome(), b.default_outcome());
  ASSERT_EQ(a.tie_break(), b.tie_break());
  ASSERT_EQ(a.task(), b.task());
  ASSERT_EQ(a.rules().size(), b.rules().size());
  for (std::size_t k = 0; k < a.rules().size(); ++k) {
    ASSERT_EQ(a.rules()[k].id, b.rules()[k].id);
    ASSERT_EQ(a.rules()[k].body, b.rules()[k].body);
    ASSERT_EQ(a.rules()[k].outcome, b.rules()[k].outcome);
  }
}

std::size_t error_line(const std::string& text) {
  try {
    parse_rules_text(text);
  } catch (const IngestError& e) {
    return e.line();
  }
  return 0;
}

const char* kHeader = "rulefile v1\nfeature x numeric\nfeature c categorical\n";

}  // namespace

TEST(RuleDsl, ParsesExampleOne) {
  RuleFile rf = load_model(DSAUDIT_DATA_DIR "/example1.rules");
  EXPECT_EQ(rf.ds.space().size(), 5u);
  ASSERT_EQ(rf.ds.rules().size(), 4u);
  EXPECT_EQ(rf.background.size(), 5u);
  EXPECT_EQ(format_cube(rf.ds.space(), rf.ds.rule(4).body), "size > 120 & weight < 85");
  EXPECT_EQ(rf.ds.rule(1).body.size(), 5u);
  EXPECT_EQ(rf.ds.default_outcome(), Outcome("0"));
}

TEST(RuleDsl, OperatorsAndQuoting) {
  RuleFile rf = parse_rules_text(std::string(kHeader) +
                                 "rule x ≥ 2 & c ≠ \"two words\" => \"yes no\"\n"
                                 "rule [7] x <> 3 & c == b => 1 # trailing comment\n"
                                 "default 0\n");
  ASSERT_EQ(rf.ds.rules().size(), 2u);
  EXPECT_EQ(rf.ds.rules()[1].id, 7u);
  EXPECT_EQ(rf.ds.rules()[0].outcome, Outcome("yes no"));
  EXPECT_EQ(format_literal(rf.ds.space(), rf.ds.rules()[0].body[0]), "x >= 2");
  EXPECT_EQ(format_literal(rf.ds.space(), rf.ds.rules()[1].body[0]), "x != 3");
  RuleFile back = parse_rules_text(serialize_rules(rf));
  expect_same(rf.ds, back.ds);
}

TEST(RuleDsl, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("rulefile v2\n"), 1u);
  EXPECT_EQ(error_line("feature x numeric\n"), 1u);
  EXPECT_EQ(error_line(std::string(kHeader) + "rule y > 1 => 1\ndefault 0\n"), 4u);
  EXPECT_EQ(error_line(std::string(kHeader) + "rule x > abc => 1\ndefault 0\n"), 4u);
  EXPECT_EQ(error_line(std::string(kHeader) + "rule c > b => 1\ndefault 0\n"), 4u);
  EXPECT_EQ(error_line(std::string(kHeader) + "rule x > 1 1\ndefault 0\n"), 4u);
  EXPECT_EQ(error_line(std::string(kHeader) + "default 0\ndefault 1\n"), 5u);
  EXPECT_EQ(error_line(std::string(kHeader) + "rule [2] x > 1 => 1\nrule [2] x > 2 => 1\ndefault 0\n"), 5u);
  EXPECT_EQ(error_line(std::string(kHeader) + "feature x numeric\ndefault 0\n"), 4u);
  EXPECT_EQ(error_line(std::string(kHeader) + "rule x > 1 => \"open\ndefault 0\n"), 4u);
  EXPECT_EQ(error_line(std::string(kHeader) + "frobnicate\ndefault 0\n"), 4u);
  EXPECT_NE(error_line(std::string(kHeader) + "rule x > 1 => 1\n"), 0u);
  EXPECT_THROW(parse_rules_text(std::string(kHeader) + "rule x > 1 & x <= 1 => 1\ndefault 0\n"), IngestError);
}

TEST(RuleDsl, RandomRoundTrip) {
  fixtures::Rng rng(12);
  for (int k = 0; k < 300; ++k) {
    fixtures::RandomModel m = fixtures::random_model(rng);
    RuleFile rf{m.ds, m.user};
    RuleFile text = parse_rules_text(serialize_rules(rf));
    expect_same(rf.ds, text.ds);
    ASSERT_EQ(text.background, rf.background);
    RuleFile json = parse_rules_json(serialize_rules_json(rf));
    expect_same(rf.ds, json.ds);
    ASSERT_EQ(json.background, rf.background);
  }
}

TEST(Tree, SmallFixture) {
  RuleFile rf = load_model(DSAUDIT_DATA_DIR "/tree_small.json");
  const DecisionSet& ds = rf.ds;
  ASSERT_EQ(ds.rules().size(), 5u);
  EXPECT_EQ(ds.default_outcome(), Outcome(kNoDefault));
  EXPECT_EQ(format_cube(ds.space(), ds.rule(1).body), "income <= 40000 & age < 25");
  EXPECT_EQ(ds.rule(1).outcome, Outcome("deny"));
  EXPECT_EQ(format_cube(ds.space(), ds.rule(5).body), "income > 40000 & age < 21.5");
  EXPECT_EQ(ds.rule(5).outcome, Outcome("review"));
}

TEST(Tree, RoundTripAndSingleLeaf) {
  std::ifstream in(DSAUDIT_DATA_DIR "/tree_small.json");
  nlohmann::json j = nlohmann::json::parse(in);
  TreeExport t = parse_tree(j);
  TreeExport back = parse_tree(serialize_tree(t));
  expect_same(tree_to_rules(t), tree_to_rules(back));

  nlohmann::json leaf = {{"features", {{{"name", "x"}, {"kind", "numeric"}}}}, {"tree", {{"leaf", 3}}}};
  DecisionSet ds = tree_to_rules(leaf);
  EXPECT_TRUE(ds.rules().empty());
  EXPECT_EQ(ds.default_outcome(), Outcome("3"));
}

TEST(Tree, InfersKindsAndRejectsBadNodes) {
  nlohmann::json j = nlohmann::json::parse(
      R"({"tree": {"feature": "c", "op": "=", "threshold": "red", "left": {"leaf": 0}, "right": {"leaf": 1}}})");
  DecisionSet ds = tree_to_rules(j);
  EXPECT_EQ(ds.space().at(1).kind, FeatureKind::Categorical);
  EXPECT_THROW(tree_to_rules(nlohmann::json::parse(R"({"tree": {"feature": "c", "left": {"leaf": 0}}})")),
               IngestError);
  EXPECT_THROW(tree_to_rules(nlohmann::json::parse(
                   R"({"tree": {"feature": "c", "op": "<", "threshold": "red", "left": {"leaf": 0}, "right": {"leaf": 1}}})")),
               IngestError);
}

TEST(Tree, ConvertedTreesNeverOverlap) {
  fixtures::TreeSuite s = fixtures::tree_property(6, 150);
  EXPECT_TRUE(s.tally.clean()) << s.tally.summary();
  EXPECT_EQ(s.trees, 150u);
  EXPECT_GT(s.oracle_checked, 100u);
}

TEST(Tree, RandomTreesRoundTrip) {
  fixtures::Rng rng(9);
  for (int k = 0; k < 100; ++k) {
    TreeExport t = fixtures::random_tree_export(rng);
    TreeExport back = parse_tree(serialize_tree(t));
    expect_same(tree_to_rules(t), tree_to_rules(back));
  }
}

TEST(Anchors, SmallFixture) {
  RuleFile rf = load_model(DSAUDIT_DATA_DIR "/anchors_small.json");
  const DecisionSet& ds = rf.ds;
  EXPECT_EQ(ds.rules().size(), 4u);
  EXPECT_EQ(ds.default_outcome(), Outcome(kNoDefault));
  EXPECT_EQ(ds.space().size(), 3u);
  for (const Feature& f : ds.space().features()) EXPECT_EQ(f.kind, FeatureKind::Numeric);
  DecisionSet back = parse_anchors(serialize_anchors(ds));
  expect_same(ds, back);
}

TEST(Anchors, PredicatesAndKinds) {
  EXPECT_EQ(detail::split_predicate("age > 30"), (std::tuple<std::string, RelOp, std::string>{"age", RelOp::Gt, "30"}));
  EXPECT_EQ(detail::split_predicate("sex = male"), (std::tuple<std::string, RelOp, std::string>{"sex", RelOp::Eq, "male"}));
  EXPECT_EQ(detail::split_predicate("w<=1.5"), (std::tuple<std::string, RelOp, std::string>{"w", RelOp::Le, "1.5"}));
  EXPECT_THROW(detail::split_predicate("nonsense"), IngestError);
  nlohmann::json j = nlohmann::json::parse(
      R"({"anchors": [{"predicates": ["sex = male", "age > 30"], "class": 1}, {"predicates": ["sex = female"], "class": 0}]})");
  DecisionSet ds = parse_anchors(j);
  EXPECT_EQ(ds.space().at(*ds.space().find("sex")).kind, FeatureKind::Categorical);
  EXPECT_EQ(ds.space().at(*ds.space().find("age")).kind, FeatureKind::Numeric);
  EXPECT_THROW(parse_anchors(nlohmann::json::parse(R"({"anchors": [{"predicates": ["s > male"], "class": 1}]})")),
               IngestError);
}

TEST(Load, DetectsKindsAndReportsErrors) {
  EXPECT_EQ(load_model(DSAUDIT_DATA_DIR "/example3.rules").ds.rules().size(), 3u);
  EXPECT_THROW(load_model(DSAUDIT_DATA_DIR "/missing.rules"), std::runtime_error);
  EXPECT_THROW(load_model(DSAUDIT_DATA_DIR "/example1.rules", InputKind::Tree), IngestError);
  auto tmp = std::filesystem::temp_directory_path() / "dsaudit_bad.json";
  {
    std::ofstream out(tmp);
    out << "{ not json";
  }
  EXPECT_THROW(load_model(tmp), IngestError);
  std::filesystem::remove(tmp);
}

TEST(Points, ParseAndFormat) {
  RuleFile rf = load_model(DSAUDIT_DATA_DIR "/example1.rules");
  Point p = parse_point(rf.ds.space(), "salary=5, size=140,age=30,color=red,weight=70.5");
  EXPECT_EQ(format_point(rf.ds.space(), p), "salary=5,size=140,age=30,color=red,weight=70.5");
  EXPECT_THROW(parse_point(rf.ds.space(), "salary=5"), IngestError);
  EXPECT_THROW(parse_point(rf.ds.space(), "salary=abc,size=140,age=30,color=red,weight=70"), IngestError);
  EXPECT_THROW(parse_point(rf.ds.space(), "bogus=1,salary=5,size=140,age=30,color=red,weight=70"), IngestError);
}
