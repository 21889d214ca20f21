#include <gtest/gtest.h>

#include "openview/chat.hpp"
#include "openview/json_repair.hpp"

using namespace openview;

TEST(Fences, StripsFirstBlock) {
  EXPECT_EQ(strip_code_fences("```json\n[1, 2]\n```\ntrailing"), "[1, 2]\n");
  EXPECT_EQ(strip_code_fences("[1]"), "[1]");
}

TEST(LocalRepair, CommonDefects) {
  EXPECT_EQ(*local_repair("Sure! Here it is: {\"a\": 1,} thanks"), json({{"a", 1}}));
  EXPECT_EQ(*local_repair("{'a': 'b'}"), json({{"a", "b"}}));
  EXPECT_EQ(*local_repair("{\"a\": True, \"b\": None}"), json({{"a", true}, {"b", nullptr}}));
  EXPECT_EQ(*local_repair("[1, 2"), json({1, 2}));
  EXPECT_EQ(*local_repair("{\"a\": 1 \"b\": 2}"), json({{"a", 1}, {"b", 2}}));
  EXPECT_FALSE(local_repair("no json here").has_value());
}

TEST(LocalRepair, StringCleanup) {
  const auto v = local_repair(R"({"q": "see https://example.com/x for it''s view"})");
  ASSERT_TRUE(v);
  EXPECT_EQ((*v)["q"], "see for it's view");
}

TEST(Bools, LooseParsing) {
  EXPECT_EQ(parse_loose_bool(true), true);
  EXPECT_EQ(parse_loose_bool("False"), false);
  EXPECT_EQ(parse_loose_bool("true"), true);
  EXPECT_FALSE(parse_loose_bool("yes").has_value());
  EXPECT_FALSE(parse_loose_bool(1).has_value());
}

TEST(Schemas, BuiltinValidators) {
  const auto& reg = SchemaRegistry::builtin();
  const auto& filter = reg.get(schemas::kFilterVerdict);
  EXPECT_TRUE(filter({{"format", "valid"}, {"format_reason", ""}, {"informative", "invalid"}, {"informative_reason", ""}}).empty());
  EXPECT_FALSE(filter({{"format", "maybe"}, {"format_reason", ""}, {"informative", "valid"}, {"informative_reason", ""}}).empty());
  const auto& summary = reg.get(schemas::kPanoramaSummary);
  EXPECT_TRUE(summary({{"summary", "s"}, {"label", "park"}, {"outdoor", "True"}}).empty());
  EXPECT_FALSE(summary({{"summary", "s"}, {"label", "park"}}).empty());
  EXPECT_FALSE(reg.get(schemas::kStringArray)(json::array({"a", 1})).empty());
  EXPECT_FALSE(reg.get(schemas::kProposalList)(json::object()).empty());
  EXPECT_TRUE(reg.contains(schemas::kPatchAnalysis));
  EXPECT_FALSE(reg.contains("nope"));
}

TEST(RepairPipeline, ValidInputNeedsNoRepair) {
  const auto out = parse_json_with_repair(R"(["a", "b"])", schemas::kStringArray);
  EXPECT_FALSE(out.repaired);
  EXPECT_EQ(out.model_calls, 0);
  EXPECT_EQ(out.value.size(), 2u);
}

TEST(RepairPipeline, FencedOrLocallyRepairedInput) {
  const auto fenced = parse_json_with_repair("```\n[\"a\"]\n```", schemas::kStringArray);
  EXPECT_TRUE(fenced.repaired);
  const auto trailing = parse_json_with_repair("['a', 'b',]", schemas::kStringArray);
  EXPECT_TRUE(trailing.repaired);
  EXPECT_EQ(trailing.value, json({"a", "b"}));
}

TEST(RepairPipeline, CorrectorCallsAreBounded) {
  int calls = 0;
  std::string seen_error;
  auto backend = std::make_shared<MockBackend>([&](const ChatRequest& req) {
    ++calls;
    if (calls == 1) seen_error = req.messages.back().text;
    return std::string(calls < 2 ? "still {broken" : R"(["fixed"])");
  });
  Gateway gw(backend);
  const auto out = parse_json_with_repair("{\"a\": 1}", schemas::kStringArray, {&gw, "m", "t"}, 3);
  EXPECT_EQ(out.model_calls, 2);
  EXPECT_EQ(out.value, json({"fixed"}));
  EXPECT_NE(seen_error.find("{\"a\": 1}"), std::string::npos);

  calls = 0;
  auto never = std::make_shared<MockBackend>([&](const ChatRequest&) {
    ++calls;
    return std::string("nope");
  });
  Gateway gw2(never);
  EXPECT_THROW(parse_json_with_repair("nope", schemas::kStringArray, {&gw2, "m", "t"}, 3), ParseFailure);
  EXPECT_EQ(calls, 3);
  EXPECT_THROW(parse_json_with_repair("nope", schemas::kStringArray), ParseFailure);
}

TEST(RepairPipeline, SchemaViolationsAreReported) {
  try {
    parse_json_with_repair(R"({"summary": "x"})", schemas::kPanoramaSummary);
    FAIL();
  } catch (const ParseFailure& e) {
    EXPECT_FALSE(e.errors().empty());
    EXPECT_NE(std::string(e.what()).find("label"), std::string::npos);
  }
}
