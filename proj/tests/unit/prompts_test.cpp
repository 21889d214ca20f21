#include <gtest/gtest.h>

#include "openview/errors.hpp"
#include "openview/prompts.hpp"

using namespace openview;

TEST(Substitute, SinglePass) {
  EXPECT_EQ(substitute("a {x} b {y}", {{"x", "{y}"}, {"y", "2"}}), "a {y} b 2");
  EXPECT_EQ(substitute("{x}{x}", {{"x", "ab"}}), "abab");
  EXPECT_EQ(substitute("no placeholders", {}), "no placeholders");
}

TEST(Substitute, LeavesNonIdentifierBracesAlone) {
  EXPECT_EQ(substitute(R"({"format": "valid"} {1} { x })", {}), R"({"format": "valid"} {1} { x })");
  EXPECT_EQ(substitute("{unterminated", {}), "{unterminated");
}

TEST(Substitute, UnboundThrows) {
  EXPECT_THROW(substitute("hello {name}", {}), ConfigError);
  EXPECT_NO_THROW(substitute("hello", {{"extra", "ignored"}}));
}

TEST(Registry, AllTemplatesPresent) {
  using namespace templates;
  for (std::string_view name : {kFilter, kPatchAnalysis, kPanoramaSummary, kGeneratorBase, kGeneratorContextual,
                                kGeneratorDirectional, kGeneratorUser, kFormatCorrector, kInference, kJudge,
                                kCaptionLoop}) {
    const PromptTemplate& t = find_template(name);
    EXPECT_EQ(t.name, name);
    EXPECT_FALSE(t.parts.empty());
  }
  EXPECT_EQ(template_registry().size(), 11u);
  EXPECT_THROW(find_template("stage9"), ConfigError);
}

TEST(Registry, SystemPartsComeFirst) {
  for (const auto& t : template_registry()) {
    for (std::size_t i = 1; i < t.parts.size(); ++i) EXPECT_NE(t.parts[i].role, Role::system) << t.name;
  }
}

TEST(Render, BindsEveryPlaceholder) {
  for (const auto& t : template_registry()) {
    Bindings b;
    for (const auto& name : t.placeholders()) b[name] = "<" + name + ">";
    const auto msgs = render_template(t.name, b);
    ASSERT_EQ(msgs.size(), t.parts.size());
    for (std::size_t i = 0; i < msgs.size(); ++i) {
      EXPECT_EQ(msgs[i].role, t.parts[i].role);
      for (const auto& name : t.placeholders()) EXPECT_EQ(msgs[i].content.find("{" + name + "}"), std::string::npos);
    }
    if (!t.placeholders().empty()) {
      b.erase(b.begin());
      EXPECT_THROW(render_template(t.name, b), ConfigError) << t.name;
    } else {
      EXPECT_EQ(msgs[0].content, t.parts[0].body);
    }
  }
}

TEST(Render, ErrorNamesTheTemplate) {
  try {
    render_template(templates::kInference, {});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bench-inference"), std::string::npos);
  }
}

TEST(Render, SceneLabelsBlockIsNonEmpty) {
  const std::string block = scene_labels_block();
  EXPECT_FALSE(block.empty());
  EXPECT_NE(block.find('\n'), std::string::npos);
}

TEST(Roles, Names) {
  EXPECT_EQ(to_string(Role::system), "system");
  EXPECT_EQ(to_string(Role::user), "user");
  EXPECT_EQ(to_string(Role::assistant), "assistant");
}
