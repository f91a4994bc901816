#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "atsc/prompting.hpp"

using namespace atsc;

TEST(Templates, BuiltinsValidate) {
  ASSERT_EQ(builtin_templates().size(), 3u);
  for (const auto& t : builtin_templates()) EXPECT_NO_THROW(t.validate()) << t.id;
}

TEST(Templates, ValidationCountsPlaceholders) {
  EXPECT_THROW((PromptTemplate{"x", "The {aspect} was [MASK] [MASK]."}.validate()), ConfigError);
  EXPECT_THROW((PromptTemplate{"x", "It was [MASK]."}.validate()), ConfigError);
  EXPECT_THROW((PromptTemplate{"x", "{aspect} and {aspect} [MASK]"}.validate()), ConfigError);
}

// Snapshots of the exact model input; any change here changes every result.
TEST(Render, ClozeSnapshots) {
  const char* review = "The fish was fresh.";
  auto a = render_cloze(builtin_template("felt_was"), "fish", review);
  EXPECT_EQ(a.full_text, "The fish was fresh. I felt the fish was [MASK].");
  EXPECT_EQ(a.full_text.substr(a.mask_offset, 6), "[MASK]");
  auto b = render_cloze(builtin_template("made_me_feel"), "fish", review);
  EXPECT_EQ(b.full_text, "The fish was fresh. The fish made me feel [MASK].");
  auto c = render_cloze(builtin_template("is"), "fish", review);
  EXPECT_EQ(c.full_text, "The fish was fresh. The fish is [MASK].");
}

TEST(Render, NextWordDropsTheSlotAndSuffix) {
  auto r = render_next_word(builtin_template("felt_was"), "fish", "Nice.");
  EXPECT_EQ(r.full_text, "Nice. I felt the fish was");
  EXPECT_EQ(r.mask_offset, r.full_text.size());
  EXPECT_EQ(r.suffix, ".");
}

TEST(Render, HypothesesCarryLabelWords) {
  auto h = render_hypotheses(builtin_template("is"), "battery life");
  EXPECT_EQ(h.positive_hypothesis, "The battery life is good.");
  EXPECT_EQ(h.negative_hypothesis, "The battery life is bad.");
  auto custom = render_hypotheses(builtin_template("is"), "fan", Verbalizer("great", "awful", "fine"));
  EXPECT_EQ(custom.positive_hypothesis, "The fan is great.");
}

TEST(Render, RejectsEmptyAspectOrMaskLiteral) {
  EXPECT_THROW(render_cloze(builtin_template("is"), "", "x"), Error);
  EXPECT_THROW(render_cloze(builtin_template("is"), "[MASK]", "x"), Error);
}

TEST(Render, PluralAgreement) {
  EXPECT_EQ(with_plural_agreement(builtin_template("is")).pattern, "The {aspect} are [MASK].");
  EXPECT_EQ(with_plural_agreement(builtin_template("felt_was")).pattern,
            "I felt the {aspect} were [MASK].");
  EXPECT_EQ(with_plural_agreement(builtin_template("made_me_feel")).pattern,
            builtin_template("made_me_feel").pattern);
  EXPECT_EQ(with_plural_agreement({"x", "The {aspect} isn't [MASK]."}).pattern,
            "The {aspect} isn't [MASK].");
}

TEST(Verbalizer, Bijection) {
  Verbalizer v;
  for (auto p : kPolarities) EXPECT_EQ(v.polarity(v.word(p)), p);
  for (const auto& w : v.words()) EXPECT_EQ(v.word(v.polarity(w)), w);
  EXPECT_EQ(v.word(Polarity::neutral), "ok");
  EXPECT_THROW(v.polarity("great"), Error);
  EXPECT_THROW(Verbalizer("good", "good", "ok"), ConfigError);
  EXPECT_THROW(Verbalizer("very good", "bad", "ok"), ConfigError);
}

TEST(Aliases, ReplaceOnlyListedAspects) {
  AspectAliases a(std::map<std::string, std::string>{{"anecdotes/miscellaneous", "things"}});
  EXPECT_EQ(a.apply("anecdotes/miscellaneous"), "things");
  EXPECT_EQ(a.apply("food"), "food");
}

TEST(Registry, LoadsExtraTemplatesAndRejectsDuplicates) {
  TemplateRegistry reg;
  reg.load(nlohmann::json::parse(R"({"templates": [{"id": "so", "pattern": "So the {aspect} was [MASK]."}]})"));
  EXPECT_TRUE(reg.contains("so"));
  EXPECT_EQ(reg.ids().size(), 4u);
  EXPECT_THROW(reg.add({"is", "The {aspect} is [MASK]!"}), ConfigError);
  EXPECT_THROW(reg.get("missing"), Error);
}
