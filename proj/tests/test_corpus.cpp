#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "atsc/corpus.hpp"

using namespace atsc;

namespace {

const char* kXml = R"(<?xml version="1.0" encoding="UTF-8"?>
<sentences>
  <sentence id="1">
    <text>The battery life is great but the screen is dim.</text>
    <aspectTerms>
      <aspectTerm term="battery life" polarity="positive" from="4" to="16"/>
      <aspectTerm term="screen" polarity="negative" from="34" to="40"/>
    </aspectTerms>
  </sentence>
  <sentence id="2">
    <text>Fine keyboard, awful fan.</text>
    <aspectTerms>
      <aspectTerm term="keyboard" polarity="conflict" from="5" to="13"/>
      <aspectTerm term="fan" polarity="neutral" from="21" to="24"/>
    </aspectTerms>
  </sentence>
  <sentence id="3">
    <text>No aspects here.</text>
  </sentence>
</sentences>
)";

}  // namespace

TEST(SemEval, ParsesTermsAndSpans) {
  auto raw = parse_semeval(kXml, Task::atsc);
  ASSERT_EQ(raw.size(), 3u);
  ASSERT_EQ(raw[0].aspects.size(), 2u);
  EXPECT_EQ(raw[0].aspects[0].surface, "battery life");
  ASSERT_TRUE(raw[0].aspects[1].span);
  EXPECT_EQ(codepoint_substr(raw[0].text, *raw[0].aspects[1].span), "screen");
  EXPECT_EQ(raw[1].aspects[0].polarity, RawPolarity::conflict);
  EXPECT_TRUE(raw[2].aspects.empty());
}

TEST(SemEval, PreprocessDropsConflictKeepsOrder) {
  auto ex = preprocess(parse_semeval(kXml, Task::atsc), Domain::laptops);
  ASSERT_EQ(ex.size(), 3u);
  EXPECT_EQ(ex[0].aspect, "battery life");
  EXPECT_EQ(ex[0].polarity, Polarity::positive);
  EXPECT_EQ(ex[1].polarity, Polarity::negative);
  EXPECT_EQ(ex[2].aspect, "fan");
  EXPECT_EQ(ex[2].polarity, Polarity::neutral);
  EXPECT_EQ(ex[2].source_id, "2#1");
  for (const auto& e : ex) EXPECT_EQ(e.domain, Domain::laptops);
}

TEST(SemEval, Categories) {
  const char* xml = R"(<sentences><sentence id="c1"><text>Slow staff.</text>
    <aspectCategories><aspectCategory category="service" polarity="negative"/>
    <aspectCategory category="food" polarity="conflict"/></aspectCategories></sentence></sentences>)";
  auto ex = preprocess(parse_semeval(xml, Task::acsc), Domain::restaurants);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].aspect, "service");
  EXPECT_EQ(ex[0].aspect_kind, AspectKind::category);
}

TEST(SemEval, MalformedXmlIsParseError) {
  EXPECT_THROW(parse_semeval("<sentences><sentence>", Task::atsc), ParseError);
  EXPECT_THROW(parse_semeval("<other/>", Task::atsc), ParseError);
}

TEST(SemEval, BadRecordsAreNamed) {
  const char* xml = R"(<sentences>
    <sentence id="a"><text>x</text><aspectTerms><aspectTerm term="x" polarity="great"/></aspectTerms></sentence>
    <sentence id="b"><text>y</text><aspectTerms><aspectTerm polarity="positive"/></aspectTerms></sentence>
  </sentences>)";
  try {
    parse_semeval(xml, Task::atsc);
    FAIL() << "expected RecordError";
  } catch (const RecordError& e) {
    EXPECT_EQ(e.sentence_ids(), (std::vector<std::string>{"a", "b"}));
  }
}

TEST(SemEval, BundledFilesParse) {
  for (const char* name : {"laptops_train.xml", "laptops_test.xml", "restaurants_train.xml",
                           "restaurants_test.xml"}) {
    auto ex = preprocess(parse_semeval_file(std::string(ATSC_TEST_DATA) + "/" + name, Task::atsc),
                         Domain::laptops);
    EXPECT_GT(ex.size(), 30u) << name;
    for (const auto& e : ex) EXPECT_NE(e.text.find(e.aspect), std::string::npos) << e.source_id;
  }
}

std::vector<LabeledExample> numbered(std::size_t n) {
  std::vector<LabeledExample> v;
  for (std::size_t i = 0; i < n; ++i)
    v.push_back({"text " + std::to_string(i), "a", kPolarities[i % 3], Domain::laptops,
                 AspectKind::term, std::to_string(i)});
  return v;
}

TEST(FewShot, SubsetWithoutRepeatsAndDeterministic) {
  auto pool = numbered(100);
  auto a = sample_few_shot(pool, {16, 42});
  auto b = sample_few_shot(pool, {16, 42});
  auto c = sample_few_shot(pool, {16, 43});
  ASSERT_EQ(a.size(), 16u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  std::set<std::string> ids;
  for (const auto& e : a) ids.insert(e.source_id);
  EXPECT_EQ(ids.size(), 16u);
}

TEST(FewShot, PrefixProperty) {
  auto pool = numbered(100);
  auto small = sample_few_shot(pool, {16, 7});
  auto large = sample_few_shot(pool, {64, 7});
  EXPECT_TRUE(std::equal(small.begin(), small.end(), large.begin()));
}

TEST(FewShot, EdgeSizes) {
  auto pool = numbered(10);
  EXPECT_TRUE(sample_few_shot(pool, {0, 1}).empty());
  EXPECT_EQ(sample_few_shot(pool, FewShotSpec::full(3)), pool);
  EXPECT_THROW(sample_few_shot(pool, {11, 1}), Error);
  EXPECT_EQ(parse_few_shot_size("full"), std::nullopt);
  EXPECT_EQ(parse_few_shot_size("64"), std::optional<std::size_t>(64));
  EXPECT_THROW(parse_few_shot_size("-3"), Error);
  EXPECT_EQ((FewShotSpec{std::nullopt, 0}.label()), "full");
}

TEST(Records, JsonlRoundTripWithMeta) {
  auto ex = preprocess(parse_semeval(kXml, Task::atsc), Domain::laptops);
  nlohmann::json meta{{"fingerprint", "abc"}};
  std::stringstream buf;
  write_examples(buf, ex, &meta);
  EXPECT_EQ(buf.str().rfind("{\"_meta\"", 0), 0u);
  EXPECT_EQ(read_examples(buf), ex);
}

TEST(Records, BadLineReportsLineNumber) {
  std::stringstream buf("{\"_meta\":{}}\n{\"text\":\"a\"}\n");
  try {
    read_examples(buf);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Corpus, FiltersByCategoryAndLimit) {
  std::stringstream raw(
      "{\"category\": \"Electronics\", \"text\": \"Great laptop. The fan is loud!\"}\n"
      "{\"category\": \"Restaurants\", \"text\": \"Nice food.\"}\n"
      "not json and no tab\n"
      "electronics, books\tThe screen is fine. It works\n"
      "{\"categories\": [\"electronics\"], \"reviewText\": \"Third one.\"}\n");
  std::vector<std::string> got;
  auto stats = prepare_pretrain_corpus(raw, Domain::laptops, 2,
                                       [&](const PretrainSentence& s) { got.push_back(s.text); });
  EXPECT_EQ(stats.reviews_consumed, 2u);
  EXPECT_EQ(stats.records_skipped, 1u);
  EXPECT_EQ(got, (std::vector<std::string>{"Great laptop.", "The fan is loud!",
                                           "The screen is fine.", "It works"}));
}

TEST(Corpus, SentenceSplitKeepsAbbreviations) {
  auto s = split_sentences("I met Dr. Smith at 5 p.m. today.  It was   fine!");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1], "It was fine!");
}

TEST(Corpus, ClassCounts) {
  auto c = count_classes(numbered(10));
  EXPECT_EQ(c.positive, 4u);
  EXPECT_EQ(c.negative, 3u);
  EXPECT_EQ(c.neutral, 3u);
  EXPECT_EQ(c.total(), 10u);
}
