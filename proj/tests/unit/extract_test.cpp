#include <gtest/gtest.h>

#include <random>

#include "../support/generators.hpp"
#include "../support/oracles.hpp"
#include "medharness/error.hpp"
#include "medharness/extract.hpp"

using namespace medharness;

namespace {

std::vector<Option> five() {
  return {{'A', "胃溃疡"}, {'B', "十二指肠溃疡"}, {'C', "慢性胃炎"}, {'D', "胃癌"}, {'E', "胆囊炎"}};
}

std::string labels(const Extraction& e) { return e.labels.to_string(); }

}  // namespace

TEST(Levenshtein, KnownValues) {
  EXPECT_EQ(levenshtein("kitten", "sitting").value, 3u);
  EXPECT_EQ(levenshtein("", "abc").value, 3u);
  EXPECT_EQ(levenshtein("胃溃疡", "胃溃疡").value, 0u);
  EXPECT_EQ(levenshtein("胃溃疡", "十二指肠溃疡").value, 4u);
  // scalars, not bytes
  EXPECT_EQ(levenshtein("胃", "肠").value, 1u);
}

TEST(Levenshtein, MatchesOracleOnRandomPairs) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto a = gen::random_mixed(rng);
    const auto b = i % 2 ? gen::mutate(rng, a) : gen::random_mixed(rng);
    ASSERT_EQ(levenshtein(a, b).value, oracle::levenshtein(a, b)) << i;
  }
}

TEST(Levenshtein, MetricAxioms) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto a = gen::random_mixed(rng);
    const auto b = gen::mutate(rng, a);
    const auto c = gen::random_mixed(rng);
    EXPECT_EQ(levenshtein(a, a).value, 0u);
    EXPECT_EQ(levenshtein(a, b), levenshtein(b, a));
    EXPECT_LE(levenshtein(a, c).value, levenshtein(a, b).value + levenshtein(b, c).value);
    if (a != b) EXPECT_GT(levenshtein(a, b).value, 0u);
  }
}

TEST(Fuzzy, CueTier) {
  auto e = extract_fuzzy("答案：B", five());
  EXPECT_EQ(labels(e), "B");
  EXPECT_EQ(e.tier, Tier::cue);
  EXPECT_EQ(labels(extract_fuzzy("The answer is c.", five())), "C");
  EXPECT_EQ(labels(extract_fuzzy("答案：ABD", five())), "ABD");
  EXPECT_EQ(labels(extract_fuzzy("正确选项：A、C", five())), "AC");
}

TEST(Fuzzy, CueUsesOnlyItsLine) {
  auto e = extract_fuzzy("答案：\nB", five());
  EXPECT_NE(e.tier, Tier::cue);
  EXPECT_EQ(labels(e), "B");
}

TEST(Fuzzy, LaterCueWhenFirstHasNoLetters) {
  auto e = extract_fuzzy("答案解析见下\n答案：D", five());
  EXPECT_EQ(e.tier, Tier::cue);
  EXPECT_EQ(labels(e), "D");
}

TEST(Fuzzy, LoneLabelTier) {
  auto e = extract_fuzzy("B", five());
  EXPECT_EQ(e.tier, Tier::lone_label);
  EXPECT_EQ(labels(e), "B");
  EXPECT_EQ(labels(extract_fuzzy("  c) 慢性胃炎", five())), "C");
  EXPECT_EQ(labels(extract_fuzzy("我选Ｄ", five())), "D");
}

TEST(Fuzzy, TwoStandaloneLettersAreAmbiguous) {
  auto e = extract_fuzzy("在 B 和 C 之间", five());
  EXPECT_NE(e.tier, Tier::lone_label);
}

TEST(Fuzzy, OptionTextPrefersLongest) {
  // "胃溃疡" and "十二指肠溃疡" do not overlap, but "胃" options do.
  auto e = extract_fuzzy("考虑十二指肠溃疡可能性大", five());
  EXPECT_EQ(e.tier, Tier::option_text);
  EXPECT_EQ(labels(e), "B");
  EXPECT_EQ(e.evidence.matched, "十二指肠溃疡");
}

TEST(Fuzzy, OptionTextIsCaseInsensitive) {
  std::vector<Option> opts{{'A', "Escherichia coli"}, {'B', "Proteus mirabilis"}};
  auto e = extract_fuzzy("most likely escherichia COLI infection", opts);
  EXPECT_EQ(e.tier, Tier::option_text);
  EXPECT_EQ(labels(e), "A");
}

TEST(Fuzzy, LevenshteinOnFirstLine) {
  auto e = extract_fuzzy("十二指肠溃病\n其余不考虑", five());
  EXPECT_EQ(e.tier, Tier::levenshtein);
  EXPECT_EQ(labels(e), "B");
}

TEST(Fuzzy, EmptyOutputStillPicksAnOption) {
  auto e = extract_fuzzy("", five());
  EXPECT_EQ(e.tier, Tier::levenshtein);
  EXPECT_EQ(e.labels.size(), 1u);
}

TEST(Fuzzy, RejectsBadOptionLists) {
  EXPECT_THROW(extract_fuzzy("A", {}), Error);
  std::vector<Option> dup{{'A', "x"}, {'A', "y"}};
  EXPECT_THROW(extract_fuzzy("A", dup), Error);
}

TEST(Fuzzy, NfcBeforeMatching) {
  std::vector<Option> opts{{'A', "caf\xc3\xa9"}, {'B', "tea"}};
  auto e = extract_fuzzy("cafe\xcc\x81 please", opts);
  EXPECT_EQ(e.tier, Tier::option_text);
  EXPECT_EQ(labels(e), "A");
}

TEST(Fuzzy, GeneratedSuiteAgreesWithDesign) {
  for (const auto& c : gen::extraction_suite(5, 40)) {
    const auto e = extract_fuzzy(c.raw, c.options);
    ASSERT_FALSE(e.labels.empty()) << c.raw;
    for (char l : e.labels.labels()) {
      ASSERT_LT(static_cast<std::size_t>(l - 'A'), c.options.size()) << c.raw;
    }
    if (c.labels) {
      EXPECT_EQ(labels(e), gen::letters_of(*c.labels)) << c.category << ": " << c.raw;
      EXPECT_EQ(e.tier, *c.tier) << c.category << ": " << c.raw;
    }
  }
}

TEST(Hard, AcceptsLeadingLetters) {
  EXPECT_EQ(labels(extract_hard("B", five())), "B");
  EXPECT_EQ(labels(extract_hard("ACD", five())), "ACD");
  EXPECT_EQ(labels(extract_hard("A、C", five())), "AC");
  EXPECT_EQ(labels(extract_hard("B。因为……", five())), "B");
  EXPECT_EQ(extract_hard("B", five()).tier, Tier::hard);
}

TEST(Hard, RejectsProse) {
  EXPECT_EQ(extract_hard("答案可能是B", five()).tier, Tier::none);
  EXPECT_TRUE(extract_hard("答案可能是B", five()).labels.empty());
  EXPECT_EQ(extract_hard("b", five()).tier, Tier::none);
  EXPECT_EQ(extract_hard("A patient with fever", five()).tier, Tier::none);
  EXPECT_EQ(extract_hard("Because", five()).tier, Tier::none);
  EXPECT_EQ(extract_hard("F", five()).tier, Tier::none);
}

TEST(Hard, StrictNeedsNothingAfterLetters) {
  EXPECT_EQ(extract_hard("B.", five(), {true}).tier, Tier::none);
  EXPECT_EQ(labels(extract_hard(" B ", five(), {true})), "B");
  EXPECT_EQ(labels(extract_hard("A,C", five(), {true})), "AC");
}

TEST(Hard, GeneratedSuite) {
  for (const auto& c : gen::hard_suite(9, 4)) {
    const auto lenient = extract_hard(c.raw, gen::abcde());
    const auto strict = extract_hard(c.raw, gen::abcde(), {true});
    EXPECT_EQ(lenient.tier == Tier::hard, c.lenient.has_value()) << c.raw;
    EXPECT_EQ(strict.tier == Tier::hard, c.strict.has_value()) << c.raw;
    if (c.lenient) EXPECT_EQ(labels(lenient), gen::letters_of(*c.lenient)) << c.raw;
    if (c.strict) EXPECT_EQ(labels(strict), gen::letters_of(*c.strict)) << c.raw;
  }
}
