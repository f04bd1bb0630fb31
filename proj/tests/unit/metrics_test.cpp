#include "versewright/metrics.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "versewright/io.hpp"

namespace vw = versewright;
namespace metrics = versewright::metrics;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(VW_FIXTURE_DIR) / "metrics";

vw::PsychLexicon fixture_psych() {
  return vw::load_psych_lexicon_file(kFixtures / "psych.csv");
}

}  // namespace

TEST(Syllables, Examples) {
  EXPECT_EQ(metrics::count_syllables("cat"), 1u);
  EXPECT_EQ(metrics::count_syllables("poetry"), 3u);
  EXPECT_EQ(metrics::count_syllables("table"), 2u);
  EXPECT_EQ(metrics::count_syllables("poem"), 2u);
  EXPECT_EQ(metrics::count_syllables("poet"), 2u);
  EXPECT_EQ(metrics::count_syllables("violet"), 3u);
  EXPECT_EQ(metrics::count_syllables("nation"), 2u);
  EXPECT_EQ(metrics::count_syllables("quiet"), 1u);
  EXPECT_EQ(metrics::count_syllables("stone"), 1u);
  EXPECT_EQ(metrics::count_syllables("the"), 1u);
  EXPECT_EQ(metrics::count_syllables("rhythm"), 1u);
  EXPECT_EQ(metrics::count_syllables("Little"), 2u);
}

TEST(Syllables, AtLeastOneForAlphabeticWords) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 5000; ++i) {
    std::string w;
    const std::size_t n = 1 + gen() % 12;
    for (std::size_t j = 0; j < n; ++j) w.push_back(static_cast<char>('a' + gen() % 26));
    EXPECT_GE(metrics::count_syllables(w), 1u) << w;
  }
}

TEST(Sentences, Segmentation) {
  EXPECT_EQ(metrics::segment_sentences("One. Two! Three? Four"),
            (std::vector<std::string>{"One.", "Two!", "Three?", "Four"}));
  EXPECT_EQ(metrics::segment_sentences("no terminators here"),
            (std::vector<std::string>{"no terminators here"}));
  EXPECT_EQ(metrics::segment_sentences("3.14 is pi. ... !"),
            (std::vector<std::string>{"3.14 is pi."}));
  EXPECT_TRUE(metrics::segment_sentences("").empty());
}

TEST(Readability, PublishedExamples) {
  EXPECT_NEAR(metrics::fre_raw("The cat sat."), 119.19, 0.005);
  EXPECT_EQ(metrics::fre("The cat sat."), 100.0);
  EXPECT_NEAR(metrics::fkgl_raw("The cat sat."), -2.62, 1e-9);
  EXPECT_EQ(metrics::fkgl("The cat sat."), 0.0);
  EXPECT_NEAR(metrics::fre_raw("Go."), 121.22, 0.005);
  EXPECT_EQ(metrics::fre("Go."), 100.0);

  std::string twenty;
  for (int i = 0; i < 20; ++i) twenty += i == 0 ? "Window" : " window";
  twenty += ".";
  EXPECT_NEAR(metrics::fkgl_raw(twenty), 15.81, 1e-9);
}

TEST(Readability, ClampsAndErrors) {
  std::string hard = "Incomprehensibility";
  for (int i = 0; i < 40; ++i) hard += " institutionalization";
  EXPECT_EQ(metrics::fre(hard), 0.0);
  EXPECT_EQ(metrics::fkgl(hard), 18.0);
  EXPECT_THROW(metrics::fre(""), vw::ValidationError);
  EXPECT_THROW(metrics::fkgl("123 ..."), vw::ValidationError);
  EXPECT_THROW(metrics::ldttr("   "), vw::ValidationError);
}

TEST(Readability, InvariantUnderDuplication) {
  const std::string t = "The poet walked along the river. Violets bloomed, and the nation slept!";
  EXPECT_NEAR(metrics::fre_raw(t + " " + t), metrics::fre_raw(t), 1e-9);
  EXPECT_NEAR(metrics::fkgl_raw(t + " " + t), metrics::fkgl_raw(t), 1e-9);
}

TEST(Lexical, TypeTokenRatio) {
  EXPECT_EQ(metrics::ldttr("the cat and the dog"), 0.8);
  EXPECT_EQ(metrics::ldttr("every word distinct here"), 1.0);
  const std::string t = "Rain on the river, rain on the road";
  const auto s = metrics::text_stats(t);
  EXPECT_DOUBLE_EQ(metrics::ldttr(t + " " + t),
                   static_cast<double>(s.type_count) / (2.0 * s.word_count));
}

TEST(Lexical, ImageabilityAndConcreteness) {
  const auto plex = vw::load_psych_lexicon("fire,600,611\n");
  EXPECT_EQ(metrics::imageability("fire fire", plex), 600.0);
  EXPECT_EQ(metrics::concreteness("Fire, FIRE!", plex), 611.0);
  EXPECT_FALSE(metrics::imageability("water only", plex).has_value());
  const auto plex2 = vw::load_psych_lexicon("fire,600,611\nthe,100,100\nash,300,500\n");
  // Stopwords are excluded even when rated; occurrences are weighted.
  EXPECT_DOUBLE_EQ(*metrics::imageability("the fire the fire ash", plex2), 500.0);
}

TEST(Proxies, DocumentedCases) {
  const metrics::Moments m{0.2, 0.1};
  EXPECT_DOUBLE_EQ(metrics::percentile(0.2, m), 50.0);

  const auto same = metrics::proxy_raw("The river runs. The river runs.");
  EXPECT_DOUBLE_EQ(same.referential, 1.0);
  EXPECT_GT(metrics::percentile(same.referential, {0.1, 0.1}), 99.0);

  std::string forty;
  for (int i = 0; i < 40; ++i) forty += "stone ";
  const auto single = metrics::proxy_raw(forty);
  EXPECT_DOUBLE_EQ(single.referential, 0.0);
  EXPECT_DOUBLE_EQ(single.syntactic, -40.0);
  EXPECT_LT(metrics::percentile(single.syntactic, {-10.0, 5.0}), 0.01);
}

TEST(Proxies, PercentileRangeAndMonotone) {
  const metrics::Moments m{-3.0, 2.5};
  double prev = -1;
  for (double raw = -40; raw <= 40; raw += 0.25) {
    const double p = metrics::percentile(raw, m);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 100.0);
    EXPECT_GE(p, prev);
    prev = p;
  }
}

TEST(Proxies, ReferenceMoments) {
  const std::vector<std::string> texts{"Stone. Stone stone.", "Stone stone stone stone."};
  const auto ref = metrics::compute_reference(texts, "n");
  // Syntactic raw: -1.5 and -4.
  EXPECT_DOUBLE_EQ(ref.syntactic.mean, -2.75);
  EXPECT_NEAR(ref.syntactic.sd, std::sqrt(2 * 1.25 * 1.25), 1e-12);
  const auto back = nlohmann::json(ref).get<metrics::ReferenceStats>();
  EXPECT_EQ(back.syntactic.mean, ref.syntactic.mean);
  EXPECT_EQ(back.note, "n");
  EXPECT_THROW(metrics::compute_reference({"one."}, ""), vw::ValidationError);
}

TEST(Report, MeansSkipUndefinedValues) {
  const auto plex = vw::load_psych_lexicon("fire,600,611\nash,300,500\n");
  const metrics::ReferenceStats ref{{0, 1}, {-5, 2}, {0, 1}, ""};
  const auto r = metrics::report(
      {{"a", "Fire burns."}, {"b", "Of it and to."}, {"c", "Ash falls, ash."}}, plex, ref);
  ASSERT_EQ(r.texts.size(), 3u);
  EXPECT_FALSE(r.texts[1].imgc.has_value());
  EXPECT_DOUBLE_EQ(*r.mean[2], (600.0 + 300.0) / 2);
  EXPECT_DOUBLE_EQ(*r.mean[3], (611.0 + 500.0) / 2);
  double fre_sum = 0;
  for (const auto& t : r.texts) fre_sum += t.fre;
  EXPECT_DOUBLE_EQ(*r.mean[0], fre_sum / 3);
  EXPECT_THROW(metrics::report({}, plex, ref), vw::ValidationError);
  EXPECT_THROW(metrics::report({{"x", "..."}}, plex, ref), vw::ValidationError);
}

TEST(Report, GoldenTsvByteForByte) {
  const auto plex = fixture_psych();
  const auto ref = metrics::load_reference(kFixtures / "reference_stats.json");
  std::vector<metrics::NamedText> texts;
  for (const char* id : {"abstract", "candle", "poet"}) {
    texts.push_back({id, vw::io::read_file(kFixtures / (std::string(id) + ".txt"))});
  }
  const std::string tsv = metrics::to_tsv(metrics::report(texts, plex, ref));
  EXPECT_EQ(tsv, vw::io::read_file(kFixtures / "golden.tsv"));
}

TEST(Report, JsonCarriesProxyNote) {
  const auto plex = fixture_psych();
  const auto ref = metrics::load_reference(kFixtures / "reference_stats.json");
  const auto j = metrics::to_json_report(
      metrics::report({{"a", "Of all that is."}}, plex, ref));
  EXPECT_TRUE(j["texts"][0]["IMGc"].is_null());
  EXPECT_EQ(j["proxies"].size(), 3u);
  EXPECT_NE(j["note"].get<std::string>().find("proxy"), std::string::npos);
}
