#include "versewright/corpus.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace vw = versewright;
using vw::Emotion;

namespace {

using Strings = std::vector<std::string>;

vw::EmotionLexicon lex_of(const std::string& tsv) { return vw::load_emotion_lexicon(tsv); }

std::array<std::uint64_t, 8> scores(std::initializer_list<std::pair<Emotion, int>> kv) {
  std::array<std::uint64_t, 8> s{};
  for (auto [e, v] : kv) s[vw::index_of(e)] = v;
  return s;
}

}  // namespace

TEST(NormalizeTokens, Examples) {
  EXPECT_EQ(vw::normalize_tokens("Heard I a song of joy,"),
            (Strings{"heard", "i", "a", "song", "of", "joy"}));
  EXPECT_TRUE(vw::normalize_tokens("").empty());
  EXPECT_EQ(vw::normalize_tokens("Don't\xE2\x80\x94stop!"), (Strings{"don't", "stop"}));
}

TEST(NormalizeTokens, ApostrophesDigitsAndUnicode) {
  EXPECT_EQ(vw::normalize_tokens("'tis the dogs' o'er"), (Strings{"tis", "the", "dogs", "o'er"}));
  EXPECT_EQ(vw::normalize_tokens("don\xE2\x80\x99t"), (Strings{"don't"}));
  EXPECT_EQ(vw::normalize_tokens("abc123def 4"), (Strings{"abc", "def"}));
  EXPECT_EQ(vw::normalize_tokens("\xC3\x89T\xC3\x89 Stra\xC3\x9F" "e"),
            (Strings{"\xC3\xA9t\xC3\xA9", "stra\xC3\x9F" "e"}));
  EXPECT_TRUE(vw::normalize_tokens("' '' ,,, 42").empty());
}

TEST(ScoreDocument, Examples) {
  auto lex = lex_of("happy\tjoy\t1\ngrave\tsadness\t1\n");
  auto s = vw::score_document(vw::Document::make("d", "happy happy grave"), lex);
  EXPECT_EQ(s.scores, scores({{Emotion::kJoy, 2}, {Emotion::kSadness, 1}}));
  EXPECT_EQ(s.label, Emotion::kJoy);

  auto none = vw::score_document(vw::Document::make("d", "nothing here"), lex);
  EXPECT_EQ(none.scores, scores({}));
  EXPECT_FALSE(none.label);

  auto lex2 = lex_of("fear\tfear\t1\nfear\tsadness\t1\n");
  auto tie = vw::score_document(vw::Document::make("d", "fear fear"), lex2);
  EXPECT_EQ(tie.scores, scores({{Emotion::kFear, 2}, {Emotion::kSadness, 2}}));
  EXPECT_EQ(tie.label, Emotion::kFear);
}

TEST(ArgmaxLabel, TiesResolveInCanonicalOrder) {
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = i + 1; j < 8; ++j) {
      std::array<std::uint64_t, 8> s{};
      s[i] = s[j] = 3;
      EXPECT_EQ(vw::argmax_label(s), vw::kAllEmotions[i]);
    }
  }
  std::array<std::uint64_t, 8> all{};
  all.fill(1);
  EXPECT_EQ(vw::argmax_label(all), Emotion::kAnger);
}

TEST(Document, TokenCount) {
  EXPECT_EQ(vw::Document::make("x", "One, two; three's").token_count, 3u);
}

namespace {

// Random lexicon over w0..w49 plus documents built from known token lists,
// joined by assorted non-letter separators and random casing.
struct Synthetic {
  std::map<std::string, std::set<std::string>> table;
  std::string tsv;
};

Synthetic synthetic_lexicon(std::mt19937_64& gen) {
  Synthetic s;
  for (int w = 0; w < 50; ++w) {
    const std::string word = "w" + std::string(1, static_cast<char>('a' + w % 26)) +
                             std::string(1, static_cast<char>('a' + w / 26));
    for (auto name : vw::kEmotionNames) {
      const bool on = gen() % 4 == 0;
      s.tsv += word + "\t" + std::string(name) + "\t" + (on ? "1" : "0") + "\n";
      if (on) s.table[word].insert(std::string(name));
      else s.table[word];
    }
  }
  return s;
}

std::string random_case(std::mt19937_64& gen, std::string w) {
  for (char& c : w) {
    if (gen() % 3 == 0) c = static_cast<char>(std::toupper(c));
  }
  return w;
}

}  // namespace

TEST(ScoreDocumentOracle, MatchesBruteForceRecount) {
  std::mt19937_64 gen(2024);
  const Synthetic syn = synthetic_lexicon(gen);
  const auto lex = vw::load_emotion_lexicon(syn.tsv);
  std::vector<std::string> vocab;
  for (const auto& [w, _] : syn.table) vocab.push_back(w);
  vocab.push_back("zzz");
  vocab.push_back("other");
  const char* seps[] = {" ", ", ", "\n", "; ", "! ", " 12 ", "\xE2\x80\x94"};
  int mismatches = 0;
  for (int d = 0; d < 200; ++d) {
    std::vector<std::string> toks;
    std::string body;
    const int n = static_cast<int>(gen() % 60);
    for (int i = 0; i < n; ++i) {
      toks.push_back(vocab[gen() % vocab.size()]);
      body += random_case(gen, toks.back()) + seps[gen() % 7];
    }
    std::array<std::uint64_t, 8> expect{};
    for (std::size_t e = 0; e < 8; ++e) {
      for (const auto& t : toks) {
        auto it = syn.table.find(t);
        if (it != syn.table.end() && it->second.count(std::string(vw::kEmotionNames[e]))) {
          ++expect[e];
        }
      }
    }
    std::optional<Emotion> label;
    std::uint64_t best = 0;
    for (std::size_t e = 0; e < 8; ++e) {
      if (expect[e] > best) {
        best = expect[e];
        label = vw::kAllEmotions[e];
      }
    }
    const auto got = vw::score_document(vw::Document::make("d", body), lex);
    if (got.scores != expect || got.label != label) ++mismatches;
  }
  EXPECT_EQ(mismatches, 0);
}

TEST(ScoreProperties, AdditivePermutationInvariantBounded) {
  std::mt19937_64 gen(5);
  const Synthetic syn = synthetic_lexicon(gen);
  const auto lex = vw::load_emotion_lexicon(syn.tsv);
  std::vector<std::string> vocab;
  for (const auto& [w, _] : syn.table) vocab.push_back(w);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> a, b;
    for (int i = 0, n = static_cast<int>(gen() % 20); i < n; ++i) a.push_back(vocab[gen() % 50]);
    for (int i = 0, n = static_cast<int>(gen() % 20); i < n; ++i) b.push_back(vocab[gen() % 50]);
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& t : v) s += t + " ";
      return s;
    };
    const auto sa = vw::score_text(join(a), lex);
    const auto sb = vw::score_text(join(b), lex);
    const auto sab = vw::score_text(join(a) + " " + join(b), lex);
    for (std::size_t e = 0; e < 8; ++e) EXPECT_EQ(sab.scores[e], sa.scores[e] + sb.scores[e]);

    auto shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    EXPECT_EQ(vw::score_text(join(shuffled), lex), sa);

    std::uint64_t total = 0;
    for (auto v : sa.scores) total += v;
    EXPECT_LE(total, a.size() * 8);
  }
}

TEST(SplitCorpus, CountsFilesAndManifest) {
  vwtest::TempDir dir;
  auto lex = lex_of("happy\tjoy\t1\ngrave\tsadness\t1\n");
  std::vector<vw::Document> docs = {vw::Document::make("c", "grave grave"),
                                    vw::Document::make("a", "happy day"),
                                    vw::Document::make("b", "so happy"),
                                    vw::Document::make("d", "plain words")};
  auto rep = vw::split_corpus(docs, lex, dir.path());
  EXPECT_EQ(rep.documents[vw::index_of(Emotion::kJoy)], 2u);
  EXPECT_EQ(rep.documents[vw::index_of(Emotion::kSadness)], 1u);
  EXPECT_EQ(rep.unlabeled, 1u);
  EXPECT_EQ(rep.total(), docs.size());
  EXPECT_EQ(rep.tokens[vw::index_of(Emotion::kJoy)], 4u);
  EXPECT_TRUE(std::filesystem::exists(dir / "joy/a.txt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "sadness/c.txt"));
  EXPECT_FALSE(std::filesystem::exists(dir / "joy/d.txt"));
  for (auto n : vw::kEmotionNames) {
    EXPECT_TRUE(std::filesystem::is_directory(dir / std::string(n)));
  }
  const std::string manifest = vw::io::read_file(dir / "labels.tsv");
  EXPECT_EQ(manifest,
            "id\tanger\tanticipation\tdisgust\tfear\tjoy\tsadness\tsurprise\ttrust\tlabel\n"
            "a\t0\t0\t0\t0\t1\t0\t0\t0\tjoy\n"
            "b\t0\t0\t0\t0\t1\t0\t0\t0\tjoy\n"
            "c\t0\t0\t0\t0\t0\t2\t0\t0\tsadness\n"
            "d\t0\t0\t0\t0\t0\t0\t0\t0\tnone\n");
}

TEST(SplitCorpus, EmptyAndUnlabeledAndDuplicates) {
  vwtest::TempDir dir;
  auto lex = lex_of("happy\tjoy\t1\n");
  auto rep = vw::split_corpus({}, lex, dir / "empty");
  EXPECT_EQ(rep.total(), 0u);
  for (auto n : vw::kEmotionNames) {
    EXPECT_TRUE(std::filesystem::is_empty(dir / "empty" / std::string(n)));
  }
  auto one = vw::split_corpus({vw::Document::make("x", "no hits")}, lex, dir / "one");
  EXPECT_EQ(one.unlabeled, 1u);
  EXPECT_THROW(vw::split_corpus({vw::Document::make("x", "a"), vw::Document::make("x", "b")},
                                lex, dir / "dup"),
               vw::ValidationError);
}

TEST(SplitCorpus, RescoringEmittedFilesReproducesManifest) {
  vwtest::TempDir dir;
  std::mt19937_64 gen(9);
  const Synthetic syn = synthetic_lexicon(gen);
  const auto lex = vw::load_emotion_lexicon(syn.tsv);
  std::vector<std::string> vocab;
  for (const auto& [w, _] : syn.table) vocab.push_back(w);
  std::vector<vw::Document> docs;
  for (int d = 0; d < 40; ++d) {
    std::string body;
    for (int i = 0; i < 12; ++i) body += vocab[gen() % vocab.size()] + " ";
    docs.push_back(vw::Document::make("doc" + std::to_string(d), body));
  }
  vw::split_corpus(docs, lex, dir.path());
  std::size_t checked = 0;
  vw::io::for_each_line(vw::io::read_file(dir / "labels.tsv"),
                        [&](std::size_t lineno, std::string_view line) {
                          if (lineno == 1 || line.empty()) return;
                          auto cols = vw::detail::split(line, '\t');
                          const std::string id(cols[0]), label(cols[9]);
                          if (label == "none") return;
                          auto s = vw::score_text(
                              vw::io::read_file(dir / label / (id + ".txt")), lex);
                          EXPECT_EQ(vw::labels_row(id, s), std::string(line) + "\n");
                          ++checked;
                        });
  EXPECT_GT(checked, 0u);
}

TEST(RankGenerated, Examples) {
  auto lex = lex_of("glad\tjoy\t1\n");
  auto r = vw::rank_generated({"none", "glad glad glad glad glad", "glad glad"}, lex,
                              Emotion::kJoy, 2);
  ASSERT_EQ(r.poems.size(), 2u);
  EXPECT_EQ(r.poems[0].score, 5u);
  EXPECT_EQ(r.poems[0].index, 1u);
  EXPECT_EQ(r.poems[1].score, 2u);

  auto all = vw::rank_generated({"glad", "x", "glad glad"}, lex, Emotion::kJoy, 10);
  ASSERT_EQ(all.poems.size(), 3u);
  EXPECT_EQ(all.poems[0].index, 2u);

  auto ties = vw::rank_generated({"a", "b", "c", "d"}, lex, Emotion::kJoy, 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(ties.poems[i].index, i);

  EXPECT_THROW(vw::rank_generated({}, lex, Emotion::kJoy, 1), vw::ValidationError);
  EXPECT_THROW(vw::rank_generated({"a"}, lex, Emotion::kJoy, 0), vw::ValidationError);
}

TEST(RankGenerated, TargetScoreOnly) {
  auto lex = lex_of("dark\tfear\t1\nglad\tjoy\t1\n");
  auto r = vw::rank_generated({"dark dark dark glad", "glad glad"}, lex, Emotion::kJoy, 2);
  EXPECT_EQ(r.poems[0].index, 1u);
}

TEST(RankGenerated, MatchesBruteForceSortOracle) {
  std::mt19937_64 gen(77);
  auto lex = lex_of("glad\tjoy\t1\nsun\tjoy\t1\nsun\ttrust\t1\n");
  const char* words[] = {"glad", "sun", "rain", "stone"};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + gen() % 100;
    std::vector<std::string> pool;
    for (std::size_t i = 0; i < n; ++i) {
      std::string p;
      for (int k = static_cast<int>(gen() % 8); k > 0; --k) p += std::string(words[gen() % 4]) + " ";
      pool.push_back(p);
    }
    const std::size_t top = 1 + gen() % 30;
    // Oracle: count target hits by substring scan, then selection by repeated max.
    std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t c = 0;
      const std::string& p = pool[i];
      for (std::size_t b = 0; b < p.size();) {
        std::size_t e = p.find(' ', b);
        const std::string w = p.substr(b, e - b);
        if (w == "glad" || w == "sun") ++c;
        b = e + 1;
      }
      keyed.push_back({c, i});
    }
    std::vector<std::size_t> expect;
    std::vector<bool> used(n, false);
    for (std::size_t k = 0; k < std::min(top, n); ++k) {
      std::size_t best = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        if (best == n || keyed[i].first > keyed[best].first) best = i;
      }
      used[best] = true;
      expect.push_back(best);
    }
    auto got = vw::rank_generated(pool, lex, Emotion::kJoy, top);
    ASSERT_EQ(got.poems.size(), expect.size());
    for (std::size_t k = 0; k < expect.size(); ++k) {
      EXPECT_EQ(got.poems[k].index, expect[k]);
      EXPECT_EQ(got.poems[k].score, keyed[expect[k]].first);
    }
  }
}

TEST(SelectForReview, PermutationDeterminismAndErrors) {
  auto lex = lex_of("glad\tjoy\t1\n");
  std::vector<std::string> pool;
  for (int i = 0; i < 20; ++i) pool.push_back("p" + std::to_string(i));
  auto ranked = vw::rank_generated(pool, lex, Emotion::kJoy, 20);

  auto all = vw::select_for_review(ranked, 20, 1);
  std::set<std::size_t> idx;
  for (const auto& p : all) idx.insert(p.index);
  EXPECT_EQ(idx.size(), 20u);

  auto a = vw::select_for_review(ranked, 4, 42);
  auto b = vw::select_for_review(ranked, 4, 42);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a[i].index, b[i].index);

  EXPECT_THROW(vw::select_for_review(ranked, 21, 1), vw::ValidationError);
}

TEST(SelectForReview, UniformMonteCarlo) {
  auto lex = lex_of("glad\tjoy\t1\n");
  std::vector<std::string> pool(20, "x");
  auto ranked = vw::rank_generated(pool, lex, Emotion::kJoy, 20);
  std::array<int, 20> hits{};
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto sel = vw::select_for_review(ranked, 4, vw::derive_seed(123, t));
    std::set<std::size_t> distinct;
    for (const auto& p : sel) {
      ++hits[p.index];
      distinct.insert(p.index);
    }
    ASSERT_EQ(distinct.size(), 4u);
  }
  for (int h : hits) EXPECT_NEAR(static_cast<double>(h) / trials, 0.20, 0.02);
}

TEST(IngestCorpus, IdsOrderingAndErrors) {
  vwtest::TempDir dir;
  std::filesystem::create_directories(dir / "sub");
  vw::io::write_file_atomic(dir / "b.txt", "second");
  vw::io::write_file_atomic(dir / "a.txt", "first");
  vw::io::write_file_atomic(dir / "sub/c.txt", "third one");
  vw::io::write_file_atomic(dir / "skip.md", "ignored");
  auto docs = vw::ingest_corpus(dir.path());
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].id, "a");
  EXPECT_EQ(docs[1].id, "b");
  EXPECT_EQ(docs[2].id, "sub/c");
  EXPECT_EQ(docs[2].token_count, 2u);

  vwtest::TempDir empty;
  EXPECT_TRUE(vw::ingest_corpus(empty.path()).empty());

  vw::io::write_file_atomic(dir / "bad.txt", "ok \xFF\xFE bytes");
  try {
    vw::ingest_corpus(dir.path());
    FAIL();
  } catch (const vw::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.txt"), std::string::npos);
  }
  EXPECT_THROW(vw::ingest_corpus(dir / "missing"), vw::IoError);
}
