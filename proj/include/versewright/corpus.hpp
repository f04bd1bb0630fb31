#ifndef VERSEWRIGHT_CORPUS_HPP_
#define VERSEWRIGHT_CORPUS_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "versewright/emotion.hpp"
#include "versewright/errors.hpp"
#include "versewright/io.hpp"
#include "versewright/rng.hpp"
#include "versewright/utf8.hpp"

namespace versewright {

// Lowercased runs of letters and apostrophes. Apostrophes at either end of a
// run are trimmed, so only word-interior ones survive ("don't"). U+2019 is
// treated as an apostrophe and normalised to '.
inline std::vector<std::string> normalize_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && cur[b] == '\'') ++b;
    while (e > b && cur[e - 1] == '\'') --e;
    if (e > b) tokens.emplace_back(cur.substr(b, e - b));
    cur.clear();
  };
  std::size_t pos = 0;
  char32_t cp;
  while (pos < text.size()) {
    utf8::next(text, pos, cp);
    if (cp == '\'' || cp == 0x2019) {
      cur.push_back('\'');
    } else if (utf8::is_letter(cp)) {
      utf8::append(cur, utf8::to_lower(cp));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

struct Document {
  std::string id;
  std::string body;
  std::size_t token_count = 0;

  static Document make(std::string id, std::string body) {
    Document d{std::move(id), std::move(body), 0};
    d.token_count = normalize_tokens(d.body).size();
    return d;
  }
};

struct EmotionScores {
  std::array<std::uint64_t, kNumEmotions> scores{};
  std::optional<Emotion> label;

  std::uint64_t operator[](Emotion e) const { return scores[index_of(e)]; }
  friend bool operator==(const EmotionScores&, const EmotionScores&) = default;
};

// First maximum in canonical order; none when every score is zero.
inline std::optional<Emotion> argmax_label(
    const std::array<std::uint64_t, kNumEmotions>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumEmotions; ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  if (scores[best] == 0) return std::nullopt;
  return static_cast<Emotion>(best);
}

inline EmotionScores score_tokens(const std::vector<std::string>& tokens,
                                  const EmotionLexicon& lex) {
  EmotionScores s;
  for (const auto& t : tokens) {
    const EmotionSet set = lex.lookup_folded(t);
    if (set.empty()) continue;
    for (Emotion e : kAllEmotions) {
      if (set.contains(e)) ++s.scores[index_of(e)];
    }
  }
  s.label = argmax_label(s.scores);
  return s;
}

inline EmotionScores score_text(std::string_view text, const EmotionLexicon& lex) {
  return score_tokens(normalize_tokens(text), lex);
}

inline EmotionScores score_document(const Document& doc, const EmotionLexicon& lex) {
  return score_text(doc.body, lex);
}

// Optional length-normalised view of a score vector (per scoring token).
inline std::array<double, kNumEmotions> per_token_scores(const EmotionScores& s,
                                                         std::size_t token_count) {
  std::array<double, kNumEmotions> out{};
  if (token_count == 0) return out;
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    out[i] = static_cast<double>(s.scores[i]) / static_cast<double>(token_count);
  }
  return out;
}

struct SplitReport {
  std::array<std::size_t, kNumEmotions> documents{};
  std::array<std::size_t, kNumEmotions> tokens{};
  std::size_t unlabeled = 0;

  std::size_t total() const {
    return std::accumulate(documents.begin(), documents.end(), unlabeled);
  }
};

inline std::string labels_header() {
  std::string h = "id";
  for (auto n : kEmotionNames) h += "\t" + std::string(n);
  return h + "\tlabel\n";
}

inline std::string labels_row(const std::string& id, const EmotionScores& s) {
  std::string row = id;
  for (auto v : s.scores) row += "\t" + std::to_string(v);
  row += "\t";
  row += s.label ? std::string(name_of(*s.label)) : std::string("none");
  return row + "\n";
}

// Writes <out>/<emotion>/<id>.txt for every labelled document and a
// <out>/labels.tsv manifest (id, eight scores in canonical order, label).
// Documents are processed in id order regardless of input order.
inline SplitReport split_corpus(std::vector<Document> docs, const EmotionLexicon& lex,
                                const std::filesystem::path& out) {
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].id == docs[i - 1].id) {
      throw ValidationError("duplicate document id '" + docs[i].id + "'");
    }
  }
  for (const auto& d : docs) {
    if (d.id.empty()) throw ValidationError("empty document id");
  }

  std::vector<EmotionScores> scores;
  scores.reserve(docs.size());
  for (const auto& d : docs) scores.push_back(score_document(d, lex));

  io::ensure_dir(out);
  for (auto n : kEmotionNames) io::ensure_dir(out / std::string(n));

  SplitReport report;
  std::string manifest = labels_header();
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Document& d = docs[i];
    const EmotionScores& s = scores[i];
    manifest += labels_row(d.id, s);
    if (!s.label) {
      ++report.unlabeled;
      continue;
    }
    const std::size_t k = index_of(*s.label);
    ++report.documents[k];
    report.tokens[k] += normalize_tokens(d.body).size();
    io::write_file_atomic(out / std::string(kEmotionNames[k]) / (d.id + ".txt"),
                          d.body);
  }
  io::write_file_atomic(out / "labels.tsv", manifest);
  return report;
}

struct RankedPoem {
  std::size_t index = 0;  // position in the input pool
  std::string text;
  std::uint64_t score = 0;
};

struct RankedPool {
  Emotion target = Emotion::kJoy;
  std::vector<RankedPoem> poems;
};

inline RankedPool rank_generated(const std::vector<std::string>& pool,
                                 const EmotionLexicon& lex, Emotion target,
                                 std::size_t top_n) {
  if (pool.empty()) throw ValidationError("cannot rank an empty pool");
  if (top_n == 0) throw ValidationError("top_n must be at least 1");
  RankedPool ranked{target, {}};
  ranked.poems.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    ranked.poems.push_back({i, pool[i], score_text(pool[i], lex)[target]});
  }
  std::stable_sort(ranked.poems.begin(), ranked.poems.end(),
                   [](const RankedPoem& a, const RankedPoem& b) {
                     return a.score > b.score;
                   });
  ranked.poems.resize(std::min(top_n, ranked.poems.size()));
  return ranked;
}

// n distinct poems drawn uniformly without replacement (partial
// Fisher-Yates), reproducible for a fixed seed.
inline std::vector<RankedPoem> select_for_review(const RankedPool& ranked,
                                                 std::size_t n, std::uint64_t seed) {
  if (n > ranked.poems.size()) {
    throw ValidationError("cannot select " + std::to_string(n) + " of " +
                          std::to_string(ranked.poems.size()) + " poems");
  }
  std::vector<std::size_t> idx(ranked.poems.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::vector<RankedPoem> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(ranked.poems[idx[i]]);
  }
  return out;
}

// One Document per `.txt` file under `dir`, id = relative path without the
// extension ('/'-separated), sorted by id. If `manifest` is given it lists
// the relative paths to include, one per line.
inline std::vector<Document> ingest_corpus(
    const std::filesystem::path& dir,
    const std::optional<std::filesystem::path>& manifest = std::nullopt) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  if (manifest) {
    io::for_each_line(io::read_file(*manifest),
                      [&](std::size_t, std::string_view line) {
                        line = detail::trim(line);
                        if (!line.empty() && line.front() != '#') {
                          files.push_back(dir / fs::path(std::string(line)));
                        }
                      });
  } else {
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(entry.path());
      }
    }
  }
  std::vector<Document> docs;
  docs.reserve(files.size());
  for (const auto& f : files) {
    std::string body = io::read_file(f);
    if (!utf8::is_valid(body)) throw ValidationError("not valid UTF-8: " + f.string());
    fs::path rel = fs::relative(f, dir);
    rel.replace_extension();
    docs.push_back(Document::make(rel.generic_string(), std::move(body)));
  }
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].id == docs[i - 1].id) {
      throw ValidationError("duplicate document id '" + docs[i].id + "'");
    }
  }
  return docs;
}

}  // namespace versewright

#endif  // VERSEWRIGHT_CORPUS_HPP_
