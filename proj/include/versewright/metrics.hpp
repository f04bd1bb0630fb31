#ifndef VERSEWRIGHT_METRICS_HPP_
#define VERSEWRIGHT_METRICS_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "versewright/corpus.hpp"
#include "versewright/emotion.hpp"
#include "versewright/errors.hpp"
#include "versewright/io.hpp"

// Readability and lexical measures. FRE, FKGL, IMGc, CNCc and LDTTRa follow
// their published definitions; PCREFp, PCSYNp and PCNARp are proxies for the
// Coh-Metrix easability components and are labelled as such in every report.
namespace versewright::metrics {

inline constexpr std::string_view kStopwordListVersion = "vw-stop-1";

inline const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kWords = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an",
      "and", "any", "are", "as", "at", "be", "because", "been", "before",
      "being", "below", "between", "both", "but", "by", "can", "could", "did",
      "do", "does", "doing", "down", "during", "each", "few", "for", "from",
      "further", "had", "has", "have", "having", "he", "her", "here", "hers",
      "herself", "him", "himself", "his", "how", "i", "if", "in", "into",
      "is", "it", "its", "itself", "just", "me", "might", "more", "most",
      "must", "my", "myself", "no", "nor", "not", "now", "o", "of", "off",
      "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
      "over", "own", "same", "shall", "she", "should", "so", "some", "such",
      "than", "that", "the", "thee", "their", "theirs", "them", "themselves",
      "then", "there", "these", "they", "thine", "this", "those", "thou",
      "thy", "through", "to", "too", "under", "until", "up", "upon", "very",
      "was", "we", "were", "what", "when", "where", "which", "while", "who",
      "whom", "why", "will", "with", "would", "ye", "you", "your", "yours",
      "yourself", "yourselves"};
  return kWords;
}

inline const std::unordered_set<std::string>& pronouns() {
  static const std::unordered_set<std::string> kWords = {
      "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself",
      "he", "him", "his", "himself", "she", "her", "hers", "herself", "it",
      "its", "itself", "we", "us", "our", "ours", "ourselves", "they", "them",
      "their", "theirs", "themselves", "thou", "thee", "thy", "thine", "ye"};
  return kWords;
}

namespace detail {

inline bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

}  // namespace detail

// Vowel-group count over {a,e,i,o,u,y} with a few hiatus splits
// ("oe" before t/m as in poet, poem; "ia"/"io" unless after c/g/s/t/x;
// "ua"/"uo" unless after q/g), minus one for a silent final 'e' that is not
// part of a consonant+"le" ending. Never less than 1.
inline std::size_t count_syllables(std::string_view word) {
  std::string w;
  for (char c : word) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    if (c >= 'a' && c <= 'z') w.push_back(c);
  }
  const std::size_t n = w.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!detail::is_vowel(w[i])) continue;
    if (i == 0 || !detail::is_vowel(w[i - 1])) {
      ++count;
      continue;
    }
    const char a = w[i - 1], b = w[i];
    const char before = i >= 2 ? w[i - 2] : '\0';
    const char after = i + 1 < n ? w[i + 1] : '\0';
    if (a == 'o' && b == 'e' && (after == 't' || after == 'm')) {
      ++count;
    } else if (a == 'i' && (b == 'a' || b == 'o') && before != 'c' && before != 'g' &&
               before != 's' && before != 't' && before != 'x' && before != '\0') {
      ++count;
    } else if (a == 'u' && (b == 'a' || b == 'o') && before != 'q' && before != 'g' &&
               before != '\0') {
      ++count;
    }
  }
  if (n >= 2 && w[n - 1] == 'e' && !detail::is_vowel(w[n - 2])) {
    const bool consonant_le =
        w[n - 2] == 'l' && n >= 3 && !detail::is_vowel(w[n - 3]);
    if (!consonant_le && count > 1) --count;
  }
  return std::max<std::size_t>(count, 1);
}

// Splits after '.', '!' or '?' when followed by whitespace or the end of
// text. Segments that contain no words are dropped.
inline std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    std::string_view seg = text.substr(start, end - start);
    if (!normalize_tokens(seg).empty()) {
      std::size_t b = 0, e = seg.size();
      while (b < e && std::isspace(static_cast<unsigned char>(seg[b]))) ++b;
      while (e > b && std::isspace(static_cast<unsigned char>(seg[e - 1]))) --e;
      out.emplace_back(seg.substr(b, e - b));
    }
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool boundary = i + 1 == text.size() ||
                          std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (boundary) emit(i + 1);
  }
  if (start < text.size()) emit(text.size());
  return out;
}

struct TextStats {
  std::size_t sentence_count = 0;
  std::size_t word_count = 0;
  std::size_t syllable_count = 0;
  std::size_t type_count = 0;
  std::size_t content_word_hits = 0;
};

inline TextStats text_stats(std::string_view text, const PsychLexicon* plex = nullptr) {
  TextStats s;
  const std::vector<std::string> tokens = normalize_tokens(text);
  s.word_count = tokens.size();
  s.sentence_count = segment_sentences(text).size();
  std::set<std::string_view> types;
  for (const auto& t : tokens) {
    s.syllable_count += count_syllables(t);
    types.insert(t);
    if (plex && !stopwords().count(t) && plex->find_folded(t)) ++s.content_word_hits;
  }
  s.type_count = types.size();
  return s;
}

namespace detail {

inline TextStats require_words(std::string_view text) {
  TextStats s = text_stats(text);
  if (s.word_count == 0) throw ValidationError("text has no words");
  s.sentence_count = std::max<std::size_t>(s.sentence_count, 1);
  return s;
}

}  // namespace detail

inline double fre_raw(std::string_view text) {
  const TextStats s = detail::require_words(text);
  const double wps = static_cast<double>(s.word_count) / static_cast<double>(s.sentence_count);
  const double spw = static_cast<double>(s.syllable_count) / static_cast<double>(s.word_count);
  return 206.835 - 1.015 * wps - 84.6 * spw;
}

inline double fkgl_raw(std::string_view text) {
  const TextStats s = detail::require_words(text);
  const double wps = static_cast<double>(s.word_count) / static_cast<double>(s.sentence_count);
  const double spw = static_cast<double>(s.syllable_count) / static_cast<double>(s.word_count);
  return 0.39 * wps + 11.8 * spw - 15.59;
}

// Flesch Reading Ease clamped to [0, 100].
inline double fre(std::string_view text) { return std::clamp(fre_raw(text), 0.0, 100.0); }

// Flesch-Kincaid Grade Level clamped to [0, 18].
inline double fkgl(std::string_view text) { return std::clamp(fkgl_raw(text), 0.0, 18.0); }

namespace detail {

template <class Pick>
std::optional<double> mean_rating(std::string_view text, const PsychLexicon& plex,
                                  Pick pick) {
  double sum = 0;
  std::size_t hits = 0;
  for (const auto& t : normalize_tokens(text)) {
    if (stopwords().count(t)) continue;
    if (const PsychRating* r = plex.find_folded(t)) {
      sum += pick(*r);
      ++hits;
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

}  // namespace detail

// Occurrence-weighted mean imageability of non-stopword tokens; nullopt
// when no token is rated.
inline std::optional<double> imageability(std::string_view text, const PsychLexicon& plex) {
  return detail::mean_rating(text, plex, [](const PsychRating& r) { return r.imageability; });
}

inline std::optional<double> concreteness(std::string_view text, const PsychLexicon& plex) {
  return detail::mean_rating(text, plex, [](const PsychRating& r) { return r.concreteness; });
}

inline double ldttr(std::string_view text) {
  const auto tokens = normalize_tokens(text);
  if (tokens.empty()) throw ValidationError("text has no words");
  std::set<std::string_view> types(tokens.begin(), tokens.end());
  return static_cast<double>(types.size()) / static_cast<double>(tokens.size());
}

// ---------------------------------------------------------------------------
// Easability proxies

struct ProxyRaw {
  double referential = 0;  // mean adjacent-sentence content-word Jaccard
  double syntactic = 0;    // minus mean sentence length in words
  double narrative = 0;    // pronoun/verb-suffix rate minus rare-word rate
};

inline ProxyRaw proxy_raw(std::string_view text) {
  ProxyRaw raw;
  const std::vector<std::string> sentences = segment_sentences(text);
  std::vector<std::set<std::string>> content;
  std::size_t words = 0;
  for (const auto& s : sentences) {
    std::set<std::string> c;
    for (auto& t : normalize_tokens(s)) {
      ++words;
      if (!stopwords().count(t)) c.insert(std::move(t));
    }
    content.push_back(std::move(c));
  }
  if (content.size() >= 2) {
    double sum = 0;
    for (std::size_t i = 0; i + 1 < content.size(); ++i) {
      std::size_t inter = 0;
      for (const auto& w : content[i]) inter += content[i + 1].count(w);
      const std::size_t uni = content[i].size() + content[i + 1].size() - inter;
      sum += uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    raw.referential = sum / static_cast<double>(content.size() - 1);
  }
  if (!sentences.empty()) {
    raw.syntactic = -static_cast<double>(words) / static_cast<double>(sentences.size());
  }
  const auto tokens = normalize_tokens(text);
  if (!tokens.empty()) {
    std::size_t narrative = 0, rare = 0;
    for (const auto& t : tokens) {
      const bool verbish = (t.size() > 4 && t.ends_with("ing")) ||
                           (t.size() > 3 && t.ends_with("ed"));
      if (pronouns().count(t) || verbish) ++narrative;
      if (!stopwords().count(t) && count_syllables(t) >= 3) ++rare;
    }
    raw.narrative = (static_cast<double>(narrative) - static_cast<double>(rare)) /
                    static_cast<double>(tokens.size());
  }
  return raw;
}

struct Moments {
  double mean = 0;
  double sd = 1;
};

struct ReferenceStats {
  Moments referential, syntactic, narrative;
  std::string note;
};

inline void to_json(nlohmann::json& j, const ReferenceStats& r) {
  auto m = [](const Moments& x) { return nlohmann::json{{"mean", x.mean}, {"sd", x.sd}}; };
  j = nlohmann::json{{"version", 1},
                     {"stopwords", std::string(kStopwordListVersion)},
                     {"pcref", m(r.referential)},
                     {"pcsyn", m(r.syntactic)},
                     {"pcnar", m(r.narrative)},
                     {"note", r.note}};
}

inline void from_json(const nlohmann::json& j, ReferenceStats& r) {
  auto m = [](const nlohmann::json& x) {
    Moments out{x.at("mean").get<double>(), x.at("sd").get<double>()};
    if (!(out.sd > 0)) throw ValidationError("reference sd must be > 0");
    return out;
  };
  if (j.value("version", 0) != 1) throw ValidationError("unsupported reference stats version");
  r.referential = m(j.at("pcref"));
  r.syntactic = m(j.at("pcsyn"));
  r.narrative = m(j.at("pcnar"));
  r.note = j.value("note", std::string());
}

inline ReferenceStats load_reference(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(io::read_file(path)).get<ReferenceStats>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// Mean and sample standard deviation (floored at 1e-6) of each raw proxy.
inline ReferenceStats compute_reference(const std::vector<std::string>& texts,
                                        std::string note) {
  if (texts.size() < 2) throw ValidationError("reference corpus needs >= 2 texts");
  std::vector<ProxyRaw> raws;
  for (const auto& t : texts) raws.push_back(proxy_raw(t));
  auto moments = [&](double ProxyRaw::*field) {
    double mean = 0;
    for (const auto& r : raws) mean += r.*field;
    mean /= static_cast<double>(raws.size());
    double var = 0;
    for (const auto& r : raws) var += (r.*field - mean) * (r.*field - mean);
    var /= static_cast<double>(raws.size() - 1);
    return Moments{mean, std::max(std::sqrt(var), 1e-6)};
  };
  return {moments(&ProxyRaw::referential), moments(&ProxyRaw::syntactic),
          moments(&ProxyRaw::narrative), std::move(note)};
}

inline double percentile(double raw, const Moments& m) {
  const double z = (raw - m.mean) / m.sd;
  return std::clamp(50.0 * std::erfc(-z / std::sqrt(2.0)), 0.0, 100.0);
}

struct PcScores {
  double pcref = 0, pcsyn = 0, pcnar = 0;
};

inline PcScores pc_scores(std::string_view text, const ReferenceStats& ref) {
  const ProxyRaw raw = proxy_raw(text);
  return {percentile(raw.referential, ref.referential),
          percentile(raw.syntactic, ref.syntactic),
          percentile(raw.narrative, ref.narrative)};
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr std::array<std::string_view, 8> kColumns = {
    "FRE", "FKGL", "IMGc", "CNCc", "LDTTRa", "PCREFp", "PCSYNp", "PCNARp"};

struct TextMetrics {
  std::string id;
  double fre = 0, fkgl = 0;
  std::optional<double> imgc, cncc;
  double ldttr = 0;
  PcScores pc;

  std::array<std::optional<double>, 8> values() const {
    return {fre, fkgl, imgc, cncc, ldttr, pc.pcref, pc.pcsyn, pc.pcnar};
  }
};

struct MetricsReport {
  std::vector<TextMetrics> texts;
  std::array<std::optional<double>, 8> mean{};
};

struct NamedText {
  std::string id;
  std::string text;
};

inline MetricsReport report(const std::vector<NamedText>& texts, const PsychLexicon& plex,
                            const ReferenceStats& ref) {
  if (texts.empty()) throw ValidationError("no texts to report on");
  MetricsReport r;
  for (const auto& nt : texts) {
    TextMetrics m;
    m.id = nt.id;
    try {
      m.fre = fre(nt.text);
      m.fkgl = fkgl(nt.text);
      m.ldttr = ldttr(nt.text);
    } catch (const ValidationError& e) {
      throw ValidationError(nt.id + ": " + e.what());
    }
    m.imgc = imageability(nt.text, plex);
    m.cncc = concreteness(nt.text, plex);
    m.pc = pc_scores(nt.text, ref);
    r.texts.push_back(std::move(m));
  }
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& t : r.texts) {
      if (auto v = t.values()[c]) {
        sum += *v;
        ++n;
      }
    }
    if (n > 0) r.mean[c] = sum / static_cast<double>(n);
  }
  return r;
}

inline std::string format_value(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

inline constexpr std::string_view kProxyNote =
    "PCREFp/PCSYNp/PCNARp are proxy approximations, not Coh-Metrix components";

inline std::string to_tsv(const MetricsReport& r) {
  std::string out = "# " + std::string(kProxyNote) + "\n";
  out += "id";
  for (auto c : kColumns) out += "\t" + std::string(c);
  out += "\n";
  auto row = [&](const std::string& id, const std::array<std::optional<double>, 8>& v) {
    out += id;
    for (const auto& x : v) out += "\t" + format_value(x);
    out += "\n";
  };
  for (const auto& t : r.texts) row(t.id, t.values());
  row("MEAN", r.mean);
  return out;
}

inline nlohmann::json to_json_report(const MetricsReport& r) {
  auto obj = [](const std::array<std::optional<double>, 8>& v) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
      j[std::string(kColumns[c])] = v[c] ? nlohmann::json(*v[c]) : nlohmann::json(nullptr);
    }
    return j;
  };
  nlohmann::json texts = nlohmann::json::array();
  for (const auto& t : r.texts) {
    nlohmann::json j = obj(t.values());
    j["id"] = t.id;
    texts.push_back(std::move(j));
  }
  return {{"texts", texts},
          {"mean", obj(r.mean)},
          {"proxies", {"PCREFp", "PCSYNp", "PCNARp"}},
          {"note", std::string(kProxyNote)}};
}

}  // namespace versewright::metrics

#endif  // VERSEWRIGHT_METRICS_HPP_
