#ifndef VERSEWRIGHT_EMOTION_HPP_
#define VERSEWRIGHT_EMOTION_HPP_

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "versewright/errors.hpp"
#include "versewright/io.hpp"
#include "versewright/utf8.hpp"

namespace versewright {

// The eight Plutchik emotions in canonical order. The order is used for
// argmax tie-breaking and for every fixed-column output format.
enum class Emotion : std::uint8_t {
  kAnger,
  kAnticipation,
  kDisgust,
  kFear,
  kJoy,
  kSadness,
  kSurprise,
  kTrust,
};

inline constexpr std::size_t kNumEmotions = 8;

inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions = {
    Emotion::kAnger, Emotion::kAnticipation, Emotion::kDisgust,
    Emotion::kFear,  Emotion::kJoy,          Emotion::kSadness,
    Emotion::kSurprise, Emotion::kTrust};

inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "anger", "anticipation", "disgust", "fear",
    "joy",   "sadness",      "surprise", "trust"};

inline constexpr std::size_t index_of(Emotion e) {
  return static_cast<std::size_t>(e);
}

inline constexpr std::string_view name_of(Emotion e) {
  return kEmotionNames[index_of(e)];
}

inline std::optional<Emotion> parse_emotion(std::string_view s) {
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    if (kEmotionNames[i] == s) return static_cast<Emotion>(i);
  }
  return std::nullopt;
}

enum class Sentiment : std::uint8_t { kNegative, kPositive };

// Small bitset over the eight emotions.
class EmotionSet {
 public:
  constexpr EmotionSet() = default;
  constexpr EmotionSet(std::initializer_list<Emotion> es) {
    for (Emotion e : es) insert(e);
  }

  constexpr void insert(Emotion e) { bits_ |= bit(e); }
  constexpr void erase(Emotion e) { bits_ &= static_cast<std::uint8_t>(~bit(e)); }
  constexpr bool contains(Emotion e) const { return bits_ & bit(e); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const { return std::popcount(bits_); }
  constexpr std::uint8_t bits() const { return bits_; }

  friend constexpr bool operator==(EmotionSet, EmotionSet) = default;

 private:
  static constexpr std::uint8_t bit(Emotion e) {
    return static_cast<std::uint8_t>(1u << index_of(e));
  }
  std::uint8_t bits_ = 0;
};

struct SentimentSet {
  bool negative = false;
  bool positive = false;
  friend bool operator==(const SentimentSet&, const SentimentSet&) = default;
};

class EmotionLexicon {
 public:
  struct Entry {
    EmotionSet emotions;
    SentimentSet sentiment;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::size_t word_count() const { return entries_.size(); }

  // Case-insensitive; unknown words map to the empty set.
  EmotionSet emotions_of(std::string_view word) const {
    if (word.empty()) return {};
    return lookup_folded(utf8::to_lower(word));
  }

  // Lookup for a word that is already lowercase (the scoring hot path).
  EmotionSet lookup_folded(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? EmotionSet{} : it->second.emotions;
  }

  const Entry* find(std::string_view word) const {
    auto it = entries_.find(utf8::to_lower(word));
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::vector<std::string> sorted_words() const {
    std::vector<std::string> words;
    words.reserve(entries_.size());
    for (const auto& [w, _] : entries_) words.push_back(w);
    std::sort(words.begin(), words.end());
    return words;
  }

  // Ten rows per word (eight emotions then negative, positive), words sorted.
  std::string to_tsv() const {
    std::string out;
    for (const auto& w : sorted_words()) {
      const Entry& e = entries_.at(w);
      for (Emotion em : kAllEmotions) {
        out += w + '\t' + std::string(name_of(em)) + '\t' +
               (e.emotions.contains(em) ? '1' : '0') + '\n';
      }
      out += w + "\tnegative\t" + (e.sentiment.negative ? '1' : '0') + '\n';
      out += w + "\tpositive\t" + (e.sentiment.positive ? '1' : '0') + '\n';
    }
    return out;
  }

  void insert(const std::string& word, Entry entry) {
    VW_CHECK(!entry.emotions.empty(), "lexicon entry without emotions");
    entries_[word] = entry;
  }

  friend bool operator==(const EmotionLexicon& a, const EmotionLexicon& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::unordered_map<std::string, Entry> entries_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, end - start));
    start = end + 1;
  }
}

inline std::optional<long> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty() || s.size() > 12) return std::nullopt;
  long v = 0;
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
    if (s.size() == 1) return std::nullopt;
  }
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
    v = v * 10 + (s[i] - '0');
  }
  return neg ? -v : v;
}

}  // namespace detail

// Reads the EmoLex `word<TAB>category<TAB>flag` format. Rows for the two
// sentiment categories are kept but play no part in emotion scoring. Words
// left with no emotion flagged are dropped.
inline EmotionLexicon load_emotion_lexicon(std::string_view text) {
  struct Flags {
    EmotionSet emotions;
    SentimentSet sentiment;
  };
  std::unordered_map<std::string, Flags> raw;
  io::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (line.empty() || line.front() == '#') return;
    auto cols = detail::split(line, '\t');
    if (cols.size() != 3) {
      throw ParseError(lineno, "expected 3 tab-separated columns, got " +
                                   std::to_string(cols.size()));
    }
    std::string_view word = detail::trim(cols[0]);
    if (word.empty()) throw ParseError(lineno, "empty word");
    if (!utf8::is_valid(word)) throw ParseError(lineno, "word is not valid UTF-8");
    std::string_view cat = detail::trim(cols[1]);
    std::string_view flag = detail::trim(cols[2]);
    if (flag != "0" && flag != "1") {
      throw ParseError(lineno, "flag must be 0 or 1, got '" + std::string(flag) + "'");
    }
    const bool on = flag == "1";
    Flags& f = raw[utf8::to_lower(word)];
    if (auto e = parse_emotion(cat)) {
      on ? f.emotions.insert(*e) : f.emotions.erase(*e);
    } else if (cat == "positive") {
      f.sentiment.positive = on;
    } else if (cat == "negative") {
      f.sentiment.negative = on;
    } else {
      throw ParseError(lineno, "unknown category '" + std::string(cat) + "'");
    }
  });
  EmotionLexicon lex;
  for (auto& [word, f] : raw) {
    if (!f.emotions.empty()) lex.insert(word, {f.emotions, f.sentiment});
  }
  return lex;
}

inline EmotionLexicon load_emotion_lexicon(std::istream& in) {
  return load_emotion_lexicon(io::read_stream(in));
}

inline EmotionLexicon load_emotion_lexicon_file(const std::filesystem::path& p) {
  return load_emotion_lexicon(io::read_file(p));
}

struct PsychRating {
  int imageability = 0;
  int concreteness = 0;
  friend bool operator==(const PsychRating&, const PsychRating&) = default;
};

// Imageability / concreteness norms on the 100-700 scale.
class PsychLexicon {
 public:
  static constexpr int kMinRating = 100;
  static constexpr int kMaxRating = 700;

  std::size_t size() const { return entries_.size(); }

  const PsychRating* find_folded(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
  }
  const PsychRating* find(std::string_view word) const {
    return find_folded(utf8::to_lower(word));
  }

  void insert(const std::string& word, PsychRating r) {
    if (r.imageability < kMinRating || r.imageability > kMaxRating ||
        r.concreteness < kMinRating || r.concreteness > kMaxRating) {
      throw RangeError("rating for '" + word + "' outside [100, 700]");
    }
    entries_[word] = r;
  }

  friend bool operator==(const PsychLexicon&, const PsychLexicon&) = default;

 private:
  std::unordered_map<std::string, PsychRating> entries_;
};

inline PsychLexicon load_psych_lexicon(std::string_view text) {
  PsychLexicon lex;
  bool first = true;
  io::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (detail::trim(line).empty()) return;
    const bool is_first = first;
    first = false;
    auto cols = detail::split(line, ',');
    if (is_first && cols.size() == 3 &&
        utf8::to_lower(detail::trim(cols[0])) == "word" &&
        utf8::to_lower(detail::trim(cols[1])) == "imageability" &&
        utf8::to_lower(detail::trim(cols[2])) == "concreteness") {
      return;
    }
    if (cols.size() != 3) throw ParseError(lineno, "expected word,int,int");
    std::string_view word = detail::trim(cols[0]);
    auto img = detail::parse_int(cols[1]);
    auto cnc = detail::parse_int(cols[2]);
    if (word.empty() || !img || !cnc) throw ParseError(lineno, "expected word,int,int");
    if (*img < PsychLexicon::kMinRating || *img > PsychLexicon::kMaxRating ||
        *cnc < PsychLexicon::kMinRating || *cnc > PsychLexicon::kMaxRating) {
      throw RangeError("line " + std::to_string(lineno) +
                       ": rating outside [100, 700]");
    }
    lex.insert(utf8::to_lower(word),
               {static_cast<int>(*img), static_cast<int>(*cnc)});
  });
  return lex;
}

inline PsychLexicon load_psych_lexicon(std::istream& in) {
  return load_psych_lexicon(io::read_stream(in));
}

inline PsychLexicon load_psych_lexicon_file(const std::filesystem::path& p) {
  return load_psych_lexicon(io::read_file(p));
}

}  // namespace versewright

#endif  // VERSEWRIGHT_EMOTION_HPP_
