#ifndef VERSEWRIGHT_BPE_HPP_
#define VERSEWRIGHT_BPE_HPP_

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "versewright/errors.hpp"
#include "versewright/io.hpp"
#include "versewright/utf8.hpp"

namespace versewright::bpe {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kNumBytes = 256;
// Reserved id joining documents in a training stream; also the start token
// for unconditional generation. Never produced by encode().
inline constexpr TokenId kSeparator = 256;
inline constexpr TokenId kFirstMergeId = 257;
inline constexpr std::size_t kMinVocabSize = 257;
inline constexpr std::size_t kDefaultVocabSize = 2000;

enum class CharClass { kLetter, kDigit, kSpace, kOther };

inline CharClass classify(char32_t cp) {
  if (utf8::is_letter(cp)) return CharClass::kLetter;
  if (utf8::is_digit(cp)) return CharClass::kDigit;
  if (utf8::is_space(cp)) return CharClass::kSpace;
  return CharClass::kOther;
}

// Maximal runs of one character class (letters, digits, whitespace, other).
// A single U+0020 directly before a letter run moves into that run, so
// "fate", " fate" are whole spans and punctuation never fuses with a word.
// Invalid UTF-8 bytes fall in the "other" class one byte at a time.
inline std::vector<std::string_view> pretokenize(std::string_view text) {
  struct Run {
    std::size_t begin, end;
    CharClass cls;
  };
  std::vector<Run> runs;
  std::size_t pos = 0;
  char32_t cp;
  while (pos < text.size()) {
    const std::size_t start = pos;
    utf8::next(text, pos, cp);
    const CharClass cls = classify(cp);
    if (!runs.empty() && runs.back().cls == cls && runs.back().end == start) {
      runs.back().end = pos;
    } else {
      runs.push_back({start, pos, cls});
    }
  }
  std::vector<std::string_view> spans;
  spans.reserve(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    Run r = runs[i];
    if (r.cls == CharClass::kLetter && !spans.empty() && r.begin > 0 &&
        text[r.begin - 1] == ' ' && runs[i - 1].cls == CharClass::kSpace) {
      std::string_view& prev = spans.back();
      prev.remove_suffix(1);
      if (prev.empty()) spans.pop_back();
      r.begin -= 1;
    }
    spans.push_back(text.substr(r.begin, r.end - r.begin));
  }
  return spans;
}

class Vocab {
 public:
  Vocab() {
    tokens_.reserve(kFirstMergeId);
    for (TokenId b = 0; b < kNumBytes; ++b) {
      tokens_.emplace_back(1, static_cast<char>(b));
    }
    tokens_.emplace_back();  // separator: no bytes
  }

  std::size_t size() const { return tokens_.size(); }
  std::size_t num_merges() const { return merges_.size(); }
  const std::vector<std::pair<TokenId, TokenId>>& merges() const { return merges_; }
  const std::string& bytes_of(TokenId id) const { return tokens_.at(id); }

  // Returns the new token id. The pair must not already be merged and its
  // concatenation must not already be a token.
  TokenId add_merge(TokenId left, TokenId right) {
    if (left >= size() || right >= size() || left == kSeparator ||
        right == kSeparator) {
      throw ValidationError("merge references an invalid token");
    }
    if (ranks_.count(key(left, right))) throw ValidationError("duplicate merge");
    std::string merged = tokens_[left] + tokens_[right];
    if (by_bytes_.count(merged) || merged.size() == 1) {
      throw ValidationError("merge produces an existing token");
    }
    const auto id = static_cast<TokenId>(tokens_.size());
    ranks_.emplace(key(left, right), static_cast<std::uint32_t>(merges_.size()));
    merges_.emplace_back(left, right);
    by_bytes_.emplace(merged, id);
    tokens_.push_back(std::move(merged));
    return id;
  }

  bool has_token_bytes(const std::string& bytes) const {
    return (bytes.size() == 1) || by_bytes_.count(bytes);
  }

  // Rank of the (left, right) merge, or max() when not a merge.
  std::uint32_t rank(TokenId left, TokenId right) const {
    auto it = ranks_.find(key(left, right));
    return it == ranks_.end() ? std::numeric_limits<std::uint32_t>::max()
                              : it->second;
  }

  std::optional<TokenId> id_of(const std::string& bytes) const {
    if (bytes.size() == 1) return static_cast<unsigned char>(bytes[0]);
    auto it = by_bytes_.find(bytes);
    if (it == by_bytes_.end()) return std::nullopt;
    return it->second;
  }

  // The vocabulary after only its first k merges.
  Vocab truncated(std::size_t k) const {
    Vocab v;
    for (std::size_t i = 0; i < std::min(k, merges_.size()); ++i) {
      v.add_merge(merges_[i].first, merges_[i].second);
    }
    return v;
  }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.merges_ == b.merges_;
  }

 private:
  static std::uint64_t key(TokenId l, TokenId r) {
    return (static_cast<std::uint64_t>(l) << 32) | r;
  }

  std::vector<std::string> tokens_;
  std::vector<std::pair<TokenId, TokenId>> merges_;
  std::unordered_map<std::uint64_t, std::uint32_t> ranks_;
  std::unordered_map<std::string, TokenId> by_bytes_;
};

namespace detail {

// Merges every non-overlapping (left, right) occurrence, scanning left to right.
inline void apply_merge(std::vector<TokenId>& syms, TokenId left, TokenId right,
                        TokenId merged) {
  std::size_t w = 0;
  for (std::size_t r = 0; r < syms.size();) {
    if (r + 1 < syms.size() && syms[r] == left && syms[r + 1] == right) {
      syms[w++] = merged;
      r += 2;
    } else {
      syms[w++] = syms[r++];
    }
  }
  syms.resize(w);
}

}  // namespace detail

// Greedy BPE within pretokenized spans. Each round merges the most frequent
// adjacent pair; ties go to the lexicographically smaller (left bytes, right
// bytes). Stops at vocab_size tokens or when no pair occurs twice.
template <class Texts>
Vocab train(const Texts& corpus, std::size_t vocab_size) {
  if (vocab_size < kMinVocabSize) {
    throw ValidationError("vocab_size must be at least " +
                          std::to_string(kMinVocabSize));
  }
  std::unordered_map<std::string, std::uint64_t> span_freq;
  for (const auto& text : corpus) {
    for (std::string_view span : pretokenize(std::string_view(text))) {
      ++span_freq[std::string(span)];
    }
  }
  struct Word {
    std::vector<TokenId> syms;
    std::uint64_t freq;
  };
  std::vector<std::pair<std::string, std::uint64_t>> sorted(span_freq.begin(),
                                                            span_freq.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Word> words;
  words.reserve(sorted.size());
  for (auto& [span, freq] : sorted) {
    Word w{{}, freq};
    for (unsigned char c : span) w.syms.push_back(c);
    if (w.syms.size() > 1) words.push_back(std::move(w));
  }

  Vocab vocab;
  std::unordered_map<std::uint64_t, std::uint64_t> counts;
  while (vocab.size() < vocab_size) {
    counts.clear();
    for (const Word& w : words) {
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
        counts[(static_cast<std::uint64_t>(w.syms[i]) << 32) | w.syms[i + 1]] +=
            w.freq;
      }
    }
    std::uint64_t best_key = 0, best_count = 0;
    for (const auto& [k, c] : counts) {
      if (c < 2 || c < best_count) continue;
      const auto l = static_cast<TokenId>(k >> 32);
      const auto r = static_cast<TokenId>(k & 0xFFFFFFFFu);
      if (vocab.has_token_bytes(vocab.bytes_of(l) + vocab.bytes_of(r))) continue;
      if (c > best_count) {
        best_key = k, best_count = c;
        continue;
      }
      const auto bl = static_cast<TokenId>(best_key >> 32);
      const auto br = static_cast<TokenId>(best_key & 0xFFFFFFFFu);
      const auto lhs = std::tie(vocab.bytes_of(l), vocab.bytes_of(r), l, r);
      const auto rhs = std::tie(vocab.bytes_of(bl), vocab.bytes_of(br), bl, br);
      if (lhs < rhs) best_key = k;
    }
    if (best_count < 2) break;
    const auto l = static_cast<TokenId>(best_key >> 32);
    const auto r = static_cast<TokenId>(best_key & 0xFFFFFFFFu);
    const TokenId merged = vocab.add_merge(l, r);
    for (Word& w : words) detail::apply_merge(w.syms, l, r, merged);
  }
  return vocab;
}

// Applies merges by rank within one span; equivalent to replaying the merge
// list in learned order.
inline void encode_span(const Vocab& vocab, std::string_view span,
                        TokenSequence& out) {
  std::vector<TokenId> syms(span.begin(), span.end());
  for (auto& s : syms) s = static_cast<unsigned char>(s);
  while (syms.size() > 1) {
    std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
    std::size_t at = 0;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const std::uint32_t rk = vocab.rank(syms[i], syms[i + 1]);
      if (rk < best) best = rk, at = i;
    }
    if (best == std::numeric_limits<std::uint32_t>::max()) break;
    const TokenId l = syms[at], r = syms[at + 1];
    detail::apply_merge(syms, l, r, kFirstMergeId + best);
  }
  out.insert(out.end(), syms.begin(), syms.end());
}

inline TokenSequence encode(const Vocab& vocab, std::string_view text) {
  TokenSequence out;
  for (std::string_view span : pretokenize(text)) encode_span(vocab, span, out);
  return out;
}

// Concatenated token bytes, re-encoded with U+FFFD for invalid sequences.
inline std::string decode(const Vocab& vocab, std::span<const TokenId> tokens) {
  std::string bytes;
  for (TokenId t : tokens) {
    if (t >= vocab.size()) {
      throw ValidationError("unknown token id " + std::to_string(t));
    }
    bytes += vocab.bytes_of(t);
  }
  return utf8::sanitize(bytes);
}

inline std::string to_hex(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 15]);
  }
  return out;
}

inline std::optional<std::string> from_hex(std::string_view hex) {
  if (hex.empty() || hex.size() % 2) return std::nullopt;
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nib(hex[i]), lo = nib(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<char>(hi * 16 + lo));
  }
  return out;
}

// "bpe-v1 <vocab_size>" then one "<left hex> <right hex>" line per merge.
inline std::string serialize(const Vocab& vocab) {
  std::string out = "bpe-v1 " + std::to_string(vocab.size()) + "\n";
  for (const auto& [l, r] : vocab.merges()) {
    out += to_hex(vocab.bytes_of(l)) + " " + to_hex(vocab.bytes_of(r)) + "\n";
  }
  return out;
}

inline Vocab parse(std::string_view text) {
  Vocab vocab;
  std::size_t declared = 0;
  bool have_header = false;
  io::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (!have_header) {
      constexpr std::string_view kMagic = "bpe-v1 ";
      if (line.substr(0, kMagic.size()) != kMagic) {
        throw ParseError(lineno, "missing 'bpe-v1' header");
      }
      std::string_view num = line.substr(kMagic.size());
      auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), declared);
      if (ec != std::errc() || p != num.data() + num.size() ||
          declared < kMinVocabSize) {
        throw ParseError(lineno, "bad vocab size");
      }
      have_header = true;
      return;
    }
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos) throw ParseError(lineno, "expected two fields");
    auto l = from_hex(line.substr(0, sp));
    auto r = from_hex(line.substr(sp + 1));
    if (!l || !r) throw ParseError(lineno, "bad hex field");
    auto lid = vocab.id_of(*l);
    auto rid = vocab.id_of(*r);
    if (!lid || !rid) throw ParseError(lineno, "merge references unknown token");
    try {
      vocab.add_merge(*lid, *rid);
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
  });
  if (!have_header) throw ParseError(1, "empty vocab file");
  if (declared != vocab.size()) {
    throw ValidationError("vocab header declares " + std::to_string(declared) +
                          " tokens, file defines " + std::to_string(vocab.size()));
  }
  return vocab;
}

inline std::string hash(const Vocab& vocab) { return io::sha256_hex(serialize(vocab)); }

inline void save(const Vocab& vocab, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize(vocab));
}

inline Vocab load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

// Training stream: SEP doc1 SEP doc2 ... SEP.
template <class Texts>
TokenSequence encode_documents(const Vocab& vocab, const Texts& docs) {
  TokenSequence stream{kSeparator};
  for (const auto& d : docs) {
    TokenSequence t = encode(vocab, std::string_view(d));
    stream.insert(stream.end(), t.begin(), t.end());
    stream.push_back(kSeparator);
  }
  return stream;
}

}  // namespace versewright::bpe

#endif  // VERSEWRIGHT_BPE_HPP_
