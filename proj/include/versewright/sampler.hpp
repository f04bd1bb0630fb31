#ifndef VERSEWRIGHT_SAMPLER_HPP_
#define VERSEWRIGHT_SAMPLER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "versewright/bpe.hpp"
#include "versewright/errors.hpp"
#include "versewright/lm.hpp"
#include "versewright/rng.hpp"

namespace versewright::sampler {

using bpe::TokenId;
using bpe::TokenSequence;

struct GenerationConfig {
  std::size_t top_k = 40;
  double temperature = 0.75;
  std::size_t max_new_tokens = 120;
  std::uint64_t seed = 0;
  TokenSequence prompt;  // empty: unconditional start from the separator

  void validate() const {
    if (top_k < 1) throw ValidationError("top_k must be >= 1");
    if (!(temperature > 0 && temperature <= 2)) {
      throw ValidationError("temperature must be in (0, 2]");
    }
    if (max_new_tokens < 1) throw ValidationError("max_new_tokens must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const GenerationConfig& c) {
  j = nlohmann::json{{"top_k", c.top_k},
                     {"temperature", c.temperature},
                     {"max_new_tokens", c.max_new_tokens},
                     {"seed", c.seed},
                     {"prompt", c.prompt}};
}

inline void from_json(const nlohmann::json& j, GenerationConfig& c) {
  GenerationConfig d;
  c.top_k = j.value("top_k", d.top_k);
  c.temperature = j.value("temperature", d.temperature);
  c.max_new_tokens = j.value("max_new_tokens", d.max_new_tokens);
  c.seed = j.value("seed", d.seed);
  c.prompt = j.value("prompt", d.prompt);
}

// Token ids ordered by descending logit, ties by ascending id.
inline std::vector<TokenId> rank_tokens(std::span<const double> logits) {
  std::vector<TokenId> order(logits.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return logits[a] > logits[b];
  });
  return order;
}

// Temperature-scaled softmax restricted to the top_k ranked logits; every
// other entry is exactly zero.
inline std::vector<double> filter_distribution(std::span<const double> logits,
                                               std::size_t top_k,
                                               double temperature) {
  std::vector<double> probs(logits.size(), 0.0);
  if (logits.empty()) return probs;
  const std::vector<TokenId> order = rank_tokens(logits);
  const std::size_t k = std::min(top_k, order.size());
  const double mx = logits[order[0]] / temperature;
  double sum = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = std::exp(logits[order[i]] / temperature - mx);
    probs[order[i]] = e;
    sum += e;
  }
  for (std::size_t i = 0; i < k; ++i) probs[order[i]] /= sum;
  return probs;
}

// The model context for a prefix: the trailing context_len tokens.
inline std::span<const TokenId> context_window(std::span<const TokenId> prefix,
                                               std::size_t context_len) {
  return prefix.size() > context_len ? prefix.last(context_len) : prefix;
}

template <class T>
std::vector<double> next_token_distribution(const lm::Model<T>& model,
                                            std::span<const TokenId> prefix,
                                            const GenerationConfig& cfg) {
  if (prefix.empty()) throw ValidationError("empty prefix");
  const std::vector<double> logits =
      lm::forward_last<T>(model, context_window(prefix, model.config.context_len));
  return filter_distribution(logits, cfg.top_k, cfg.temperature);
}

// Inverse-CDF draw over token ids. Falls back to the last nonzero entry when
// rounding leaves the cumulative sum short of u.
inline TokenId sample_from(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last);
}

struct Generation {
  TokenSequence tokens;  // new tokens only, excluding a final separator
  std::string text;
  bool hit_separator = false;
};

// Samples up to max_new_tokens, stopping early on the separator.
template <class T>
Generation generate(const lm::Model<T>& model, const bpe::Vocab& vocab,
                    const GenerationConfig& cfg) {
  cfg.validate();
  TokenSequence context{bpe::kSeparator};
  context.insert(context.end(), cfg.prompt.begin(), cfg.prompt.end());
  Rng rng(cfg.seed);
  Generation out;
  for (std::size_t step = 0; step < cfg.max_new_tokens; ++step) {
    const std::vector<double> probs = next_token_distribution<T>(model, context, cfg);
    const TokenId tok = sample_from(probs, rng);
    VW_CHECK(probs[tok] > 0, "sampled a token outside the top-k set");
    if (tok == bpe::kSeparator) {
      out.hit_separator = true;
      break;
    }
    out.tokens.push_back(tok);
    context.push_back(tok);
  }
  if (out.tokens.size() > 0) {
    out.text = bpe::decode(vocab, out.tokens);
  }
  return out;
}

namespace detail {

inline bool is_terminal_mark(std::string_view line) {
  std::size_t end = line.size();
  while (end > 0 && (line[end - 1] == ' ' || line[end - 1] == '\t' ||
                     line[end - 1] == '\r')) {
    --end;
  }
  if (end == 0) return false;
  const char c = line[end - 1];
  if (c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':') return true;
  // U+2014 EM DASH
  return end >= 3 && line.substr(end - 3, 3) == "\xE2\x80\x94";
}

inline std::string_view rstrip(std::string_view s) {
  while (!s.empty()) {
    const char c = s.back();
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
      s.remove_suffix(1);
    } else {
      break;
    }
  }
  return s;
}

}  // namespace detail

// End-of-poem cleanup, in order of preference:
//   1. cut after the last line whose final non-blank character is one of
//      . ! ? , ; : or an em dash;
//   2. otherwise cut after the last newline-terminated line;
//   3. otherwise drop the trailing partial word (cut at the last whitespace).
// Trailing whitespace is always removed. The result is a prefix of `raw`.
inline std::string clean_text(std::string_view raw) {
  std::size_t start = 0;
  std::size_t keep = std::string_view::npos;
  while (start <= raw.size()) {
    std::size_t nl = raw.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? raw.size() : nl;
    if (detail::is_terminal_mark(raw.substr(start, end - start))) keep = end;
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (keep != std::string_view::npos) {
    return std::string(detail::rstrip(raw.substr(0, keep)));
  }
  if (const std::size_t nl = raw.rfind('\n'); nl != std::string_view::npos) {
    std::string_view head = detail::rstrip(raw.substr(0, nl));
    if (!head.empty()) return std::string(head);
  }
  std::string_view trimmed = detail::rstrip(raw);
  const std::size_t ws = trimmed.find_last_of(" \t\n\r\v\f");
  if (ws == std::string_view::npos) return std::string(trimmed);
  return std::string(detail::rstrip(trimmed.substr(0, ws)));
}

struct Poem {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string raw;
  std::string cleaned;
  GenerationConfig config;
  std::vector<lm::Stage> stage_chain;
};

// n independent generations with per-poem seeds derive_seed(seed, i).
template <class T>
std::vector<Poem> generate_pool(const lm::Checkpoint<T>& ckpt, const bpe::Vocab& vocab,
                                const GenerationConfig& cfg, std::size_t n,
                                std::uint64_t seed) {
  if (n < 1) throw ValidationError("pool size must be >= 1");
  std::vector<Poem> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    GenerationConfig c = cfg;
    c.seed = derive_seed(seed, i);
    Generation g = generate<T>(ckpt.model, vocab, c);
    Poem p;
    p.index = i;
    p.seed = c.seed;
    p.raw = std::move(g.text);
    p.cleaned = clean_text(p.raw);
    p.config = c;
    p.stage_chain = ckpt.stage_chain;
    pool.push_back(std::move(p));
  }
  return pool;
}

inline std::string poem_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "poem_%05zu", index);
  return buf;
}

// One JSON object per line: id, seed, config, stage_chain.
inline std::string provenance_jsonl(const std::vector<Poem>& pool) {
  std::string out;
  for (const Poem& p : pool) {
    nlohmann::json j{{"id", poem_id(p.index)},
                     {"seed", p.seed},
                     {"config", p.config},
                     {"stage_chain", p.stage_chain}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace versewright::sampler

#endif  // VERSEWRIGHT_SAMPLER_HPP_
