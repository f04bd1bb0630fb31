#include "versewright/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace vw = versewright;
namespace lm = versewright::lm;
namespace sampler = versewright::sampler;
using vw::bpe::TokenId;
using vw::bpe::TokenSequence;

namespace {

lm::ModelConfig small_config() {
  lm::ModelConfig c;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_model = 16;
  c.ffn_mult = 4;
  c.vocab_size = 257;
  c.context_len = 32;
  return c;
}

vw::bpe::Vocab byte_vocab() { return vw::bpe::train(std::vector<std::string>{}, 257); }

// Random weights large enough to give peaked, varied next-token distributions.
template <class T>
lm::Model<T> noisy_model(std::uint64_t seed, double scale) {
  auto m = lm::init_model<T>(small_config(), seed);
  std::mt19937_64 gen(seed + 7);
  std::normal_distribution<double> nd(0.0, scale);
  for (auto& v : m.params) v += static_cast<T>(nd(gen));
  return m;
}

std::vector<double> random_logits(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> nd(0.0, 3.0);
  std::vector<double> l(n);
  for (auto& v : l) v = nd(gen);
  return l;
}

}  // namespace

TEST(GenerationConfig, Defaults) {
  const sampler::GenerationConfig c;
  EXPECT_EQ(c.top_k, 40u);
  EXPECT_DOUBLE_EQ(c.temperature, 0.75);
  EXPECT_EQ(c.max_new_tokens, 120u);
  EXPECT_NO_THROW(c.validate());
}

TEST(GenerationConfig, Validation) {
  sampler::GenerationConfig c;
  c.top_k = 0;
  EXPECT_THROW(c.validate(), vw::ValidationError);
  c = {};
  c.temperature = 0;
  EXPECT_THROW(c.validate(), vw::ValidationError);
  c.temperature = 2.5;
  EXPECT_THROW(c.validate(), vw::ValidationError);
  c.temperature = 2.0;
  EXPECT_NO_THROW(c.validate());
  c = {};
  c.max_new_tokens = 0;
  EXPECT_THROW(c.validate(), vw::ValidationError);
}

TEST(GenerationConfig, JsonRoundTrip) {
  sampler::GenerationConfig c;
  c.top_k = 7;
  c.temperature = 1.25;
  c.max_new_tokens = 33;
  c.seed = 99;
  c.prompt = {1, 2, 300};
  const auto back = nlohmann::json(c).get<sampler::GenerationConfig>();
  EXPECT_EQ(back.top_k, 7u);
  EXPECT_DOUBLE_EQ(back.temperature, 1.25);
  EXPECT_EQ(back.max_new_tokens, 33u);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.prompt, c.prompt);
}

TEST(FilterDistribution, TopOneIsOneHot) {
  const std::vector<double> l{0.3, 2.5, -1.0, 2.4};
  EXPECT_EQ(sampler::filter_distribution(l, 1, 0.75),
            (std::vector<double>{0, 1, 0, 0}));
}

TEST(FilterDistribution, EqualLogitsUniform) {
  const std::vector<double> l(4, 1.7);
  for (double t : {0.1, 0.75, 2.0}) {
    for (double p : sampler::filter_distribution(l, 4, t)) EXPECT_NEAR(p, 0.25, 1e-15);
  }
}

TEST(FilterDistribution, KeptPairRatio) {
  const std::vector<double> l{2, 1, 0, -1};
  const auto p = sampler::filter_distribution(l, 2, 1.0);
  const double e = std::exp(1.0);
  EXPECT_NEAR(p[0], e / (e + 1), 1e-12);
  EXPECT_NEAR(p[1], 1 / (e + 1), 1e-12);
  EXPECT_NEAR(p[0], 0.7311, 5e-5);
  EXPECT_NEAR(p[1], 0.2689, 5e-5);
  EXPECT_EQ(p[2], 0.0);
  EXPECT_EQ(p[3], 0.0);
}

TEST(FilterDistribution, TiesBrokenByLowerId) {
  const std::vector<double> l{1, 3, 3, 3, 0};
  const auto p = sampler::filter_distribution(l, 2, 1.0);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
  EXPECT_NEAR(p[2], 0.5, 1e-15);
  EXPECT_EQ(p[3], 0.0);
}

TEST(FilterDistribution, TopKLargerThanVocab) {
  const std::vector<double> l{0.0, std::log(3.0)};
  const auto p = sampler::filter_distribution(l, 40, 1.0);
  EXPECT_NEAR(p[0], 0.25, 1e-12);
  EXPECT_NEAR(p[1], 0.75, 1e-12);
}

TEST(FilterDistribution, PropertiesOnRandomLogits) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen() % 300;
    const std::size_t k = 1 + gen() % 60;
    const double t = 0.05 + (gen() % 1000) / 1000.0 * 1.95;
    const auto l = random_logits(gen, n);
    const auto p = sampler::filter_distribution(l, k, t);

    double sum = 0;
    std::size_t nonzero = 0;
    for (double v : p) {
      sum += v;
      nonzero += v > 0;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_LE(nonzero, std::min(k, n));

    // Support is exactly the k highest logits.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return l[a] > l[b]; });
    for (std::size_t r = 0; r < n; ++r) {
      if (r < std::min(k, n)) {
        EXPECT_GT(p[order[r]], 0.0);
      } else {
        EXPECT_EQ(p[order[r]], 0.0);
      }
    }

    // Shift invariance.
    auto shifted = l;
    const double c = (gen() % 2001) / 10.0 - 100.0;
    for (auto& v : shifted) v += c;
    const auto q = sampler::filter_distribution(shifted, k, t);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(p[i], q[i], 1e-9);

    // Lower temperature never lowers the argmax probability.
    const auto cold = sampler::filter_distribution(l, k, t * 0.5);
    EXPECT_GE(cold[order[0]], p[order[0]] - 1e-15);
  }
}

TEST(SampleFrom, MonteCarloMatchesDistribution) {
  const auto model = noisy_model<float>(3, 0.2);
  const TokenSequence prefix{vw::bpe::kSeparator, 'T', 'h', 'e', ' '};
  sampler::GenerationConfig cfg;
  const auto p = sampler::next_token_distribution<float>(model, prefix, cfg);

  constexpr int kDraws = 100000;
  std::vector<int> counts(p.size(), 0);
  vw::Rng rng(2024);
  for (int i = 0; i < kDraws; ++i) ++counts[sampler::sample_from(p, rng)];

  int support = 0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t] == 0) {
      EXPECT_EQ(counts[t], 0) << "token " << t;
      continue;
    }
    ++support;
    const double f = static_cast<double>(counts[t]) / kDraws;
    const double se = std::sqrt(p[t] * (1 - p[t]) / kDraws);
    EXPECT_LE(std::abs(f - p[t]), 3 * se) << "token " << t << " p=" << p[t];
  }
  EXPECT_EQ(support, 40);
}

TEST(NextTokenDistribution, UsesLastContextWindow) {
  const auto model = noisy_model<double>(4, 0.1);
  TokenSequence longp;
  for (int i = 0; i < 50; ++i) longp.push_back(static_cast<TokenId>('a' + i % 26));
  const TokenSequence tail(longp.end() - 32, longp.end());
  sampler::GenerationConfig cfg;
  EXPECT_EQ(sampler::next_token_distribution<double>(model, longp, cfg),
            sampler::next_token_distribution<double>(model, tail, cfg));
  EXPECT_THROW(sampler::next_token_distribution<double>(model, TokenSequence{}, cfg),
               vw::ValidationError);
}

TEST(Generate, DeterministicForFixedSeed) {
  const auto model = noisy_model<float>(5, 0.2);
  const auto vocab = byte_vocab();
  sampler::GenerationConfig cfg;
  cfg.seed = 11;
  cfg.max_new_tokens = 40;
  const auto a = sampler::generate<float>(model, vocab, cfg);
  const auto b = sampler::generate<float>(model, vocab, cfg);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.text, b.text);
  cfg.seed = 12;
  EXPECT_NE(sampler::generate<float>(model, vocab, cfg).tokens, a.tokens);
}

TEST(Generate, EveryTokenInStepTopK) {
  const auto model = noisy_model<double>(6, 0.2);
  const auto vocab = byte_vocab();
  for (std::size_t k : {1u, 3u, 40u}) {
    sampler::GenerationConfig cfg;
    cfg.top_k = k;
    cfg.seed = 100 + k;
    cfg.max_new_tokens = 30;
    const auto g = sampler::generate<double>(model, vocab, cfg);
    TokenSequence ctx{vw::bpe::kSeparator};
    for (TokenId t : g.tokens) {
      const auto l = lm::forward_last<double>(model, sampler::context_window(ctx, 32));
      const auto order = sampler::rank_tokens(l);
      const auto rank = std::find(order.begin(), order.end(), t) - order.begin();
      EXPECT_LT(static_cast<std::size_t>(rank), k);
      ctx.push_back(t);
    }
    EXPECT_LE(g.tokens.size(), 30u);
  }
}

TEST(Generate, NearGreedyIndependentOfTopK) {
  const auto model = noisy_model<float>(8, 0.3);
  const auto vocab = byte_vocab();
  sampler::GenerationConfig cfg;
  cfg.temperature = 0.01;
  cfg.max_new_tokens = 40;
  cfg.seed = 3;
  cfg.top_k = 1;
  const auto greedy = sampler::generate<float>(model, vocab, cfg);
  cfg.top_k = 40;
  const auto cold = sampler::generate<float>(model, vocab, cfg);
  EXPECT_EQ(greedy.tokens, cold.tokens);
}

TEST(Generate, StopsOnSeparator) {
  const auto c = small_config();
  auto model = lm::init_model<double>(c, 1);
  // Zero final gain makes the final hidden state equal lnf_b; aligning the
  // separator's tied embedding with it makes the separator the argmax.
  const lm::ParamLayout layout(c);
  for (std::size_t j = 0; j < c.d_model; ++j) {
    const double b = (j % 2 == 0) ? 1.0 : -1.0;
    model.params[layout.lnf_g + j] = 0.0;
    model.params[layout.lnf_b + j] = b;
    model.params[layout.wte + vw::bpe::kSeparator * c.d_model + j] = b;
  }
  sampler::GenerationConfig cfg;
  cfg.top_k = 1;
  const auto g = sampler::generate<double>(model, byte_vocab(), cfg);
  EXPECT_TRUE(g.hit_separator);
  EXPECT_TRUE(g.tokens.empty());
  EXPECT_EQ(g.text, "");
}

TEST(CleanText, Examples) {
  EXPECT_EQ(sampler::clean_text("line one.\nline two,\nand then the"), "line one.\nline two,");
  EXPECT_EQ(sampler::clean_text("A song of joy,"), "A song of joy,");
  EXPECT_EQ(sampler::clean_text("no punctuation here at al"), "no punctuation here at");
}

TEST(CleanText, Rules) {
  EXPECT_EQ(sampler::clean_text("dark night \xE2\x80\x94\nand the"), "dark night \xE2\x80\x94");
  EXPECT_EQ(sampler::clean_text("first\nsecond\nthir"), "first\nsecond");
  EXPECT_EQ(sampler::clean_text("ends here!   \n  "), "ends here!");
  EXPECT_EQ(sampler::clean_text("what?  \nnext line"), "what?");
  EXPECT_EQ(sampler::clean_text(""), "");
  EXPECT_EQ(sampler::clean_text("word"), "word");
  EXPECT_EQ(sampler::clean_text("   "), "");
}

TEST(CleanText, Properties) {
  std::mt19937_64 gen(17);
  const std::string alphabet = "ab .,!?;:\n";
  for (int trial = 0; trial < 3000; ++trial) {
    std::string raw;
    const std::size_t n = gen() % 40;
    for (std::size_t i = 0; i < n; ++i) raw += alphabet[gen() % alphabet.size()];
    const std::string once = sampler::clean_text(raw);
    EXPECT_LE(once.size(), raw.size());
    EXPECT_EQ(raw.compare(0, once.size(), once), 0) << raw;
    if (!once.empty() && sampler::detail::is_terminal_mark(once)) {
      EXPECT_EQ(sampler::clean_text(once), once) << raw;
    }
  }
}

TEST(GeneratePool, DeterministicWithProvenance) {
  lm::Checkpoint<float> ck{noisy_model<float>(9, 0.2), {}, "vh"};
  ck.stage_chain.push_back({"base", "poetry", 10, 3.2});
  ck.stage_chain.push_back({"emotion", "joy", 5, 2.9});
  const auto vocab = byte_vocab();
  sampler::GenerationConfig cfg;
  cfg.max_new_tokens = 20;
  const auto a = sampler::generate_pool<float>(ck, vocab, cfg, 4, 77);
  const auto b = sampler::generate_pool<float>(ck, vocab, cfg, 4, 77);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(sampler::provenance_jsonl(a), sampler::provenance_jsonl(b));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].raw, b[i].raw);
    EXPECT_EQ(a[i].index, i);
    EXPECT_EQ(a[i].seed, vw::derive_seed(77, i));
    EXPECT_EQ(a[i].cleaned, sampler::clean_text(a[i].raw));
    EXPECT_EQ(a[i].stage_chain, ck.stage_chain);
    // Each poem equals a standalone generation with its derived seed.
    sampler::GenerationConfig c = cfg;
    c.seed = a[i].seed;
    EXPECT_EQ(sampler::generate<float>(ck.model, vocab, c).text, a[i].raw);
  }
  std::istringstream lines(sampler::provenance_jsonl(a));
  std::string line;
  std::size_t i = 0;
  for (; std::getline(lines, line); ++i) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["id"], sampler::poem_id(i));
    EXPECT_EQ(j["seed"].get<std::uint64_t>(), a[i].seed);
    EXPECT_EQ(j["stage_chain"].size(), 2u);
    EXPECT_EQ(j["config"]["top_k"], 40);
  }
  EXPECT_EQ(i, 4u);
  EXPECT_EQ(sampler::poem_id(3), "poem_00003");
  EXPECT_THROW(sampler::generate_pool<float>(ck, vocab, cfg, 0, 1), vw::ValidationError);
}
