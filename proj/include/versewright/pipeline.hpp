#ifndef VERSEWRIGHT_PIPELINE_HPP_
#define VERSEWRIGHT_PIPELINE_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "versewright/bpe.hpp"
#include "versewright/corpus.hpp"
#include "versewright/emotion.hpp"
#include "versewright/errors.hpp"
#include "versewright/io.hpp"
#include "versewright/lm.hpp"
#include "versewright/metrics.hpp"
#include "versewright/review.hpp"
#include "versewright/rng.hpp"
#include "versewright/sampler.hpp"

namespace versewright::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// Input locations, relative to the data root unless absolute.
struct Paths {
  std::string emotion_lexicon = "lexicon/emolex_mini.tsv";
  std::string psych_lexicon = "lexicon/psych_mini.csv";
  std::string poetry_corpus = "corpus/poetry";
  std::string dream_corpus = "corpus/dreams";
  std::string reference_stats = "reference_stats.json";
};

// Full-size defaults: 12,000 steps at lr 1e-4, top-k 40 at
// temperature 0.75, a pool of 1,000 poems, the top 20 by emotion score and 4
// of those per emotion for review by 10 reviewers.
struct PipelineConfig {
  Paths paths;
  std::size_t bpe_vocab_size = bpe::kDefaultVocabSize;
  lm::ModelConfig model;
  lm::TrainConfig train;
  sampler::GenerationConfig generation;
  std::size_t pool_size = 1000;
  std::size_t top_n = 20;
  std::size_t review_per_emotion = 4;
  std::size_t reviewers = 10;
  std::uint64_t seed = 0;

  void validate() const {
    model.validate();
    train.validate();
    generation.validate();
    if (bpe_vocab_size < bpe::kMinVocabSize) {
      throw ValidationError("bpe_vocab_size must be >= 257");
    }
    if (review_per_emotion < 1) throw ValidationError("review_per_emotion must be >= 1");
    if (top_n < review_per_emotion) {
      throw ValidationError("top_n must be >= review_per_emotion");
    }
    if (pool_size < top_n) throw ValidationError("pool_size must be >= top_n");
    if (reviewers < 1) throw ValidationError("reviewers must be >= 1");
  }
};

inline void to_json(json& j, const Paths& p) {
  j = json{{"emotion_lexicon", p.emotion_lexicon}, {"psych_lexicon", p.psych_lexicon},
           {"poetry_corpus", p.poetry_corpus},     {"dream_corpus", p.dream_corpus},
           {"reference_stats", p.reference_stats}};
}

inline void from_json(const json& j, Paths& p) {
  Paths d;
  p.emotion_lexicon = j.value("emotion_lexicon", d.emotion_lexicon);
  p.psych_lexicon = j.value("psych_lexicon", d.psych_lexicon);
  p.poetry_corpus = j.value("poetry_corpus", d.poetry_corpus);
  p.dream_corpus = j.value("dream_corpus", d.dream_corpus);
  p.reference_stats = j.value("reference_stats", d.reference_stats);
}

inline void to_json(json& j, const PipelineConfig& c) {
  json gen = c.generation;
  gen.erase("seed");
  gen.erase("prompt");
  json train = c.train;
  train.erase("seed");
  j = json{{"paths", c.paths},
           {"bpe_vocab_size", c.bpe_vocab_size},
           {"model", c.model},
           {"train", train},
           {"generation", gen},
           {"pool_size", c.pool_size},
           {"top_n", c.top_n},
           {"review_per_emotion", c.review_per_emotion},
           {"reviewers", c.reviewers},
           {"seed", c.seed}};
}

inline void from_json(const json& j, PipelineConfig& c) {
  PipelineConfig d;
  c.paths = j.value("paths", d.paths);
  c.bpe_vocab_size = j.value("bpe_vocab_size", d.bpe_vocab_size);
  c.model = j.value("model", d.model);
  c.train = j.value("train", d.train);
  c.generation = j.value("generation", d.generation);
  c.pool_size = j.value("pool_size", d.pool_size);
  c.top_n = j.value("top_n", d.top_n);
  c.review_per_emotion = j.value("review_per_emotion", d.review_per_emotion);
  c.reviewers = j.value("reviewers", d.reviewers);
  c.seed = j.value("seed", d.seed);
}

inline PipelineConfig load_config(const fs::path& path) {
  try {
    return json::parse(io::read_file(path)).get<PipelineConfig>();
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// Step count, pool size and top-N shrink by `scale`; the per-emotion review
// count, model shape and sampling settings do not.
inline PipelineConfig scaled(PipelineConfig c, double scale) {
  if (!(scale > 0 && scale <= 1)) throw ValidationError("scale must be in (0, 1]");
  auto shrink = [&](std::size_t v, std::size_t floor) {
    const auto s = static_cast<std::size_t>(std::llround(static_cast<double>(v) * scale));
    return std::max(s, floor);
  };
  c.train.steps = shrink(c.train.steps, 1);
  c.top_n = shrink(c.top_n, c.review_per_emotion);
  c.pool_size = shrink(c.pool_size, c.top_n);
  return c;
}

inline fs::path resolve(const fs::path& root, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : root / path;
}

inline void require_inputs(const PipelineConfig& c, const fs::path& root) {
  for (const auto& p : {c.paths.emotion_lexicon, c.paths.psych_lexicon,
                        c.paths.poetry_corpus, c.paths.reference_stats}) {
    if (!fs::exists(resolve(root, p))) {
      throw IoError("missing input " + resolve(root, p).string());
    }
  }
}

// ---------------------------------------------------------------------------
// Artifact formats

inline void write_pool(const std::vector<sampler::Poem>& pool, const fs::path& dir) {
  io::ensure_dir(dir);
  for (const auto& p : pool) {
    io::write_file_atomic(dir / (sampler::poem_id(p.index) + ".txt"), p.cleaned + "\n");
  }
  std::string raw;
  for (const auto& p : pool) {
    raw += json{{"id", sampler::poem_id(p.index)}, {"raw", p.raw}}.dump() + "\n";
  }
  io::write_file_atomic(dir / "provenance.jsonl", sampler::provenance_jsonl(pool));
  io::write_file_atomic(dir / "raw.jsonl", raw);
}

struct PoolEntry {
  std::string id;
  std::string text;
};

// Poem files of a pool directory in id order, trailing newline removed.
inline std::vector<PoolEntry> read_pool(const fs::path& dir) {
  std::vector<PoolEntry> out;
  for (auto& d : ingest_corpus(dir)) {
    std::string body = std::move(d.body);
    if (!body.empty() && body.back() == '\n') body.pop_back();
    out.push_back({std::move(d.id), std::move(body)});
  }
  if (out.empty()) throw ValidationError("no poems in " + dir.string());
  return out;
}

// One JSON object per line: rank, id, score, text.
inline std::string ranked_jsonl(const RankedPool& ranked, const std::vector<PoolEntry>& pool) {
  std::string out;
  for (std::size_t r = 0; r < ranked.poems.size(); ++r) {
    const auto& p = ranked.poems[r];
    out += json{{"rank", r + 1},
                {"id", pool.at(p.index).id},
                {"emotion", std::string(name_of(ranked.target))},
                {"score", p.score},
                {"text", p.text}}
               .dump() +
           "\n";
  }
  return out;
}

struct RankedRecord {
  std::string id;
  std::string emotion;
  std::uint64_t score = 0;
  std::string text;
};

inline std::vector<RankedRecord> parse_ranked(std::string_view text) {
  std::vector<RankedRecord> out;
  io::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    try {
      const json j = json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("emotion").get<std::string>(),
                     j.at("score").get<std::uint64_t>(), j.at("text").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  });
  return out;
}

inline std::string records_jsonl(const std::vector<RankedRecord>& recs) {
  std::string out;
  for (const auto& r : recs) {
    out += json{{"id", r.id}, {"emotion", r.emotion}, {"score", r.score}, {"text", r.text}}
               .dump() +
           "\n";
  }
  return out;
}

// Seeded uniform sample of n records, via select_for_review.
inline std::vector<RankedRecord> select_records(const std::vector<RankedRecord>& recs,
                                                std::size_t n, std::uint64_t seed) {
  RankedPool pool;
  for (std::size_t i = 0; i < recs.size(); ++i) pool.poems.push_back({i, recs[i].text, 0});
  std::vector<RankedRecord> out;
  for (const auto& p : select_for_review(pool, n, seed)) out.push_back(recs[p.index]);
  return out;
}

// ---------------------------------------------------------------------------
// Hash manifest

using Manifest = std::map<std::string, std::string>;  // relative path -> sha256

inline constexpr std::string_view kManifestName = "manifest.json";

inline Manifest hash_tree(const fs::path& root) {
  Manifest m;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).generic_string();
    if (rel == kManifestName) continue;
    m[rel] = io::sha256_hex(io::read_file(e.path()));
  }
  return m;
}

inline std::string manifest_json(const Manifest& m) {
  json files = json::object();
  for (const auto& [k, v] : m) files[k] = v;
  return json{{"version", 1}, {"files", files}}.dump(2) + "\n";
}

inline Manifest read_manifest(const fs::path& path) {
  try {
    const json j = json::parse(io::read_file(path));
    Manifest m;
    for (const auto& [k, v] : j.at("files").items()) m[k] = v.get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// Paths whose hashes differ, or that exist on one side only.
inline std::vector<std::string> manifest_diff(const Manifest& a, const Manifest& b) {
  std::vector<std::string> out;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end() || it->second != v) out.push_back(k);
  }
  for (const auto& [k, _] : b) {
    if (!a.count(k)) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end run

using Log = std::function<void(const std::string&)>;

struct RunResult {
  Manifest manifest;
  std::optional<std::vector<std::string>> changed_since_previous;
};

namespace detail {

// Seed streams for the stochastic steps of a run.
enum SeedStream : std::uint64_t {
  kInitSeed = 0,
  kBaseTrainSeed = 1,
  kFinetuneSeed = 100,
  kPoolSeed = 200,
  kSelectSeed = 300,
};

inline std::vector<std::string> bodies(const std::vector<Document>& docs) {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.body);
  return out;
}

template <class T>
void run_models(const PipelineConfig& cfg, const fs::path& stage,
                const bpe::Vocab& vocab, const std::vector<Document>& poetry,
                const EmotionLexicon& lex, json& campaign_items, const Log& log) {
  const std::string vocab_hash = bpe::hash(vocab);
  lm::ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();

  lm::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, kBaseTrainSeed);
  lm::Checkpoint<T> base{lm::init_model<T>(mc, derive_seed(cfg.seed, kInitSeed)), {}, vocab_hash};
  const bpe::TokenSequence stream = bpe::encode_documents(vocab, bodies(poetry));
  log("train base: " + std::to_string(tc.steps) + " steps on " +
      std::to_string(stream.size()) + " tokens");
  const lm::TrainResult r = lm::train<T>(base.model, stream, tc);
  base.stage_chain.push_back({"base", "poetry", tc.steps, lm::final_mean_loss(r.losses)});
  lm::save_checkpoint(base, stage / "checkpoints" / "base.vwckpt");

  for (Emotion e : kAllEmotions) {
    const std::string name(name_of(e));
    const fs::path dir = stage / "split" / name;
    std::vector<Document> docs;
    if (fs::is_directory(dir)) docs = ingest_corpus(dir);
    if (docs.empty()) {
      log(name + ": no labelled documents, skipped");
      continue;
    }
    const std::uint64_t k = index_of(e);
    lm::TrainConfig ft = cfg.train;
    ft.seed = derive_seed(cfg.seed, kFinetuneSeed + k);
    const bpe::TokenSequence es = bpe::encode_documents(vocab, bodies(docs));
    log(name + ": finetune " + std::to_string(ft.steps) + " steps on " +
        std::to_string(es.size()) + " tokens");
    const auto ck = lm::finetune<T>(base, es, ft, name, "poetry/" + name, vocab_hash);
    lm::save_checkpoint(ck, stage / "checkpoints" / (name + ".vwckpt"));

    const auto pool = sampler::generate_pool<T>(ck, vocab, cfg.generation, cfg.pool_size,
                                                derive_seed(cfg.seed, kPoolSeed + k));
    write_pool(pool, stage / "pools" / name);

    std::vector<std::string> texts;
    for (const auto& p : pool) texts.push_back(p.cleaned);
    std::vector<PoolEntry> entries;
    for (const auto& p : pool) entries.push_back({sampler::poem_id(p.index), p.cleaned});
    const RankedPool ranked = rank_generated(texts, lex, e, cfg.top_n);
    const std::string ranked_text = ranked_jsonl(ranked, entries);
    io::write_file_atomic(stage / "ranked" / (name + ".jsonl"), ranked_text);

    const auto chosen = select_records(parse_ranked(ranked_text), cfg.review_per_emotion,
                                       derive_seed(cfg.seed, kSelectSeed + k));
    io::write_file_atomic(stage / "selected" / (name + ".jsonl"), records_jsonl(chosen));
    for (const auto& rec : chosen) {
      campaign_items.push_back({{"id", name + "/" + rec.id}, {"text", rec.text}, {"target", name}});
    }
    log(name + ": pool " + std::to_string(pool.size()) + ", top " +
        std::to_string(ranked.poems.size()) + ", selected " + std::to_string(chosen.size()));
  }
}

}  // namespace detail

// split -> train-bpe -> train base -> finetune per emotion -> generate pool
// -> rank top-N -> select -> create campaign, then metrics over the selected
// poems and a hash manifest. Outputs are built in a staging directory that
// replaces `out` on success; an existing `out` must be an earlier run.
inline RunResult run_pipeline(const PipelineConfig& cfg, const fs::path& root,
                              const fs::path& out, const Log& log = [](const std::string&) {}) {
  cfg.validate();
  require_inputs(cfg, root);
  std::optional<Manifest> previous;
  if (fs::exists(out)) {
    if (!fs::exists(out / kManifestName)) {
      if (!fs::is_directory(out) || !fs::is_empty(out)) {
        throw IoError(out.string() + " exists and is not a pipeline output");
      }
    } else {
      previous = read_manifest(out / kManifestName);
    }
  }
  fs::path stage = out;
  stage += ".staging";
  fs::remove_all(stage);
  io::ensure_dir(stage);

  io::write_file_atomic(stage / "config.json", json(cfg).dump(2) + "\n");

  const EmotionLexicon lex = load_emotion_lexicon_file(resolve(root, cfg.paths.emotion_lexicon));
  const std::vector<Document> poetry = ingest_corpus(resolve(root, cfg.paths.poetry_corpus));
  if (poetry.empty()) throw ValidationError("poetry corpus is empty");
  const SplitReport split = split_corpus(poetry, lex, stage / "split");
  log("split: " + std::to_string(split.total()) + " documents, " +
      std::to_string(split.unlabeled) + " unlabeled");

  const bpe::Vocab vocab = bpe::train(detail::bodies(poetry), cfg.bpe_vocab_size);
  bpe::save(vocab, stage / "tokenizer" / "vocab.bpe");
  log("train-bpe: " + std::to_string(vocab.size()) + " tokens");

  json items = json::array();
  if (cfg.model.precision == lm::Precision::kFloat64) {
    detail::run_models<double>(cfg, stage, vocab, poetry, lex, items, log);
  } else {
    detail::run_models<float>(cfg, stage, vocab, poetry, lex, items, log);
  }
  if (items.empty()) throw ValidationError("no emotion produced any poems");

  json reviewers = json::array();
  for (std::size_t r = 1; r <= cfg.reviewers; ++r) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "reviewer%02zu", r);
    reviewers.push_back(buf);
  }
  const json spec{{"id", "emotion-review"}, {"kind", "emotion"}, {"items", items},
                  {"reviewers", reviewers}};
  {
    review::Store store(stage / "campaign" / "events.jsonl");
    store.create_campaign(spec);
  }
  io::write_file_atomic(stage / "campaign" / "campaign.json", spec.dump(2) + "\n");

  const PsychLexicon plex = load_psych_lexicon_file(resolve(root, cfg.paths.psych_lexicon));
  const auto ref = metrics::load_reference(resolve(root, cfg.paths.reference_stats));
  std::vector<metrics::NamedText> texts;
  for (const auto& it : items) {
    texts.push_back({it["id"].get<std::string>(), it["text"].get<std::string>()});
  }
  // Cleaned poems can be empty; metrics are reported for poems with words.
  std::vector<metrics::NamedText> scorable;
  for (auto& t : texts) {
    if (!normalize_tokens(t.text).empty()) scorable.push_back(std::move(t));
  }
  if (!scorable.empty()) {
    io::write_file_atomic(stage / "metrics" / "selected.tsv",
                          metrics::to_tsv(metrics::report(scorable, plex, ref)));
  }

  RunResult result;
  result.manifest = hash_tree(stage);
  io::write_file_atomic(stage / kManifestName, manifest_json(result.manifest));
  if (previous) result.changed_since_previous = manifest_diff(*previous, result.manifest);

  fs::remove_all(out);
  fs::rename(stage, out);
  return result;
}

}  // namespace versewright::pipeline

#endif  // VERSEWRIGHT_PIPELINE_HPP_
