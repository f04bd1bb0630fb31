// versewright: command-line front end for every module plus the end-to-end
// pipeline. Exit codes: 0 success, 1 usage, 2 validation, 3 I/O, 4 internal.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "versewright/bpe.hpp"
#include "versewright/corpus.hpp"
#include "versewright/emotion.hpp"
#include "versewright/errors.hpp"
#include "versewright/io.hpp"
#include "versewright/lm.hpp"
#include "versewright/metrics.hpp"
#include "versewright/pipeline.hpp"
#include "versewright/review.hpp"
#include "versewright/review_server.hpp"
#include "versewright/sampler.hpp"

namespace fs = std::filesystem;
namespace vw = versewright;
namespace lm = versewright::lm;
namespace pl = versewright::pipeline;
using nlohmann::json;

#ifndef VW_DEFAULT_DATA_DIR
#define VW_DEFAULT_DATA_DIR "data"
#endif

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kIo = 3, kInternal = 4 };

struct Global {
  std::string data;
  bool quiet = false;

  fs::path root() const {
    if (!data.empty()) return data;
    if (const char* env = std::getenv("VERSEWRIGHT_DATA"); env && *env) return env;
    return VW_DEFAULT_DATA_DIR;
  }
  fs::path in_root(const std::string& given, const std::string& fallback) const {
    return given.empty() ? root() / fallback : fs::path(given);
  }
  void note(const std::string& msg) const {
    if (!quiet) std::cerr << msg << "\n";
  }
};

vw::Emotion emotion_arg(const std::string& s) {
  auto e = vw::parse_emotion(s);
  if (!e) throw vw::ValidationError("unknown emotion '" + s + "'");
  return *e;
}

std::vector<std::string> bodies(const std::vector<vw::Document>& docs) {
  std::vector<std::string> out;
  for (const auto& d : docs) out.push_back(d.body);
  return out;
}

// Model and training flags shared by train and finetune. Unset flags keep the
// config (or built-in) defaults.
struct TrainFlags {
  std::optional<std::size_t> steps, batch, layers, heads, d_model, context;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::string precision;

  void add(CLI::App* app, bool model_flags) {
    app->add_option("--steps", steps, "Optimizer steps (default 12000)");
    app->add_option("--lr", lr, "Learning rate (default 1e-4)");
    app->add_option("--batch-size", batch, "Windows per step (default 4)");
    app->add_option("--seed", seed, "Sampling seed for training windows")->required();
    if (model_flags) {
      app->add_option("--layers", layers, "Transformer blocks (default 4)");
      app->add_option("--heads", heads, "Attention heads (default 4)");
      app->add_option("--d-model", d_model, "Model width (default 128)");
      app->add_option("--context", context, "Context length (default 256)");
      app->add_option("--precision", precision, "float32 or float64")
          ->check(CLI::IsMember({"float32", "float64"}));
    }
  }
  lm::TrainConfig train(lm::TrainConfig t) const {
    if (steps) t.steps = *steps;
    if (lr) t.learning_rate = *lr;
    if (batch) t.batch_size = *batch;
    t.seed = *seed;
    return t;
  }
  lm::ModelConfig model(lm::ModelConfig m) const {
    if (layers) m.n_layers = *layers;
    if (heads) m.n_heads = *heads;
    if (d_model) m.d_model = *d_model;
    if (context) m.context_len = *context;
    if (!precision.empty()) {
      m.precision = precision == "float64" ? lm::Precision::kFloat64 : lm::Precision::kFloat32;
    }
    return m;
  }
};

template <class Fn>
auto with_precision(lm::Precision p, Fn&& fn) {
  return p == lm::Precision::kFloat64 ? fn(double{}) : fn(float{});
}

void print_losses(const Global& g, const std::vector<double>& losses) {
  if (losses.empty()) return;
  g.note("loss: first " + std::to_string(losses.front()) + ", final mean " +
         std::to_string(lm::final_mean_loss(losses)));
}

// ---------------------------------------------------------------------------

int cmd_split(const Global& g, const std::string& corpus, const std::string& lexicon,
              const std::string& manifest, const std::string& out) {
  const auto lex = vw::load_emotion_lexicon_file(g.in_root(lexicon, "lexicon/emolex_mini.tsv"));
  std::optional<fs::path> m;
  if (!manifest.empty()) m = manifest;
  auto docs = vw::ingest_corpus(g.in_root(corpus, "corpus/poetry"), m);
  const auto rep = vw::split_corpus(std::move(docs), lex, out);
  for (std::size_t i = 0; i < vw::kNumEmotions; ++i) {
    std::cout << vw::kEmotionNames[i] << "\t" << rep.documents[i] << "\t" << rep.tokens[i]
              << "\n";
  }
  std::cout << "unlabeled\t" << rep.unlabeled << "\n";
  return kOk;
}

int cmd_train_bpe(const Global& g, const std::string& corpus, std::size_t vocab_size,
                  const std::string& out) {
  const auto docs = vw::ingest_corpus(g.in_root(corpus, "corpus/poetry"));
  const auto vocab = vw::bpe::train(bodies(docs), vocab_size);
  vw::bpe::save(vocab, out);
  std::cout << "tokens\t" << vocab.size() << "\nmerges\t" << vocab.num_merges() << "\nhash\t"
            << vw::bpe::hash(vocab) << "\n";
  return kOk;
}

int cmd_train(const Global& g, const std::string& corpus, const std::string& vocab_path,
              const std::string& config, const std::string& stage, const TrainFlags& f,
              const std::string& out) {
  pl::PipelineConfig pc;
  if (!config.empty()) pc = pl::load_config(config);
  const auto vocab = vw::bpe::load(vocab_path);
  lm::ModelConfig mc = f.model(pc.model);
  mc.vocab_size = vocab.size();
  mc.validate();
  const lm::TrainConfig tc = f.train(pc.train);
  const auto docs = vw::ingest_corpus(corpus);
  const auto stream = vw::bpe::encode_documents(vocab, bodies(docs));
  const std::string corpus_id = fs::path(corpus).filename().string();
  with_precision(mc.precision, [&](auto tag) {
    using T = decltype(tag);
    lm::Checkpoint<T> ck{lm::init_model<T>(mc, vw::derive_seed(tc.seed, 0)), {},
                         vw::bpe::hash(vocab)};
    const auto r = lm::train<T>(ck.model, stream, tc);
    ck.stage_chain.push_back({stage, corpus_id, tc.steps, lm::final_mean_loss(r.losses)});
    lm::save_checkpoint(ck, out);
    print_losses(g, r.losses);
    return 0;
  });
  return kOk;
}

int cmd_finetune(const Global& g, const std::string& ckpt_path, const std::string& corpus,
                 const std::string& vocab_path, const std::string& stage, const TrainFlags& f,
                 const std::string& out) {
  const auto vocab = vw::bpe::load(vocab_path);
  const std::string data = vw::io::read_file(ckpt_path);
  const auto docs = vw::ingest_corpus(corpus);
  const auto stream = vw::bpe::encode_documents(vocab, bodies(docs));
  const std::string corpus_id = fs::path(corpus).filename().string();
  with_precision(lm::checkpoint_precision(data), [&](auto tag) {
    using T = decltype(tag);
    const auto parent = lm::parse_checkpoint<T>(data);
    std::vector<double> losses;
    const auto ck = lm::finetune<T>(parent, stream, f.train(lm::TrainConfig{}), stage,
                                    corpus_id, vw::bpe::hash(vocab), &losses);
    lm::save_checkpoint(ck, out);
    print_losses(g, losses);
    std::cout << "stage_chain\t" << json(ck.stage_chain).dump() << "\n";
    return 0;
  });
  return kOk;
}

int cmd_generate(const Global& g, const std::string& ckpt_path, const std::string& vocab_path,
                 std::size_t n, std::uint64_t seed, vw::sampler::GenerationConfig gc,
                 const std::string& out) {
  const auto vocab = vw::bpe::load(vocab_path);
  const std::string data = vw::io::read_file(ckpt_path);
  with_precision(lm::checkpoint_precision(data), [&](auto tag) {
    using T = decltype(tag);
    const auto ck = lm::parse_checkpoint<T>(data);
    if (ck.vocab_hash != vw::bpe::hash(vocab)) {
      throw vw::ValidationError("checkpoint was trained with a different tokenizer");
    }
    const auto pool = vw::sampler::generate_pool<T>(ck, vocab, gc, n, seed);
    pl::write_pool(pool, out);
    return 0;
  });
  g.note("wrote " + std::to_string(n) + " poems to " + out);
  return kOk;
}

int cmd_rank(const Global& g, const std::string& pool_dir, const std::string& lexicon,
             const std::string& emotion, std::size_t top, const std::string& out) {
  const auto lex = vw::load_emotion_lexicon_file(g.in_root(lexicon, "lexicon/emolex_mini.tsv"));
  const auto pool = pl::read_pool(pool_dir);
  std::vector<std::string> texts;
  for (const auto& p : pool) texts.push_back(p.text);
  const auto ranked = vw::rank_generated(texts, lex, emotion_arg(emotion), top);
  const std::string text = pl::ranked_jsonl(ranked, pool);
  if (out.empty()) {
    std::cout << text;
  } else {
    vw::io::write_file_atomic(out, text);
  }
  return kOk;
}

int cmd_select(const std::string& ranked, std::size_t n, std::uint64_t seed,
               const std::string& out) {
  const auto recs = pl::parse_ranked(vw::io::read_file(ranked));
  const std::string text = pl::records_jsonl(pl::select_records(recs, n, seed));
  if (out.empty()) {
    std::cout << text;
  } else {
    vw::io::write_file_atomic(out, text);
  }
  return kOk;
}

int cmd_metrics(const Global& g, const std::string& psych, const std::string& reference,
                const std::vector<std::string>& files, bool as_json, const std::string& out) {
  const auto plex = vw::load_psych_lexicon_file(g.in_root(psych, "lexicon/psych_mini.csv"));
  const auto ref = vw::metrics::load_reference(g.in_root(reference, "reference_stats.json"));
  std::vector<vw::metrics::NamedText> texts;
  for (const auto& f : files) {
    texts.push_back({fs::path(f).stem().string(), vw::io::read_file(f)});
  }
  const auto rep = vw::metrics::report(texts, plex, ref);
  const std::string text =
      as_json ? vw::metrics::to_json_report(rep).dump(2) + "\n" : vw::metrics::to_tsv(rep);
  if (out.empty()) {
    std::cout << text;
  } else {
    vw::io::write_file_atomic(out, text);
  }
  return kOk;
}

int cmd_reference_stats(const Global& g, const std::string& corpus, const std::string& out) {
  const auto docs = vw::ingest_corpus(g.in_root(corpus, "reference"));
  const auto ref = vw::metrics::compute_reference(
      bodies(docs), "moments of the proxy indices over " + std::to_string(docs.size()) +
                        " reference texts");
  const std::string text = json(ref).dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    vw::io::write_file_atomic(out, text);
  }
  return kOk;
}

vw::review::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Global& g, const std::string& log, const std::string& host, int port,
              const std::string& ui_dir, const std::vector<std::string>& campaigns) {
  vw::review::Store store(log);
  for (const auto& c : campaigns) {
    const json spec = json::parse(vw::io::read_file(c));
    if (store.campaign(spec.value("id", std::string()))) {
      g.note("campaign " + spec.value("id", std::string()) + " already in log");
    } else {
      store.create_campaign(spec);
    }
  }
  std::optional<fs::path> ui;
  if (!ui_dir.empty()) ui = ui_dir;
  vw::review::Server server(store, ui);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
    if (bound < 0) throw vw::IoError("cannot bind " + host);
  }
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  const bool ok = port == 0 ? server.listen_after_bind() : server.listen(host, port);
  g_server = nullptr;
  if (!ok && port != 0) throw vw::IoError("cannot listen on " + host + ":" + std::to_string(port));
  return kOk;
}

int cmd_report(const std::string& log, const std::string& campaign, bool table) {
  vw::review::Store store;
  store.replay(vw::io::read_file(log));
  std::vector<std::string> ids = campaign.empty() ? store.campaign_ids()
                                                  : std::vector<std::string>{campaign};
  for (const auto& id : ids) {
    const json rep = store.report(id);
    if (!table) {
      std::cout << rep.dump(2) << "\n";
      continue;
    }
    std::cout << "# " << id << "\n";
    if (rep["kind"] == "emotion") {
      std::cout << "emotion\tpercent\n";
      for (const auto& [name, e] : rep["emotions"].items()) {
        std::cout << name << "\t"
                  << (e["percent"].is_null() ? "NA"
                                             : vw::metrics::format_value(e["percent"].get<double>()))
                  << "\n";
      }
    } else {
      std::cout << "poem";
      for (const auto& d : rep["dimensions"]) std::cout << "\t" << d.get<std::string>();
      std::cout << "\n";
      for (const auto& p : rep["poems"]) {
        std::cout << p["id"].get<std::string>();
        for (const auto& d : rep["dimensions"]) {
          const auto& m = p["scores"][d.get<std::string>()]["mean"];
          std::cout << "\t"
                    << (m.is_null() ? "NA" : vw::metrics::format_value(m.get<double>()));
        }
        std::cout << "\n";
      }
    }
  }
  return kOk;
}

int cmd_pipeline(const Global& g, const std::string& config, double scale, std::uint64_t seed,
                 const std::string& out, bool verify_only) {
  if (verify_only) {
    const auto expected = pl::read_manifest(fs::path(out) / pl::kManifestName);
    const auto diff = pl::manifest_diff(expected, pl::hash_tree(out));
    for (const auto& p : diff) std::cout << "MISMATCH\t" << p << "\n";
    std::cout << (diff.empty() ? "verified " : "failed ") << expected.size() << " artifacts\n";
    return diff.empty() ? kOk : kValidation;
  }
  const fs::path root = g.root();
  pl::PipelineConfig pc = config.empty()
                              ? (fs::exists(root / "pipeline.json")
                                     ? pl::load_config(root / "pipeline.json")
                                     : pl::PipelineConfig{})
                              : pl::load_config(config);
  pc.seed = seed;
  pc = pl::scaled(pc, scale);
  const auto result = pl::run_pipeline(pc, root, out, [&](const std::string& m) { g.note(m); });
  std::cout << "artifacts\t" << result.manifest.size() << "\n";
  if (result.changed_since_previous) {
    const auto& diff = *result.changed_since_previous;
    for (const auto& p : diff) std::cout << "CHANGED\t" << p << "\n";
    if (!diff.empty()) {
      throw vw::InvariantError("rerun differs from the previous manifest in " +
                               std::to_string(diff.size()) + " artifacts");
    }
    std::cout << "verified against previous manifest\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  // One BLAS thread keeps float reductions in a fixed order on every host.
  openblas_set_num_threads(1);

  CLI::App app{"versewright: emotion and dream poetry generation at desk scale"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--data", g.data, "Data root (default $VERSEWRIGHT_DATA or the bundled data)");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");
  std::function<int()> run;

  // split
  auto* split = app.add_subcommand("split", "Label a corpus and write per-emotion sub-corpora");
  std::string split_corpus, split_lex, split_manifest, split_out;
  split->add_option("--corpus", split_corpus, "Corpus directory of .txt files");
  split->add_option("--lexicon", split_lex, "EmoLex word-level TSV");
  split->add_option("--manifest", split_manifest, "File listing the documents to include");
  split->add_option("--out", split_out, "Output directory")->required();
  split->callback([&] {
    run = [&] { return cmd_split(g, split_corpus, split_lex, split_manifest, split_out); };
  });

  // train-bpe
  auto* tbpe = app.add_subcommand("train-bpe", "Train a byte-level BPE vocabulary");
  std::string tbpe_corpus, tbpe_out;
  std::size_t tbpe_size = vw::bpe::kDefaultVocabSize;
  tbpe->add_option("--corpus", tbpe_corpus, "Corpus directory");
  tbpe->add_option("--vocab-size", tbpe_size, "Target vocabulary size")->capture_default_str();
  tbpe->add_option("--out", tbpe_out, "Vocabulary file")->required();
  tbpe->callback([&] { run = [&] { return cmd_train_bpe(g, tbpe_corpus, tbpe_size, tbpe_out); }; });

  // train
  auto* train = app.add_subcommand("train", "Train a language model from scratch");
  std::string tr_corpus, tr_vocab, tr_config, tr_stage = "base", tr_out;
  TrainFlags tr_flags;
  train->add_option("--corpus", tr_corpus, "Corpus directory")->required();
  train->add_option("--vocab", tr_vocab, "Vocabulary file")->required();
  train->add_option("--config", tr_config, "Pipeline config supplying model/train defaults");
  train->add_option("--stage", tr_stage, "Stage name recorded in the checkpoint")
      ->capture_default_str();
  train->add_option("--out", tr_out, "Checkpoint file")->required();
  tr_flags.add(train, true);
  train->callback([&] {
    run = [&] { return cmd_train(g, tr_corpus, tr_vocab, tr_config, tr_stage, tr_flags, tr_out); };
  });

  // finetune
  auto* ft = app.add_subcommand("finetune", "Continue training a checkpoint on a new corpus");
  std::string ft_ckpt, ft_corpus, ft_vocab, ft_stage, ft_out;
  TrainFlags ft_flags;
  ft->add_option("--checkpoint", ft_ckpt, "Parent checkpoint")->required();
  ft->add_option("--corpus", ft_corpus, "Corpus directory")->required();
  ft->add_option("--vocab", ft_vocab, "Vocabulary file")->required();
  ft->add_option("--stage", ft_stage, "Name of the new stage")->required();
  ft->add_option("--out", ft_out, "Checkpoint file")->required();
  ft_flags.add(ft, false);
  ft->callback([&] {
    run = [&] { return cmd_finetune(g, ft_ckpt, ft_corpus, ft_vocab, ft_stage, ft_flags, ft_out); };
  });

  // generate
  auto* gen = app.add_subcommand("generate", "Sample a pool of poems from a checkpoint");
  std::string gen_ckpt, gen_vocab, gen_out;
  std::size_t gen_n = 1000;
  std::uint64_t gen_seed = 0;
  vw::sampler::GenerationConfig gen_cfg;
  gen->add_option("--checkpoint", gen_ckpt, "Checkpoint file")->required();
  gen->add_option("--vocab", gen_vocab, "Vocabulary file")->required();
  gen->add_option("--n", gen_n, "Pool size")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Pool seed")->required();
  gen->add_option("--top-k", gen_cfg.top_k, "Top-k cutoff")->capture_default_str();
  gen->add_option("--temperature", gen_cfg.temperature, "Sampling temperature")
      ->capture_default_str();
  gen->add_option("--max-new-tokens", gen_cfg.max_new_tokens, "Tokens per poem")
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->callback([&] {
    run = [&] { return cmd_generate(g, gen_ckpt, gen_vocab, gen_n, gen_seed, gen_cfg, gen_out); };
  });

  // rank
  auto* rank = app.add_subcommand("rank", "Rank a poem pool by an emotion's lexicon score");
  std::string rk_pool, rk_lex, rk_emotion, rk_out;
  std::size_t rk_top = 20;
  rank->add_option("--pool", rk_pool, "Pool directory")->required();
  rank->add_option("--lexicon", rk_lex, "EmoLex word-level TSV");
  rank->add_option("--emotion", rk_emotion, "Target emotion")->required();
  rank->add_option("--top", rk_top, "Number of poems kept")->capture_default_str();
  rank->add_option("--out", rk_out, "Output JSON-lines file (default stdout)");
  rank->callback([&] {
    run = [&] { return cmd_rank(g, rk_pool, rk_lex, rk_emotion, rk_top, rk_out); };
  });

  // select
  auto* sel = app.add_subcommand("select", "Draw a seeded sample from a ranked list");
  std::string sel_ranked, sel_out;
  std::size_t sel_n = 4;
  std::uint64_t sel_seed = 0;
  sel->add_option("--ranked", sel_ranked, "Ranked JSON-lines file")->required();
  sel->add_option("--n", sel_n, "Sample size")->capture_default_str();
  sel->add_option("--seed", sel_seed, "Sample seed")->required();
  sel->add_option("--out", sel_out, "Output JSON-lines file (default stdout)");
  sel->callback([&] { run = [&] { return cmd_select(sel_ranked, sel_n, sel_seed, sel_out); }; });

  // metrics
  auto* met = app.add_subcommand("metrics", "Readability and lexical metrics for text files");
  std::string met_psych, met_ref, met_out;
  std::vector<std::string> met_files;
  bool met_json = false;
  met->add_option("--psych", met_psych, "Imageability/concreteness CSV");
  met->add_option("--reference", met_ref, "Reference statistics JSON");
  met->add_flag("--json", met_json, "JSON instead of TSV");
  met->add_option("--out", met_out, "Output file (default stdout)");
  met->add_option("texts", met_files, "Text files")->required();
  met->callback([&] {
    run = [&] { return cmd_metrics(g, met_psych, met_ref, met_files, met_json, met_out); };
  });

  // reference-stats
  auto* rs = app.add_subcommand("reference-stats", "Compute proxy reference moments");
  std::string rs_corpus, rs_out;
  rs->add_option("--corpus", rs_corpus, "Reference corpus directory");
  rs->add_option("--out", rs_out, "Output JSON file (default stdout)");
  rs->callback([&] { run = [&] { return cmd_reference_stats(g, rs_corpus, rs_out); }; });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the review service");
  std::string sv_log, sv_host = "127.0.0.1", sv_ui;
  int sv_port = 8080;
  std::vector<std::string> sv_campaigns;
  serve->add_option("--log", sv_log, "Event log (created if missing)")->required();
  serve->add_option("--host", sv_host, "Bind address")->capture_default_str();
  serve->add_option("--port", sv_port, "Port; 0 picks a free one")->capture_default_str();
  serve->add_option("--ui-dir", sv_ui, "Static UI assets served under /ui/");
  serve->add_option("--campaign", sv_campaigns, "Campaign spec JSON to create if absent");
  serve->callback([&] {
    run = [&] { return cmd_serve(g, sv_log, sv_host, sv_port, sv_ui, sv_campaigns); };
  });

  // report
  auto* rep = app.add_subcommand("report", "Print campaign reports from an event log");
  std::string rp_log, rp_campaign;
  bool rp_table = false;
  rep->add_option("--log", rp_log, "Event log")->required();
  rep->add_option("--campaign", rp_campaign, "Campaign id (default all)");
  rep->add_flag("--table", rp_table, "Tab-separated table instead of JSON");
  rep->callback([&] { run = [&] { return cmd_report(rp_log, rp_campaign, rp_table); }; });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run the full pipeline end to end");
  std::string pp_config, pp_out = "runs/pipeline";
  double pp_scale = 1.0;
  std::uint64_t pp_seed = 0;
  bool pp_verify = false;
  pipe->add_option("--config", pp_config, "Pipeline config JSON");
  pipe->add_option("--scale", pp_scale, "Size factor for steps, pool and top-N")
      ->capture_default_str();
  auto* seed_opt = pipe->add_option("--seed", pp_seed, "Global seed");
  pipe->add_option("--out", pp_out, "Output directory")->capture_default_str();
  pipe->add_flag("--verify", pp_verify, "Only check an existing output against its manifest");
  pipe->callback([&] {
    if (!pp_verify && seed_opt->count() == 0) {
      throw CLI::RequiredError("--seed");
    }
    run = [&] { return cmd_pipeline(g, pp_config, pp_scale, pp_seed, pp_out, pp_verify); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return run();
  } catch (const vw::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const vw::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
