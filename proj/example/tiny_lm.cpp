// Trains a small model on a few lines of verse and samples from it.

#include <iostream>

#include <cblas.h>

#include "versewright/bpe.hpp"
#include "versewright/lm.hpp"
#include "versewright/sampler.hpp"

namespace vw = versewright;
namespace lm = versewright::lm;

int main() {
  openblas_set_num_threads(1);
  const std::vector<std::string> lines = {
      "the river sings beneath the moon", "a lantern burns beside the sea",
      "the moon is pale above the hill", "the sea is quiet in the night"};
  const auto vocab = vw::bpe::train(lines, 300);

  vw::bpe::TokenSequence stream;
  for (int rep = 0; rep < 8; ++rep) {
    for (const auto& l : lines) {
      stream.push_back(vw::bpe::kSeparator);
      const auto ids = vw::bpe::encode(vocab, l);
      stream.insert(stream.end(), ids.begin(), ids.end());
    }
  }

  lm::ModelConfig mc;
  mc.n_layers = 2;
  mc.n_heads = 2;
  mc.d_model = 32;
  mc.context_len = 64;
  mc.vocab_size = vocab.size();
  auto model = lm::init_model<float>(mc, 1);

  lm::TrainConfig tc;
  tc.steps = 300;
  tc.learning_rate = 3e-3;
  const auto r = lm::train<float>(model, stream, tc);
  std::cout << "loss " << r.losses.front() << " -> " << r.losses.back() << "\n";

  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    vw::sampler::GenerationConfig gc;
    gc.seed = seed;
    gc.max_new_tokens = 40;
    const auto g = vw::sampler::generate<float>(model, vocab, gc);
    std::cout << "> " << vw::sampler::clean_text(g.text) << "\n";
  }
  return 0;
}
