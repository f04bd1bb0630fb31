// Scores a poem against the bundled lexicons and prints its metrics.
//
//   score_poem DATA_DIR POEM.txt

#include <iostream>

#include "versewright/corpus.hpp"
#include "versewright/emotion.hpp"
#include "versewright/io.hpp"
#include "versewright/metrics.hpp"

namespace vw = versewright;

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: score_poem DATA_DIR POEM.txt\n";
    return 1;
  }
  const std::filesystem::path data = argv[1];
  const std::string text = vw::io::read_file(argv[2]);

  const auto lex = vw::load_emotion_lexicon_file(data / "lexicon" / "emolex_mini.tsv");
  const auto scores = vw::score_text(text, lex);
  for (std::size_t e = 0; e < vw::kNumEmotions; ++e) {
    std::cout << vw::kEmotionNames[e] << "\t" << scores.scores[e] << "\n";
  }
  std::cout << "label\t" << (scores.label ? vw::name_of(*scores.label) : "none") << "\n\n";

  const auto psych = vw::load_psych_lexicon_file(data / "lexicon" / "psych_mini.csv");
  const auto ref = vw::metrics::load_reference(data / "reference_stats.json");
  std::cout << vw::metrics::to_tsv(vw::metrics::report({{"poem", text}}, psych, ref));
  return 0;
}
