#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "toxdet/error.hpp"
#include "toxdet/preprocess.hpp"
#include "toxdet/vocab.hpp"
#include "testutil.hpp"

using namespace toxdet;

namespace {

PreprocessConfig wordConfig() {
  PreprocessConfig cfg;
  cfg.mode = TokenMode::word_nopunct;
  return cfg;
}

PreprocessConfig pieceConfig() {
  PreprocessConfig cfg;
  cfg.mode = TokenMode::wordpiece_keep_punct;
  return cfg;
}

}  // namespace

TEST_CASE("normalizeText lowercases and strips punctuation in word mode") {
  CHECK(normalizeText("Hello, WORLD!", wordConfig()) == "hello  world ");
  CHECK(normalizeText("Hello, WORLD!", pieceConfig()) == "hello, world!");
  CHECK(normalizeText("", wordConfig()).empty());
  CHECK(normalizeText("", pieceConfig()).empty());
}

TEST_CASE("normalizeText handles unicode punctuation and passes letters") {
  // curly apostrophe and em dash are in the frozen punctuation class
  CHECK(normalizeText("it’s fine — ok", wordConfig()) ==
        "it s fine   ok");
  // non-ASCII letters survive word mode untouched
  CHECK(normalizeText("café naïve", wordConfig()) ==
        "café naïve");
  // Latin-1 capitals lowercase
  CHECK(normalizeText("École", pieceConfig()) == "école");
}

TEST_CASE("tokenizeWords splits on whitespace runs") {
  CHECK(tokenizeWords("a  b c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenizeWords("   ").empty());
  CHECK(tokenizeWords("you're fine") ==
        std::vector<std::string>{"you're", "fine"});
  CHECK(tokenizeWords("a\tb\nc") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("truncateTokens keeps the first max_words tokens") {
  std::vector<std::string> tokens;
  for (int i = 0; i < 250; ++i) tokens.push_back("t" + std::to_string(i));
  auto cut = truncateTokens(tokens, 200);
  REQUIRE(cut.size() == 200);
  CHECK(cut.front() == "t0");
  CHECK(cut.back() == "t199");

  auto short_list = truncateTokens({"a", "b", "c", "d", "e"}, 200);
  CHECK(short_list.size() == 5);

  CHECK(truncateTokens(cut, 200) == cut);  // idempotent
  CHECK_THROWS_AS(truncateTokens({"a"}, 0), ConfigError);
}

TEST_CASE("word mode tokens contain no punctuation") {
  ad::Rng rng(5);
  const std::string alphabet =
      "abcXYZ019.,;:!?'\"()[]-_/\\@#$%&*~ é";
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const int len = static_cast<int>(rng.bits() % 40);
    for (int i = 0; i < len; ++i) {
      text += alphabet[rng.bits() % alphabet.size()];
    }
    for (const auto& token : tokenizeWords(normalizeText(text, wordConfig()))) {
      for (unsigned char c : token) {
        if (c < 0x80) CHECK_FALSE(isPunctuationCodepoint(c));
      }
    }
  }
}

TEST_CASE("pipeline is deterministic") {
  const std::string text = "Some TEXT, with Punct!  and   spaces";
  auto run = [&] {
    return truncateTokens(tokenizeWords(normalizeText(text, wordConfig())), 200);
  };
  CHECK(run() == run());
}

namespace {

LabeledComment comment(std::string id, std::string text, Split split,
                       BinaryLabel label) {
  LabeledComment c;
  c.comment_id = std::move(id);
  c.text = std::move(text);
  c.split = split;
  c.binary_label = label;
  return c;
}

std::string longText(int n_words) {
  std::string text;
  for (int i = 0; i < n_words; ++i) {
    if (i) text += ' ';
    text += "w" + std::to_string(i);
  }
  return text;
}

}  // namespace

TEST_CASE("filterTraining removes only long toxic training comments") {
  LabeledDataset dataset;
  dataset.comments.push_back(
      comment("long-toxic-train", longText(201), Split::train, BinaryLabel::toxic));
  dataset.comments.push_back(
      comment("short-toxic-train", longText(200), Split::train, BinaryLabel::toxic));
  dataset.comments.push_back(
      comment("long-toxic-test", longText(500), Split::test, BinaryLabel::toxic));
  dataset.comments.push_back(comment("long-nontoxic-train", longText(500),
                                     Split::train, BinaryLabel::nontoxic));
  auto filtered = filterTraining(dataset, 200);
  REQUIRE(filtered.comments.size() == 3);
  for (const auto& c : filtered.comments) {
    CHECK(c.comment_id != "long-toxic-train");
  }
}

TEST_CASE("filterTraining never touches dev/test and nontoxic comments") {
  ad::Rng rng(6);
  LabeledDataset dataset;
  for (int i = 0; i < 60; ++i) {
    const Split split = static_cast<Split>(rng.bits() % 3);
    const BinaryLabel label =
        rng.bits() % 2 ? BinaryLabel::toxic : BinaryLabel::nontoxic;
    dataset.comments.push_back(comment("c" + std::to_string(i),
                                       longText(1 + rng.bits() % 300), split,
                                       label));
  }
  auto filtered = filterTraining(dataset, 100);
  CHECK(filtered.splitSize(Split::dev) == dataset.splitSize(Split::dev));
  CHECK(filtered.splitSize(Split::test) == dataset.splitSize(Split::test));
  long nontoxic_before = 0, nontoxic_after = 0;
  for (const auto& c : dataset.comments) {
    if (c.binary_label == BinaryLabel::nontoxic) ++nontoxic_before;
  }
  for (const auto& c : filtered.comments) {
    if (c.binary_label == BinaryLabel::nontoxic) ++nontoxic_after;
  }
  CHECK(nontoxic_before == nontoxic_after);
}

TEST_CASE("preprocessComment yields words or pieces with boundaries") {
  auto wp = toxtest::loadFixtureWordpieces();
  LabeledComment c =
      comment("x", "Unaffable PERSON, walked!", Split::train,
              BinaryLabel::nontoxic);

  PreprocessConfig words = wordConfig();
  auto word_seq = preprocessComment(c, words);
  CHECK(word_seq.tokens ==
        std::vector<std::string>{"unaffable", "person", "walked"});
  CHECK_FALSE(word_seq.word_boundaries.has_value());

  PreprocessConfig pieces = pieceConfig();
  auto piece_seq = preprocessComment(c, pieces, &wp);
  REQUIRE(piece_seq.words.has_value());
  CHECK(*piece_seq.words ==
        std::vector<std::string>{"unaffable", "person,", "walked!"});
  REQUIRE(piece_seq.word_boundaries.has_value());
  CHECK(piece_seq.word_boundaries->size() == piece_seq.tokens.size());
  CHECK(piece_seq.tokens[0] == "un");
  CHECK(piece_seq.tokens[1] == "##aff");
  CHECK(piece_seq.tokens[2] == "##able");
  // boundaries nondecreasing, gapless
  int prev = 0;
  for (int b : *piece_seq.word_boundaries) {
    CHECK(b >= prev);
    CHECK(b <= prev + 1);
    prev = b;
  }
  CHECK(prev == 2);
}

TEST_CASE("truncation applies to words before piece splitting") {
  auto wp = toxtest::loadFixtureWordpieces();
  PreprocessConfig cfg = pieceConfig();
  cfg.max_words = 3;
  LabeledComment c = comment("x", "playing playing playing playing playing",
                             Split::train, BinaryLabel::nontoxic);
  auto seq = preprocessComment(c, cfg, &wp);
  REQUIRE(seq.words.has_value());
  CHECK(seq.words->size() == 3);
  CHECK(seq.word_boundaries->back() == 2);
}
