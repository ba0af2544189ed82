#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "toxdet/attack.hpp"
#include "toxdet/error.hpp"
#include "testutil.hpp"

using namespace toxdet;

namespace {

PreprocessConfig wordConfig() {
  PreprocessConfig cfg;
  cfg.mode = TokenMode::word_nopunct;
  return cfg;
}

TokenSequence seqOf(std::string id, std::vector<std::string> tokens) {
  TokenSequence s;
  s.comment_id = std::move(id);
  s.tokens = std::move(tokens);
  return s;
}

// Test set where the keyword model is right on every comment: toxic ones
// contain "fuck", nontoxic ones do not.
struct KeywordFixture {
  std::vector<TokenSequence> seqs;
  std::vector<BinaryLabel> truth;
};

KeywordFixture keywordFixture() {
  KeywordFixture f;
  f.seqs = {seqOf("1", {"you", "are", "nice"}),
            seqOf("2", {"fuck", "you"}),
            seqOf("3", {"have", "a", "good", "day"}),
            seqOf("4", {"what", "the", "fuck"}),
            seqOf("5", {"thanks", "for", "helping"})};
  f.truth = {BinaryLabel::nontoxic, BinaryLabel::toxic, BinaryLabel::nontoxic,
             BinaryLabel::toxic, BinaryLabel::nontoxic};
  return f;
}

double keywordScorer(const TokenSequence& seq) {
  return std::find(seq.tokens.begin(), seq.tokens.end(), "fuck") !=
                 seq.tokens.end()
             ? 1.0
             : 0.0;
}

}  // namespace

TEST_CASE("appendWord adds one preprocessed token at the end") {
  auto seq = seqOf("c", {"you", "are"});
  auto attacked = appendWord(seq, "fuck", wordConfig());
  CHECK(attacked.tokens == std::vector<std::string>{"you", "are", "fuck"});
  CHECK(seq.tokens.size() == 2);  // original untouched

  auto empty = appendWord(seqOf("c", {}), "love", wordConfig());
  CHECK(empty.tokens == std::vector<std::string>{"love"});

  // the word is normalized like any other text ("LOVE!" -> "love")
  auto shouted = appendWord(seq, "LOVE!", wordConfig());
  CHECK(shouted.tokens.back() == "love");

  CHECK_THROWS_AS(appendWord(seq, "two words", wordConfig()), RangeError);
  CHECK_THROWS_AS(appendWord(seq, "...", wordConfig()), RangeError);
}

TEST_CASE("appendWord may exceed the truncation limit by one") {
  std::vector<std::string> tokens(200, "w");
  auto seq = seqOf("long", std::move(tokens));
  auto attacked = appendWord(seq, "fuck", wordConfig());
  CHECK(attacked.tokens.size() == 201);
  CHECK(attacked.tokens.back() == "fuck");
}

TEST_CASE("appendWord splits the word into pieces in word-piece sequences") {
  auto wp = toxtest::loadFixtureWordpieces();
  TokenSequence seq;
  seq.comment_id = "c";
  seq.tokens = {"you", "are"};
  seq.word_boundaries = std::vector<int>{0, 1};
  seq.words = std::vector<std::string>{"you", "are"};

  PreprocessConfig cfg;
  cfg.mode = TokenMode::wordpiece_keep_punct;
  auto attacked = appendWord(seq, "unaffable", cfg, &wp);
  REQUIRE(attacked.tokens.size() == 5);
  CHECK(attacked.tokens[2] == "un");
  CHECK(attacked.tokens[3] == "##aff");
  CHECK(attacked.tokens[4] == "##able");
  CHECK(attacked.word_boundaries->back() == 2);
  CHECK(attacked.words->back() == "unaffable");
}

TEST_CASE("keyword model: appending the keyword flips every correct nontoxic") {
  auto fixture = keywordFixture();
  AttackConfig config;  // fuck / love
  auto report = attackEval(keywordScorer, fixture.seqs, fixture.truth, config,
                           0.5, wordConfig());
  CHECK(report.n_correct_nontoxic == 3);
  CHECK(report.n_flipped_to_toxic == 3);
  REQUIRE(report.rate_nontoxic_to_toxic.has_value());
  CHECK(*report.rate_nontoxic_to_toxic == 100.0);

  CHECK(report.n_correct_toxic == 2);
  CHECK(report.n_flipped_to_nontoxic == 0);
  REQUIRE(report.rate_toxic_to_nontoxic.has_value());
  CHECK(*report.rate_toxic_to_nontoxic == 0.0);
}

TEST_CASE("a content-blind model never flips") {
  auto fixture = keywordFixture();
  // score derived from the comment id, so appends cannot move it
  Scorer by_id = [](const TokenSequence& seq) {
    return seq.comment_id == "2" || seq.comment_id == "4" ? 1.0 : 0.0;
  };
  auto report = attackEval(by_id, fixture.seqs, fixture.truth, AttackConfig{},
                           0.5, wordConfig());
  CHECK(*report.rate_nontoxic_to_toxic == 0.0);
  CHECK(*report.rate_toxic_to_nontoxic == 0.0);
}

TEST_CASE("empty denominators are reported as undefined, not zero") {
  auto fixture = keywordFixture();
  // scores everything toxic: no correctly-classified nontoxic comments
  Scorer all_toxic = [](const TokenSequence&) { return 1.0; };
  auto report = attackEval(all_toxic, fixture.seqs, fixture.truth,
                           AttackConfig{}, 0.5, wordConfig());
  CHECK(report.n_correct_nontoxic == 0);
  CHECK_FALSE(report.rate_nontoxic_to_toxic.has_value());
  CHECK(report.rate_toxic_to_nontoxic.has_value());
}

TEST_CASE("attack leaves the evaluated sequences untouched") {
  auto fixture = keywordFixture();
  std::vector<std::vector<std::string>> before;
  for (const auto& s : fixture.seqs) before.push_back(s.tokens);
  attackEval(keywordScorer, fixture.seqs, fixture.truth, AttackConfig{}, 0.5,
             wordConfig());
  for (size_t i = 0; i < fixture.seqs.size(); ++i) {
    CHECK(fixture.seqs[i].tokens == before[i]);
  }
}

TEST_CASE("numerators never exceed denominators on random scorers") {
  ad::Rng rng(33);
  auto fixture = keywordFixture();
  for (int trial = 0; trial < 30; ++trial) {
    const uint64_t salt = rng.bits();
    Scorer random_scorer = [salt](const TokenSequence& seq) {
      uint64_t h = salt;
      for (const auto& t : seq.tokens) {
        for (char c : t) h = h * 1099511628211ull + static_cast<uint64_t>(c);
      }
      return static_cast<double>(h % 1000) / 999.0;
    };
    auto report = attackEval(random_scorer, fixture.seqs, fixture.truth,
                             AttackConfig{}, 0.5, wordConfig());
    CHECK(report.n_flipped_to_toxic <= report.n_correct_nontoxic);
    CHECK(report.n_flipped_to_nontoxic <= report.n_correct_toxic);
  }
}

TEST_CASE("single-direction runs only touch their side") {
  auto fixture = keywordFixture();
  auto report = attackEval(keywordScorer, fixture.seqs, fixture.truth,
                           AttackConfig{}, 0.5, wordConfig(), nullptr,
                           AttackDirection::nontoxic_to_toxic);
  CHECK(report.rate_nontoxic_to_toxic.has_value());
  CHECK(report.n_correct_toxic == 0);
  CHECK_FALSE(report.rate_toxic_to_nontoxic.has_value());
}

TEST_CASE("custom attack words are honored") {
  auto fixture = keywordFixture();
  AttackConfig config;
  config.toxic_word = "harmless";  // not the keyword: nothing flips
  auto report = attackEval(keywordScorer, fixture.seqs, fixture.truth, config,
                           0.5, wordConfig());
  CHECK(*report.rate_nontoxic_to_toxic == 0.0);
  CHECK(report.toxic_word == "harmless");
}

TEST_CASE("regression threshold 0.6 decides flips") {
  auto fixture = keywordFixture();
  Scorer graded = [](const TokenSequence& seq) {
    return std::find(seq.tokens.begin(), seq.tokens.end(), "fuck") !=
                   seq.tokens.end()
               ? 0.65
               : 0.55;  // nontoxic sits between the two thresholds
  };
  auto at_05 = attackEval(graded, fixture.seqs, fixture.truth, AttackConfig{},
                          0.5, wordConfig());
  // at 0.5 everything is already toxic: no correct nontoxic
  CHECK(at_05.n_correct_nontoxic == 0);

  auto at_06 = attackEval(graded, fixture.seqs, fixture.truth, AttackConfig{},
                          0.6, wordConfig());
  CHECK(at_06.n_correct_nontoxic == 3);
  CHECK(*at_06.rate_nontoxic_to_toxic == 100.0);
}

TEST_CASE("batched and per-sequence attack paths agree") {
  auto fixture = keywordFixture();
  auto per_seq = attackEval(keywordScorer, fixture.seqs, fixture.truth,
                            AttackConfig{}, 0.5, wordConfig());
  BatchScorer batch = batchedScorer(keywordScorer);
  auto batched = attackEval(batch, fixture.seqs, fixture.truth, AttackConfig{},
                            0.5, wordConfig());
  CHECK(per_seq.n_correct_nontoxic == batched.n_correct_nontoxic);
  CHECK(per_seq.n_flipped_to_toxic == batched.n_flipped_to_toxic);
  CHECK(per_seq.n_correct_toxic == batched.n_correct_toxic);
  CHECK(per_seq.n_flipped_to_nontoxic == batched.n_flipped_to_nontoxic);
}
