#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rlfkit/explain.hpp"

using namespace rlfkit;

namespace {

std::vector<double> norm(std::vector<double> v) { return normalize_wis(v).scores; }

WisRecord rec(std::vector<double> scores, std::size_t j, std::string model = "m") {
  WisRecord r;
  r.sentence_id = "s";
  r.model_id = std::move(model);
  for (std::size_t i = 0; i < scores.size(); ++i) r.tokens.push_back("t" + std::to_string(i));
  r.raw_scores = std::move(scores);
  r.rlf_index = j;
  return r;
}

struct CountOracle {
  double evaluate(const std::vector<std::string>& t, SentimentLabel) const { return static_cast<double>(t.size()); }
};

}  // namespace

TEST(Normalize, Examples) {
  const auto a = norm({1, 3, 5});
  EXPECT_DOUBLE_EQ(a[0], 0.0);
  EXPECT_NEAR(a[1], 1.0 / 3, 1e-15);
  EXPECT_NEAR(a[2], 2.0 / 3, 1e-15);
  EXPECT_EQ(norm({4, 4, 4, 4}), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  const auto c = norm({2, 2, 5, 1});
  EXPECT_NEAR(c[0], 1.0 / 6, 1e-15);
  EXPECT_NEAR(c[1], 1.0 / 6, 1e-15);
  EXPECT_NEAR(c[2], 2.0 / 3, 1e-15);
  EXPECT_EQ(c[3], 0.0);
  EXPECT_EQ(norm({7}), std::vector<double>{1.0});
}

TEST(Normalize, Errors) {
  EXPECT_THROW(normalize_wis(std::vector<double>{}), DomainError);
  EXPECT_THROW(normalize_wis(std::vector<double>{1, std::nan("")}), DomainError);
  EXPECT_THROW(normalize_wis(std::vector<double>{1, INFINITY}), DomainError);
}

TEST(Normalize, PropertiesAgainstOracle) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(1 + rng() % 12);
    for (auto& x : v) x = u(rng);
    const auto got = norm(v);
    const auto want = oracle::normalize(v);
    double sum = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_NEAR(got[i], static_cast<double>(want[i]), 1e-12);
      EXPECT_GE(got[i], 0.0);
      EXPECT_LE(got[i], 1.0);
      sum += got[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    const double a = 0.1 + u(rng), b = u(rng) - 5;
    std::vector<double> w;
    for (double x : v) w.push_back(a * x + b);
    const auto aff = norm(w);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(aff[i], got[i], 1e-9);
  }
}

TEST(Occlusion, StubOracles) {
  const std::vector<std::string> toks = {"the", "food", "was", "great"};
  CountOracle count;
  EXPECT_EQ(occlusion_wis(toks, SentimentLabel::positive(), count), (std::vector<double>{1, 1, 1, 1}));

  FunctionOracle constant([](const auto&, SentimentLabel) { return 0.7; });
  EXPECT_EQ(occlusion_wis(toks, SentimentLabel::positive(), constant), (std::vector<double>{0, 0, 0, 0}));

  FunctionOracle great([](const std::vector<std::string>& t, SentimentLabel) {
    return static_cast<double>(std::count(t.begin(), t.end(), "great"));
  });
  EXPECT_EQ(occlusion_wis({"great", "food"}, SentimentLabel::positive(), great), (std::vector<double>{1, 0}));
}

TEST(Occlusion, LinearOracleMatchesContributions) {
  const std::vector<std::string> toks = {"a", "bb", "ccc", "dddd"};
  FunctionOracle linear([](const std::vector<std::string>& t, SentimentLabel) {
    double s = 0;
    for (const auto& w : t) s += 0.5 * static_cast<double>(w.size());
    return s;
  });
  EXPECT_EQ(occlusion_wis(toks, SentimentLabel::negative(), linear), (std::vector<double>{0.5, 1.0, 1.5, 2.0}));
}

TEST(Occlusion, CallCountAndErrors) {
  int calls = 0;
  FunctionOracle counting([&](const auto& t, SentimentLabel) {
    ++calls;
    return static_cast<double>(t.size());
  });
  occlusion_wis({"a", "b", "c"}, SentimentLabel::positive(), counting);
  EXPECT_EQ(calls, 4);

  CountOracle c;
  EXPECT_THROW(occlusion_wis({"solo"}, SentimentLabel::positive(), c), DomainError);

  FunctionOracle failing([](const std::vector<std::string>& t, SentimentLabel) -> double {
    if (t == std::vector<std::string>{"a", "b"}) throw std::runtime_error("model crashed");
    return 1.0;
  });
  try {
    occlusion_wis({"a", "b", "c"}, SentimentLabel::positive(), failing);
    FAIL() << "expected OracleError";
  } catch (const OracleError& e) {
    ASSERT_TRUE(e.token_index());
    EXPECT_EQ(*e.token_index(), 2u);
  }
  FunctionOracle negative([](const auto&, SentimentLabel) { return -1.0; });
  EXPECT_THROW(occlusion_wis({"a", "b"}, SentimentLabel::positive(), negative), OracleError);
}

TEST(Occlusion, RemovalRejoinsWithSingleSpaces) {
  EXPECT_EQ(occluded_text({"I", "loooove", "it."}, 1), "I it.");
}

TEST(SExp, Examples) {
  // Normalized RLF values 0.4 and 0.6.
  auto a = rec({0, 2, 3}, 1);   // [0, 0.4, 0.6]
  auto b = rec({0, 2, 3}, 2);
  EXPECT_NEAR(s_exp({a, b}).s_exp, 0.5, 1e-15);
  EXPECT_EQ(s_exp({rec({3}, 0)}).s_exp, 1.0);
  WisRecord phone;
  phone.sentence_id = "e1#0";
  phone.model_id = "m";
  phone.tokens = {"I", "loooove", "my", "new", "phone", "case."};
  phone.raw_scores = {1, 5, 1, 2, 2, 1};
  phone.rlf_index = 1;
  // min-max: [0, 1, 0, .25, .25, 0], sum 1.5 -> 2/3
  EXPECT_NEAR(s_exp({phone}).s_exp, 2.0 / 3.0, 1e-15);
}

TEST(SExp, FiftyRecordFixture) {
  LoadSummary sum;
  const auto recs = load_wis(std::string(RLFKIT_FIXTURE_DIR) + "/wis_50.jsonl", &sum);
  ASSERT_EQ(recs.size(), 50u);
  const auto rep = s_exp(recs);
  EXPECT_NEAR(rep.s_exp, 16361615201.0 / 78738660000.0, 1e-9);
  EXPECT_EQ(rep.n_records, 50u);
  EXPECT_EQ(rep.model_id, "fixture");
}

TEST(SExp, RejectsInvalidRecordsAndEmpty) {
  auto bad = rec({1, 2}, 5);
  bad.sentence_id = "bad";
  auto neg = rec({1, -2}, 0);
  const auto rep = s_exp({rec({1, 2}, 1), bad, neg});
  EXPECT_EQ(rep.n_records, 1u);
  ASSERT_EQ(rep.rejected.size(), 2u);
  EXPECT_EQ(rep.rejected[0].sentence_id, "bad");
  EXPECT_THROW(s_exp({}), DomainError);
  EXPECT_THROW(s_exp({bad}), DomainError);
}

TEST(SExp, PermutationInvariantAndMonotone) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 5);
  std::vector<WisRecord> recs;
  for (int i = 0; i < 40; ++i) {
    std::vector<double> v(2 + rng() % 8);
    for (auto& x : v) x = u(rng);
    recs.push_back(rec(v, rng() % v.size()));
  }
  const double base = s_exp(recs).s_exp;
  EXPECT_GE(base, 0.0);
  EXPECT_LE(base, 1.0);
  auto shuffled = recs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_NEAR(s_exp(shuffled).s_exp, base, 1e-12);
  for (auto r : recs) {
    const double before = rlf_weight(r);
    r.raw_scores[r.rlf_index] += u(rng);
    EXPECT_GE(rlf_weight(r), before - 1e-15);
  }
}

TEST(SExp, PerStyleAndPerModel) {
  RlfSentenceRecord r;
  r.doc_id = "d";
  r.sentence = Sentence::make("d", 0, "so sooo good!!!");
  RlfSpan a, b;
  a.surface = "sooo";
  a.word_index = 1;
  a.style = RlfStyle::Letter;
  b.surface = "good!!!";
  b.word_index = 2;
  b.style = RlfStyle::Punctuation;
  r.spans = {a, b};
  const auto wis = wis_records_for(r, "m1", text::split_words(r.sentence.text), {1, 4, 2});
  ASSERT_EQ(wis.size(), 2u);
  const auto idx = style_index({r});
  const auto rep = s_exp(wis, &idx);
  EXPECT_NEAR(rep.per_style.at("letter").s_exp, 1.0 / (1.0 + 1.0 / 3.0), 1e-12);
  EXPECT_EQ(rep.per_style.at("punctuation").n, 1u);
  auto other = wis;
  for (auto& w : other) w.model_id = "m2";
  auto both = wis;
  both.insert(both.end(), other.begin(), other.end());
  EXPECT_EQ(s_exp(both).model_id, "*");
  const auto by = s_exp_by_model(both);
  EXPECT_EQ(by.size(), 2u);
  EXPECT_EQ(by.at("m2").n_records, 2u);
}

TEST(Align, Examples) {
  RlfSpan s;
  s.surface = "loooove";
  EXPECT_EQ(align_rlf_index({"I", "loooove", "it"}, s), 1u);
  s.surface = "book!!!!!";
  EXPECT_EQ(align_rlf_index({"read", "this", "book!!!!!"}, s), 2u);
  s.surface = "loooove!!";
  EXPECT_EQ(align_rlf_index({"I", "loooove", "it"}, s), 1u);
  s.surface = "loooove";
  try {
    align_rlf_index({"love"}, s);
    FAIL();
  } catch (const AlignmentError& e) {
    EXPECT_EQ(e.tokens(), std::vector<std::string>{"love"});
    EXPECT_EQ(e.surface(), "loooove");
  }
}

TEST(WisJson, RoundTripAndValidation) {
  const auto dir = oracle::scratch_dir("wis");
  auto r = rec({1, 2.5, 0}, 1);
  r.label = SentimentLabel::positive();
  write_wis((dir / "w.jsonl").string(), {r});
  const auto back = load_wis((dir / "w.jsonl").string());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].raw_scores, r.raw_scores);
  EXPECT_EQ(back[0].label, r.label);
  EXPECT_THROW(validate(rec({}, 0)), ValidationError);
  auto mismatch = rec({1, 2}, 0);
  mismatch.tokens.pop_back();
  EXPECT_THROW(validate(mismatch), ValidationError);
}
