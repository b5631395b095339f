#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rlfkit/corpus.hpp"
#include "rlfkit/hash.hpp"
#include "rlfkit/text.hpp"

using namespace rlfkit;

TEST(Text, TokenizeTracksByteAndCharOffsets) {
  const std::string s = "caf\xC3\xA9  is   gooood";
  const auto toks = text::tokenize(s);
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[0].text, "caf\xC3\xA9");
  EXPECT_EQ(toks[0].char_end, 4u);
  EXPECT_EQ(toks[1].char_begin, 6u);
  EXPECT_EQ(toks[2].text, "gooood");
  EXPECT_EQ(toks[2].char_begin, 11u);
  EXPECT_EQ(toks[2].char_end, 17u);
  EXPECT_EQ(text::char_length(s), 17u);
}

TEST(Text, WordCountAndTrim) {
  EXPECT_EQ(text::word_count("  a b\tc\n"), 3u);
  EXPECT_EQ(text::word_count(""), 0u);
  EXPECT_EQ(text::trim("  x y  "), "x y");
}

TEST(Hash, KeyedUniformIsDeterministicAndInRange) {
  for (int i = 0; i < 1000; ++i) {
    const auto key = "k" + std::to_string(i);
    const double u = keyed_uniform(42, key);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_EQ(u, keyed_uniform(42, key));
  }
  EXPECT_NE(keyed_hash(1, "a"), keyed_hash(2, "a"));
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
}

TEST(Labels, RatingMapping) {
  EXPECT_EQ(map_rating_to_label(5), SentimentLabel::positive());
  EXPECT_EQ(map_rating_to_label(4), SentimentLabel::positive());
  EXPECT_EQ(map_rating_to_label(1), SentimentLabel::negative());
  EXPECT_EQ(map_rating_to_label(2), SentimentLabel::negative());
  EXPECT_FALSE(map_rating_to_label(3).has_value());
  EXPECT_THROW(map_rating_to_label(0), DomainError);
  EXPECT_THROW(map_rating_to_label(6), DomainError);
  EXPECT_THROW(SentimentLabel::from_int(2), DomainError);
}

TEST(Domain, KnownNamesAndOther) {
  EXPECT_EQ(Domain::parse("books").kind(), Domain::Kind::Books);
  EXPECT_EQ(Domain::parse("Hotels").name(), "Hotels");
  const auto d = Domain::parse("Podcasts");
  EXPECT_EQ(d.kind(), Domain::Kind::Other);
  EXPECT_EQ(d.name(), "Podcasts");
}

TEST(Documents, LoadValidLines) {
  const auto dir = oracle::scratch_dir("load_valid");
  oracle::write_file(dir / "c.jsonl",
                     "{\"id\":\"a\",\"domain\":\"Books\",\"text\":\"x\",\"rating\":5}\n"
                     "{\"id\":\"b\",\"domain\":\"Hotels\",\"text\":\"y\",\"rating\":1}\n"
                     "{\"id\":\"c\",\"domain\":\"SocialMedia\",\"text\":\"z\",\"label\":0}\n");
  LoadSummary s;
  const auto docs = load_documents((dir / "c.jsonl").string(), &s);
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(s.read, 3u);
  EXPECT_EQ(s.skipped, 0u);
  EXPECT_EQ(docs[2].effective_label(), SentimentLabel::negative());
  EXPECT_EQ(docs[0].effective_label(), SentimentLabel::positive());
}

TEST(Documents, MissingTextIsSkipped) {
  const auto dir = oracle::scratch_dir("load_skip");
  std::string content;
  for (int i = 0; i < 10; ++i)
    content += "{\"id\":\"d" + std::to_string(i) + "\",\"domain\":\"Books\",\"text\":\"t\",\"rating\":4}\n";
  content += "{\"id\":\"bad\",\"domain\":\"Books\",\"rating\":4}\n";
  oracle::write_file(dir / "c.jsonl", content);
  LoadSummary s;
  const auto docs = load_documents((dir / "c.jsonl").string(), &s);
  EXPECT_EQ(docs.size(), 10u);
  EXPECT_EQ(s.skipped, 1u);
  ASSERT_EQ(s.errors.size(), 1u);
  EXPECT_EQ(s.errors[0].line, 11u);
}

TEST(Documents, EmptyFile) {
  const auto dir = oracle::scratch_dir("load_empty");
  oracle::write_file(dir / "c.jsonl", "");
  LoadSummary s;
  EXPECT_TRUE(load_documents((dir / "c.jsonl").string(), &s).empty());
  EXPECT_EQ(s.read, 0u);
  EXPECT_EQ(s.skipped, 0u);
}

TEST(Documents, TooManyMalformedIsFatal) {
  const auto dir = oracle::scratch_dir("load_fatal");
  oracle::write_file(dir / "c.jsonl",
                     "{\"id\":\"a\",\"domain\":\"Books\",\"text\":\"x\",\"rating\":5}\nnot json\n");
  EXPECT_THROW(load_documents((dir / "c.jsonl").string()), CorpusFormatError);
}

TEST(Documents, UnreadableFileIsIoError) { EXPECT_THROW(load_documents("/nonexistent/x.jsonl"), IoError); }

TEST(Documents, InvariantViolationsAreRejected) {
  auto parse = [](const char* s) { return document_from_json(json::parse(s)); };
  EXPECT_THROW(parse(R"({"id":"","domain":"Books","text":"x"})"), ParseError);
  EXPECT_THROW(parse(R"({"id":"a","domain":"Books","text":"x","rating":7})"), DomainError);
  EXPECT_THROW(parse(R"({"id":"a","domain":"Books","text":"x","rating":5,"label":0})"), ParseError);
  EXPECT_THROW(parse(R"({"id":"a","domain":"Books","text":"x","rating":3,"label":1})"), ParseError);
  EXPECT_NO_THROW(parse(R"({"id":"a","domain":"Books","text":"x","rating":5,"label":1})"));
}

TEST(Documents, DuplicateIdSkipped) {
  const auto dir = oracle::scratch_dir("load_dup");
  std::string content;
  for (int i = 0; i < 20; ++i)
    content += "{\"id\":\"d" + std::to_string(i) + "\",\"domain\":\"Books\",\"text\":\"t\",\"rating\":4}\n";
  content += "{\"id\":\"d3\",\"domain\":\"Books\",\"text\":\"again\",\"rating\":4}\n";
  oracle::write_file(dir / "c.jsonl", content);
  LoadSummary s;
  const auto docs = load_documents((dir / "c.jsonl").string(), &s);
  EXPECT_EQ(docs.size(), 20u);
  EXPECT_EQ(s.skipped, 1u);
}

TEST(Documents, RoundTripIsByteIdentical) {
  const auto dir = oracle::scratch_dir("roundtrip");
  const std::string canonical =
      "{\"id\":\"a\",\"domain\":\"Books\",\"text\":\"Caf\xC3\xA9 \\\"quoted\\\" soooo good\",\"rating\":5}\n"
      "{\"id\":\"b\",\"domain\":\"SocialMedia\",\"text\":\"meh\",\"label\":0}\n"
      "{\"id\":\"c\",\"domain\":\"Podcasts\",\"text\":\"x\",\"rating\":2,\"label\":0}\n";
  oracle::write_file(dir / "in.jsonl", canonical);
  write_documents((dir / "out.jsonl").string(), load_documents((dir / "in.jsonl").string()));
  EXPECT_EQ(oracle::read_file(dir / "out.jsonl"), canonical);
}

TEST(Sentence, MakeComputesLengths) {
  const auto s = Sentence::make("d", 2, "  I loooove it.  ");
  EXPECT_EQ(s.text, "I loooove it.");
  EXPECT_EQ(s.char_len, 13u);
  EXPECT_EQ(s.word_count, 3u);
  EXPECT_EQ(s.id(), "d#2");
}
