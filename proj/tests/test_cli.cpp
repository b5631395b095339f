#include <gtest/gtest.h>

#include <csignal>
#include <cstdio>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include "oracles.hpp"
#include "rlfkit/rlfkit.hpp"

using namespace rlfkit;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(RLFKIT_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fixture(const std::string& name) { return std::string(RLFKIT_FIXTURE_DIR) + "/" + name; }

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::size_t line_count(const fs::path& p) {
  const auto s = oracle::read_file(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST(Cli, ExtractReferenceCorpus) {
  const auto dir = oracle::scratch_dir("cli_extract");
  const auto r = run("extract --input " + fixture("reference_corpus.jsonl") + " --output " + q(dir / "r.jsonl") + " --json");
  ASSERT_EQ(r.code, 0);
  const auto rep = json::parse(r.out);
  EXPECT_EQ(rep["extraction"]["records"], 5);
  EXPECT_EQ(rep["written"], 5);
  const auto recs = load_records((dir / "r.jsonl").string());
  ASSERT_EQ(recs.size(), 5u);
  EXPECT_EQ(recs[0].primary().root, "book!");
  EXPECT_EQ(recs[1].primary().root, "love");
}

TEST(Cli, EmptyCorpusGivesNoRecords) {
  const auto dir = oracle::scratch_dir("cli_empty");
  oracle::write_file(dir / "c.jsonl", "");
  const auto r = run("extract --input " + q(dir / "c.jsonl") + " --output " + q(dir / "r.jsonl"));
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(dir / "r.jsonl"));
  EXPECT_EQ(line_count(dir / "r.jsonl"), 0u);
}

TEST(Cli, SameSeedIsByteIdentical) {
  const auto dir = oracle::scratch_dir("cli_seed");
  oracle::write_file(dir / "c.jsonl", oracle::synthetic_corpus(300, 5));
  for (const std::string tag : {"a", "b"}) {
    ASSERT_EQ(run("extract --input " + q(dir / "c.jsonl") + " --output " + q(dir / ("e" + tag)) + " --threads 3").code, 0);
    ASSERT_EQ(run("balance --input " + q(dir / ("e" + tag)) + " --output " + q(dir / ("b" + tag))).code, 0);
  }
  EXPECT_EQ(oracle::read_file(dir / "ea"), oracle::read_file(dir / "eb"));
  EXPECT_EQ(oracle::read_file(dir / "ba"), oracle::read_file(dir / "bb"));
  EXPECT_GT(line_count(dir / "ea"), line_count(dir / "ba"));
  ASSERT_EQ(run("balance --seed 7 --input " + q(dir / "ea") + " --output " + q(dir / "bc")).code, 0);
  EXPECT_NE(oracle::read_file(dir / "ba"), oracle::read_file(dir / "bc"));
}

TEST(Cli, ErrorsExitNonZero) {
  EXPECT_NE(run("").code, 0);
  EXPECT_NE(run("extract --input /nonexistent.jsonl --output /tmp/x.jsonl").code, 0);
  EXPECT_NE(run("bogus").code, 0);
  const auto dir = oracle::scratch_dir("cli_err");
  EXPECT_NE(run("extract --input " + fixture("reference_corpus.jsonl") + " --output " + q(dir / "r") + " --dict /nope").code, 0);
  EXPECT_NE(run("balance --input " + fixture("reference_corpus.jsonl") + " --output " + q(dir / "b")).code, 0);
}

TEST(Cli, PairSubsetStats) {
  const auto dir = oracle::scratch_dir("cli_pss");
  oracle::write_file(dir / "c.jsonl", oracle::synthetic_corpus(200, 9));
  ASSERT_EQ(run("extract --input " + q(dir / "c.jsonl") + " --output " + q(dir / "e")).code, 0);
  ASSERT_EQ(run("pair --input " + q(dir / "e") + " --corpus " + q(dir / "c.jsonl") + " --output " + q(dir / "p")).code, 0);
  EXPECT_EQ(oracle::read_file(dir / "e"), oracle::read_file(dir / "p"));

  const auto n = line_count(dir / "e");
  ASSERT_GT(n, 20u);
  auto r = run("subset --input " + q(dir / "e") + " --output " + q(dir / "s") + " -n 20 --split 14,3,3 --json");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["written"], 20);
  std::map<std::string, int> tags;
  for (const auto& rec : load_records((dir / "s").string())) ++tags[std::string(split_name(*rec.split_tag))];
  EXPECT_EQ(tags["train"], 14);
  EXPECT_EQ(tags["val"], 3);
  EXPECT_EQ(tags["test"], 3);
  EXPECT_NE(run("subset --input " + q(dir / "e") + " --output " + q(dir / "s2") + " -n 20 --split 1,1,1").code, 0);

  r = run("stats --input " + q(dir / "e") + " --corpus " + q(dir / "c.jsonl") + " --json");
  ASSERT_EQ(r.code, 0);
  const auto st = json::parse(r.out);
  EXPECT_EQ(st["overall"]["domain"], "ALL");
  EXPECT_EQ(st["overall"]["documents"], 200);
  EXPECT_EQ(st["overall"]["samples"].get<std::size_t>(), n);
  r = run("stats --input " + q(dir / "e") + " --corpus " + q(dir / "c.jsonl"));
  EXPECT_NE(r.out.find("ALL"), std::string::npos);
}

TEST(Cli, SexpOnFixture) {
  auto r = run("sexp --input " + fixture("wis_50.jsonl") + " --json --by-model");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["s_exp"].get<double>(), 16361615201.0 / 78738660000.0, 1e-9);
  EXPECT_EQ(j["n_records"], 50);
  EXPECT_EQ(j["per_model"]["fixture"]["n_records"], 50);

  const auto dir = oracle::scratch_dir("cli_sexp");
  oracle::write_file(dir / "w.jsonl", oracle::read_file(fixture("wis_50.jsonl")) + "{not json\n");
  EXPECT_EQ(run("sexp --input " + q(dir / "w.jsonl")).code, 0);
  EXPECT_NE(run("sexp --strict --input " + q(dir / "w.jsonl")).code, 0);
}

TEST(Cli, PromptsRequestsParseBuild) {
  const auto dir = oracle::scratch_dir("cli_prompts");
  ASSERT_EQ(run("extract --input " + fixture("reference_corpus.jsonl") + " --output " + q(dir / "r")).code, 0);
  ASSERT_EQ(run("prompts requests --records " + q(dir / "r") + " --output " + q(dir / "req")).code, 0);
  std::string responses;
  {
    JsonlReader reader((dir / "req").string());
    std::string line;
    while (reader.next(line)) {
      const auto req = json::parse(line);
      std::string body;
      for (const auto& t : req["tokens"]) body += t.get<std::string>() + ": 3\n";
      responses += ordered_json{{"sentence_id", req["sentence_id"]}, {"model_id", "stub"}, {"response", body}}.dump() + "\n";
    }
  }
  oracle::write_file(dir / "resp", responses);
  auto r = run("prompts parse --responses " + q(dir / "resp") + " --records " + q(dir / "r") + " --output " +
               q(dir / "wis") + " --json");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["parsed"], 5);
  EXPECT_EQ(load_wis((dir / "wis").string()).size(), 5u);
  r = run("prompts build --records " + q(dir / "r") + " --wis " + q(dir / "wis") + " --output " + q(dir / "ds") + " --json");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["samples"], 10);
  EXPECT_EQ(line_count(dir / "ds"), 10u);
  EXPECT_NE(run("prompts").code, 0);
}

TEST(Cli, MetricsAndConfusion) {
  const auto dir = oracle::scratch_dir("cli_metrics");
  oracle::write_file(dir / "p.jsonl",
                     R"({"sentence_id":"a","group":"RLF","char_len":12,"label":1,"prediction":1})"
                     "\n"
                     R"({"sentence_id":"b","group":"NoRLF","char_len":95,"label":0,"prediction":1})"
                     "\n");
  auto r = run("metrics --input " + q(dir / "p.jsonl") + " --json");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["accuracy"], 0.5);
  EXPECT_EQ(j["fraction_within_80"], 0.5);
  EXPECT_EQ(j["groups"]["RLF"]["accuracy"], 1.0);
  EXPECT_NE(run("metrics --input " + q(dir / "p.jsonl") + " --bin-width 0").code, 0);

  r = run("metrics confusion --input " + fixture("doc_sentence_labels.jsonl") + " --json");
  ASSERT_EQ(r.code, 0);
  const auto m = json::parse(r.out);
  EXPECT_EQ(m["PP"], 127);
  EXPECT_EQ(m["PN"], 9);
  EXPECT_EQ(m["NP"], 11);
  EXPECT_EQ(m["NN"], 53);
  r = run("metrics confusion --input " + fixture("doc_sentence_labels.jsonl"));
  EXPECT_NE(r.out.find("127"), std::string::npos);
}

TEST(Cli, IaaFromLog) {
  const auto dir = oracle::scratch_dir("cli_iaa");
  std::string log;
  auto line = [&](const std::string& s, const std::string& a, int v) {
    log += ordered_json{{"sample_id", s}, {"annotator_id", a}, {"kind", "sentiment_label"}, {"value", v}}.dump() + "\n";
  };
  for (const std::string a : {"x", "y"}) {
    line("s1", a, 1);
    line("s2", a, 0);
  }
  line("s2", "x", 1);  // later line wins
  line("s2", "x", 0);
  oracle::write_file(dir / "log.jsonl", log);
  const auto r = run("iaa --input " + q(dir / "log.jsonl") + " --json");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["alpha"]["sentiment_label"], 1.0);
  EXPECT_EQ(j["effective_records"], 4);
}

TEST(Cli, ServeAnswersHttp) {
  const auto dir = oracle::scratch_dir("cli_serve");
  oracle::write_file(dir / "samples.jsonl",
                     R"({"sample_id":"x","sentence":"so goood","rlf_index":1,"wis_candidates":[{"model_id":"m","tokens":["so","goood"],"normalized_scores":[0.2,0.8]}]})"
                     "\n");
  const int port = 20000 + static_cast<int>(::getpid() % 20000);
  const std::string cmd = std::string(RLFKIT_CLI_PATH) + " serve --samples " + q(dir / "samples.jsonl") + " --log " +
                          q(dir / "log.jsonl") + " --port " + std::to_string(port) + " >/dev/null 2>&1 & echo $!";
  FILE* p = popen(cmd.c_str(), "r");
  ASSERT_TRUE(p);
  long pid = 0;
  ASSERT_EQ(std::fscanf(p, "%ld", &pid), 1);
  pclose(p);
  httplib::Client cli("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 100 && !res; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    res = cli.Get("/api/progress");
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["samples"], 1);
  res = cli.Post("/api/annotations", R"({"sample_id":"x","annotator_id":"a","kind":"sentiment_label","value":1})",
                 "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  ::kill(static_cast<pid_t>(pid), SIGTERM);
  EXPECT_EQ(line_count(dir / "log.jsonl"), 1u);
}
