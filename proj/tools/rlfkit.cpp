// rlfkit command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "rlfkit/annotate_server.hpp"
#include "rlfkit/rlfkit.hpp"

#ifndef RLFKIT_DEFAULT_DICT
#define RLFKIT_DEFAULT_DICT "resources/dict/en_US.txt"
#endif

using namespace rlfkit;

namespace {

struct Common {
  std::string dict = RLFKIT_DEFAULT_DICT;
  std::uint64_t seed = kDefaultSeed;
  std::size_t min_words = kDefaultMinWords;
  bool json_out = false;
};

void add_common(CLI::App* cmd, Common& c, bool dict = false, bool min_words = false) {
  cmd->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  cmd->add_flag("--json", c.json_out, "Print a JSON report instead of a table");
  if (dict) cmd->add_option("--dict", c.dict, "Dictionary word list")->capture_default_str();
  if (min_words) cmd->add_option("--min-words", c.min_words, "Sentence merge threshold in words")->capture_default_str();
}

void emit(const Common& c, const ordered_json& j) {
  if (c.json_out) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::function<void(const ordered_json&, const std::string&)> walk = [&](const ordered_json& v, const std::string& prefix) {
    if (v.is_object()) {
      for (auto it = v.begin(); it != v.end(); ++it) walk(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
    } else if (v.is_array() && !v.empty() && v.front().is_object()) {
      for (std::size_t i = 0; i < v.size(); ++i) walk(v[i], prefix + "[" + std::to_string(i) + "]");
    } else {
      std::cout << std::left << std::setw(40) << prefix << ' ' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
  };
  walk(j, "");
}

ordered_json to_json(const LoadSummary& s) {
  ordered_json j{{"read", s.read}, {"skipped", s.skipped}};
  if (!s.errors.empty()) j["first_error"] = "line " + std::to_string(s.errors.front().line) + ": " + s.errors.front().message;
  return j;
}

ordered_json to_json(const StratumReport& r) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, c] : r) j[k] = {{"kept", c.kept}, {"dropped", c.dropped}};
  return j;
}

ordered_json to_json(const ExtractionReport& r) {
  ordered_json j;
  j["documents"] = r.documents;
  j["unlabeled"] = r.unlabeled;
  j["screened_in"] = r.screened_in;
  j["rlf_documents"] = r.rlf_documents;
  j["records"] = r.records;
  j["spans"] = r.spans;
  j["per_domain"] = ordered_json::object();
  for (const auto& [d, c] : r.per_domain) j["per_domain"][d] = {{"documents", c.documents}, {"rlf_documents", c.rlf_documents}};
  j["ambiguous_roots"] = r.ambiguous_roots.size();
  return j;
}

ordered_json to_json(const PairReport& r) {
  return {{"paired", r.paired}, {"single_sentence", r.single_sentence}, {"no_candidate", r.no_candidate}};
}

ordered_json to_json(const ExplainabilityReport& r) {
  ordered_json j;
  j["model_id"] = r.model_id;
  j["s_exp"] = r.s_exp;
  j["n_records"] = r.n_records;
  j["std_dev"] = r.std_dev;
  j["per_style"] = ordered_json::object();
  for (const auto& [s, st] : r.per_style) j["per_style"][s] = {{"s_exp", st.s_exp}, {"n", st.n}};
  j["rejected"] = r.rejected.size();
  return j;
}

void write_json_file(const std::string& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

ExtractOptions extract_options(const Common& c) {
  ExtractOptions o;
  o.min_words = c.min_words;
  return o;
}

// ---------------------------------------------------------------------------

struct ExtractArgs {
  std::string input, output, pos, report, freq_out;
  unsigned threads = 1;
  std::optional<std::uint64_t> min_form_count;
};

int run_extract(const Common& c, const ExtractArgs& a) {
  LoadSummary load;
  const auto docs = load_documents(a.input, &load);
  const auto dict = Dictionary::load(c.dict);
  auto ex = extract_corpus(docs, dict, extract_options(c), a.threads);
  PairReport pr;
  auto records = pair_control(std::move(ex.records), ex.doc_sentences, c.seed, &pr);
  ordered_json rep;
  rep["load"] = to_json(load);
  rep["extraction"] = to_json(ex.report);
  rep["pairing"] = to_json(pr);
  const auto freq = form_frequencies(records);
  if (!a.freq_out.empty()) freq.save(a.freq_out);
  if (a.min_form_count) {
    StratumReport fr;
    records = filter_records_by_form_frequency(std::move(records), freq, *a.min_form_count, &fr);
    std::uint64_t kept = 0, dropped = 0;
    for (const auto& [k, v] : fr) {
      kept += v.kept;
      dropped += v.dropped;
    }
    rep["form_filter"] = {{"min_count", *a.min_form_count}, {"spans_kept", kept}, {"spans_dropped", dropped}};
  }
  if (!a.pos.empty()) {
    PosReport p;
    records = attach_pos(std::move(records), a.pos, &p);
    rep["pos"] = {{"tagged", p.tagged}, {"untagged", p.untagged}, {"duplicates", p.duplicates}, {"sidecar", to_json(p.sidecar)}};
  }
  write_records(a.output, records);
  rep["written"] = records.size();
  if (!a.report.empty()) write_json_file(a.report, rep);
  emit(c, rep);
  return 0;
}

int run_pair(const Common& c, const std::string& input, const std::string& corpus, const std::string& output) {
  auto records = load_records(input);
  const auto docs = load_documents(corpus);
  const auto sentences = build_doc_sentences(docs, Dictionary::load(c.dict), extract_options(c));
  PairReport pr;
  records = pair_control(std::move(records), sentences, c.seed, &pr);
  write_records(output, records);
  emit(c, to_json(pr));
  return 0;
}

struct BalanceArgs {
  std::string input, output, report;
  BalancePolicy policy;
  std::size_t domain_cap = 0, form_cap = 0;
};

int run_balance(const Common& c, BalanceArgs a) {
  a.policy.seed = c.seed;
  if (a.domain_cap) a.policy.per_domain_cap = a.domain_cap;
  if (a.form_cap) a.policy.per_form_cap = a.form_cap;
  auto res = balance(load_records(a.input), a.policy);
  write_records(a.output, res.records);
  if (!a.report.empty()) write_report(a.report, res.report);
  ordered_json j{{"written", res.records.size()}, {"strata", to_json(res.report)}};
  emit(c, j);
  return 0;
}

SplitCounts parse_split_counts(const std::string& spec, std::size_t n) {
  std::vector<std::size_t> parts;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t pos = 0;
    const auto v = std::stoull(item, &pos);
    if (pos != item.size()) throw ConfigError("bad split count '" + item + "'");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw ConfigError("--split needs TRAIN,VAL,TEST");
  SplitCounts s{parts[0], parts[1], parts[2]};
  if (s.train + s.val + s.test != n)
    throw ConfigError("--split counts sum to " + std::to_string(s.train + s.val + s.test) + ", subset has " +
                      std::to_string(n));
  return s;
}

int run_subset(const Common& c, const std::string& input, const std::string& output, std::size_t n,
               const std::string& split) {
  auto sub = stratified_subset(load_records(input), n, c.seed);
  if (!split.empty()) sub = assign_splits(std::move(sub), parse_split_counts(split, sub.size()), c.seed);
  write_records(output, sub);
  std::map<std::string, std::size_t> per;
  for (const auto& r : sub) ++per[r.domain.name()];
  ordered_json j{{"written", sub.size()}, {"per_domain", per}};
  emit(c, j);
  return 0;
}

int run_stats(const Common& c, const std::string& input, const std::string& corpus) {
  const auto records = load_records(input);
  std::map<std::string, std::uint64_t> docs;
  {
    DocumentReader reader(corpus);
    while (auto d = reader.next()) ++docs[d->domain.name()];
    reader.finish();
  }
  const auto sum = dataset_summary(records, docs);
  if (c.json_out) {
    ordered_json j;
    j["domains"] = ordered_json::array();
    for (const auto& r : sum.domains) j["domains"].push_back(to_json(r));
    j["overall"] = to_json(sum.overall);
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::printf("%-14s %9s %9s %8s %8s %10s %8s %8s\n", "domain", "docs", "rlf_docs", "ratio%", "samples", "labels",
              "words", "roots");
  auto row = [](const SummaryRow& r) {
    std::printf("%-14s %9llu %9llu %8.2f %8llu %10s %8llu %8llu\n", r.domain.c_str(),
                static_cast<unsigned long long>(r.documents), static_cast<unsigned long long>(r.rlf_documents),
                r.rlf_ratio_pct, static_cast<unsigned long long>(r.samples), r.label_distribution.c_str(),
                static_cast<unsigned long long>(r.unique_rlf_words), static_cast<unsigned long long>(r.unique_roots));
  };
  for (const auto& r : sum.domains) row(r);
  row(sum.overall);
  return 0;
}

int run_sexp(const Common& c, const std::string& input, const std::string& records_path, bool strict, bool by_model) {
  LoadSummary load;
  const auto wis = load_wis(input, &load);
  if (strict && load.skipped) throw CorpusFormatError(input + ": " + to_json(load)["first_error"].get<std::string>());
  std::optional<StyleIndex> styles;
  if (!records_path.empty()) styles = style_index(load_records(records_path));
  const StyleIndex* sp = styles ? &*styles : nullptr;
  const auto rep = s_exp(wis, sp);
  if (strict && !rep.rejected.empty())
    throw ValidationError(rep.rejected.front().sentence_id + ": " + rep.rejected.front().reason);
  ordered_json j = to_json(rep);
  j["load"] = to_json(load);
  if (by_model) {
    j["per_model"] = ordered_json::object();
    for (const auto& [m, r] : s_exp_by_model(wis, sp)) j["per_model"][m] = to_json(r);
  }
  emit(c, j);
  return 0;
}

int run_prompts_build(const Common& c, const std::string& records, const std::string& wis_path, const std::string& output) {
  const auto recs = load_records(records);
  std::vector<WisRecord> wis;
  if (!wis_path.empty()) wis = load_wis(wis_path);
  DatasetReport rep;
  const auto ds = build_expinstruct_dataset(recs, wis, &rep);
  JsonlWriter w(output);
  for (const auto& s : ds) w.write(to_json(s));
  emit(c, {{"samples", ds.size()}, {"sa", rep.sa_samples}, {"wis", rep.wis_samples}, {"missing_wis", rep.missing_wis}});
  return 0;
}

int run_prompts_requests(const Common& c, const std::string& records, const std::string& output) {
  const auto reqs = build_wis_requests(load_records(records));
  JsonlWriter w(output);
  for (const auto& r : reqs) w.write(to_json(r));
  emit(c, {{"requests", reqs.size()}});
  return 0;
}

int run_prompts_parse(const Common& c, const std::string& responses, const std::string& records, const std::string& output) {
  LoadSummary load;
  const auto resp = read_records<WisResponse>(responses, response_from_json, &load);
  ResponseReport rep;
  const auto wis = wis_from_responses(resp, load_records(records), &rep);
  write_wis(output, wis);
  emit(c, {{"load", to_json(load)},
           {"parsed", rep.parsed},
           {"failed", rep.failed},
           {"unknown_sentence", rep.unknown_sentence},
           {"repaired_tokens", rep.repaired_tokens},
           {"clamped_scores", rep.clamped_scores},
           {"wis_records", wis.size()}});
  return 0;
}

int run_metrics(const Common& c, const std::string& input, long long bin_width) {
  const auto preds = read_records_strict<PredictionRecord>(input, prediction_from_json);
  ordered_json j;
  j["n"] = preds.size();
  j["accuracy"] = accuracy(preds);
  j["macro_f1"] = macro_f1(preds);
  for (auto g : {SentenceGroup::RLF, SentenceGroup::NoRLF}) {
    std::vector<PredictionRecord> sub;
    for (const auto& p : preds)
      if (p.group == g) sub.push_back(p);
    if (sub.empty()) continue;
    j["groups"][std::string(group_name(g))] = {{"n", sub.size()}, {"accuracy", accuracy(sub)}, {"macro_f1", macro_f1(sub)}};
  }
  const auto bins = length_binned_accuracy(preds, bin_width);
  j["fraction_within_80"] = bins.fraction_within_80;
  j["length_bins"] = ordered_json::array();
  for (const auto& b : bins.bins)
    j["length_bins"].push_back({{"bin_start", b.bin_start}, {"bin_end", b.bin_end}, {"group", group_name(b.group)},
                                {"acc", b.acc}, {"n", b.n}});
  emit(c, j);
  return 0;
}

int run_confusion(const Common& c, const std::string& input) {
  const auto rows = read_records_strict<DocSentenceLabels>(input, doc_sentence_from_json);
  const auto m = doc_sentence_confusion(rows);
  if (c.json_out) {
    emit(c, {{"PP", m.pp}, {"PN", m.pn}, {"NP", m.np}, {"NN", m.nn}, {"n", rows.size()}});
    return 0;
  }
  std::printf("%-18s %12s %12s\n", "", "sentence pos", "sentence neg");
  std::printf("%-18s %12llu %12llu\n", "document pos", static_cast<unsigned long long>(m.pp),
              static_cast<unsigned long long>(m.pn));
  std::printf("%-18s %12llu %12llu\n", "document neg", static_cast<unsigned long long>(m.np),
              static_cast<unsigned long long>(m.nn));
  return 0;
}

int run_iaa(const Common& c, const std::string& input) {
  LoadSummary load;
  const auto records = deduplicate_annotations(load_annotations(input, &load));
  auto j = AnnotationStore::aggregate_records(records);
  j["load"] = to_json(load);
  emit(c, j);
  return 0;
}

int run_serve(const std::string& samples, const std::string& log, const std::string& host, int port) {
  AnnotationStore store(load_annotation_samples(samples), log);
  if (store.replay_skipped()) std::cerr << "rlfkit: skipped " << store.replay_skipped() << " unreadable log lines\n";
  AnnotationServer server(store);
  std::cerr << "rlfkit: serving on http://" << host << ":" << port << "/api/\n";
  if (!server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rlfkit: lengthened-word extraction, explainability scoring and annotation tools"};
  app.require_subcommand(1);
  Common c;
  std::function<int()> action;

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Extract RLF sentences from a corpus and pair controls");
  extract->add_option("--input", ex.input, "Corpus JSONL")->required();
  extract->add_option("--output", ex.output, "Records JSONL")->required();
  extract->add_option("--threads", ex.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  extract->add_option("--pos", ex.pos, "POS sidecar JSONL");
  extract->add_option("--min-form-count", ex.min_form_count, "Keep spans whose form occurs more than N times");
  extract->add_option("--form-freq-out", ex.freq_out, "Write the form frequency table");
  extract->add_option("--report", ex.report, "Write the JSON report to a file");
  add_common(extract, c, true, true);
  extract->callback([&] { action = [&] { return run_extract(c, ex); }; });

  std::string pr_in, pr_corpus, pr_out;
  auto* pair = app.add_subcommand("pair", "Re-pair records with control sentences");
  pair->add_option("--input", pr_in, "Records JSONL")->required();
  pair->add_option("--corpus", pr_corpus, "Source corpus JSONL")->required();
  pair->add_option("--output", pr_out, "Records JSONL")->required();
  add_common(pair, c, true, true);
  pair->callback([&] { action = [&] { return run_pair(c, pr_in, pr_corpus, pr_out); }; });

  BalanceArgs ba;
  auto* bal = app.add_subcommand("balance", "Downsample by style stratum and cap domains and forms");
  bal->add_option("--input", ba.input, "Records JSONL")->required();
  bal->add_option("--output", ba.output, "Records JSONL")->required();
  bal->add_option("--letter-rate", ba.policy.letter_keep_rate)->capture_default_str();
  bal->add_option("--ellipsis-rate", ba.policy.ellipsis_keep_rate)->capture_default_str();
  bal->add_option("--other-rate", ba.policy.other_punct_keep_rate)->capture_default_str();
  bal->add_option("--domain-cap", ba.domain_cap, "Max records per domain (0 = none)");
  bal->add_option("--form-cap", ba.form_cap, "Max records per generalized form (0 = none)");
  bal->add_option("--report", ba.report, "Write the stratum report JSONL");
  add_common(bal, c);
  bal->callback([&] { action = [&] { return run_balance(c, ba); }; });

  std::string sb_in, sb_out, sb_split;
  std::size_t sb_n = 0;
  auto* subset = app.add_subcommand("subset", "Domain-stratified subset with optional splits");
  subset->add_option("--input", sb_in, "Records JSONL")->required();
  subset->add_option("--output", sb_out, "Records JSONL")->required();
  subset->add_option("-n,--size", sb_n, "Subset size")->required();
  subset->add_option("--split", sb_split, "TRAIN,VAL,TEST counts");
  add_common(subset, c);
  subset->callback([&] { action = [&] { return run_subset(c, sb_in, sb_out, sb_n, sb_split); }; });

  std::string st_in, st_corpus;
  auto* stats = app.add_subcommand("stats", "Dataset summary per domain");
  stats->add_option("--input", st_in, "Records JSONL")->required();
  stats->add_option("--corpus", st_corpus, "Source corpus JSONL")->required();
  add_common(stats, c);
  stats->callback([&] { action = [&] { return run_stats(c, st_in, st_corpus); }; });

  std::string sx_in, sx_records;
  bool sx_strict = false, sx_by_model = false;
  auto* sexp = app.add_subcommand("sexp", "Explainability score over WIS records");
  sexp->add_option("--input", sx_in, "WIS JSONL")->required();
  sexp->add_option("--records", sx_records, "Records JSONL for per-style scores");
  sexp->add_flag("--strict", sx_strict, "Fail on any malformed or invalid record");
  sexp->add_flag("--by-model", sx_by_model, "Also report per model");
  add_common(sexp, c);
  sexp->callback([&] { action = [&] { return run_sexp(c, sx_in, sx_records, sx_strict, sx_by_model); }; });

  std::string pp_records, pp_wis, pp_out, pp_resp;
  auto* prompts = app.add_subcommand("prompts", "Instruction prompts and response parsing");
  prompts->require_subcommand(1);
  auto* pbuild = prompts->add_subcommand("build", "Build the instruction dataset");
  pbuild->add_option("--records", pp_records, "Records JSONL")->required();
  pbuild->add_option("--wis", pp_wis, "WIS JSONL");
  pbuild->add_option("--output", pp_out, "Samples JSONL")->required();
  add_common(pbuild, c);
  pbuild->callback([&] { action = [&] { return run_prompts_build(c, pp_records, pp_wis, pp_out); }; });
  auto* preq = prompts->add_subcommand("requests", "Emit WIS prompts for an external model");
  preq->add_option("--records", pp_records, "Records JSONL")->required();
  preq->add_option("--output", pp_out, "Requests JSONL")->required();
  add_common(preq, c);
  preq->callback([&] { action = [&] { return run_prompts_requests(c, pp_records, pp_out); }; });
  auto* pparse = prompts->add_subcommand("parse", "Convert model responses into WIS records");
  pparse->add_option("--responses", pp_resp, "Responses JSONL {sentence_id, model_id, response}")->required();
  pparse->add_option("--records", pp_records, "Records JSONL")->required();
  pparse->add_option("--output", pp_out, "WIS JSONL")->required();
  add_common(pparse, c);
  pparse->callback([&] { action = [&] { return run_prompts_parse(c, pp_resp, pp_records, pp_out); }; });

  std::string mt_in;
  long long mt_bin = static_cast<long long>(kDefaultBinWidth);
  auto* metrics = app.add_subcommand("metrics", "Classification metrics over predictions");
  metrics->add_option("--input", mt_in, "Predictions JSONL");
  metrics->add_option("--bin-width", mt_bin, "Length bin width in characters")->capture_default_str();
  add_common(metrics, c);
  std::string cf_in;
  auto* confusion = metrics->add_subcommand("confusion", "Document vs sentence label matrix");
  confusion->add_option("--input", cf_in, "JSONL {doc_label, sentence_label}")->required();
  add_common(confusion, c);
  confusion->callback([&] { action = [&] { return run_confusion(c, cf_in); }; });
  metrics->callback([&] {
    if (confusion->parsed()) return;
    if (mt_in.empty()) throw CLI::RequiredError("--input");
    action = [&] { return run_metrics(c, mt_in, mt_bin); };
  });

  std::string ia_in;
  auto* iaa = app.add_subcommand("iaa", "Agreement and majority labels from an annotation log");
  iaa->add_option("--input", ia_in, "Annotation log JSONL")->required();
  add_common(iaa, c);
  iaa->callback([&] { action = [&] { return run_iaa(c, ia_in); }; });

  std::string sv_samples, sv_log, sv_host = "127.0.0.1";
  int sv_port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the annotation HTTP API");
  serve->add_option("--samples", sv_samples, "Annotation samples JSONL")->required();
  serve->add_option("--output,--log", sv_log, "Append-only annotation log")->required();
  serve->add_option("--host", sv_host)->capture_default_str();
  serve->add_option("--port", sv_port)->capture_default_str();
  serve->callback([&] { action = [&] { return run_serve(sv_samples, sv_log, sv_host, sv_port); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return action ? action() : 0;
  } catch (const std::exception& e) {
    std::cerr << "rlfkit: error: " << e.what() << '\n';
    return 1;
  }
}
