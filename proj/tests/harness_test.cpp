#include <cstdlib>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "albench/error.hpp"
#include "albench/harness.hpp"
#include "albench/io.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace albench;
using namespace albench::harness;
using testsupport::fails_with;
using testsupport::fresh_dir;
using testsupport::WarningCapture;

namespace {

struct Workspace {
  std::filesystem::path dir;
  std::filesystem::path config_path;
  ExperimentConfig config;
};

// Tiny but real experiment: 60 train / 18 validation instances in the TREC
// layout, 6 classes, fast classifier settings.
Workspace make_workspace(const std::string& name,
                         const std::string& extra = {}) {
  Workspace ws;
  ws.dir = fresh_dir(name);
  io::write_file(ws.dir / "train.txt", testsupport::trec_corpus(60, 1));
  io::write_file(ws.dir / "val.txt", testsupport::trec_corpus(18, 2));
  std::string text;
  text += "train_path = " + (ws.dir / "train.txt").string() + "\n";
  text += "validation_path = " + (ws.dir / "val.txt").string() + "\n";
  text += "corpus_format = trec6\n";
  text += "featurizer.hash_dim = 64\n";
  text += "classifier.hidden_dim = 4\n";
  text += "classifier.epochs = 2\n";
  text += "classifier.minibatch_size = 8\n";
  text += "classifier.dropout_rate = 0.1\n";
  text += "strategy.mc_passes = 3\n";
  text += "strategy.dal_sub_batches = 2\n";
  text += "dal.hidden_dim = 3\n";
  text += "dal.epochs = 2\n";
  text += "batch_size = 5\n";
  text += "iterations = 2\n";
  text += "seed_set_size = 10\n";
  text += "seeds = 1\n";
  text += "strategies = random\n";
  text += "knn_k = 2\n";
  text += "out_dir = " + (ws.dir / "out").string() + "\n";
  text += extra;
  ws.config_path = ws.dir / "exp.cfg";
  io::write_file(ws.config_path, text);
  ws.config = load_config(ws.config_path);
  return ws;
}

std::string slurp(const std::filesystem::path& p) { return io::read_file(p); }

// Drops the selection_runtime_s column (index 8) from a records CSV; the
// fields in these files never contain quoted commas.
std::string strip_runtime_column(const std::string& csv) {
  std::string out;
  std::size_t start = 0;
  while (start < csv.size()) {
    auto end = csv.find('\n', start);
    if (end == std::string::npos) end = csv.size();
    std::string line = csv.substr(start, end - start);
    std::vector<std::string> fields;
    std::size_t fs = 0;
    while (fs <= line.size()) {
      auto fe = line.find(',', fs);
      if (fe == std::string::npos) {
        fields.push_back(line.substr(fs));
        break;
      }
      fields.push_back(line.substr(fs, fe - fs));
      fs = fe + 1;
    }
    if (fields.size() > 8) fields.erase(fields.begin() + 8);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out.push_back(',');
      out += fields[i];
    }
    out.push_back('\n');
    start = end + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("config parsing applies defaults and overrides") {
  ExperimentConfig minimal = parse_config_text(
      "train_path = a.txt\nvalidation_path = b.txt\n", "mini");
  CHECK(minimal.batch_size == 100);
  CHECK(minimal.iterations == 20);
  CHECK(minimal.seed_set_size == 0);
  CHECK(minimal.effective_seed_set_size() == 100);
  CHECK(minimal.knn_k == 10);
  CHECK(minimal.seeds == std::vector<std::uint64_t>{1});
  CHECK(minimal.strategies == std::vector<std::string>{"random"});
  CHECK(minimal.corpus_format == featurize::CorpusFormat::jsonl);
  CHECK(minimal.featurizer.hash_dim == 4096);
  CHECK(minimal.classifier.hidden_dim == 64);
  CHECK(minimal.strategy_config.mc_passes == 20);
  CHECK(minimal.out_dir == "out");

  ExperimentConfig full = parse_config_text(
      "# comment line\n"
      "train_path = t.jsonl\n"
      "validation_path = v.jsonl\n"
      "corpus_format = jsonl\n"
      "featurizer.mode = hashed_tfidf\n"
      "featurizer.hash_dim = 128\n"
      "featurizer.lowercase = false\n"
      "featurizer.sublinear_tf = 0\n"
      "featurizer.l2_normalize = true\n"
      "classifier.hidden_dim = 32\n"
      "classifier.dropout_rate = 0.5\n"
      "classifier.learning_rate = 0.01\n"
      "classifier.epochs = 7\n"
      "classifier.minibatch_size = 16\n"
      "classifier.l2_penalty = 0.001\n"
      "classifier.optimizer = sgd_momentum\n"
      "dal.hidden_dim = 5\n"
      "dal.optimizer = adam\n"
      "strategy.mc_passes = 11\n"
      "strategy.dal_sub_batches = 4\n"
      "strategy.use_raw_features = true\n"
      "strategies = entropy, random , dal\n"
      "batch_size = 25\n"
      "iterations = 3\n"
      "seed_set_size = 40\n"
      "seeds = 7, 8,9\n"
      "knn_k = 5\n"
      "out_dir = results\n",
      "full");
  CHECK(full.featurizer.hash_dim == 128);
  CHECK_FALSE(full.featurizer.lowercase);
  CHECK_FALSE(full.featurizer.sublinear_tf);
  CHECK(full.classifier.hidden_dim == 32);
  CHECK(full.classifier.dropout_rate == 0.5);
  CHECK(full.classifier.learning_rate == 0.01);
  CHECK(full.classifier.epochs == 7);
  CHECK(full.classifier.optimizer ==
        model::ClassifierConfig::Optimizer::sgd_momentum);
  CHECK(full.strategy_config.dal_discriminator.hidden_dim == 5);
  CHECK(full.strategy_config.dal_discriminator.optimizer ==
        model::ClassifierConfig::Optimizer::adaptive);
  CHECK(full.strategy_config.mc_passes == 11);
  CHECK(full.strategy_config.use_raw_features);
  CHECK(full.strategies == std::vector<std::string>{"entropy", "random", "dal"});
  CHECK(full.seeds == std::vector<std::uint64_t>{7, 8, 9});
  CHECK(full.seed_set_size == 40);
  CHECK(full.out_dir == "results");
}

TEST_CASE("config parse errors name the source and line") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_config_text(text, "test.cfg");
      FAIL("expected a config error for: ", text);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::config);
      CHECK(std::string(e.what()).find("test.cfg") != std::string::npos);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  const std::string base = "train_path = a\nvalidation_path = b\n";
  expect_error(base + "unknown_key = 1\n", ":3");
  expect_error(base + "batch_size = five\n", "integer");
  expect_error(base + "classifier.dropout_rate = high\n", "number");
  expect_error(base + "featurizer.lowercase = maybe\n", "true/false");
  expect_error(base + "just a line\n", "key = value");
  expect_error(base + "corpus_format = tsv\n", "tsv");
  expect_error("validation_path = b\n", "train_path");
}

TEST_CASE("config validation rejects structural problems") {
  ExperimentConfig base = parse_config_text(
      "train_path = a\nvalidation_path = b\n", "v");
  auto expect_invalid = [](ExperimentConfig c, const std::string& needle) {
    try {
      c.validate();
      FAIL("expected validation to fail: ", needle);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::config);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  ExperimentConfig c = base;
  c.seeds = {3, 3};
  expect_invalid(c, "duplicate seeds");
  c = base;
  c.strategies = {"entropy", "uncertainty"};  // alias collides
  expect_invalid(c, "duplicate strategy");
  c = base;
  c.strategies = {"margin"};
  expect_invalid(c, "margin");
  c = base;
  c.strategy_config.dal_sub_batches = 200;
  expect_invalid(c, "dal_sub_batches");
  c = base;
  c.featurizer.mode = featurize::FeaturizerConfig::Mode::precomputed;
  expect_invalid(c, "precomputed");
  c = base;
  c.knn_k = 0;
  expect_invalid(c, "knn_k");
  c = base;
  c.out_dir.clear();
  expect_invalid(c, "out_dir");
}

TEST_CASE("canonical config text is sorted and excludes out_dir") {
  ExperimentConfig a = parse_config_text(
      "validation_path = v\ntrain_path = t\nseeds = 2,1\nout_dir = x\n", "a");
  std::string text = canonical_config_text(a);
  CHECK(text.find("out_dir") == std::string::npos);
  CHECK(text.find("strategies = random\n") != std::string::npos);
  CHECK(text.find("seeds = 2,1\n") != std::string::npos);

  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  CHECK(std::is_sorted(lines.begin(), lines.end()));

  ExperimentConfig b = a;
  b.out_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.batch_size += 1;
  CHECK(config_hash(a) != config_hash(b));

  const std::string h = config_hash(a);
  CHECK(h.size() == 16);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);

  // strategy aliases canonicalize before hashing
  ExperimentConfig alias = a;
  alias.strategies = {"uncertainty"};
  ExperimentConfig direct = a;
  direct.strategies = {"entropy"};
  CHECK(config_hash(alias) == config_hash(direct));
}

TEST_CASE("load_data featurizes both splits against the train vocabulary") {
  Workspace ws = make_workspace("harness_load");
  LoadedData data = load_data(ws.config);
  CHECK(data.train.size() == 60);
  CHECK(data.validation.size() == 18);
  CHECK(data.train.num_classes == 6);
  CHECK(data.validation.num_classes == 6);
  CHECK(data.train_features.rows() == 60);
  CHECK(data.train_features.cols() == 64);
  CHECK(data.validation_features.cols() == 64);

  SUBCASE("a seed set larger than the train split fails") {
    ExperimentConfig big = ws.config;
    big.seed_set_size = 61;
    CHECK(fails_with(Errc::config, [&] { load_data(big); }));
  }

  SUBCASE("an over-budget experiment warns at load time") {
    ExperimentConfig over = ws.config;
    over.iterations = 50;  // 10 + 5*50 = 260 > 60
    WarningCapture warnings;
    load_data(over);
    CHECK(warnings.any_contains("label budget"));
  }

  SUBCASE("precomputed embeddings replace the featurizer") {
    std::string train_emb, val_emb;
    for (int i = 0; i < 60; ++i)
      train_emb += std::to_string(i) + ".5,1.0,2.0\n";
    for (int i = 0; i < 18; ++i) val_emb += "0.5,0.25,0.125\n";
    io::write_file(ws.dir / "train_emb.csv", train_emb);
    io::write_file(ws.dir / "val_emb.csv", val_emb);
    ExperimentConfig pre = ws.config;
    pre.featurizer.mode = featurize::FeaturizerConfig::Mode::precomputed;
    pre.train_embeddings = ws.dir / "train_emb.csv";
    pre.validation_embeddings = ws.dir / "val_emb.csv";
    LoadedData d = load_data(pre);
    CHECK(d.train_features.cols() == 3);
    CHECK(d.train_features(1, 0) == 1.5);
    CHECK(d.validation_features(0, 2) == 0.125);

    io::write_file(ws.dir / "val_bad.csv", "1.0,2.0\n");
    pre.validation_embeddings = ws.dir / "val_bad.csv";
    CHECK(fails_with(Errc::shape, [&] { load_data(pre); }));
  }
}

TEST_CASE("run_experiment produces one record per retrain") {
  Workspace ws = make_workspace("harness_run");
  LoadedData data = load_data(ws.config);

  ExperimentConfig one = ws.config;
  one.iterations = 1;
  RunResult r = run_experiment(one, data, "random", 1);
  REQUIRE(r.records.size() == 2);
  REQUIRE(r.audit.size() == 2);
  CHECK(r.records[0].iteration == 0);
  CHECK(r.records[0].labeled_count == 10);
  CHECK(r.records[0].has_batch);
  CHECK(r.records[1].iteration == 1);
  CHECK(r.records[1].labeled_count == 15);
  CHECK_FALSE(r.records[1].has_batch);
  CHECK(r.audit[0].strategy_name == "seed");
  CHECK(r.audit[0].iteration == 0);
  CHECK(r.audit[0].indices.size() == 10);
  CHECK(std::is_sorted(r.audit[0].indices.begin(), r.audit[0].indices.end()));
  CHECK(r.audit[1].strategy_name == "random");
  CHECK(r.audit[1].iteration == 1);
  CHECK(r.audit[1].indices.size() == 5);
  CHECK(r.summary.iterations_completed == 1);
  CHECK(r.summary.final_labeled_count == 15);
  CHECK_FALSE(r.summary.truncated);
  CHECK(r.summary.final_macro_f1 == r.records.back().macro_f1);

  SUBCASE("labeled counts step by batch_size") {
    RunResult full = run_experiment(ws.config, data, "entropy", 1);
    REQUIRE(full.records.size() == 3);
    CHECK(full.records[0].labeled_count == 10);
    CHECK(full.records[1].labeled_count == 15);
    CHECK(full.records[2].labeled_count == 20);
    CHECK(full.records[2].macro_f1 >= 0.0);
    CHECK(full.records[2].macro_f1 <= 1.0);
  }

  SUBCASE("no instance is ever labeled twice") {
    RunResult full = run_experiment(ws.config, data, "entropy", 1);
    std::set<Index> seen;
    for (const auto& batch : full.audit) {
      for (Index i : batch.indices) CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == 20);
  }

  SUBCASE("identical runs are byte-identical apart from wall-clock times") {
    RunResult a = run_experiment(ws.config, data, "entropy", 1);
    RunResult b = run_experiment(ws.config, data, "entropy", 1);
    CHECK(strip_runtime_column(records_to_csv(a.records)) ==
          strip_runtime_column(records_to_csv(b.records)));
    for (std::size_t i = 0; i < a.audit.size(); ++i) {
      CHECK(strategies::to_audit_json(a.audit[i]) ==
            strategies::to_audit_json(b.audit[i]));
    }
  }

  SUBCASE("the iteration-0 model does not depend on the strategy") {
    RunResult rnd = run_experiment(ws.config, data, "random", 3);
    RunResult ent = run_experiment(ws.config, data, "entropy", 3);
    CHECK(rnd.records[0].macro_f1 == ent.records[0].macro_f1);
    CHECK(rnd.records[0].micro_f1 == ent.records[0].micro_f1);
    CHECK(rnd.audit[0].indices == ent.audit[0].indices);
  }

  SUBCASE("different seeds draw different seed sets") {
    RunResult a = run_experiment(ws.config, data, "random", 1);
    RunResult b = run_experiment(ws.config, data, "random", 2);
    CHECK(a.audit[0].indices != b.audit[0].indices);
  }

  SUBCASE("exhaustion truncates with a warning") {
    ExperimentConfig over = ws.config;
    over.seed_set_size = 50;
    over.batch_size = 5;
    over.iterations = 5;  // budget 75 > 60
    WarningCapture warnings;
    LoadedData d = load_data(over);
    RunResult r2 = run_experiment(over, d, "random", 1);
    CHECK(r2.summary.truncated);
    CHECK(r2.summary.final_labeled_count == 60);
    CHECK(warnings.any_contains("truncat"));
    CHECK(static_cast<int>(r2.records.size()) < over.iterations + 1);
    CHECK_FALSE(r2.records.back().has_batch);
  }
}

TEST_CASE("records csv round-trips") {
  Workspace ws = make_workspace("harness_csv");
  LoadedData data = load_data(ws.config);
  RunResult r = run_experiment(ws.config, data, "random", 1);

  auto out = fresh_dir("harness_csv_out");
  write_run_files(r, out);
  auto parsed = parse_records_csv(out / "records_random_seed1.csv");
  REQUIRE(parsed.size() == r.records.size());
  CHECK(records_to_csv(parsed) == records_to_csv(r.records));
  CHECK(parsed[0].strategy == "random");
  CHECK(parsed[0].seed == 1);
  CHECK(parsed.back().has_batch == false);

  SUBCASE("a tampered header fails") {
    std::string text = slurp(out / "records_random_seed1.csv");
    io::write_file(out / "bad.csv", "x" + text);
    CHECK(fails_with(Errc::format, [&] { parse_records_csv(out / "bad.csv"); }));
  }
}

TEST_CASE("summary json round-trips") {
  RunSummary s;
  s.strategy = "entropy";
  s.seed = 42;
  s.iterations_completed = 7;
  s.final_labeled_count = 80;
  s.entropy_q_mean = 1.234567;
  s.entropy_q_std = 0.5;
  s.entropy_final_pool = 1.75;
  s.diversity_mean = 0.875;
  s.representativeness_mean = 1.0625;
  s.runtime_mean_s = 0.001953125;
  s.final_macro_f1 = 0.625;
  s.final_micro_f1 = 0.6875;
  s.truncated = true;

  const std::string text = run_summary_to_json(s);
  CHECK(text.back() == '\n');
  RunSummary r = parse_run_summary_json(text, "t");
  CHECK(run_summary_to_json(r) == text);
  CHECK(r.strategy == "entropy");
  CHECK(r.seed == 42);
  CHECK(r.truncated);

  CHECK(fails_with(Errc::format,
                   [] { parse_run_summary_json("{}", "t"); }));
  CHECK(fails_with(Errc::format,
                   [] { parse_run_summary_json("nope", "t"); }));
}

TEST_CASE("emit_reports writes the merged tables deterministically") {
  Workspace ws = make_workspace("harness_emit");
  LoadedData data = load_data(ws.config);
  RunResult r1 = run_experiment(ws.config, data, "random", 1);
  RunResult r2 = run_experiment(ws.config, data, "entropy", 1);

  std::vector<RunSummary> summaries = {r1.summary, r2.summary};
  std::vector<ExperimentRecord> records = r1.records;
  records.insert(records.end(), r2.records.begin(), r2.records.end());

  auto out = fresh_dir("harness_emit_out");
  emit_reports(summaries, records, {{"mode", "run"}}, "deadbeef00000000", out);
  for (const char* f : {"learning_curves.csv", "metrics_table.csv",
                        "runtime_table.csv", "wilcoxon.csv", "manifest.json"}) {
    CHECK(std::filesystem::exists(out / f));
  }

  const std::string curves = slurp(out / "learning_curves.csv");
  CHECK(curves.rfind("strategy,seed,iteration,labeled_count,macro_f1,micro_f1\n",
                     0) == 0);
  // entropy sorts before random
  CHECK(curves.find("entropy,1,0,") < curves.find("random,1,0,"));

  const std::string metrics = slurp(out / "metrics_table.csv");
  CHECK(metrics.find("entropy,1,") != std::string::npos);
  CHECK(metrics.find("random,1,") != std::string::npos);

  const std::string wilcoxon = slurp(out / "wilcoxon.csv");
  CHECK(wilcoxon.find("entropy,random,1,,,,insufficient_data") !=
        std::string::npos);

  auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["tool"] == "albench");
  CHECK(manifest["config_hash"] == "deadbeef00000000");
  CHECK(manifest["runs"] == 2);
  CHECK(manifest["mode"] == "run");
  CHECK(manifest["wilcoxon"] == "emitted");
  CHECK_FALSE(manifest.contains("timestamp"));
  CHECK_FALSE(manifest.contains("created_at"));

  SUBCASE("re-emission is byte-identical") {
    std::map<std::string, std::string> before;
    for (const auto& entry : std::filesystem::directory_iterator(out)) {
      before[entry.path().filename().string()] = slurp(entry.path());
    }
    emit_reports(summaries, records, {{"mode", "run"}}, "deadbeef00000000", out);
    for (const auto& [name, text] : before) {
      CHECK(slurp(out / name) == text);
    }
  }

  SUBCASE("input order does not matter") {
    std::vector<RunSummary> reversed = {r2.summary, r1.summary};
    std::vector<ExperimentRecord> rev_records = r2.records;
    rev_records.insert(rev_records.end(), r1.records.begin(), r1.records.end());
    auto out2 = fresh_dir("harness_emit_out2");
    emit_reports(reversed, rev_records, {{"mode", "run"}}, "deadbeef00000000",
                 out2);
    CHECK(slurp(out2 / "learning_curves.csv") == curves);
    CHECK(slurp(out2 / "metrics_table.csv") == metrics);
  }

  SUBCASE("an unwritable output directory fails before writing") {
    auto blocked = fresh_dir("harness_emit_blocked");
    io::write_file(blocked / "file", "x");
    CHECK(fails_with(Errc::io, [&] {
      emit_reports(summaries, records, {}, "h", blocked / "file");
    }));
  }

  SUBCASE("no summaries is an error") {
    CHECK(fails_with(Errc::insufficient_data, [&] {
      emit_reports({}, records, {}, "h", out);
    }));
  }
}

TEST_CASE("run_single writes run files and reports") {
  Workspace ws = make_workspace("harness_single");
  CHECK(run_single(ws.config, std::nullopt, std::nullopt) == 0);
  const auto out = ws.config.out_dir;
  for (const char* f :
       {"records_random_seed1.csv", "audit_random_seed1.jsonl",
        "summary_random_seed1.json", "learning_curves.csv", "metrics_table.csv",
        "runtime_table.csv", "wilcoxon.csv", "manifest.json"}) {
    CHECK(std::filesystem::exists(out / f));
  }
  auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["mode"] == "run");
  CHECK(manifest["wilcoxon"] == "not_applicable");
  CHECK(manifest["config_hash"] == config_hash(ws.config));

  SUBCASE("strategy and seed overrides change the stem") {
    CHECK(run_single(ws.config, std::string("entropy"), std::uint64_t{9}) == 0);
    CHECK(std::filesystem::exists(out / "records_entropy_seed9.csv"));
  }

  SUBCASE("the audit file has one line per audit entry") {
    std::string audit = slurp(out / "audit_random_seed1.jsonl");
    std::size_t lines = 0;
    for (char c : audit)
      if (c == '\n') ++lines;
    CHECK(lines == 3);  // seed draw + 2 query batches
    CHECK(audit.rfind("{\"iteration\":0,\"strategy\":\"seed\"", 0) == 0);
  }
}

TEST_CASE("run_suite runs the strategy x seed cross product") {
  Workspace ws = make_workspace(
      "harness_suite", "strategies = random, entropy\nseeds = 1,2,3,4,5\n");
  CHECK(ws.config.seeds.size() == 5);
  CHECK(run_suite(ws.config) == 0);
  const auto out = ws.config.out_dir;

  std::size_t run_files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("records_", 0) == 0 || name.rfind("audit_", 0) == 0 ||
        name.rfind("summary_", 0) == 0) {
      ++run_files;
    }
  }
  CHECK(run_files == 30);  // 2 strategies x 5 seeds x 3 files

  auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["mode"] == "suite");
  CHECK(manifest["runs"] == 10);
  CHECK(manifest["strategies"] ==
        nlohmann::json(std::vector<std::string>{"entropy", "random"}));

  // 5 common seeds -> a real Wilcoxon row
  const std::string wilcoxon = slurp(out / "wilcoxon.csv");
  CHECK(wilcoxon.rfind("strategy_a,strategy_b,n,statistic,p_two_sided,exact,"
                       "status\n", 0) == 0);
  CHECK(wilcoxon.find("entropy,random,5,") != std::string::npos);
  CHECK(wilcoxon.find(",ok\n") != std::string::npos);
  CHECK(wilcoxon.find(",true,ok") != std::string::npos);  // exact for n=5

  SUBCASE("rebuilding reports from the run files matches") {
    auto rebuilt = fresh_dir("harness_suite_rebuilt");
    report_from_dir(out, rebuilt);
    for (const char* f : {"learning_curves.csv", "metrics_table.csv",
                          "runtime_table.csv", "wilcoxon.csv"}) {
      CHECK(slurp(rebuilt / f) == slurp(out / f));
    }
    auto m1 = nlohmann::json::parse(slurp(out / "manifest.json"));
    auto m2 = nlohmann::json::parse(slurp(rebuilt / "manifest.json"));
    CHECK(m2["mode"] == "report");
    m1.erase("mode");
    m2.erase("mode");
    CHECK(m1 == m2);
  }

  SUBCASE("report_from_dir needs summaries") {
    auto empty = fresh_dir("harness_suite_empty");
    CHECK(fails_with(Errc::io, [&] { report_from_dir(empty, empty); }));
    CHECK(fails_with(Errc::io, [&] {
      report_from_dir(ws.dir / "missing", empty);
    }));
  }
}

TEST_CASE("suite results do not depend on the thread count") {
  Workspace ws = make_workspace(
      "harness_threads", "strategies = random, entropy\nseeds = 1,2\n");

  ExperimentConfig serial = ws.config;
  serial.out_dir = ws.dir / "out_serial";
  ExperimentConfig parallel = ws.config;
  parallel.out_dir = ws.dir / "out_parallel";

  setenv("ALBENCH_THREADS", "1", 1);
  CHECK(run_suite(serial) == 0);
  setenv("ALBENCH_THREADS", "4", 1);
  CHECK(run_suite(parallel) == 0);
  unsetenv("ALBENCH_THREADS");

  for (const char* stem :
       {"random_seed1", "random_seed2", "entropy_seed1", "entropy_seed2"}) {
    const std::string audit = "audit_" + std::string(stem) + ".jsonl";
    CHECK(slurp(serial.out_dir / audit) == slurp(parallel.out_dir / audit));
    const std::string records = "records_" + std::string(stem) + ".csv";
    CHECK(strip_runtime_column(slurp(serial.out_dir / records)) ==
          strip_runtime_column(slurp(parallel.out_dir / records)));
  }
  CHECK(slurp(serial.out_dir / "learning_curves.csv") ==
        slurp(parallel.out_dir / "learning_curves.csv"));
  CHECK(slurp(serial.out_dir / "metrics_table.csv") ==
        slurp(parallel.out_dir / "metrics_table.csv"));
  CHECK(slurp(serial.out_dir / "wilcoxon.csv") ==
        slurp(parallel.out_dir / "wilcoxon.csv"));
}

TEST_CASE("environment overrides") {
  unsetenv("ALBENCH_OUT_DIR");
  CHECK_FALSE(env_out_dir().has_value());
  setenv("ALBENCH_OUT_DIR", "/tmp/somewhere", 1);
  REQUIRE(env_out_dir().has_value());
  CHECK(*env_out_dir() == "/tmp/somewhere");
  unsetenv("ALBENCH_OUT_DIR");

  unsetenv("ALBENCH_THREADS");
  CHECK(suite_thread_count() == 1);
  setenv("ALBENCH_THREADS", "3", 1);
  CHECK(suite_thread_count() == 3);
  setenv("ALBENCH_THREADS", "zero", 1);
  WarningCapture warnings;
  CHECK(suite_thread_count() == 1);
  CHECK(warnings.any_contains("ALBENCH_THREADS"));
  unsetenv("ALBENCH_THREADS");
}

TEST_CASE("cli smoke") {
  const char* bin = std::getenv("ALBENCH_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "ALBENCH_BIN must point at the cli binary");
  Workspace ws = make_workspace("harness_cli");
  auto dir = fresh_dir("harness_cli_run");

  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(bin) + " " + args + " > " +
                            (dir / "stdout.txt").string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
  };

  CHECK(run("--version") == 0);
  CHECK(slurp(dir / "stdout.txt").find("albench") != std::string::npos);

  CHECK(run("validate-config --config " + ws.config_path.string()) == 0);
  {
    const std::string out = slurp(dir / "stdout.txt");
    CHECK(out.find("valid") != std::string::npos);
    CHECK(out.find("config_hash: " + config_hash(ws.config)) !=
          std::string::npos);
  }

  CHECK(run("validate-config --config /nonexistent.cfg") == 1);
  {
    const std::string err = slurp(dir / "stderr.txt");
    CHECK(err.find("error:") != std::string::npos);
    CHECK(err.find("\"code\"") != std::string::npos);
  }

  const auto cli_out = (ws.dir / "cli_out").string();
  CHECK(run("run --config " + ws.config_path.string() + " --strategy entropy" +
            " --seed 5 --out " + cli_out) == 0);
  CHECK(std::filesystem::exists(ws.dir / "cli_out" / "records_entropy_seed5.csv"));
  CHECK(std::filesystem::exists(ws.dir / "cli_out" / "manifest.json"));

  const auto report_out = (ws.dir / "cli_report").string();
  CHECK(run("report --in " + cli_out + " --out " + report_out) == 0);
  CHECK(std::filesystem::exists(ws.dir / "cli_report" / "metrics_table.csv"));

  CHECK(run("definitely-not-a-command") != 0);
  CHECK(run("run") != 0);  // --config is required
}
