#include "albench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>
#include <utility>

#include <json.hpp>

#include "albench/error.hpp"
#include "albench/io.hpp"
#include "albench/version.hpp"

namespace albench::harness {

namespace {

using json = nlohmann::json;

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void config_error(const std::string& source, std::size_t line,
                               const std::string& what) {
  fail(Errc::config, source + ":" + std::to_string(line) + ": " + what);
}

long long parse_ll(const std::string& value, const std::string& source,
                   std::size_t line) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    config_error(source, line, "expected an integer, got \"" + value + "\"");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& value, const std::string& source,
                        std::size_t line) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    config_error(source, line,
                 "expected an unsigned integer, got \"" + value + "\"");
  }
  return out;
}

double parse_double(const std::string& value, const std::string& source,
                    std::size_t line) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    config_error(source, line, "expected a number, got \"" + value + "\"");
  }
  return out;
}

bool parse_bool(const std::string& value, const std::string& source,
                std::size_t line) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  config_error(source, line, "expected true/false, got \"" + value + "\"");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto end = value.find(',', start);
    std::string part = trim(value.substr(
        start, end == std::string::npos ? std::string::npos : end - start));
    if (!part.empty()) parts.push_back(std::move(part));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return parts;
}

bool apply_classifier_key(model::ClassifierConfig& c, const std::string& sub,
                          const std::string& value, const std::string& source,
                          std::size_t line) {
  if (sub == "hidden_dim") {
    c.hidden_dim = static_cast<int>(parse_ll(value, source, line));
  } else if (sub == "dropout_rate") {
    c.dropout_rate = parse_double(value, source, line);
  } else if (sub == "learning_rate") {
    c.learning_rate = parse_double(value, source, line);
  } else if (sub == "epochs") {
    c.epochs = static_cast<int>(parse_ll(value, source, line));
  } else if (sub == "minibatch_size") {
    c.minibatch_size = static_cast<int>(parse_ll(value, source, line));
  } else if (sub == "l2_penalty") {
    c.l2_penalty = parse_double(value, source, line);
  } else if (sub == "optimizer") {
    try {
      c.optimizer = model::optimizer_from_name(value);
    } catch (const Error& e) {
      config_error(source, line, e.what());
    }
  } else {
    return false;
  }
  return true;
}

std::string bool_name(bool v) { return v ? "true" : "false"; }

void append_classifier_keys(std::vector<std::pair<std::string, std::string>>& kv,
                            const std::string& prefix,
                            const model::ClassifierConfig& c) {
  kv.emplace_back(prefix + ".hidden_dim", std::to_string(c.hidden_dim));
  kv.emplace_back(prefix + ".dropout_rate", io::format_g6(c.dropout_rate));
  kv.emplace_back(prefix + ".learning_rate", io::format_g6(c.learning_rate));
  kv.emplace_back(prefix + ".epochs", std::to_string(c.epochs));
  kv.emplace_back(prefix + ".minibatch_size", std::to_string(c.minibatch_size));
  kv.emplace_back(prefix + ".l2_penalty", io::format_g6(c.l2_penalty));
  kv.emplace_back(prefix + ".optimizer", model::optimizer_name(c.optimizer));
}

std::string join_list(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += parts[i];
  }
  return out;
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean_of(values);
  double sq = 0.0;
  for (double v : values) sq += (v - m) * (v - m);
  return std::sqrt(sq / static_cast<double>(values.size()));
}

// Reports are stated at 6 significant digits. Aggregating from the same
// quantized values that a rebuild parses back off disk keeps emit_reports
// byte-identical whether it is fed in-memory results or re-read run files.
double report_value(double v) {
  return std::strtod(io::format_g6(v).c_str(), nullptr);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (train_path.empty()) fail(Errc::config, "train_path is required");
  if (validation_path.empty()) fail(Errc::config, "validation_path is required");
  if (batch_size < 1) fail(Errc::config, "batch_size must be >= 1");
  if (iterations < 1) fail(Errc::config, "iterations must be >= 1");
  if (seed_set_size < 0) fail(Errc::config, "seed_set_size must be >= 0");
  if (knn_k < 1) fail(Errc::config, "knn_k must be >= 1");
  if (seeds.empty()) fail(Errc::config, "at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    fail(Errc::config, "duplicate seeds");
  }
  if (strategies.empty()) fail(Errc::config, "at least one strategy is required");
  std::set<std::string> canonical;
  for (const auto& s : strategies) {
    if (!canonical.insert(strategies::canonical_strategy_name(s)).second) {
      fail(Errc::config, "duplicate strategy \"" + s + "\"");
    }
  }
  if (out_dir.empty()) fail(Errc::config, "out_dir must not be empty");
  featurizer.validate();
  classifier.validate();
  strategy_config.validate();
  if (strategy_config.dal_sub_batches > batch_size) {
    fail(Errc::config, "dal_sub_batches must be <= batch_size");
  }
  if (featurizer.mode == featurize::FeaturizerConfig::Mode::precomputed &&
      (train_embeddings.empty() || validation_embeddings.empty())) {
    fail(Errc::config,
         "precomputed mode needs train_embeddings and validation_embeddings");
  }
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source_name) {
  ExperimentConfig config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    std::string line = trim(text.substr(
        start, end == std::string::npos ? std::string::npos : end - start));
    ++line_no;
    if (end == std::string::npos && start >= text.size()) break;
    start = end == std::string::npos ? text.size() + 1 : end + 1;
    if (line.empty() || line[0] == '#') continue;

    auto eq = line.find('=');
    if (eq == std::string::npos) {
      config_error(source_name, line_no, "expected \"key = value\"");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) config_error(source_name, line_no, "empty key");

    if (key == "train_path") {
      config.train_path = value;
    } else if (key == "validation_path") {
      config.validation_path = value;
    } else if (key == "corpus_format") {
      try {
        config.corpus_format = featurize::corpus_format_from_name(value);
      } catch (const Error& e) {
        config_error(source_name, line_no, e.what());
      }
    } else if (key == "train_embeddings") {
      config.train_embeddings = value;
    } else if (key == "validation_embeddings") {
      config.validation_embeddings = value;
    } else if (key == "featurizer.mode") {
      if (value == "hashed_tfidf") {
        config.featurizer.mode = featurize::FeaturizerConfig::Mode::hashed_tfidf;
      } else if (value == "precomputed") {
        config.featurizer.mode = featurize::FeaturizerConfig::Mode::precomputed;
      } else {
        config_error(source_name, line_no,
                     "featurizer.mode must be hashed_tfidf or precomputed");
      }
    } else if (key == "featurizer.hash_dim") {
      config.featurizer.hash_dim =
          static_cast<int>(parse_ll(value, source_name, line_no));
    } else if (key == "featurizer.lowercase") {
      config.featurizer.lowercase = parse_bool(value, source_name, line_no);
    } else if (key == "featurizer.sublinear_tf") {
      config.featurizer.sublinear_tf = parse_bool(value, source_name, line_no);
    } else if (key == "featurizer.l2_normalize") {
      config.featurizer.l2_normalize = parse_bool(value, source_name, line_no);
    } else if (key.rfind("classifier.", 0) == 0) {
      if (!apply_classifier_key(config.classifier, key.substr(11), value,
                                source_name, line_no)) {
        config_error(source_name, line_no, "unknown key \"" + key + "\"");
      }
    } else if (key.rfind("dal.", 0) == 0) {
      if (!apply_classifier_key(config.strategy_config.dal_discriminator,
                                key.substr(4), value, source_name, line_no)) {
        config_error(source_name, line_no, "unknown key \"" + key + "\"");
      }
    } else if (key == "strategy.mc_passes") {
      config.strategy_config.mc_passes =
          static_cast<int>(parse_ll(value, source_name, line_no));
    } else if (key == "strategy.dal_sub_batches") {
      config.strategy_config.dal_sub_batches =
          static_cast<int>(parse_ll(value, source_name, line_no));
    } else if (key == "strategy.use_raw_features") {
      config.strategy_config.use_raw_features =
          parse_bool(value, source_name, line_no);
    } else if (key == "strategies") {
      config.strategies = split_list(value);
    } else if (key == "batch_size") {
      config.batch_size = static_cast<int>(parse_ll(value, source_name, line_no));
    } else if (key == "iterations") {
      config.iterations = static_cast<int>(parse_ll(value, source_name, line_no));
    } else if (key == "seed_set_size") {
      config.seed_set_size =
          static_cast<int>(parse_ll(value, source_name, line_no));
    } else if (key == "seeds") {
      config.seeds.clear();
      for (const auto& part : split_list(value)) {
        config.seeds.push_back(parse_u64(part, source_name, line_no));
      }
    } else if (key == "knn_k") {
      config.knn_k = static_cast<int>(parse_ll(value, source_name, line_no));
    } else if (key == "out_dir") {
      config.out_dir = value;
    } else {
      config_error(source_name, line_no, "unknown key \"" + key + "\"");
    }
  }
  try {
    config.validate();
  } catch (const Error& e) {
    fail(Errc::config, source_name + ": " + e.what());
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config_text(io::read_file(path), path.string());
}

std::string canonical_config_text(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("train_path", config.train_path.string());
  kv.emplace_back("validation_path", config.validation_path.string());
  kv.emplace_back("corpus_format",
                  featurize::corpus_format_name(config.corpus_format));
  kv.emplace_back("train_embeddings", config.train_embeddings.string());
  kv.emplace_back("validation_embeddings",
                  config.validation_embeddings.string());
  kv.emplace_back("featurizer.mode",
                  config.featurizer.mode ==
                          featurize::FeaturizerConfig::Mode::hashed_tfidf
                      ? "hashed_tfidf"
                      : "precomputed");
  kv.emplace_back("featurizer.hash_dim",
                  std::to_string(config.featurizer.hash_dim));
  kv.emplace_back("featurizer.lowercase", bool_name(config.featurizer.lowercase));
  kv.emplace_back("featurizer.sublinear_tf",
                  bool_name(config.featurizer.sublinear_tf));
  kv.emplace_back("featurizer.l2_normalize",
                  bool_name(config.featurizer.l2_normalize));
  append_classifier_keys(kv, "classifier", config.classifier);
  append_classifier_keys(kv, "dal", config.strategy_config.dal_discriminator);
  kv.emplace_back("strategy.mc_passes",
                  std::to_string(config.strategy_config.mc_passes));
  kv.emplace_back("strategy.dal_sub_batches",
                  std::to_string(config.strategy_config.dal_sub_batches));
  kv.emplace_back("strategy.use_raw_features",
                  bool_name(config.strategy_config.use_raw_features));
  std::vector<std::string> canonical_strategies;
  for (const auto& s : config.strategies) {
    canonical_strategies.push_back(strategies::canonical_strategy_name(s));
  }
  kv.emplace_back("strategies", join_list(canonical_strategies));
  kv.emplace_back("batch_size", std::to_string(config.batch_size));
  kv.emplace_back("iterations", std::to_string(config.iterations));
  kv.emplace_back("seed_set_size", std::to_string(config.seed_set_size));
  std::vector<std::string> seed_strs;
  for (auto s : config.seeds) seed_strs.push_back(std::to_string(s));
  kv.emplace_back("seeds", join_list(seed_strs));
  kv.emplace_back("knn_k", std::to_string(config.knn_k));
  // out_dir intentionally left out: where results land is not part of the
  // experiment's identity.
  std::sort(kv.begin(), kv.end());
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += " = ";
    out += v;
    out.push_back('\n');
  }
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::uint64_t h = featurize::fnv1a64(canonical_config_text(config));
  char buf[17];
  static const char* kHex = "0123456789abcdef";
  for (int i = 0; i < 16; ++i) {
    buf[i] = kHex[(h >> (60 - 4 * i)) & 0xF];
  }
  buf[16] = '\0';
  return buf;
}

LoadedData load_data(const ExperimentConfig& config) {
  config.validate();
  LoadedData data;
  data.train = featurize::parse_corpus(config.train_path, config.corpus_format,
                                       Split::train);
  data.validation =
      featurize::parse_corpus(config.validation_path, config.corpus_format,
                              Split::validation, data.train.class_names);

  if (config.featurizer.mode == featurize::FeaturizerConfig::Mode::hashed_tfidf) {
    auto fitted = featurize::fit_featurizer(data.train, config.featurizer);
    data.train_features = fitted.transform(data.train);
    data.validation_features = fitted.transform(data.validation);
  } else {
    data.train_features =
        featurize::load_embeddings(config.train_embeddings, data.train.size());
    data.validation_features = featurize::load_embeddings(
        config.validation_embeddings, data.validation.size());
    if (data.train_features.cols() != data.validation_features.cols()) {
      fail(Errc::shape, "train and validation embeddings have different dims");
    }
  }

  const auto seed_size =
      static_cast<std::size_t>(config.effective_seed_set_size());
  if (seed_size > data.train.size()) {
    fail(Errc::config, "seed set of " + std::to_string(seed_size) +
                           " exceeds the train split (" +
                           std::to_string(data.train.size()) + " instances)");
  }
  const std::size_t budget =
      seed_size + static_cast<std::size_t>(config.batch_size) *
                      static_cast<std::size_t>(config.iterations);
  if (budget > data.train.size()) {
    log_warning("label budget " + std::to_string(budget) +
                " exceeds the train split (" + std::to_string(data.train.size()) +
                "); runs will truncate at exhaustion");
  }
  return data;
}

RunResult run_experiment(const ExperimentConfig& config, const LoadedData& data,
                         const std::string& strategy, std::uint64_t seed) {
  const std::string name = strategies::canonical_strategy_name(strategy);
  const Index num_classes = data.train.num_classes;
  const auto oracle = data.train.labels();
  const auto actual = data.validation.labels();

  Pool pool = Pool::of_unlabeled(oracle, num_classes);
  const auto seed_size =
      static_cast<std::size_t>(config.effective_seed_set_size());
  if (seed_size > pool.size()) {
    fail(Errc::config, "seed set exceeds the train split");
  }

  RunResult result;
  result.strategy = name;
  result.seed = seed;

  Rng init_rng = Rng::stream(seed, "init");
  auto seed_indices = init_rng.sample_without_replacement(
      std::span<const Index>(pool.unlabeled()), seed_size);
  std::sort(seed_indices.begin(), seed_indices.end());
  strategies::QueryBatch seed_batch;
  seed_batch.strategy_name = "seed";
  seed_batch.iteration = 0;
  seed_batch.indices = seed_indices;
  seed_batch.scores.assign(seed_indices.size(), 0.0);
  pool = label_instances(pool, seed_indices);
  result.audit.push_back(std::move(seed_batch));

  std::vector<Index> all_indices(pool.size());
  std::iota(all_indices.begin(), all_indices.end(), 0);
  const LabelDistribution ground_truth =
      empirical_label_distribution(pool, all_indices);

  std::vector<double> batch_entropies, batch_diversities, batch_reprs_scores,
      batch_runtimes;
  bool truncated = false;

  for (int i = 0; i <= config.iterations; ++i) {
    const auto& labeled = pool.labeled();
    std::vector<Index> labels;
    labels.reserve(labeled.size());
    for (Index idx : labeled) {
      labels.push_back(oracle[static_cast<std::size_t>(idx)]);
    }
    auto state = model::train_from_scratch(
        data.train_features.select_rows(labeled), labels, num_classes,
        config.classifier, Rng::stream(seed, "train", static_cast<std::uint64_t>(i)));

    ExperimentRecord record;
    record.iteration = i;
    record.labeled_count = static_cast<int>(labeled.size());
    auto predicted = model::predict_labels(state, data.validation_features);
    record.macro_f1 = analysis::macro_f1(predicted, actual, num_classes);
    record.micro_f1 = analysis::micro_f1(predicted, actual, num_classes);
    record.strategy = name;
    record.seed = seed;

    if (i == config.iterations) {
      result.records.push_back(std::move(record));
      break;
    }
    if (pool.unlabeled().empty()) {
      truncated = true;
      log_warning(name + " seed " + std::to_string(seed) +
                  ": pool exhausted after " + std::to_string(i) +
                  " iterations; truncating");
      result.records.push_back(std::move(record));
      break;
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto batch = strategies::select(
        name, pool, data.train_features, state, config.batch_size,
        config.strategy_config,
        Rng::stream(seed, "strategy:" + name, static_cast<std::uint64_t>(i) + 1));
    const auto t1 = std::chrono::steady_clock::now();
    batch.iteration = i + 1;
    record.batch.selection_runtime_s =
        std::chrono::duration<double>(t1 - t0).count();

    FeatureMatrix hidden;
    const FeatureMatrix* reprs = &data.train_features;
    if (!config.strategy_config.use_raw_features) {
      hidden = model::hidden_repr(state, data.train_features);
      reprs = &hidden;
    }
    try {
      record.batch.diversity =
          analysis::diversity(reprs->select_rows(batch.indices), *reprs);
    } catch (const Error& e) {
      if (e.code() != Errc::undefined_metric) throw;
      log_warning(std::string("diversity undefined (") + e.what() +
                  "); recording 0");
      record.batch.diversity = 0.0;
    }
    try {
      record.batch.representativeness = analysis::representativeness(
          batch.indices, pool, *reprs, config.knn_k);
    } catch (const Error& e) {
      if (e.code() != Errc::undefined_metric) throw;
      log_warning(std::string("representativeness undefined (") + e.what() +
                  "); recording 0");
      record.batch.representativeness = 0.0;
    }
    const LabelDistribution batch_dist =
        empirical_label_distribution(pool, batch.indices);
    record.batch.label_entropy = analysis::label_entropy(batch_dist);
    record.batch.kl_to_ground_truth =
        analysis::kl_divergence(ground_truth, batch_dist);
    record.has_batch = true;

    batch_entropies.push_back(record.batch.label_entropy);
    batch_diversities.push_back(record.batch.diversity);
    batch_reprs_scores.push_back(record.batch.representativeness);
    batch_runtimes.push_back(record.batch.selection_runtime_s);

    pool = label_instances(pool, batch.indices);
    result.audit.push_back(std::move(batch));
    result.records.push_back(std::move(record));
  }

  RunSummary& summary = result.summary;
  summary.strategy = name;
  summary.seed = seed;
  summary.iterations_completed = static_cast<int>(result.audit.size()) - 1;
  summary.final_labeled_count = static_cast<int>(pool.labeled().size());
  const LabelDistribution final_dist =
      empirical_label_distribution(pool, pool.labeled());
  if (!batch_entropies.empty()) {
    auto agg = analysis::aggregate_entropies(batch_entropies, final_dist);
    summary.entropy_q_mean = agg.per_query_mean;
    summary.entropy_q_std = agg.per_query_std;
    summary.entropy_final_pool = agg.final_pool_entropy;
  } else {
    summary.entropy_final_pool = analysis::label_entropy(final_dist);
  }
  summary.diversity_mean = mean_of(batch_diversities);
  summary.representativeness_mean = mean_of(batch_reprs_scores);
  summary.runtime_mean_s = mean_of(batch_runtimes);
  summary.final_macro_f1 = result.records.back().macro_f1;
  summary.final_micro_f1 = result.records.back().micro_f1;
  summary.truncated = truncated;
  return result;
}

std::string records_csv_header() {
  return "iteration,labeled_count,macro_f1,micro_f1,diversity,"
         "representativeness,label_entropy,kl_to_ground_truth,"
         "selection_runtime_s,strategy,seed\n";
}

std::string records_to_csv(std::span<const ExperimentRecord> records) {
  std::string out;
  for (const auto& r : records) {
    std::vector<std::string> fields = {
        std::to_string(r.iteration),
        std::to_string(r.labeled_count),
        io::format_g6(r.macro_f1),
        io::format_g6(r.micro_f1),
    };
    if (r.has_batch) {
      fields.push_back(io::format_g6(r.batch.diversity));
      fields.push_back(io::format_g6(r.batch.representativeness));
      fields.push_back(io::format_g6(r.batch.label_entropy));
      fields.push_back(io::format_g6(r.batch.kl_to_ground_truth));
      fields.push_back(io::format_g6(r.batch.selection_runtime_s));
    } else {
      fields.insert(fields.end(), 5, "");
    }
    fields.push_back(r.strategy);
    fields.push_back(std::to_string(r.seed));
    out += io::csv_row(fields);
  }
  return out;
}

std::vector<ExperimentRecord> parse_records_csv(
    const std::filesystem::path& path) {
  auto rows = io::read_csv(path);
  if (rows.empty()) fail(Errc::format, path.string() + ": empty records file");
  const auto header = io::parse_csv_text(records_csv_header(), "header");
  if (rows.front() != header.front()) {
    fail(Errc::format, path.string() + ": unexpected records header");
  }
  std::vector<ExperimentRecord> records;
  for (std::size_t n = 1; n < rows.size(); ++n) {
    const auto& row = rows[n];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.front().size()) {
      fail(Errc::format, path.string() + ":" + std::to_string(n + 1) +
                             ": wrong column count");
    }
    auto num = [&](const std::string& field) {
      double out = 0.0;
      auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), out);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        fail(Errc::format, path.string() + ":" + std::to_string(n + 1) +
                               ": bad number \"" + field + "\"");
      }
      return out;
    };
    ExperimentRecord r;
    r.iteration = static_cast<int>(num(row[0]));
    r.labeled_count = static_cast<int>(num(row[1]));
    r.macro_f1 = num(row[2]);
    r.micro_f1 = num(row[3]);
    r.has_batch = !row[4].empty();
    if (r.has_batch) {
      r.batch.diversity = num(row[4]);
      r.batch.representativeness = num(row[5]);
      r.batch.label_entropy = num(row[6]);
      r.batch.kl_to_ground_truth = num(row[7]);
      r.batch.selection_runtime_s = num(row[8]);
    }
    r.strategy = row[9];
    r.seed = static_cast<std::uint64_t>(num(row[10]));
    records.push_back(std::move(r));
  }
  return records;
}

std::string run_summary_to_json(const RunSummary& summary) {
  std::string out = "{";
  out += "\"strategy\":\"" + io::json_escape(summary.strategy) + "\"";
  out += ",\"seed\":" + std::to_string(summary.seed);
  out += ",\"iterations_completed\":" + std::to_string(summary.iterations_completed);
  out += ",\"final_labeled_count\":" + std::to_string(summary.final_labeled_count);
  out += ",\"entropy_q_mean\":" + io::format_g6(summary.entropy_q_mean);
  out += ",\"entropy_q_std\":" + io::format_g6(summary.entropy_q_std);
  out += ",\"entropy_final_pool\":" + io::format_g6(summary.entropy_final_pool);
  out += ",\"diversity_mean\":" + io::format_g6(summary.diversity_mean);
  out += ",\"representativeness_mean\":" +
         io::format_g6(summary.representativeness_mean);
  out += ",\"runtime_mean_s\":" + io::format_g6(summary.runtime_mean_s);
  out += ",\"final_macro_f1\":" + io::format_g6(summary.final_macro_f1);
  out += ",\"final_micro_f1\":" + io::format_g6(summary.final_micro_f1);
  out += std::string(",\"truncated\":") + (summary.truncated ? "true" : "false");
  out += "}\n";
  return out;
}

RunSummary parse_run_summary_json(const std::string& text,
                                  const std::string& source_name) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    fail(Errc::format, source_name + ": not a JSON object");
  }
  RunSummary s;
  try {
    s.strategy = j.at("strategy").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.iterations_completed = j.at("iterations_completed").get<int>();
    s.final_labeled_count = j.at("final_labeled_count").get<int>();
    s.entropy_q_mean = j.at("entropy_q_mean").get<double>();
    s.entropy_q_std = j.at("entropy_q_std").get<double>();
    s.entropy_final_pool = j.at("entropy_final_pool").get<double>();
    s.diversity_mean = j.at("diversity_mean").get<double>();
    s.representativeness_mean = j.at("representativeness_mean").get<double>();
    s.runtime_mean_s = j.at("runtime_mean_s").get<double>();
    s.final_macro_f1 = j.at("final_macro_f1").get<double>();
    s.final_micro_f1 = j.at("final_micro_f1").get<double>();
    s.truncated = j.at("truncated").get<bool>();
  } catch (const json::exception& e) {
    fail(Errc::format, source_name + ": " + e.what());
  }
  return s;
}

std::string run_file_stem(const std::string& strategy, std::uint64_t seed) {
  return strategy + "_seed" + std::to_string(seed);
}

void write_run_files(const RunResult& result,
                     const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    fail(Errc::io, "cannot create " + out_dir.string() + ": " + ec.message());
  }
  const std::string stem = run_file_stem(result.strategy, result.seed);
  io::write_file(out_dir / ("records_" + stem + ".csv"),
                 records_csv_header() + records_to_csv(result.records));
  std::string audit;
  for (const auto& batch : result.audit) {
    audit += strategies::to_audit_json(batch);
    audit.push_back('\n');
  }
  io::write_file(out_dir / ("audit_" + stem + ".jsonl"), audit);
  io::write_file(out_dir / ("summary_" + stem + ".json"),
                 run_summary_to_json(result.summary));
}

namespace {

std::vector<RunSummary> sorted_summaries(std::span<const RunSummary> summaries) {
  std::vector<RunSummary> out(summaries.begin(), summaries.end());
  std::sort(out.begin(), out.end(), [](const RunSummary& a, const RunSummary& b) {
    if (a.strategy != b.strategy) return a.strategy < b.strategy;
    return a.seed < b.seed;
  });
  return out;
}

std::vector<ExperimentRecord> sorted_records(
    std::span<const ExperimentRecord> records) {
  std::vector<ExperimentRecord> out(records.begin(), records.end());
  std::sort(out.begin(), out.end(),
            [](const ExperimentRecord& a, const ExperimentRecord& b) {
              if (a.strategy != b.strategy) return a.strategy < b.strategy;
              if (a.seed != b.seed) return a.seed < b.seed;
              return a.iteration < b.iteration;
            });
  return out;
}

}  // namespace

void emit_reports(std::span<const RunSummary> summaries,
                  std::span<const ExperimentRecord> records,
                  const std::vector<std::pair<std::string, std::string>>& manifest_extra,
                  const std::string& config_hash_hex,
                  const std::filesystem::path& out_dir) {
  if (summaries.empty()) fail(Errc::insufficient_data, "no run summaries");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    fail(Errc::io, "cannot create " + out_dir.string() + ": " + ec.message());
  }
  // Probe writability up front so a read-only directory fails before any
  // report file is partially written.
  const auto probe = out_dir / ".albench_write_probe";
  try {
    io::write_file(probe, "");
  } catch (const Error&) {
    fail(Errc::io, "output directory " + out_dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);

  const auto sums = sorted_summaries(summaries);
  const auto recs = sorted_records(records);

  std::string curves = "strategy,seed,iteration,labeled_count,macro_f1,micro_f1\n";
  for (const auto& r : recs) {
    curves += io::csv_row({r.strategy, std::to_string(r.seed),
                           std::to_string(r.iteration),
                           std::to_string(r.labeled_count),
                           io::format_g6(r.macro_f1), io::format_g6(r.micro_f1)});
  }

  std::vector<std::string> strategy_order;
  std::map<std::string, std::vector<const RunSummary*>> by_strategy;
  for (const auto& s : sums) {
    if (!by_strategy.count(s.strategy)) strategy_order.push_back(s.strategy);
    by_strategy[s.strategy].push_back(&s);
  }

  std::string metrics =
      "strategy,runs,diversity,representativeness,entropy_q_mean,"
      "entropy_q_std_iterations,entropy_q_std_seeds,entropy_final_pool,"
      "final_macro_f1,final_micro_f1\n";
  for (const auto& name : strategy_order) {
    const auto& runs = by_strategy[name];
    std::vector<double> div, rep, qmean, qstd, fpool, mf1, uf1;
    for (const auto* s : runs) {
      div.push_back(report_value(s->diversity_mean));
      rep.push_back(report_value(s->representativeness_mean));
      qmean.push_back(report_value(s->entropy_q_mean));
      qstd.push_back(report_value(s->entropy_q_std));
      fpool.push_back(report_value(s->entropy_final_pool));
      mf1.push_back(report_value(s->final_macro_f1));
      uf1.push_back(report_value(s->final_micro_f1));
    }
    metrics += io::csv_row(
        {name, std::to_string(runs.size()), io::format_g6(mean_of(div)),
         io::format_g6(mean_of(rep)), io::format_g6(mean_of(qmean)),
         io::format_g6(mean_of(qstd)), io::format_g6(population_std(qmean)),
         io::format_g6(mean_of(fpool)), io::format_g6(mean_of(mf1)),
         io::format_g6(mean_of(uf1))});
  }

  std::string runtime =
      "strategy,selections,mean_selection_s,min_selection_s,max_selection_s\n";
  for (const auto& name : strategy_order) {
    std::vector<double> times;
    for (const auto& r : recs) {
      if (r.strategy == name && r.has_batch) {
        times.push_back(report_value(r.batch.selection_runtime_s));
      }
    }
    if (times.empty()) {
      runtime += io::csv_row({name, "0", "", "", ""});
      continue;
    }
    runtime += io::csv_row(
        {name, std::to_string(times.size()), io::format_g6(mean_of(times)),
         io::format_g6(*std::min_element(times.begin(), times.end())),
         io::format_g6(*std::max_element(times.begin(), times.end()))});
  }

  // Pairwise Wilcoxon over per-seed mean per-query label entropies.
  std::string wilcoxon =
      "strategy_a,strategy_b,n,statistic,p_two_sided,exact,status\n";
  bool any_pair = false;
  for (std::size_t a = 0; a < strategy_order.size(); ++a) {
    for (std::size_t b = a + 1; b < strategy_order.size(); ++b) {
      any_pair = true;
      std::map<std::uint64_t, double> ea, eb;
      for (const auto* s : by_strategy[strategy_order[a]]) {
        ea[s->seed] = report_value(s->entropy_q_mean);
      }
      for (const auto* s : by_strategy[strategy_order[b]]) {
        eb[s->seed] = report_value(s->entropy_q_mean);
      }
      std::vector<double> x, y;
      for (const auto& [seed, value] : ea) {
        auto it = eb.find(seed);
        if (it != eb.end()) {
          x.push_back(value);
          y.push_back(it->second);
        }
      }
      std::string row_status = "ok";
      analysis::WilcoxonResult w;
      try {
        w = analysis::wilcoxon_signed_rank(x, y);
      } catch (const Error& e) {
        if (e.code() != Errc::insufficient_data) throw;
        row_status = "insufficient_data";
      }
      if (row_status == "ok") {
        wilcoxon += io::csv_row({strategy_order[a], strategy_order[b],
                                 std::to_string(w.n), io::format_g6(w.statistic),
                                 io::format_g6(w.p_two_sided),
                                 w.exact ? "true" : "false", row_status});
      } else {
        wilcoxon += io::csv_row({strategy_order[a], strategy_order[b],
                                 std::to_string(x.size()), "", "", "",
                                 row_status});
      }
    }
  }

  json manifest = json::object();
  std::vector<std::string> file_list = {"learning_curves.csv",
                                        "metrics_table.csv", "runtime_table.csv",
                                        "wilcoxon.csv", "manifest.json"};
  manifest["tool"] = "albench";
  manifest["version"] = kVersion;
  manifest["config_hash"] = config_hash_hex;
  manifest["strategies"] = strategy_order;
  std::vector<std::string> seed_list;
  {
    std::set<std::uint64_t> seen;
    for (const auto& s : sums) seen.insert(s.seed);
    for (auto s : seen) seed_list.push_back(std::to_string(s));
  }
  manifest["seeds"] = seed_list;
  manifest["runs"] = sums.size();
  manifest["wilcoxon"] = any_pair ? "emitted" : "not_applicable";
  manifest["files"] = file_list;
  for (const auto& [k, v] : manifest_extra) manifest[k] = v;

  io::write_file(out_dir / "learning_curves.csv", curves);
  io::write_file(out_dir / "metrics_table.csv", metrics);
  io::write_file(out_dir / "runtime_table.csv", runtime);
  io::write_file(out_dir / "wilcoxon.csv", wilcoxon);
  io::write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

int run_single(const ExperimentConfig& config,
               const std::optional<std::string>& strategy_override,
               const std::optional<std::uint64_t>& seed_override) {
  config.validate();
  const std::string strategy = strategies::canonical_strategy_name(
      strategy_override.value_or(config.strategies.front()));
  const std::uint64_t seed = seed_override.value_or(config.seeds.front());

  LoadedData data = load_data(config);
  RunResult result = run_experiment(config, data, strategy, seed);
  write_run_files(result, config.out_dir);
  emit_reports(std::span<const RunSummary>(&result.summary, 1), result.records,
               {{"mode", "run"}}, config_hash(config), config.out_dir);
  return 0;
}

int run_suite(const ExperimentConfig& config) {
  config.validate();
  LoadedData data = load_data(config);

  struct Task {
    std::string strategy;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& s : config.strategies) {
    const std::string name = strategies::canonical_strategy_name(s);
    for (std::uint64_t seed : config.seeds) tasks.push_back({name, seed});
  }

  std::vector<std::optional<RunResult>> results(tasks.size());
  std::vector<std::string> failures(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        results[i] = run_experiment(config, data, tasks[i].strategy,
                                    tasks[i].seed);
      } catch (const Error& e) {
        failures[i] = std::string(e.code_name()) + ": " + e.what();
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };

  const int threads = std::min<int>(suite_thread_count(),
                                    static_cast<int>(tasks.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    for (int t = 0; t < threads; ++t) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
  }

  int failed = 0;
  std::vector<RunSummary> summaries;
  std::vector<ExperimentRecord> records;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!results[i]) {
      ++failed;
      log_warning("run " + tasks[i].strategy + " seed " +
                  std::to_string(tasks[i].seed) + " failed: " + failures[i]);
      continue;
    }
    write_run_files(*results[i], config.out_dir);
    summaries.push_back(results[i]->summary);
    records.insert(records.end(), results[i]->records.begin(),
                   results[i]->records.end());
  }
  if (!summaries.empty()) {
    emit_reports(summaries, records, {{"mode", "suite"}}, config_hash(config),
                 config.out_dir);
  }
  return failed;
}

void report_from_dir(const std::filesystem::path& in_dir,
                     const std::filesystem::path& out_dir) {
  if (!std::filesystem::is_directory(in_dir)) {
    fail(Errc::io, in_dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> entries;
  for (const auto& entry : std::filesystem::directory_iterator(in_dir)) {
    entries.push_back(entry.path());
  }
  std::sort(entries.begin(), entries.end());

  std::vector<RunSummary> summaries;
  std::vector<ExperimentRecord> records;
  std::string hash = "unknown";
  for (const auto& path : entries) {
    const std::string name = path.filename().string();
    if (name.rfind("summary_", 0) == 0 && path.extension() == ".json") {
      summaries.push_back(
          parse_run_summary_json(io::read_file(path), path.string()));
    } else if (name.rfind("records_", 0) == 0 && path.extension() == ".csv") {
      auto parsed = parse_records_csv(path);
      records.insert(records.end(), parsed.begin(), parsed.end());
    } else if (name == "manifest.json") {
      json j = json::parse(io::read_file(path), nullptr, false);
      if (j.is_object() && j.contains("config_hash") &&
          j["config_hash"].is_string()) {
        hash = j["config_hash"].get<std::string>();
      }
    }
  }
  if (summaries.empty()) {
    fail(Errc::io, "no summary_*.json files found in " + in_dir.string());
  }
  emit_reports(summaries, records, {{"mode", "report"}}, hash, out_dir);
}

std::optional<std::string> env_out_dir() {
  if (const char* v = std::getenv("ALBENCH_OUT_DIR"); v && *v) {
    return std::string(v);
  }
  return std::nullopt;
}

int suite_thread_count() {
  if (const char* v = std::getenv("ALBENCH_THREADS"); v && *v) {
    int threads = 0;
    auto [ptr, ec] = std::from_chars(v, v + std::strlen(v), threads);
    if (ec == std::errc{} && ptr == v + std::strlen(v) && threads >= 1) {
      return threads;
    }
    log_warning(std::string("ignoring invalid ALBENCH_THREADS=\"") + v + "\"");
  }
  return 1;
}

}  // namespace albench::harness
