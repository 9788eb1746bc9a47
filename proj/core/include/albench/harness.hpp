#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "albench/analysis.hpp"
#include "albench/dataset.hpp"
#include "albench/featurize.hpp"
#include "albench/model.hpp"
#include "albench/pool.hpp"
#include "albench/strategies.hpp"

namespace albench::harness {

// Flat key=value experiment configuration. See README for the key list.
struct ExperimentConfig {
  std::filesystem::path train_path;
  std::filesystem::path validation_path;
  featurize::CorpusFormat corpus_format = featurize::CorpusFormat::jsonl;
  std::filesystem::path train_embeddings;       // precomputed mode only
  std::filesystem::path validation_embeddings;  // precomputed mode only

  featurize::FeaturizerConfig featurizer;
  model::ClassifierConfig classifier;
  strategies::StrategyConfig strategy_config;
  std::vector<std::string> strategies = {"random"};

  int batch_size = 100;
  int iterations = 20;
  int seed_set_size = 0;  // 0 means "use batch_size"
  std::vector<std::uint64_t> seeds = {1};
  int knn_k = 10;
  std::filesystem::path out_dir = "out";

  int effective_seed_set_size() const {
    return seed_set_size > 0 ? seed_set_size : batch_size;
  }

  void validate() const;  // structural checks; throws Errc::config
};

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source_name);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical "key = value" rendering of the effective config (sorted keys);
// its FNV-1a hash identifies the experiment in the manifest.
std::string canonical_config_text(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

struct ExperimentRecord {
  int iteration = 0;
  int labeled_count = 0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  bool has_batch = false;  // final record carries no selection
  analysis::BatchMetrics batch;
  std::string strategy;
  std::uint64_t seed = 0;
};

struct RunSummary {
  std::string strategy;
  std::uint64_t seed = 0;
  int iterations_completed = 0;
  int final_labeled_count = 0;
  double entropy_q_mean = 0.0;
  double entropy_q_std = 0.0;
  double entropy_final_pool = 0.0;
  double diversity_mean = 0.0;
  double representativeness_mean = 0.0;
  double runtime_mean_s = 0.0;
  double final_macro_f1 = 0.0;
  double final_micro_f1 = 0.0;
  bool truncated = false;
};

struct RunResult {
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<ExperimentRecord> records;
  std::vector<strategies::QueryBatch> audit;  // seed draw at iteration 0,
                                              // then query batches 1..T
  RunSummary summary;
};

struct LoadedData {
  Dataset train;
  Dataset validation;
  FeatureMatrix train_features;
  FeatureMatrix validation_features;
};

// Parses and featurizes both splits; the featurizer is fit on train only.
LoadedData load_data(const ExperimentConfig& config);

// One seeded run of the select -> label -> retrain-from-scratch loop.
// Produces T+1 records (one per retrain) unless the pool is exhausted early,
// in which case the run truncates with a warning.
RunResult run_experiment(const ExperimentConfig& config, const LoadedData& data,
                         const std::string& strategy, std::uint64_t seed);

// --- file emission -------------------------------------------------------

std::string records_csv_header();
std::string records_to_csv(std::span<const ExperimentRecord> records);
std::vector<ExperimentRecord> parse_records_csv(const std::filesystem::path& path);

std::string run_summary_to_json(const RunSummary& summary);
RunSummary parse_run_summary_json(const std::string& text,
                                  const std::string& source_name);

std::string run_file_stem(const std::string& strategy, std::uint64_t seed);

// Writes records_<stem>.csv, audit_<stem>.jsonl, summary_<stem>.json.
void write_run_files(const RunResult& result,
                     const std::filesystem::path& out_dir);

// Merged tables: learning_curves.csv, metrics_table.csv, runtime_table.csv,
// wilcoxon.csv and manifest.json. Fails with Errc::io before writing anything
// if the output directory is not writable.
void emit_reports(std::span<const RunSummary> summaries,
                  std::span<const ExperimentRecord> records,
                  const std::vector<std::pair<std::string, std::string>>& manifest_extra,
                  const std::string& config_hash_hex,
                  const std::filesystem::path& out_dir);

// CLI entry points. Return the number of failed runs (0 == success).
int run_single(const ExperimentConfig& config,
               const std::optional<std::string>& strategy_override,
               const std::optional<std::uint64_t>& seed_override);
int run_suite(const ExperimentConfig& config);

// Rebuilds the merged reports from the per-run files found in `in_dir`.
void report_from_dir(const std::filesystem::path& in_dir,
                     const std::filesystem::path& out_dir);

// Env override hooks (output dir and thread count only).
std::optional<std::string> env_out_dir();
int suite_thread_count();

}  // namespace albench::harness
