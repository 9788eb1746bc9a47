#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "albench/model.hpp"
#include "albench/pool.hpp"
#include "albench/rng.hpp"

namespace albench::strategies {

// One acquisition round: at most B distinct unlabeled indices, in selection
// order, with a per-selection diagnostic score (entropy, expected gradient
// norm, min-distance, discriminator probability; 0 for random).
struct QueryBatch {
  std::vector<Index> indices;
  std::vector<double> scores;
  std::string strategy_name;
  int iteration = 0;
};

struct StrategyConfig {
  int mc_passes = 20;
  int dal_sub_batches = 10;
  model::ClassifierConfig dal_discriminator;  // binary head, C = 2
  bool use_raw_features = false;  // core-set/DAL on raw inputs instead of
                                  // hidden representations

  void validate() const;
};

QueryBatch select_random(const Pool& pool, int batch_size, Rng rng);

// Top-B unlabeled rows by prediction entropy H(p) = -sum p ln p (0 ln 0 = 0),
// ties to the lower index. `probs` must cover all instances.
QueryBatch select_entropy(const Pool& pool, const ProbMatrix& probs,
                          int batch_size);

// score(i) = sum_y p(y|x_i) * per_example_grad_norm(state, features, y, i).
QueryBatch select_egl(const Pool& pool, const model::ClassifierState& state,
                      const FeatureMatrix& features, int batch_size);

// Entropy ranking over MC-dropout averaged probabilities.
QueryBatch select_dbal(const Pool& pool, const model::ClassifierState& state,
                       const FeatureMatrix& features, int batch_size,
                       int mc_passes, Rng rng);

// Greedy k-center (farthest-first) in representation space, seeded with the
// labeled set's representations. Scores are the max-min distances at
// selection time.
QueryBatch select_coreset(const Pool& pool, const FeatureMatrix& reprs,
                          int batch_size);

// Discriminative selection: per sub-batch, train a fresh binary discriminator
// (labeled + already selected = 0, rest of the pool = 1) on the
// representations and take the instances it most confidently calls unlabeled.
QueryBatch select_dal(const Pool& pool, const FeatureMatrix& reprs,
                      int batch_size, const StrategyConfig& config, Rng rng);

const std::vector<std::string>& strategy_names();

// Lowercases and validates against the known set; throws Errc::config.
std::string canonical_strategy_name(std::string_view name);

// Dispatch by name. Computes whatever the strategy needs (probabilities,
// representations, gradients) from the trained state, so wall-clock around
// this call is the full selection cost of the strategy.
QueryBatch select(std::string_view strategy_name, const Pool& pool,
                  const FeatureMatrix& features,
                  const model::ClassifierState& state, int batch_size,
                  const StrategyConfig& config, Rng rng);

// One JSONL audit line: {"iteration":..,"strategy":"..","indices":[..],"scores":[..]}
std::string to_audit_json(const QueryBatch& batch);

}  // namespace albench::strategies
