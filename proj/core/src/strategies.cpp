#include "albench/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "albench/error.hpp"
#include "albench/io.hpp"

namespace albench::strategies {

namespace {

void check_batch_size(int batch_size) {
  if (batch_size < 1) {
    fail(Errc::config, "batch size must be >= 1, got " +
                           std::to_string(batch_size));
  }
}

void check_coverage(const Pool& pool, const Matrix& m, const char* what) {
  if (m.rows() != pool.size()) {
    fail(Errc::shape, std::string(what) + " cover " + std::to_string(m.rows()) +
                          " rows for a pool of " + std::to_string(pool.size()));
  }
}

const std::vector<Index>& require_candidates(const Pool& pool) {
  if (pool.unlabeled().empty()) {
    fail(Errc::exhausted_pool, "no unlabeled instances left");
  }
  return pool.unlabeled();
}

double row_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

// Top-b candidates by descending score, ascending index on ties.
QueryBatch take_top(const std::vector<Index>& candidates,
                    const std::vector<double>& scores, int b,
                    std::string strategy_name) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    if (scores[a] != scores[c]) return scores[a] > scores[c];
    return candidates[a] < candidates[c];
  });
  const std::size_t take =
      std::min(candidates.size(), static_cast<std::size_t>(b));
  QueryBatch batch;
  batch.strategy_name = std::move(strategy_name);
  batch.indices.reserve(take);
  batch.scores.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    batch.indices.push_back(candidates[order[i]]);
    batch.scores.push_back(scores[order[i]]);
  }
  return batch;
}

QueryBatch entropy_ranking(const Pool& pool, const ProbMatrix& probs,
                           int batch_size, std::string strategy_name) {
  check_batch_size(batch_size);
  check_coverage(pool, probs, "probabilities");
  const auto& candidates = require_candidates(pool);
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i] = row_entropy(probs.row(static_cast<std::size_t>(candidates[i])));
  }
  return take_top(candidates, scores, batch_size, std::move(strategy_name));
}

}  // namespace

void StrategyConfig::validate() const {
  if (mc_passes < 1) fail(Errc::config, "mc_passes must be >= 1");
  if (dal_sub_batches < 1) fail(Errc::config, "dal_sub_batches must be >= 1");
  dal_discriminator.validate();
}

QueryBatch select_random(const Pool& pool, int batch_size, Rng rng) {
  check_batch_size(batch_size);
  const auto& candidates = require_candidates(pool);
  auto picked = rng.sample_without_replacement(
      std::span<const Index>(candidates), static_cast<std::size_t>(batch_size));
  std::sort(picked.begin(), picked.end());
  QueryBatch batch;
  batch.strategy_name = "random";
  batch.indices = std::move(picked);
  batch.scores.assign(batch.indices.size(), 0.0);
  return batch;
}

QueryBatch select_entropy(const Pool& pool, const ProbMatrix& probs,
                          int batch_size) {
  return entropy_ranking(pool, probs, batch_size, "entropy");
}

QueryBatch select_egl(const Pool& pool, const model::ClassifierState& state,
                      const FeatureMatrix& features, int batch_size) {
  check_batch_size(batch_size);
  check_coverage(pool, features, "features");
  const auto& candidates = require_candidates(pool);

  ProbMatrix probs = model::predict_proba(state, features);
  const auto num_classes = static_cast<Index>(state.num_classes());
  std::vector<double> scores(candidates.size(), 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto row = static_cast<std::size_t>(candidates[i]);
    const double* p = probs.row_ptr(row);
    double expected = 0.0;
    for (Index y = 0; y < num_classes; ++y) {
      expected += p[y] * model::per_example_grad_norm(state, features, y, row);
    }
    scores[i] = expected;
  }
  return take_top(candidates, scores, batch_size, "egl");
}

QueryBatch select_dbal(const Pool& pool, const model::ClassifierState& state,
                       const FeatureMatrix& features, int batch_size,
                       int mc_passes, Rng rng) {
  ProbMatrix probs = model::predict_proba_mc(state, features, mc_passes, rng);
  return entropy_ranking(pool, probs, batch_size, "dbal");
}

QueryBatch select_coreset(const Pool& pool, const FeatureMatrix& reprs,
                          int batch_size) {
  check_batch_size(batch_size);
  check_coverage(pool, reprs, "representations");
  if (pool.labeled().empty()) {
    fail(Errc::needs_seed, "core-set needs at least one labeled center");
  }
  const auto& candidates = require_candidates(pool);

  // min distance from each candidate to the current centers (labeled set).
  std::vector<double> min_dist(candidates.size(),
                               std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto ci = reprs.row(static_cast<std::size_t>(candidates[i]));
    for (Index center : pool.labeled()) {
      min_dist[i] = std::min(
          min_dist[i],
          euclidean_distance(ci, reprs.row(static_cast<std::size_t>(center))));
    }
  }

  const std::size_t take =
      std::min(candidates.size(), static_cast<std::size_t>(batch_size));
  std::vector<bool> taken(candidates.size(), false);
  QueryBatch batch;
  batch.strategy_name = "coreset";
  for (std::size_t round = 0; round < take; ++round) {
    std::size_t best = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (taken[i]) continue;
      if (best == candidates.size() || min_dist[i] > min_dist[best] ||
          (min_dist[i] == min_dist[best] && candidates[i] < candidates[best])) {
        best = i;
      }
    }
    taken[best] = true;
    batch.indices.push_back(candidates[best]);
    batch.scores.push_back(min_dist[best]);
    auto center = reprs.row(static_cast<std::size_t>(candidates[best]));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (taken[i]) continue;
      min_dist[i] = std::min(
          min_dist[i],
          euclidean_distance(reprs.row(static_cast<std::size_t>(candidates[i])),
                             center));
    }
  }
  return batch;
}

QueryBatch select_dal(const Pool& pool, const FeatureMatrix& reprs,
                      int batch_size, const StrategyConfig& config, Rng rng) {
  check_batch_size(batch_size);
  config.validate();
  check_coverage(pool, reprs, "representations");
  if (pool.labeled().empty()) {
    fail(Errc::needs_seed, "dal needs at least one labeled instance");
  }
  const auto& unlabeled = require_candidates(pool);

  const auto total =
      static_cast<int>(std::min(static_cast<std::size_t>(batch_size),
                                unlabeled.size()));
  const int rounds = std::min(config.dal_sub_batches, total);

  std::vector<Index> selected;  // kept sorted
  QueryBatch batch;
  batch.strategy_name = "dal";
  for (int round = 0; round < rounds; ++round) {
    // Near-equal split: the first (total % rounds) sub-batches get one extra.
    int sub_size = total / rounds + (round < total % rounds ? 1 : 0);
    if (sub_size == 0) continue;

    std::vector<Index> class0(pool.labeled());
    class0.insert(class0.end(), selected.begin(), selected.end());
    std::sort(class0.begin(), class0.end());
    std::vector<Index> class1;
    class1.reserve(unlabeled.size() - selected.size());
    std::set_difference(unlabeled.begin(), unlabeled.end(), selected.begin(),
                        selected.end(), std::back_inserter(class1));

    std::vector<Index> train_rows(class0);
    train_rows.insert(train_rows.end(), class1.begin(), class1.end());
    std::vector<Index> train_labels(class0.size(), 0);
    train_labels.insert(train_labels.end(), class1.size(), 1);

    auto disc = model::train_from_scratch(
        reprs.select_rows(train_rows), train_labels, 2, config.dal_discriminator,
        rng.split(static_cast<std::uint64_t>(round)));
    ProbMatrix probs = model::predict_proba(disc, reprs.select_rows(class1));

    std::vector<double> scores(class1.size());
    for (std::size_t i = 0; i < class1.size(); ++i) scores[i] = probs(i, 1);
    QueryBatch sub = take_top(class1, scores, sub_size, "dal");

    batch.indices.insert(batch.indices.end(), sub.indices.begin(),
                         sub.indices.end());
    batch.scores.insert(batch.scores.end(), sub.scores.begin(),
                        sub.scores.end());
    selected.insert(selected.end(), sub.indices.begin(), sub.indices.end());
    std::sort(selected.begin(), selected.end());
  }
  return batch;
}

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> kNames = {"random", "entropy", "egl",
                                                  "dbal",   "coreset", "dal"};
  return kNames;
}

std::string canonical_strategy_name(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  if (lower == "uncertainty") lower = "entropy";  // accepted alias
  const auto& names = strategy_names();
  if (std::find(names.begin(), names.end(), lower) == names.end()) {
    fail(Errc::config, "unknown strategy \"" + std::string(name) + "\"");
  }
  return lower;
}

QueryBatch select(std::string_view strategy_name, const Pool& pool,
                  const FeatureMatrix& features,
                  const model::ClassifierState& state, int batch_size,
                  const StrategyConfig& config, Rng rng) {
  const std::string name = canonical_strategy_name(strategy_name);
  if (name == "random") {
    return select_random(pool, batch_size, rng);
  }
  if (name == "entropy") {
    return select_entropy(pool, model::predict_proba(state, features),
                          batch_size);
  }
  if (name == "egl") {
    return select_egl(pool, state, features, batch_size);
  }
  if (name == "dbal") {
    return select_dbal(pool, state, features, batch_size, config.mc_passes,
                       rng);
  }
  const FeatureMatrix& reprs_src = features;
  FeatureMatrix hidden;
  if (!config.use_raw_features) {
    hidden = model::hidden_repr(state, features);
  }
  const FeatureMatrix& reprs = config.use_raw_features ? reprs_src : hidden;
  if (name == "coreset") {
    return select_coreset(pool, reprs, batch_size);
  }
  return select_dal(pool, reprs, batch_size, config, rng);
}

std::string to_audit_json(const QueryBatch& batch) {
  std::string out = "{\"iteration\":" + std::to_string(batch.iteration) +
                    ",\"strategy\":\"" + io::json_escape(batch.strategy_name) +
                    "\",\"indices\":[";
  for (std::size_t i = 0; i < batch.indices.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += std::to_string(batch.indices[i]);
  }
  out += "],\"scores\":[";
  for (std::size_t i = 0; i < batch.scores.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += io::format_g6(batch.scores[i]);
  }
  out += "]}";
  return out;
}

}  // namespace albench::strategies
