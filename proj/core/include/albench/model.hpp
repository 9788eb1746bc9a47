#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "albench/matrix.hpp"
#include "albench/rng.hpp"

namespace albench::model {

struct ClassifierConfig {
  int hidden_dim = 64;
  double dropout_rate = 0.3;   // hidden layer only, inverted dropout
  double learning_rate = 1e-3;
  int epochs = 30;
  int minibatch_size = 32;
  double l2_penalty = 1e-4;    // applied to weights, not biases

  enum class Optimizer { sgd_momentum, adaptive };
  Optimizer optimizer = Optimizer::adaptive;

  void validate() const;  // throws Errc::config
};

const char* optimizer_name(ClassifierConfig::Optimizer optimizer);
ClassifierConfig::Optimizer optimizer_from_name(std::string_view name);

// One-hidden-layer softmax network: relu(x W1 + b1) W2 + b2. Immutable after
// training.
struct ClassifierState {
  Matrix w1;               // D x H
  std::vector<double> b1;  // H
  Matrix w2;               // H x C
  std::vector<double> b2;  // C
  ClassifierConfig config;
  std::uint64_t rng_key = 0;
  std::vector<double> epoch_losses;  // mean training loss per epoch

  std::size_t input_dim() const { return w1.rows(); }
  std::size_t hidden_dim() const { return w1.cols(); }
  std::size_t num_classes() const { return w2.cols(); }
};

// Fresh training run: scaled-uniform init (scale 1/sqrt(fan_in)) drawn from
// `rng`, then shuffled mini-batch cross-entropy descent with inverted dropout
// on the hidden layer. Bit-reproducible for identical (data, config, rng).
// Throws Errc::divergence naming the epoch if the loss goes non-finite.
ClassifierState train_from_scratch(const FeatureMatrix& features,
                                   std::span<const Index> labels,
                                   Index num_classes,
                                   const ClassifierConfig& config, Rng rng);

// Deterministic forward pass, dropout disabled. Rows are softmax
// distributions.
ProbMatrix predict_proba(const ClassifierState& state,
                         const FeatureMatrix& features);

// One stochastic forward pass with dropout enabled at config.dropout_rate.
// Masks are drawn from `rng` in row-major order, so appending rows leaves the
// masks of earlier rows unchanged.
ProbMatrix predict_proba_dropout(const ClassifierState& state,
                                 const FeatureMatrix& features, Rng rng);

// Mean of `passes` stochastic forward passes; pass p uses rng.split(p).
// Warns and falls back to predict_proba when dropout_rate == 0.
ProbMatrix predict_proba_mc(const ClassifierState& state,
                            const FeatureMatrix& features, int passes,
                            Rng rng);

// Post-activation hidden values, dropout disabled (the learned representation
// consumed by core-set, DAL and the batch metrics).
FeatureMatrix hidden_repr(const ClassifierState& state,
                          const FeatureMatrix& features);

// Single stochastic hidden pass, dropout enabled (used by the dropout
// consistency tests).
FeatureMatrix hidden_repr_dropout(const ClassifierState& state,
                                  const FeatureMatrix& features, Rng rng);

struct Gradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;

  double squared_norm() const;
};

// Gradient of single-example cross-entropy at (row, label), dropout disabled,
// no regularization term.
Gradients single_example_gradients(const ClassifierState& state,
                                   const FeatureMatrix& features, Index label,
                                   std::size_t row);

// Euclidean norm over all parameters (W1, b1, W2, b2) of the gradient above.
double per_example_grad_norm(const ClassifierState& state,
                             const FeatureMatrix& features, Index label,
                             std::size_t row);

// Argmax per row; ties go to the lower class index.
std::vector<Index> predict_labels(const ClassifierState& state,
                                  const FeatureMatrix& features);
std::vector<Index> argmax_rows(const ProbMatrix& probs);

// JSON round-trip with a versioned header, row-major weights.
void save_state_json(const ClassifierState& state,
                     const std::filesystem::path& path);
ClassifierState load_state_json(const std::filesystem::path& path);

}  // namespace albench::model
