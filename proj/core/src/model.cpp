#include "albench/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <json.hpp>

#include "albench/error.hpp"
#include "albench/io.hpp"

namespace albench::model {

namespace {

using json = nlohmann::json;

void softmax_inplace(double* row, std::size_t n) {
  double mx = row[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    row[i] = std::exp(row[i] - mx);
    sum += row[i];
  }
  for (std::size_t i = 0; i < n; ++i) row[i] /= sum;
}

void check_input_dim(const ClassifierState& state, const FeatureMatrix& features) {
  if (features.cols() != state.input_dim()) {
    fail(Errc::shape, "feature dim " + std::to_string(features.cols()) +
                          " does not match model input dim " +
                          std::to_string(state.input_dim()));
  }
}

// z1 = x W1 + b1 for one row; optionally also relu into `hidden`.
void hidden_preact(const ClassifierState& state, std::span<const double> x,
                   double* z1) {
  const std::size_t d = state.input_dim();
  const std::size_t h = state.hidden_dim();
  std::copy(state.b1.begin(), state.b1.end(), z1);
  for (std::size_t k = 0; k < d; ++k) {
    double xv = x[k];
    if (xv == 0.0) continue;
    const double* w = state.w1.row_ptr(k);
    for (std::size_t j = 0; j < h; ++j) z1[j] += xv * w[j];
  }
}

void logits_from_hidden(const ClassifierState& state, const double* hidden,
                        double* logits) {
  const std::size_t h = state.hidden_dim();
  const std::size_t c = state.num_classes();
  std::copy(state.b2.begin(), state.b2.end(), logits);
  for (std::size_t j = 0; j < h; ++j) {
    double hv = hidden[j];
    if (hv == 0.0) continue;
    const double* w = state.w2.row_ptr(j);
    for (std::size_t cc = 0; cc < c; ++cc) logits[cc] += hv * w[cc];
  }
}

// Inverted-dropout mask for one row: 0 with probability `rate`, else
// 1/(1-rate). One uniform draw per hidden unit, in unit order.
void draw_mask(Rng& rng, double rate, std::span<double> mask) {
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask) {
    m = rng.uniform() < rate ? 0.0 : keep_scale;
  }
}

ProbMatrix forward_probs(const ClassifierState& state,
                         const FeatureMatrix& features, Rng* dropout_rng) {
  check_input_dim(state, features);
  const std::size_t n = features.rows();
  const std::size_t h = state.hidden_dim();
  const std::size_t c = state.num_classes();
  const double rate = state.config.dropout_rate;

  ProbMatrix probs(n, c);
  std::vector<double> z1(h), mask(h);
  for (std::size_t i = 0; i < n; ++i) {
    hidden_preact(state, features.row(i), z1.data());
    for (std::size_t j = 0; j < h; ++j) z1[j] = std::max(z1[j], 0.0);
    if (dropout_rng && rate > 0.0) {
      draw_mask(*dropout_rng, rate, mask);
      for (std::size_t j = 0; j < h; ++j) z1[j] *= mask[j];
    }
    logits_from_hidden(state, z1.data(), probs.row_ptr(i));
    softmax_inplace(probs.row_ptr(i), c);
  }
  return probs;
}

FeatureMatrix forward_hidden(const ClassifierState& state,
                             const FeatureMatrix& features, Rng* dropout_rng) {
  check_input_dim(state, features);
  const std::size_t n = features.rows();
  const std::size_t h = state.hidden_dim();
  const double rate = state.config.dropout_rate;

  FeatureMatrix out(n, h);
  std::vector<double> mask(h);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.row_ptr(i);
    hidden_preact(state, features.row(i), row);
    for (std::size_t j = 0; j < h; ++j) row[j] = std::max(row[j], 0.0);
    if (dropout_rng && rate > 0.0) {
      draw_mask(*dropout_rng, rate, mask);
      for (std::size_t j = 0; j < h; ++j) row[j] *= mask[j];
    }
  }
  return out;
}

// Per-parameter first/second moment buffers, one entry per parameter tensor.
struct OptState {
  std::vector<double> m;
  std::vector<double> v;
};

void apply_update(std::span<double> param, std::span<const double> grad,
                  OptState& opt, const ClassifierConfig& config, long step) {
  const double lr = config.learning_rate;
  if (config.optimizer == ClassifierConfig::Optimizer::sgd_momentum) {
    constexpr double kMomentum = 0.9;
    for (std::size_t i = 0; i < param.size(); ++i) {
      opt.m[i] = kMomentum * opt.m[i] + grad[i];
      param[i] -= lr * opt.m[i];
    }
    return;
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    opt.m[i] = kBeta1 * opt.m[i] + (1.0 - kBeta1) * grad[i];
    opt.v[i] = kBeta2 * opt.v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
    const double mhat = opt.m[i] / bc1;
    const double vhat = opt.v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
  }
}

json config_to_json(const ClassifierConfig& config) {
  return json{{"hidden_dim", config.hidden_dim},
              {"dropout_rate", config.dropout_rate},
              {"learning_rate", config.learning_rate},
              {"epochs", config.epochs},
              {"minibatch_size", config.minibatch_size},
              {"l2_penalty", config.l2_penalty},
              {"optimizer", optimizer_name(config.optimizer)}};
}

ClassifierConfig config_from_json(const json& j) {
  ClassifierConfig config;
  config.hidden_dim = j.at("hidden_dim").get<int>();
  config.dropout_rate = j.at("dropout_rate").get<double>();
  config.learning_rate = j.at("learning_rate").get<double>();
  config.epochs = j.at("epochs").get<int>();
  config.minibatch_size = j.at("minibatch_size").get<int>();
  config.l2_penalty = j.at("l2_penalty").get<double>();
  config.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
  return config;
}

}  // namespace

void ClassifierConfig::validate() const {
  if (hidden_dim < 1) fail(Errc::config, "hidden_dim must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    fail(Errc::config, "dropout_rate must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0)) fail(Errc::config, "learning_rate must be > 0");
  if (epochs < 1) fail(Errc::config, "epochs must be >= 1");
  if (minibatch_size < 1) fail(Errc::config, "minibatch_size must be >= 1");
  if (!(l2_penalty >= 0.0)) fail(Errc::config, "l2_penalty must be >= 0");
}

const char* optimizer_name(ClassifierConfig::Optimizer optimizer) {
  return optimizer == ClassifierConfig::Optimizer::sgd_momentum ? "sgd_momentum"
                                                                : "adaptive";
}

ClassifierConfig::Optimizer optimizer_from_name(std::string_view name) {
  if (name == "sgd_momentum") return ClassifierConfig::Optimizer::sgd_momentum;
  if (name == "adaptive" || name == "adam") {
    return ClassifierConfig::Optimizer::adaptive;
  }
  fail(Errc::config, "unknown optimizer \"" + std::string(name) + "\"");
}

ClassifierState train_from_scratch(const FeatureMatrix& features,
                                   std::span<const Index> labels,
                                   Index num_classes,
                                   const ClassifierConfig& config, Rng rng) {
  config.validate();
  const std::size_t n = features.rows();
  if (n == 0) fail(Errc::insufficient_data, "cannot train on an empty set");
  if (labels.size() != n) {
    fail(Errc::shape, "got " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(n) + " feature rows");
  }
  if (num_classes < 2) fail(Errc::value, "num_classes must be >= 2");
  for (Index y : labels) {
    if (y < 0 || y >= num_classes) {
      fail(Errc::value, "label " + std::to_string(y) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
  }
  const std::size_t d = features.cols();
  if (d == 0) fail(Errc::shape, "features must have at least one column");
  const auto h = static_cast<std::size_t>(config.hidden_dim);
  const auto c = static_cast<std::size_t>(num_classes);

  ClassifierState state;
  state.config = config;
  state.rng_key = rng.key();
  state.w1 = Matrix(d, h);
  state.b1.assign(h, 0.0);
  state.w2 = Matrix(h, c);
  state.b2.assign(c, 0.0);

  // Scaled-uniform init, scale 1/sqrt(fan_in); draw order W1, b1, W2, b2.
  const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& w : state.w1.mutable_data()) w = rng.uniform_range(-s1, s1);
  for (double& b : state.b1) b = rng.uniform_range(-s1, s1);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (double& w : state.w2.mutable_data()) w = rng.uniform_range(-s2, s2);
  for (double& b : state.b2) b = rng.uniform_range(-s2, s2);

  const bool adaptive = config.optimizer == ClassifierConfig::Optimizer::adaptive;
  auto opt_for = [&](std::size_t size) {
    OptState o;
    o.m.assign(size, 0.0);
    if (adaptive) o.v.assign(size, 0.0);
    return o;
  };
  OptState ow1 = opt_for(d * h), ob1 = opt_for(h);
  OptState ow2 = opt_for(h * c), ob2 = opt_for(c);

  const auto bs = static_cast<std::size_t>(config.minibatch_size);
  const double rate = config.dropout_rate;
  const double l2 = config.l2_penalty;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> z1(bs * h), mask(bs * h), dz1(bs * h), dh(h);
  std::vector<double> probs(bs * c);
  std::vector<double> gw1(d * h), gb1(h), gw2(h * c), gb2(c);
  long step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_ce = 0.0;

    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t m = std::min(bs, n - start);

      // Forward: z1 (pre-activation kept for the relu derivative), inverted
      // dropout on the activated values, softmax probabilities.
      for (std::size_t i = 0; i < m; ++i) {
        hidden_preact(state, features.row(order[start + i]), &z1[i * h]);
      }
      if (rate > 0.0) {
        draw_mask(rng, rate, {mask.data(), m * h});
      }
      double batch_ce = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double* zi = &z1[i * h];
        double* li = &probs[i * c];
        std::copy(state.b2.begin(), state.b2.end(), li);
        for (std::size_t j = 0; j < h; ++j) {
          double hv = std::max(zi[j], 0.0);
          if (rate > 0.0) hv *= mask[i * h + j];
          if (hv == 0.0) continue;
          const double* w = state.w2.row_ptr(j);
          for (std::size_t cc = 0; cc < c; ++cc) li[cc] += hv * w[cc];
        }
        softmax_inplace(li, c);
        batch_ce += -std::log(std::max(li[labels[order[start + i]]], 1e-300));
      }
      if (!std::isfinite(batch_ce)) {
        fail(Errc::divergence,
             "training loss went non-finite at epoch " + std::to_string(epoch));
      }
      epoch_ce += batch_ce;

      // Backward, mean loss over the batch. L2 of (l2/2)*||W||^2 on the
      // weight matrices only.
      std::fill(gw1.begin(), gw1.end(), 0.0);
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gw2.begin(), gw2.end(), 0.0);
      std::fill(gb2.begin(), gb2.end(), 0.0);
      const double inv_m = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) {
        double* li = &probs[i * c];
        li[labels[order[start + i]]] -= 1.0;
        for (std::size_t cc = 0; cc < c; ++cc) li[cc] *= inv_m;

        for (std::size_t cc = 0; cc < c; ++cc) gb2[cc] += li[cc];
        const double* zi = &z1[i * h];
        for (std::size_t j = 0; j < h; ++j) {
          double hv = std::max(zi[j], 0.0);
          if (rate > 0.0) hv *= mask[i * h + j];
          if (hv != 0.0) {
            double* g = &gw2[j * c];
            for (std::size_t cc = 0; cc < c; ++cc) g[cc] += hv * li[cc];
          }
          double grad = 0.0;
          if (zi[j] > 0.0) {
            const double* w = state.w2.row_ptr(j);
            for (std::size_t cc = 0; cc < c; ++cc) grad += w[cc] * li[cc];
            if (rate > 0.0) grad *= mask[i * h + j];
          }
          dh[j] = grad;
          gb1[j] += grad;
        }
        std::copy(dh.begin(), dh.end(), &dz1[i * h]);
      }
      for (std::size_t i = 0; i < m; ++i) {
        auto x = features.row(order[start + i]);
        const double* di = &dz1[i * h];
        for (std::size_t k = 0; k < d; ++k) {
          double xv = x[k];
          if (xv == 0.0) continue;
          double* g = &gw1[k * h];
          for (std::size_t j = 0; j < h; ++j) g[j] += xv * di[j];
        }
      }
      if (l2 > 0.0) {
        auto w1d = state.w1.data();
        for (std::size_t i = 0; i < gw1.size(); ++i) gw1[i] += l2 * w1d[i];
        auto w2d = state.w2.data();
        for (std::size_t i = 0; i < gw2.size(); ++i) gw2[i] += l2 * w2d[i];
      }

      ++step;
      apply_update(state.w1.mutable_data(), gw1, ow1, config, step);
      apply_update(state.b1, gb1, ob1, config, step);
      apply_update(state.w2.mutable_data(), gw2, ow2, config, step);
      apply_update(state.b2, gb2, ob2, config, step);
    }

    if (!state.w1.all_finite() || !state.w2.all_finite() ||
        !std::all_of(state.b1.begin(), state.b1.end(),
                     [](double v) { return std::isfinite(v); }) ||
        !std::all_of(state.b2.begin(), state.b2.end(),
                     [](double v) { return std::isfinite(v); })) {
      fail(Errc::divergence,
           "parameters went non-finite at epoch " + std::to_string(epoch));
    }
    state.epoch_losses.push_back(epoch_ce / static_cast<double>(n));
  }
  return state;
}

ProbMatrix predict_proba(const ClassifierState& state,
                         const FeatureMatrix& features) {
  return forward_probs(state, features, nullptr);
}

ProbMatrix predict_proba_dropout(const ClassifierState& state,
                                 const FeatureMatrix& features, Rng rng) {
  return forward_probs(state, features, &rng);
}

ProbMatrix predict_proba_mc(const ClassifierState& state,
                            const FeatureMatrix& features, int passes,
                            Rng rng) {
  if (passes < 1) fail(Errc::config, "mc passes must be >= 1");
  if (state.config.dropout_rate == 0.0) {
    log_warning("mc-dropout with dropout_rate=0 degenerates to the "
                "deterministic forward pass");
    return predict_proba(state, features);
  }
  ProbMatrix mean;
  for (int p = 0; p < passes; ++p) {
    ProbMatrix pass =
        predict_proba_dropout(state, features, rng.split(static_cast<std::uint64_t>(p)));
    if (p == 0) {
      mean = std::move(pass);
    } else {
      auto dst = mean.mutable_data();
      auto src = pass.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(passes);
  for (double& v : mean.mutable_data()) v *= inv;
  return mean;
}

FeatureMatrix hidden_repr(const ClassifierState& state,
                          const FeatureMatrix& features) {
  return forward_hidden(state, features, nullptr);
}

FeatureMatrix hidden_repr_dropout(const ClassifierState& state,
                                  const FeatureMatrix& features, Rng rng) {
  return forward_hidden(state, features, &rng);
}

double Gradients::squared_norm() const {
  double sum = 0.0;
  for (double v : w1.data()) sum += v * v;
  for (double v : b1) sum += v * v;
  for (double v : w2.data()) sum += v * v;
  for (double v : b2) sum += v * v;
  return sum;
}

Gradients single_example_gradients(const ClassifierState& state,
                                   const FeatureMatrix& features, Index label,
                                   std::size_t row) {
  check_input_dim(state, features);
  if (row >= features.rows()) {
    fail(Errc::shape, "row " + std::to_string(row) + " out of range");
  }
  const auto c_count = static_cast<Index>(state.num_classes());
  if (label < 0 || label >= c_count) {
    fail(Errc::value, "label " + std::to_string(label) + " outside [0, " +
                          std::to_string(c_count) + ")");
  }
  const std::size_t d = state.input_dim();
  const std::size_t h = state.hidden_dim();
  const std::size_t c = state.num_classes();
  auto x = features.row(row);

  std::vector<double> z1(h);
  hidden_preact(state, x, z1.data());
  std::vector<double> hidden(h);
  for (std::size_t j = 0; j < h; ++j) hidden[j] = std::max(z1[j], 0.0);
  std::vector<double> dlogits(c);
  logits_from_hidden(state, hidden.data(), dlogits.data());
  softmax_inplace(dlogits.data(), c);
  dlogits[static_cast<std::size_t>(label)] -= 1.0;

  Gradients g;
  g.w2 = Matrix(h, c);
  g.b2.assign(dlogits.begin(), dlogits.end());
  std::vector<double> dz1(h);
  for (std::size_t j = 0; j < h; ++j) {
    double* gw = g.w2.row_ptr(j);
    for (std::size_t cc = 0; cc < c; ++cc) gw[cc] = hidden[j] * dlogits[cc];
    double grad = 0.0;
    if (z1[j] > 0.0) {
      const double* w = state.w2.row_ptr(j);
      for (std::size_t cc = 0; cc < c; ++cc) grad += w[cc] * dlogits[cc];
    }
    dz1[j] = grad;
  }
  g.b1 = dz1;
  g.w1 = Matrix(d, h);
  for (std::size_t k = 0; k < d; ++k) {
    double* gw = g.w1.row_ptr(k);
    for (std::size_t j = 0; j < h; ++j) gw[j] = x[k] * dz1[j];
  }
  return g;
}

double per_example_grad_norm(const ClassifierState& state,
                             const FeatureMatrix& features, Index label,
                             std::size_t row) {
  return std::sqrt(
      single_example_gradients(state, features, label, row).squared_norm());
}

std::vector<Index> argmax_rows(const ProbMatrix& probs) {
  std::vector<Index> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto row = probs.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[i] = static_cast<Index>(best);
  }
  return out;
}

std::vector<Index> predict_labels(const ClassifierState& state,
                                  const FeatureMatrix& features) {
  return argmax_rows(predict_proba(state, features));
}

void save_state_json(const ClassifierState& state,
                     const std::filesystem::path& path) {
  json j{{"format", "albench.classifier"},
         {"version", 1},
         {"input_dim", state.input_dim()},
         {"hidden_dim", state.hidden_dim()},
         {"num_classes", state.num_classes()},
         {"config", config_to_json(state.config)},
         {"rng_key", std::to_string(state.rng_key)},
         {"w1", std::vector<double>(state.w1.data().begin(), state.w1.data().end())},
         {"b1", state.b1},
         {"w2", std::vector<double>(state.w2.data().begin(), state.w2.data().end())},
         {"b2", state.b2},
         {"epoch_losses", state.epoch_losses}};
  io::write_file(path, j.dump(2) + "\n");
}

ClassifierState load_state_json(const std::filesystem::path& path) {
  json j = json::parse(io::read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    fail(Errc::format, path.string() + ": not a JSON object");
  }
  if (j.value("format", "") != "albench.classifier" || j.value("version", 0) != 1) {
    fail(Errc::format, path.string() + ": unrecognized classifier file header");
  }
  ClassifierState state;
  std::size_t d, h, c;
  std::vector<double> w1, w2;
  try {
    d = j.at("input_dim").get<std::size_t>();
    h = j.at("hidden_dim").get<std::size_t>();
    c = j.at("num_classes").get<std::size_t>();
    state.config = config_from_json(j.at("config"));
    state.rng_key = std::stoull(j.at("rng_key").get<std::string>());
    w1 = j.at("w1").get<std::vector<double>>();
    w2 = j.at("w2").get<std::vector<double>>();
    state.b1 = j.at("b1").get<std::vector<double>>();
    state.b2 = j.at("b2").get<std::vector<double>>();
    state.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(Errc::format, path.string() + ": " + e.what());
  }
  if (w1.size() != d * h || w2.size() != h * c || state.b1.size() != h ||
      state.b2.size() != c) {
    fail(Errc::shape, path.string() + ": weight shapes disagree with header");
  }
  state.w1 = Matrix(d, h);
  std::copy(w1.begin(), w1.end(), state.w1.mutable_data().begin());
  state.w2 = Matrix(h, c);
  std::copy(w2.begin(), w2.end(), state.w2.mutable_data().begin());
  return state;
}

}  // namespace albench::model
