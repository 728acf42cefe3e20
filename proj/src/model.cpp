#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hear/grounding.hpp"
#include "hear/metrics.hpp"
#include "hear/rng.hpp"

namespace hear {

std::string_view to_string(ModelTask t) {
  switch (t) {
    case ModelTask::detection:
      return "detection";
    case ModelTask::type:
      return "type";
    case ModelTask::one_stage:
      return "one_stage";
  }
  return "detection";
}

ModelTask model_task_from_string(std::string_view text) {
  if (text == "detection") return ModelTask::detection;
  if (text == "type") return ModelTask::type;
  if (text == "one_stage") return ModelTask::one_stage;
  throw std::invalid_argument("unknown model task: " + std::string(text));
}

std::uint64_t TrainConfig::hash() const {
  const std::string text = "lr=" + std::to_string(learning_rate) + ";epochs=" +
                           std::to_string(epochs) + ";seed=" + std::to_string(seed) +
                           ";mix=" + std::to_string(pointwise_mix);
  return fnv1a64(text);
}

double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double score(const std::vector<double>& weights, const std::vector<double>& features) {
  if (weights.size() != features.size()) throw std::invalid_argument("feature dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) s += weights[k] * features[k];
  return s;
}

double score(const GroundingModel& model, const FeatureVector& features) {
  if (model.weights.size() != features.size()) {
    throw std::invalid_argument("feature dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < features.size(); ++k) s += model.weights[k] * features[k];
  return s;
}

double confidence(const GroundingModel& model, const FeatureVector& features) {
  return sigmoid(score(model, features));
}

namespace {

/// -log sigmoid(x), stable for large |x|.
double softplus_neg(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(-x, 0.0); }

double dot(const std::vector<double>& w, const FeatureVector& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += w[k] * f[k];
  return s;
}

}  // namespace

LossAndGradient contrastive_loss(const std::vector<double>& weights,
                                 const std::vector<FeaturizedPair>& pairs, double mix) {
  if (pairs.empty()) throw std::invalid_argument("no training pairs");
  if (weights.size() != kFeatureDim) throw std::invalid_argument("feature dimension mismatch");
  LossAndGradient out;
  out.gradient.assign(kFeatureDim, 0.0);
  std::vector<double> pair_grad(kFeatureDim, 0.0);
  std::vector<double> point_grad(kFeatureDim, 0.0);
  for (const auto& p : pairs) {
    const double sp = dot(weights, p.positive);
    const double sn = dot(weights, p.negative);
    const double d = sp - sn;
    out.pair_loss += softplus_neg(d);
    const double gd = -sigmoid(-d);
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      pair_grad[k] += gd * (p.positive[k] - p.negative[k]);
    }
    out.pointwise_loss += softplus_neg(sp) + softplus_neg(-sn);
    const double gp = sigmoid(sp) - 1.0;
    const double gn = sigmoid(sn);
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      point_grad[k] += gp * p.positive[k] + gn * p.negative[k];
    }
  }
  const double n = static_cast<double>(pairs.size());
  out.pair_loss /= n;
  out.pointwise_loss /= 2.0 * n;
  out.loss = out.pair_loss + mix * out.pointwise_loss;
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    out.gradient[k] = pair_grad[k] / n + mix * point_grad[k] / (2.0 * n);
  }
  return out;
}

GroundingModel train_contrastive(const std::vector<FeaturizedPair>& pairs,
                                 const TrainConfig& config, ModelTask task,
                                 std::vector<double>* loss_trace) {
  if (pairs.empty()) throw std::invalid_argument("no training pairs");
  if (!(config.learning_rate > 0.0) || config.epochs < 1 || config.pointwise_mix < 0.0 ||
      config.pointwise_mix > 1.0) {
    throw std::invalid_argument("invalid training configuration");
  }
  GroundingModel model;
  model.task = task;
  model.seed = config.seed;
  model.config_hash = config.hash();
  std::vector<double> w(kFeatureDim, 0.0);
  double lr = config.learning_rate;
  auto current = contrastive_loss(w, pairs, config.pointwise_mix);
  if (loss_trace) loss_trace->push_back(current.loss);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (!std::isfinite(current.loss)) {
      throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch));
    }
    for (int halving = 0; halving < 60; ++halving) {
      std::vector<double> next(kFeatureDim);
      for (std::size_t k = 0; k < kFeatureDim; ++k) next[k] = w[k] - lr * current.gradient[k];
      auto candidate = contrastive_loss(next, pairs, config.pointwise_mix);
      if (!std::isfinite(candidate.loss)) {
        throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch));
      }
      if (candidate.loss <= current.loss) {
        w = std::move(next);
        current = std::move(candidate);
        break;
      }
      lr *= 0.5;
    }
    if (loss_trace) loss_trace->push_back(current.loss);
  }
  model.weights = w;
  return model;
}

double select_threshold(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.empty()) throw std::invalid_argument("empty development set");
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  const auto positives = std::count(labels.begin(), labels.end(), true);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    throw std::invalid_argument("development set must contain both labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sweep from tau = -inf (everything positive) upward.
  ConfusionCounts c;
  c.tp = static_cast<std::size_t>(positives);
  c.fp = labels.size() - c.tp;
  double best_tau = -std::numeric_limits<double>::infinity();
  double best = macro_f1(c);
  std::size_t k = 0;
  while (k < order.size()) {
    const double s = scores[order[k]];
    while (k < order.size() && scores[order[k]] == s) {
      if (labels[order[k]]) {
        --c.tp;
        ++c.fn;
      } else {
        --c.fp;
        ++c.tn;
      }
      ++k;
    }
    double tau = std::numeric_limits<double>::infinity();
    if (k < order.size()) {
      tau = s + (scores[order[k]] - s) / 2.0;
      if (tau >= scores[order[k]]) tau = s;
    }
    const double f = macro_f1(c);
    if (f > best) {
      best = f;
      best_tau = tau;
    }
  }
  return best_tau;
}

Prediction predict(const GroundingModel& model, const FeatureVector& features) {
  if (!model.threshold) throw std::logic_error("model threshold is not set");
  const double s = score(model, features);
  return {s > *model.threshold, sigmoid(s)};
}

}  // namespace hear
