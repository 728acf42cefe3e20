#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hear/env.hpp"
#include "hear/lexicon.hpp"
#include "hear/perturb.hpp"

namespace hear {

inline constexpr std::size_t kFeatureDim = 14;

using FeatureVector = std::array<double, kFeatureDim>;

enum Feature : std::size_t {
  kKindRoom,
  kKindObject,
  kKindDirection,
  kRoomInWindow,
  kRoomAnywhere,
  kObjectInWindow,
  kObjectAnywhere,
  kDirectionInWindow,
  kDirectionAntonymInWindow,
  kSpanDuplicated,
  kClauseUnaligned,
  kClauseStepDelta,
  kRelativePosition,
  kBias,
};

extern const std::array<std::string_view, kFeatureDim> kFeatureNames;

struct FeatureConfig {
  /// Steps on either side of the aligned step when alignment metadata exists.
  int aligned_radius = 0;
  /// Radius used with the proportional clause-to-step fallback.
  int proportional_radius = 1;
};

/// Grounding features for the wrapped span of `example` on `route`.
///
/// Match features read the phrase according to the slot kind `example.kind`,
/// so an object name placed in a room slot matches nothing. A wrapped
/// [REMOVE] token has no kind and no matches.
FeatureVector featurize(const Environment& env, const Route& route, const DetectionExample& example,
                        const FeatureConfig& config = {},
                        const Lexicon& lexicon = Lexicon::builtin());

/// Steps (0..steps.size(), the last meaning the final node) in the feature
/// window of `clause`; empty when the clause is marked unaligned.
std::vector<int> feature_window(const Route& route, const std::vector<int>& alignment,
                                std::size_t clause, std::size_t clause_count,
                                const FeatureConfig& config = {});

enum class ModelTask { detection, type, one_stage };

std::string_view to_string(ModelTask t);
ModelTask model_task_from_string(std::string_view text);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 500;
  std::uint64_t seed = 42;
  double pointwise_mix = 0.5;

  std::uint64_t hash() const;
};

struct GroundingModel {
  std::vector<double> weights = std::vector<double>(kFeatureDim, 0.0);
  /// Decision threshold in score space; a label is positive iff s > threshold.
  std::optional<double> threshold;
  ModelTask task = ModelTask::detection;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  bool operator==(const GroundingModel&) const = default;
};

double sigmoid(double s);

/// s(x) = <weights, features>. Throws on dimension mismatch.
double score(const GroundingModel& model, const FeatureVector& features);
double score(const std::vector<double>& weights, const std::vector<double>& features);
double confidence(const GroundingModel& model, const FeatureVector& features);

struct FeaturizedPair {
  FeatureVector positive{};
  FeatureVector negative{};
};

struct LossAndGradient {
  double loss = 0.0;
  double pair_loss = 0.0;
  double pointwise_loss = 0.0;
  std::vector<double> gradient;
};

/// Mean pairwise logistic loss plus `mix` times mean pointwise cross-entropy
/// over both members of every pair.
LossAndGradient contrastive_loss(const std::vector<double>& weights,
                                 const std::vector<FeaturizedPair>& pairs, double mix);

/// Full-batch gradient descent from zero weights. The step size is halved
/// whenever a step would increase the loss. Optional per-epoch loss trace.
GroundingModel train_contrastive(const std::vector<FeaturizedPair>& pairs,
                                 const TrainConfig& config, ModelTask task = ModelTask::detection,
                                 std::vector<double>* loss_trace = nullptr);

/// Featurizes pairs using the environments and routes of `corpus`.
std::vector<FeaturizedPair> featurize_pairs(const Corpus& corpus,
                                            const std::vector<PairedExample>& pairs,
                                            const FeatureConfig& config = {});

/// Threshold over {-inf, midpoints of distinct sorted scores, +inf} that
/// maximizes macro-F1 of (score > threshold); ties go to the smallest.
double select_threshold(const std::vector<double>& scores, const std::vector<bool>& labels);

struct Prediction {
  bool label = false;
  double confidence = 0.5;
};

Prediction predict(const GroundingModel& model, const FeatureVector& features);

}  // namespace hear
