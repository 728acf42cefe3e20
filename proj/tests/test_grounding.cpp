#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "hear/grounding.hpp"
#include "hear/rng.hpp"
#include "oracles.hpp"

using namespace hear;

namespace {

// kitchen(0) --north--> hallway(1) --east--> office(2, desk)
struct Tiny {
  Environment env{"t",
                  {{0, 0, 0, 0, "kitchen", {}}, {1, 0, 2, 0, "hallway", {}}, {2, 2, 2, 0, "office", {{"desk", 0}}}},
                  {{0, 1, 2}, {1, 2, 2}}};
  Route route = route_along(env, {0, 1, 2}, 0);
};

AnnotatedInstruction annotate(const std::string& text, std::vector<int> alignment) {
  AnnotatedInstruction ann;
  ann.tokens = split_words(text);
  ann.spans = extract_phrases(ann.tokens);
  ann.gold.assign(ann.spans.size(), GoldLabel::clean());
  ann.alignment = std::move(alignment);
  return ann;
}

FeatureVector features_for(const Tiny& t, const AnnotatedInstruction& ann, std::size_t span) {
  return featurize(t.env, t.route, make_example("t", "r", ann, ann.spans[span], false));
}

}  // namespace

TEST_CASE("feature window") {
  Tiny t;
  CHECK(feature_window(t.route, {0, 1, 2}, 1, 3) == std::vector<int>{1});
  CHECK(feature_window(t.route, {0, kNoStep, 2}, 1, 3).empty());
  CHECK(feature_window(t.route, {}, 1, 3) == std::vector<int>{0, 1, 2});
  CHECK(feature_window(t.route, {}, 0, 3) == std::vector<int>{0, 1});
  FeatureConfig wide;
  wide.aligned_radius = 1;
  CHECK(feature_window(t.route, {0, 1, 2}, 2, 3, wide) == std::vector<int>{1, 2});
}

TEST_CASE("grounded and hallucinated phrases produce the expected match features") {
  Tiny t;
  REQUIRE(t.route.steps[0].action.direction == "go straight");
  REQUIRE(t.route.steps[1].action.direction == "turn right");
  const auto good = annotate("go straight in the kitchen , turn right in the hallway , stop near the desk .", {0, 1, 2});
  const auto bad = annotate("turn left in the office , turn right in the hallway , stop near the desk .", {0, 1, 2});

  auto f = features_for(t, good, 0);
  CHECK(f[kKindDirection] == 1);
  CHECK(f[kDirectionInWindow] == 1);
  CHECK(f[kDirectionAntonymInWindow] == 0);
  f = features_for(t, bad, 0);
  CHECK(f[kDirectionInWindow] == 0);
  CHECK(f[kDirectionAntonymInWindow] == 1);

  f = features_for(t, good, 1);
  CHECK(f[kKindRoom] == 1);
  CHECK(f[kRoomInWindow] == 1);
  f = features_for(t, bad, 1);
  CHECK(f[kRoomInWindow] == 0);
  CHECK(f[kRoomAnywhere] == 1);

  const auto desk = good.spans.size() - 1;
  f = features_for(t, good, desk);
  CHECK(f[kKindObject] == 1);
  CHECK(f[kObjectInWindow] == 1);
  CHECK(f[kBias] == 1);
  CHECK(f[kClauseStepDelta] == 0);
  CHECK(f[kRelativePosition] == doctest::Approx(double(good.spans[desk].i) / double(good.tokens.size() - 1)));
}

TEST_CASE("slot kind governs matching; REMOVE has no matches") {
  Tiny t;
  const auto ann = annotate("go straight in the kitchen , stop near the desk .", {0, 2});
  auto ex = substitute_example("t", "r", ann, ann.spans[1], {"desk"}, PhraseKind::room, false);
  auto f = featurize(t.env, t.route, ex);
  CHECK(f[kKindRoom] == 1);
  CHECK(f[kObjectAnywhere] == 0);
  CHECK(f[kRoomAnywhere] == 0);
  ex = substitute_example("t", "r", ann, ann.spans[1], {std::string(kRemove)}, PhraseKind::room, false);
  f = featurize(t.env, t.route, ex);
  CHECK(f[kKindRoom] + f[kKindObject] + f[kKindDirection] == 0);
  CHECK(f[kRoomInWindow] + f[kRoomAnywhere] == 0);
}

TEST_CASE("unaligned clauses are flagged and malformed markers rejected") {
  Tiny t;
  const auto ann = annotate("go straight . turn left in the garage . stop near the desk .", {0, kNoStep, 2});
  const auto f = features_for(t, ann, 1);
  CHECK(f[kClauseUnaligned] == 1);
  CHECK(f[kClauseStepDelta] == doctest::Approx(0.0));
  auto ex = make_example("t", "r", ann, ann.spans[0], false);
  ex.i = 0;
  CHECK_THROWS(featurize(t.env, t.route, ex));
}

TEST_CASE("sigmoid and score") {
  CHECK(sigmoid(0) == 0.5);
  CHECK(sigmoid(800) == 1.0);
  CHECK(sigmoid(-800) >= 0.0);
  CHECK(sigmoid(2) + sigmoid(-2) == doctest::Approx(1.0));
  GroundingModel m;
  m.weights[kBias] = 2.0;
  FeatureVector f{};
  f[kBias] = 1.0;
  CHECK(score(m, f) == 2.0);
  CHECK(confidence(m, f) == doctest::Approx(1 / (1 + std::exp(-2.0))));
  CHECK_THROWS(score(std::vector<double>{1, 2}, std::vector<double>{1}));
  m.threshold = 2.5;
  CHECK_FALSE(predict(m, f).label);
  m.threshold = 1.5;
  CHECK(predict(m, f).label);
}

TEST_CASE("contrastive loss value and gradient") {
  Rng rng(1);
  std::vector<FeaturizedPair> pairs(7);
  for (auto& p : pairs)
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      p.positive[k] = rng.uniform(-1, 1);
      p.negative[k] = rng.uniform(-1, 1);
    }
  std::vector<double> w(kFeatureDim);
  for (auto& x : w) x = rng.uniform(-1, 1);
  const auto lg = contrastive_loss(w, pairs, 0.3);
  CHECK(lg.loss == doctest::Approx(oracle::contrastive_objective(w, pairs, 0.3)).epsilon(1e-12));
  CHECK(lg.loss == doctest::Approx(lg.pair_loss + 0.3 * lg.pointwise_loss));
  REQUIRE(lg.gradient.size() == kFeatureDim);
  const auto zero = contrastive_loss(std::vector<double>(kFeatureDim, 0.0), pairs, 0.0);
  CHECK(zero.loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("training is deterministic and separates a separable set") {
  Rng rng(2);
  std::vector<FeaturizedPair> pairs(30);
  for (auto& p : pairs) {
    p.positive[kRoomInWindow] = 0;
    p.negative[kRoomInWindow] = 1;
    p.positive[kBias] = p.negative[kBias] = 1;
    p.positive[kRelativePosition] = rng.uniform();
    p.negative[kRelativePosition] = rng.uniform();
  }
  TrainConfig tc;
  std::vector<double> trace;
  const auto m = train_contrastive(pairs, tc, ModelTask::detection, &trace);
  CHECK(trace.size() == static_cast<std::size_t>(tc.epochs) + 1);
  CHECK(m.weights[kRoomInWindow] < -1.0);
  CHECK(train_contrastive(pairs, tc) == m);
  CHECK(m.task == ModelTask::detection);
  CHECK_THROWS(train_contrastive({}, tc));
}

TEST_CASE("select_threshold picks the smallest optimal threshold") {
  CHECK(select_threshold({0.1, 0.2, 0.8, 0.9}, {false, false, true, true}) == doctest::Approx(0.5));
  CHECK(select_threshold({1, 1, 1, 1}, {true, false, true, false}) == -std::numeric_limits<double>::infinity());
  CHECK_THROWS(select_threshold({0.1, 0.2}, {true, true}));
  CHECK_THROWS(select_threshold({}, {}));
  CHECK_THROWS(select_threshold({0.1}, {true, false}));
}

TEST_CASE("trained models on the small suite beat chance and carry thresholds") {
  const auto& models = fixture::small_models();
  CHECK(models.detection.threshold.has_value());
  CHECK(models.type.task == ModelTask::type);
  CHECK(models.one_stage.task == ModelTask::one_stage);
  const auto& data = fixture::small_suite();
  std::vector<bool> pred, gold;
  for (const auto& sp : data.test) {
    for (const auto* ex : {&sp.pair.positive, &sp.pair.negative}) {
      const auto& rec = data.corpus.record(ex->route_id);
      pred.push_back(predict(models.detection, featurize(data.corpus.env(rec.route.env_id), rec.route, *ex)).label);
      gold.push_back(ex->label);
    }
  }
  CHECK(oracle::macro_f1(pred, gold) > 0.8);
}

TEST_CASE("model task names") {
  for (auto t : {ModelTask::detection, ModelTask::type, ModelTask::one_stage})
    CHECK(model_task_from_string(to_string(t)) == t);
  CHECK_THROWS(model_task_from_string("bogus"));
  CHECK(kFeatureNames.size() == kFeatureDim);
}
