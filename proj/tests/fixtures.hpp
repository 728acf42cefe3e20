#pragma once
// Small shared suite so unit tests stay fast.

#include "hear/experiment.hpp"

namespace fixture {

inline hear::SuiteConfig small_config() {
  hear::SuiteConfig c;
  c.seed = 5;
  c.environments = 4;
  c.train_routes_per_env = 30;
  c.eval_routes_per_env = 8;
  c.episode_routes_per_env = 3;
  c.train_pairs = 300;
  c.dev_examples = 60;
  c.test_examples = 60;
  c.episodes = 12;
  return c;
}

inline const hear::SuiteData& small_suite() {
  static const hear::SuiteData data = hear::generate_suite(small_config());
  return data;
}

inline const hear::TrainedModels& small_models() {
  static const hear::TrainedModels models = hear::train_models(small_suite(), small_config());
  return models;
}

}  // namespace fixture
