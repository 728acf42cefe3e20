#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hear/env.hpp"

namespace hear {

inline constexpr double kSuccessRadiusM = 3.0;

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const std::vector<bool>& predictions, const std::vector<bool>& golds);

/// Mean F-1 of the positive and the negative class; a class with no support
/// and no predictions contributes 0.
double macro_f1(const ConfusionCounts& c);
double macro_f1(const std::vector<bool>& predictions, const std::vector<bool>& golds);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct DetectionReport {
  std::string system;
  std::string split;
  double macro_f1 = 0.0;
  ClassScores positive;
  ClassScores negative;
  ConfusionCounts counts;
  std::vector<std::string> warnings;
};

DetectionReport detection_report(const std::string& system, const std::string& split,
                                 const std::vector<bool>& predictions,
                                 const std::vector<bool>& golds);

/// Fair coin per example.
std::vector<bool> random_detection_baseline(std::size_t count, std::uint64_t seed);

struct SuggestionReport {
  std::string system;
  std::string split;
  double recall_at_k = 0.0;
  int k = 3;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  double mean_candidates = 0.0;
};

/// `ranked[e]` is the ranked candidate list of example e, `candidate_sets[e]`
/// the full set it was drawn from. Examples whose gold is missing from their
/// candidate set are excluded and counted.
SuggestionReport recall_at_k(const std::vector<std::vector<std::string>>& ranked,
                             const std::vector<std::vector<std::string>>& candidate_sets,
                             const std::vector<std::string>& golds, int k = 3);

/// Uniformly random 3-subset of each candidate set (the whole set if M <= 3).
std::vector<std::vector<std::string>> random_suggestion_baseline(
    const std::vector<std::vector<std::string>>& candidate_sets, std::uint64_t seed, int k = 3);

struct Episode {
  std::string id;
  std::string env_id;
  NodeId goal = 0;
  NodeId final_node = 0;
  std::vector<NodeId> trajectory;
  std::vector<NodeId> check_nodes;
  int checks_used = 0;
  bool success = false;
};

bool within_success_radius(const Environment& env, NodeId node, NodeId goal);
double navigation_error(const Environment& env, const Episode& episode);

struct NavReport {
  std::string condition;
  double success_rate = 0.0;
  double mean_error = 0.0;
  double median_error = 0.0;
  double mean_checks = 0.0;
  std::size_t episodes = 0;
};

/// Fraction of episodes ending within the success radius of the goal.
double success_rate(const std::map<std::string, const Environment*>& envs,
                    const std::vector<Episode>& episodes);

NavReport nav_report(const std::string& condition,
                     const std::map<std::string, const Environment*>& envs,
                     std::vector<Episode> episodes);

}  // namespace hear
