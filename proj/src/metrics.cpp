#include "hear/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "hear/rng.hpp"

namespace hear {

ConfusionCounts confusion(const std::vector<bool>& predictions, const std::vector<bool>& golds) {
  if (predictions.size() != golds.size()) throw std::invalid_argument("length mismatch");
  ConfusionCounts c;
  for (std::size_t k = 0; k < golds.size(); ++k) {
    if (predictions[k] && golds[k]) ++c.tp;
    else if (predictions[k]) ++c.fp;
    else if (golds[k]) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

ClassScores class_scores(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassScores s;
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tp > 0) s.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  return s;
}

}  // namespace

double macro_f1(const ConfusionCounts& c) {
  return 0.5 * (class_scores(c.tp, c.fp, c.fn).f1 + class_scores(c.tn, c.fn, c.fp).f1);
}

double macro_f1(const std::vector<bool>& predictions, const std::vector<bool>& golds) {
  if (golds.empty()) throw std::invalid_argument("no examples");
  return macro_f1(confusion(predictions, golds));
}

DetectionReport detection_report(const std::string& system, const std::string& split,
                                 const std::vector<bool>& predictions,
                                 const std::vector<bool>& golds) {
  DetectionReport r;
  r.system = system;
  r.split = split;
  r.counts = confusion(predictions, golds);
  r.positive = class_scores(r.counts.tp, r.counts.fp, r.counts.fn);
  r.negative = class_scores(r.counts.tn, r.counts.fn, r.counts.fp);
  r.macro_f1 = 0.5 * (r.positive.f1 + r.negative.f1);
  if (r.counts.tp + r.counts.fn == 0) r.warnings.emplace_back("positive class has no support");
  if (r.counts.tn + r.counts.fp == 0) r.warnings.emplace_back("negative class has no support");
  return r;
}

std::vector<bool> random_detection_baseline(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<bool> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = rng.bernoulli(0.5);
  return out;
}

SuggestionReport recall_at_k(const std::vector<std::vector<std::string>>& ranked,
                             const std::vector<std::vector<std::string>>& candidate_sets,
                             const std::vector<std::string>& golds, int k) {
  if (ranked.size() != golds.size() || candidate_sets.size() != golds.size()) {
    throw std::invalid_argument("length mismatch");
  }
  if (k < 1) throw std::invalid_argument("k must be positive");
  SuggestionReport r;
  r.k = k;
  std::size_t hits = 0;
  double candidates = 0.0;
  for (std::size_t e = 0; e < golds.size(); ++e) {
    const auto& set = candidate_sets[e];
    if (std::find(set.begin(), set.end(), golds[e]) == set.end()) {
      ++r.excluded;
      continue;
    }
    ++r.evaluated;
    candidates += static_cast<double>(set.size());
    const auto top = std::min<std::size_t>(static_cast<std::size_t>(k), ranked[e].size());
    if (std::find(ranked[e].begin(), ranked[e].begin() + static_cast<std::ptrdiff_t>(top),
                  golds[e]) != ranked[e].begin() + static_cast<std::ptrdiff_t>(top)) {
      ++hits;
    }
  }
  if (r.evaluated > 0) {
    r.recall_at_k = static_cast<double>(hits) / static_cast<double>(r.evaluated);
    r.mean_candidates = candidates / static_cast<double>(r.evaluated);
  }
  return r;
}

std::vector<std::vector<std::string>> random_suggestion_baseline(
    const std::vector<std::vector<std::string>>& candidate_sets, std::uint64_t seed, int k) {
  Rng rng(seed);
  std::vector<std::vector<std::string>> out;
  out.reserve(candidate_sets.size());
  for (const auto& set : candidate_sets) {
    auto copy = set;
    rng.shuffle(copy);
    if (copy.size() > static_cast<std::size_t>(k)) copy.resize(static_cast<std::size_t>(k));
    out.push_back(std::move(copy));
  }
  return out;
}

bool within_success_radius(const Environment& env, NodeId node, NodeId goal) {
  return path_distance(env, node, goal) <= kSuccessRadiusM;
}

double navigation_error(const Environment& env, const Episode& episode) {
  return path_distance(env, episode.final_node, episode.goal);
}

namespace {

const Environment& lookup(const std::map<std::string, const Environment*>& envs,
                          const std::string& id) {
  auto it = envs.find(id);
  if (it == envs.end() || it->second == nullptr) {
    throw std::out_of_range("unknown environment: " + id);
  }
  return *it->second;
}

}  // namespace

double success_rate(const std::map<std::string, const Environment*>& envs,
                    const std::vector<Episode>& episodes) {
  if (episodes.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& e : episodes) {
    if (within_success_radius(lookup(envs, e.env_id), e.final_node, e.goal)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(episodes.size());
}

NavReport nav_report(const std::string& condition,
                     const std::map<std::string, const Environment*>& envs,
                     std::vector<Episode> episodes) {
  std::sort(episodes.begin(), episodes.end(),
            [](const Episode& a, const Episode& b) { return a.id < b.id; });
  NavReport r;
  r.condition = condition;
  r.episodes = episodes.size();
  if (episodes.empty()) return r;
  r.success_rate = success_rate(envs, episodes);
  std::vector<double> errors;
  double checks = 0.0;
  for (const auto& e : episodes) {
    errors.push_back(navigation_error(lookup(envs, e.env_id), e));
    checks += e.checks_used;
  }
  double sum = 0.0;
  for (double x : errors) sum += x;
  const double n = static_cast<double>(errors.size());
  r.mean_error = sum / n;
  r.mean_checks = checks / n;
  std::sort(errors.begin(), errors.end());
  const auto m = errors.size();
  r.median_error = m % 2 == 1 ? errors[m / 2] : 0.5 * (errors[m / 2 - 1] + errors[m / 2]);
  return r;
}

}  // namespace hear
