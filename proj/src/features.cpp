#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "hear/grounding.hpp"

namespace hear {

const std::array<std::string_view, kFeatureDim> kFeatureNames = {
    "kind_room",
    "kind_object",
    "kind_direction",
    "room_match_in_window",
    "room_match_anywhere",
    "object_match_in_window",
    "object_match_anywhere",
    "direction_match_in_window",
    "direction_antonym_in_window",
    "span_duplicated",
    "clause_unaligned",
    "clause_count_minus_step_count",
    "span_relative_position",
    "bias",
};

namespace {

NodeId node_at_step(const Route& route, int step) {
  return step < static_cast<int>(route.steps.size()) ? route.steps[static_cast<std::size_t>(step)].node
                                                      : route.final_node();
}

bool node_has_object(const Environment& env, NodeId node, const std::string& name) {
  const auto& objs = env.node(node).objects;
  return std::any_of(objs.begin(), objs.end(), [&](const PlacedObject& o) { return o.name == name; });
}

bool in_row(const Lexicon& lexicon, std::string_view key, const std::string& phrase) {
  if (!lexicon.has_direction(key)) return false;
  const auto& row = lexicon.substitutes(key);
  return std::binary_search(row.begin(), row.end(), phrase);
}

}  // namespace

std::vector<int> feature_window(const Route& route, const std::vector<int>& alignment,
                                std::size_t clause, std::size_t clause_count,
                                const FeatureConfig& config) {
  const int last = static_cast<int>(route.steps.size());
  int center = 0;
  int radius = 0;
  if (!alignment.empty() && alignment.size() == clause_count && clause < alignment.size()) {
    center = alignment[clause];
    if (center == kNoStep) return {};
    radius = config.aligned_radius;
  } else {
    const double denom = clause_count > 1 ? static_cast<double>(clause_count - 1) : 1.0;
    center = static_cast<int>(std::lround(static_cast<double>(clause) * last / denom));
    radius = config.proportional_radius;
  }
  std::vector<int> out;
  for (int s = std::max(0, center - radius); s <= std::min(last, center + radius); ++s) {
    out.push_back(s);
  }
  return out;
}

FeatureVector featurize(const Environment& env, const Route& route, const DetectionExample& example,
                        const FeatureConfig& config, const Lexicon& lexicon) {
  if (example.i < 1 || example.j + 1 >= example.tokens.size() || example.i > example.j ||
      example.tokens[example.i - 1] != kBeginHallucination ||
      example.tokens[example.j + 1] != kEndHallucination) {
    throw std::invalid_argument("detection example has invalid marker positions");
  }
  FeatureVector f{};
  const auto plain = example.plain_tokens();
  const PhraseSpan span = example.plain_span();
  const std::string phrase = example.wrapped_phrase();
  const bool removed = phrase == kRemove;

  const auto clauses = clause_bounds(plain);
  std::size_t clause = 0;
  for (std::size_t c = 0; c < clauses.size(); ++c) {
    if (clauses[c].contains(span.i)) clause = c;
  }
  const auto window = feature_window(route, example.alignment, clause, clauses.size(), config);
  const bool unaligned = !example.alignment.empty() && example.alignment.size() == clauses.size() &&
                         example.alignment[clause] == kNoStep;

  if (!removed) {
    switch (example.kind) {
      case PhraseKind::room: {
        f[kKindRoom] = 1.0;
        for (int s : window) {
          if (env.node(node_at_step(route, s)).room == phrase) f[kRoomInWindow] = 1.0;
        }
        for (NodeId n : route.path()) {
          if (env.node(n).room == phrase) f[kRoomAnywhere] = 1.0;
        }
        break;
      }
      case PhraseKind::object: {
        f[kKindObject] = 1.0;
        for (int s : window) {
          if (node_has_object(env, node_at_step(route, s), phrase)) f[kObjectInWindow] = 1.0;
        }
        for (NodeId n : route.path()) {
          if (node_has_object(env, n, phrase)) f[kObjectAnywhere] = 1.0;
        }
        break;
      }
      case PhraseKind::direction: {
        f[kKindDirection] = 1.0;
        const bool is_past = phrase == kLandmarkPreposition;
        if (!is_past && in_row(lexicon, kLandmarkPreposition, phrase)) {
          f[kDirectionAntonymInWindow] = 1.0;
        }
        for (int s : window) {
          const NodeId n = node_at_step(route, s);
          if (is_past && !env.node(n).objects.empty()) f[kDirectionInWindow] = 1.0;
          if (s >= static_cast<int>(route.steps.size())) continue;
          const auto& label = route.steps[static_cast<std::size_t>(s)].action.direction;
          if (label == phrase) f[kDirectionInWindow] = 1.0;
          if (in_row(lexicon, label, phrase)) f[kDirectionAntonymInWindow] = 1.0;
        }
        break;
      }
    }
  }

  const auto spans = extract_phrases(plain, lexicon);
  int same = 0;
  for (const auto& s : spans) {
    if (join_words(plain, s.i, s.j + 1) == phrase) ++same;
  }
  f[kSpanDuplicated] = (!removed && same > 1) ? 1.0 : 0.0;
  f[kClauseUnaligned] = unaligned ? 1.0 : 0.0;
  const double delta =
      static_cast<double>(clauses.size()) - static_cast<double>(route.steps.size() + 1);
  f[kClauseStepDelta] = std::clamp(delta, -3.0, 3.0) / 3.0;
  f[kRelativePosition] =
      plain.size() > 1 ? static_cast<double>(span.i) / static_cast<double>(plain.size() - 1) : 0.0;
  f[kBias] = 1.0;
  return f;
}

std::vector<FeaturizedPair> featurize_pairs(const Corpus& corpus,
                                            const std::vector<PairedExample>& pairs,
                                            const FeatureConfig& config) {
  std::vector<FeaturizedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto& pos_rec = corpus.record(p.positive.route_id);
    const auto& neg_rec = corpus.record(p.negative.route_id);
    out.push_back({featurize(corpus.env(p.positive.env_id), pos_rec.route, p.positive, config),
                   featurize(corpus.env(p.negative.env_id), neg_rec.route, p.negative, config)});
  }
  return out;
}

}  // namespace hear
