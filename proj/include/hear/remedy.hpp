#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hear/env.hpp"
#include "hear/grounding.hpp"
#include "hear/instruction.hpp"
#include "hear/lexicon.hpp"

namespace hear {

inline constexpr std::size_t kDefaultHighlightCap = 3;
inline constexpr std::size_t kDefaultTopK = 3;

/// Everything needed to featurize spans of instructions written for one route.
struct RemedyContext {
  const Environment* env = nullptr;
  const Route* route = nullptr;
  const Lexicon* lexicon = &Lexicon::builtin();
  FeatureConfig features;
};

struct Highlight {
  TokenRange range;                   // the span, or its whole clause when merged
  double confidence = 0.0;            // max member confidence
  std::vector<std::size_t> members;   // indices into the instruction's spans
  std::vector<PhraseSpan> member_spans;
  bool merged = false;
  std::vector<std::string> snapshot;  // tokens in `range` when the highlight was made

  bool operator==(const Highlight&) const = default;
};

struct Suggestion {
  std::string candidate;  // phrase or kRemove
  double score = 0.0;
  /// Member of the highlight the replacement applies to; ignored for kRemove.
  std::size_t member = 0;

  bool operator==(const Suggestion&) const = default;
};

struct SuggestionList {
  TokenRange for_highlight;
  std::vector<Suggestion> items;

  bool operator==(const SuggestionList&) const = default;
};

/// Descending score, then lexicographic candidate with kRemove after every
/// phrase of equal score. Duplicates (same member and candidate) are dropped
/// and the list is cut to `k`.
void sort_suggestions(std::vector<Suggestion>& items, std::size_t k = kDefaultTopK);

/// Highlight selection from per-span decisions: a clause whose spans are all
/// positive becomes one highlight; the rest stay single. Keeps the `cap` most
/// confident, returned in position order.
std::vector<Highlight> select_highlights(const AnnotatedInstruction& ann,
                                         const std::vector<bool>& positive,
                                         const std::vector<double>& confidence,
                                         std::size_t cap = kDefaultHighlightCap);

/// Wraps span `span_index` of `ann` as a detection example for `ctx.route`.
DetectionExample span_example(const RemedyContext& ctx, const AnnotatedInstruction& ann,
                              std::size_t span_index);

std::vector<Prediction> classify_spans(const GroundingModel& detector, const RemedyContext& ctx,
                                       const AnnotatedInstruction& ann);

std::vector<Highlight> detect_highlights(const GroundingModel& detector, const RemedyContext& ctx,
                                         const AnnotatedInstruction& ann,
                                         std::size_t cap = kDefaultHighlightCap);

/// Highlights at the gold hallucinations, merged by the same clause rule.
std::vector<Highlight> gold_highlights(const AnnotatedInstruction& ann,
                                       std::size_t cap = kDefaultHighlightCap);

/// Score of a replacement given P_I(z=1|x) and P_H(y=1|x_hat).
double replacement_score(double p_intrinsic, double p_hallucinated_hat);
/// Score of deletion given P_I(z=1|x).
double removal_score(double p_intrinsic);

/// Two-stage ranking of `candidates` for span `span_index`.
SuggestionList rank_candidates(const GroundingModel& detector, const GroundingModel& type_model,
                               const RemedyContext& ctx, const AnnotatedInstruction& ann,
                               std::size_t span_index, const std::vector<std::string>& candidates,
                               std::size_t k = kDefaultTopK);

/// One-stage ranking: every candidate, kRemove included, is substituted and
/// scored 1 - P(y=1 | x_hat).
SuggestionList rank_one_stage(const GroundingModel& joint, const RemedyContext& ctx,
                              const AnnotatedInstruction& ann, std::size_t span_index,
                              const std::vector<std::string>& candidates,
                              std::size_t k = kDefaultTopK);

/// Suggestions for a highlight. Merged clauses get kRemove plus replacements
/// for each member; the deletion score uses the most confident member.
SuggestionList suggest(const GroundingModel& detector, const GroundingModel& type_model,
                       const RemedyContext& ctx, const AnnotatedInstruction& ann,
                       const Highlight& highlight, std::size_t k = kDefaultTopK);

SuggestionList suggest_one_stage(const GroundingModel& joint, const RemedyContext& ctx,
                                 const AnnotatedInstruction& ann, const Highlight& highlight,
                                 std::size_t k = kDefaultTopK);

/// Oracle menu: the gold correction then the original phrase of the most
/// confident hallucinated member.
SuggestionList oracle_suggestions(const AnnotatedInstruction& ann, const Highlight& highlight);

/// Applies a suggestion and returns the edited instruction. kRemove deletes
/// the span, or the whole clause when merged or when nothing else in the
/// clause is a phrase, and repairs punctuation. Spans are re-extracted and
/// gold labels carried over; a replaced span becomes clean exactly when the
/// candidate equals its gold correction. Throws if the highlight is stale.
AnnotatedInstruction apply_suggestion(const AnnotatedInstruction& ann, const Highlight& highlight,
                                      const Suggestion& suggestion,
                                      const Lexicon& lexicon = Lexicon::builtin());

/// Applies every gold correction.
AnnotatedInstruction apply_gold_corrections(const AnnotatedInstruction& ann,
                                            const Lexicon& lexicon = Lexicon::builtin());

}  // namespace hear
