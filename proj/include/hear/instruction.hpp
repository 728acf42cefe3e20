#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hear/env.hpp"
#include "hear/lexicon.hpp"
#include "hear/rng.hpp"

namespace hear {

inline constexpr std::size_t kMaxInstructionTokens = 60;

/// Inclusive token range [i, j] tagged with its lexicon kind.
struct PhraseSpan {
  std::size_t i = 0;
  std::size_t j = 0;
  PhraseKind kind = PhraseKind::direction;

  std::size_t length() const { return j - i + 1; }
  bool operator==(const PhraseSpan&) const = default;
};

enum class HallucinationType { none, intrinsic, extrinsic };

std::string_view to_string(HallucinationType t);
HallucinationType hallucination_type_from_string(std::string_view text);

struct GoldLabel {
  bool is_hallucination = false;
  HallucinationType type = HallucinationType::none;
  /// Phrase restoring the grounded instruction, kRemove, or empty for clean spans.
  std::string correction;

  static GoldLabel clean() { return {}; }
  bool operator==(const GoldLabel&) const = default;
};

/// Half-open token range [begin, end).
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t k) const { return k >= begin && k < end; }
  bool operator==(const TokenRange&) const = default;
};

enum class PerturbationKind { room, object, direction, extrinsic };

std::string_view to_string(PerturbationKind k);
PerturbationKind perturbation_kind_from_string(std::string_view text);

/// One applied corruption; `original` and `replacement` are the token runs at
/// `position` before and after. Extrinsic insertions have an empty original.
struct PerturbationRecord {
  PerturbationKind kind = PerturbationKind::room;
  std::size_t position = 0;
  std::vector<std::string> original;
  std::vector<std::string> replacement;
  bool fallback = false;

  bool operator==(const PerturbationRecord&) const = default;
};

/// Sentinel used in `alignment` for clauses with no route counterpart.
inline constexpr int kNoStep = -1;

/// Instruction tokens with phrase spans, clause-to-step alignment and gold
/// hallucination labels. Step index `route.steps.size()` denotes the final node.
struct AnnotatedInstruction {
  std::vector<std::string> tokens;
  std::vector<PhraseSpan> spans;
  std::vector<GoldLabel> gold;  // parallel to spans
  std::vector<int> alignment;   // one entry per clause; kNoStep for inserted clauses
  std::vector<PerturbationRecord> records;

  std::vector<TokenRange> sentence_bounds() const;
  /// Clause token ranges, each including its trailing delimiter when present.
  std::vector<TokenRange> clause_bounds() const;
  /// Index of the clause containing token k.
  std::size_t clause_of(std::size_t token) const;
  std::string text() const { return join_words(tokens); }
  std::string phrase(const PhraseSpan& s) const { return join_words(tokens, s.i, s.j + 1); }
  std::size_t hallucination_count() const;

  bool operator==(const AnnotatedInstruction&) const = default;
};

bool is_clause_delimiter(const std::string& token);

std::vector<TokenRange> sentence_bounds(const std::vector<std::string>& tokens);
std::vector<TokenRange> clause_bounds(const std::vector<std::string>& tokens);

/// Maximal non-overlapping lexicon matches: scan left to right, take the
/// longest phrase starting at each position.
std::vector<PhraseSpan> extract_phrases(const std::vector<std::string>& tokens,
                                        const Lexicon& lexicon = Lexicon::builtin());

/// Replaces tokens [i, j] (inclusive) with `replacement`, shifting spans and
/// keeping gold labels parallel. The replaced span itself (if it is a span)
/// keeps its index with updated bounds and `kind`.
void splice_span(AnnotatedInstruction& ann, std::size_t span_index,
                 const std::vector<std::string>& replacement, PhraseKind kind);

// -- speaker -----------------------------------------------------------------

enum class StepTemplate { past_object, in_room, past_object_in_room };

struct SpeakerConfig {
  std::vector<StepTemplate> templates = {StepTemplate::past_object, StepTemplate::in_room,
                                         StepTemplate::past_object_in_room};
  int max_clauses_per_sentence = 2;
};

AnnotatedInstruction describe_route(const Environment& env, const Route& route, std::uint64_t seed,
                                    const SpeakerConfig& config = {});

struct CorruptionRates {
  double room = 0.0;
  double object = 0.0;
  double direction = 0.0;
  double extrinsic = 0.0;  // probability of inserting one sentence
  /// Probability an instruction is corrupted at all. Below 1, the per-kind
  /// rates apply conditionally and at least one hallucination is drawn.
  double instruction = 1.0;
  int max_hallucinations = 3;

  /// Rates calibrated so speaker corpora match the reported instruction- and
  /// phrase-level hallucination frequencies.
  static CorruptionRates paper_calibrated();
};

/// Corrupts a clean instruction. `donors` supplies extrinsic sentences (token
/// runs ending in "."); when empty, sentences of `ann` itself are used.
AnnotatedInstruction corrupt_instruction(const AnnotatedInstruction& ann,
                                         const CorruptionRates& rates, std::uint64_t seed,
                                         const std::vector<std::vector<std::string>>& donors = {},
                                         const Lexicon& lexicon = Lexicon::builtin());

/// Undoes every perturbation record in reverse order.
AnnotatedInstruction restore_original(const AnnotatedInstruction& ann,
                                      const Lexicon& lexicon = Lexicon::builtin());

}  // namespace hear
