#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hear/env.hpp"
#include "hear/instruction.hpp"
#include "hear/lexicon.hpp"

namespace hear {

struct PerturbResult {
  AnnotatedInstruction instruction;
  PerturbationRecord record;
};

/// Replaces a room phrase with one drawn uniformly from `room_list` minus the original.
PerturbResult perturb_room(const AnnotatedInstruction& ann, std::size_t span_index,
                           const std::vector<std::string>& room_list, std::uint64_t seed);

/// Replaces an object phrase with another distinct object phrase of the same
/// instruction. With fewer than two distinct objects the replacement comes from
/// `fallback_vocab` and the record is flagged.
PerturbResult perturb_object(const AnnotatedInstruction& ann, std::size_t span_index,
                             const std::vector<std::string>& fallback_vocab, std::uint64_t seed);

/// Object replacement drawn from an explicit pool (minus the original).
PerturbResult perturb_object_from(const AnnotatedInstruction& ann, std::size_t span_index,
                                  const std::vector<std::string>& pool, std::uint64_t seed);

PerturbResult perturb_direction(const AnnotatedInstruction& ann, std::size_t span_index,
                                std::uint64_t seed, const Lexicon& lexicon = Lexicon::builtin());

/// Inserts `donor` (a sentence ending in ".") at a sentence boundary.
PerturbResult insert_extrinsic(const AnnotatedInstruction& ann,
                               const std::vector<std::string>& donor, std::uint64_t seed,
                               const Lexicon& lexicon = Lexicon::builtin());

/// Reverts a single record, assuming it is the most recent one still applied.
AnnotatedInstruction revert_record(const AnnotatedInstruction& ann, const PerturbationRecord& rec,
                                   const Lexicon& lexicon = Lexicon::builtin());

// -- corpora and training pairs ----------------------------------------------

struct CorpusRecord {
  std::string route_id;
  Route route;
  AnnotatedInstruction instruction;

  bool operator==(const CorpusRecord&) const = default;
};

struct Corpus {
  std::vector<Environment> environments;
  std::vector<CorpusRecord> records;

  const Environment& env(const std::string& id) const;
  const CorpusRecord& record(const std::string& route_id) const;
  void index();

 private:
  std::map<std::string, std::size_t> env_index_;
  std::map<std::string, std::size_t> record_index_;
};

/// One span of one instruction on one route, wrapped by [BH] ... [EH].
struct DetectionExample {
  std::string env_id;
  std::string route_id;
  std::vector<std::string> tokens;  // includes the two marker tokens
  std::size_t i = 0;                // first wrapped token (index into `tokens`)
  std::size_t j = 0;                // last wrapped token
  PhraseKind kind = PhraseKind::direction;
  bool label = false;
  std::vector<int> alignment;  // clause alignment of the unmarked tokens; may be empty

  /// Tokens without markers and the wrapped span in those coordinates.
  std::vector<std::string> plain_tokens() const;
  PhraseSpan plain_span() const;
  std::string wrapped_phrase() const { return join_words(tokens, i, j + 1); }

  bool operator==(const DetectionExample&) const = default;
};

struct PairedExample {
  DetectionExample positive;
  DetectionExample negative;

  bool operator==(const PairedExample&) const = default;
};

/// Wraps span `span` of `ann` into a detection example.
DetectionExample make_example(const std::string& env_id, const std::string& route_id,
                              const AnnotatedInstruction& ann, const PhraseSpan& span, bool label);

/// Example whose wrapped tokens are replaced by `replacement` (which may be
/// the single token kRemove); alignment is carried over.
DetectionExample substitute_example(const std::string& env_id, const std::string& route_id,
                                    const AnnotatedInstruction& ann, const PhraseSpan& span,
                                    const std::vector<std::string>& replacement, PhraseKind kind,
                                    bool label);

enum class PairStrategy { default_swap, same_env_swap };

std::string_view to_string(PairStrategy s);
PairStrategy pair_strategy_from_string(std::string_view text);

struct PairOptions {
  int pairs_per_instruction = 2;
  int max_hallucinations = 3;
  /// Relative weights for drawing each injected hallucination's kind.
  double room_weight = 1.0;
  double object_weight = 1.0;
  double direction_weight = 1.0;
  double extrinsic_weight = 1.0;
};

/// Sources for replacement phrases while synthesizing hallucinations.
struct InjectionContext {
  const Lexicon* lexicon = &Lexicon::builtin();
  const Environment* env = nullptr;
  const Route* route = nullptr;
  PairStrategy strategy = PairStrategy::default_swap;
  const std::vector<std::vector<std::string>>* donors = nullptr;
};

/// Applies the given perturbation kinds (intrinsic first, then at most one
/// extrinsic insertion) to clean spans chosen at random. Kinds that cannot be
/// applied are skipped.
AnnotatedInstruction inject_hallucinations(const AnnotatedInstruction& clean,
                                           const std::vector<PerturbationKind>& kinds,
                                           const InjectionContext& ctx, std::uint64_t seed);

/// All "." terminated sentences of the corpus, in record order.
std::vector<std::vector<std::string>> donor_sentences(const Corpus& corpus);

/// A detection pair together with the instructions its members were cut from.
struct SourcedPair {
  PairedExample pair;
  AnnotatedInstruction positive_instruction;
  AnnotatedInstruction negative_instruction;
  std::size_t positive_span = 0;
  std::size_t negative_span = 0;
};

std::vector<SourcedPair> build_detection_sources(const Corpus& corpus, std::uint64_t seed,
                                                 PairStrategy strategy = PairStrategy::default_swap,
                                                 const PairOptions& options = {});

std::vector<PairedExample> build_detection_pairs(const Corpus& corpus, std::uint64_t seed,
                                                 PairStrategy strategy = PairStrategy::default_swap,
                                                 const PairOptions& options = {});

/// Positive wraps an intrinsic hallucination, negative an extrinsic one.
std::vector<PairedExample> build_type_pairs(const Corpus& corpus, std::uint64_t seed,
                                            const PairOptions& options = {});

/// Detection pairs plus deletion pairs: [REMOVE] in place of a grounded span
/// (positive) versus [REMOVE] in place of an extrinsic span (negative).
std::vector<PairedExample> build_one_stage_pairs(const Corpus& corpus, std::uint64_t seed,
                                                 const PairOptions& options = {});

struct CandidateSet {
  PhraseSpan span;
  std::string original;
  std::vector<std::string> candidates;  // lexicographic, kRemove last
  std::optional<std::size_t> gold_index;

  bool operator==(const CandidateSet&) const = default;
};

/// Room/object spans: the environment's room and object vocabulary; direction
/// spans: the substitution-table row. The original phrase is excluded and
/// kRemove is appended last.
CandidateSet generate_candidates(const Environment& env, const AnnotatedInstruction& ann,
                                 const PhraseSpan& span,
                                 const Lexicon& lexicon = Lexicon::builtin());

}  // namespace hear
