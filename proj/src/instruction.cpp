#include "hear/instruction.hpp"

#include <algorithm>
#include <stdexcept>

namespace hear {

std::string_view to_string(HallucinationType t) {
  switch (t) {
    case HallucinationType::none:
      return "none";
    case HallucinationType::intrinsic:
      return "intrinsic";
    case HallucinationType::extrinsic:
      return "extrinsic";
  }
  return "none";
}

HallucinationType hallucination_type_from_string(std::string_view text) {
  if (text == "none") return HallucinationType::none;
  if (text == "intrinsic") return HallucinationType::intrinsic;
  if (text == "extrinsic") return HallucinationType::extrinsic;
  throw std::invalid_argument("unknown hallucination type: " + std::string(text));
}

std::string_view to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::room:
      return "room";
    case PerturbationKind::object:
      return "object";
    case PerturbationKind::direction:
      return "direction";
    case PerturbationKind::extrinsic:
      return "extrinsic";
  }
  return "room";
}

PerturbationKind perturbation_kind_from_string(std::string_view text) {
  if (text == "room") return PerturbationKind::room;
  if (text == "object") return PerturbationKind::object;
  if (text == "direction") return PerturbationKind::direction;
  if (text == "extrinsic") return PerturbationKind::extrinsic;
  throw std::invalid_argument("unknown perturbation kind: " + std::string(text));
}

bool is_clause_delimiter(const std::string& token) { return token == "," || token == "."; }

std::vector<TokenRange> sentence_bounds(const std::vector<std::string>& tokens) {
  std::vector<TokenRange> out;
  std::size_t start = 0;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k] == ".") {
      out.push_back({start, k + 1});
      start = k + 1;
    }
  }
  if (start < tokens.size()) out.push_back({start, tokens.size()});
  return out;
}

std::vector<TokenRange> clause_bounds(const std::vector<std::string>& tokens) {
  std::vector<TokenRange> out;
  std::size_t start = 0;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (is_clause_delimiter(tokens[k])) {
      out.push_back({start, k + 1});
      start = k + 1;
    }
  }
  if (start < tokens.size()) out.push_back({start, tokens.size()});
  return out;
}

std::vector<TokenRange> AnnotatedInstruction::sentence_bounds() const {
  return hear::sentence_bounds(tokens);
}

std::vector<TokenRange> AnnotatedInstruction::clause_bounds() const {
  return hear::clause_bounds(tokens);
}

std::size_t AnnotatedInstruction::clause_of(std::size_t token) const {
  std::size_t clause = 0;
  for (std::size_t k = 0; k < token && k < tokens.size(); ++k) {
    if (is_clause_delimiter(tokens[k])) ++clause;
  }
  return clause;
}

std::size_t AnnotatedInstruction::hallucination_count() const {
  return static_cast<std::size_t>(
      std::count_if(gold.begin(), gold.end(), [](const GoldLabel& g) { return g.is_hallucination; }));
}

std::vector<PhraseSpan> extract_phrases(const std::vector<std::string>& tokens,
                                        const Lexicon& lexicon) {
  std::vector<PhraseSpan> spans;
  const std::size_t max_len = lexicon.max_phrase_tokens();
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    bool matched = false;
    for (std::size_t len = std::min(max_len, tokens.size() - pos); len >= 1; --len) {
      auto kind = lexicon.kind_of(join_words(tokens, pos, pos + len));
      if (kind) {
        spans.push_back({pos, pos + len - 1, *kind});
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++pos;
  }
  return spans;
}

void splice_span(AnnotatedInstruction& ann, std::size_t span_index,
                 const std::vector<std::string>& replacement, PhraseKind kind) {
  if (span_index >= ann.spans.size()) throw std::out_of_range("span index out of range");
  if (replacement.empty()) throw std::invalid_argument("replacement must be non-empty");
  const PhraseSpan old = ann.spans[span_index];
  const auto first = ann.tokens.begin() + static_cast<std::ptrdiff_t>(old.i);
  ann.tokens.erase(first, first + static_cast<std::ptrdiff_t>(old.length()));
  ann.tokens.insert(ann.tokens.begin() + static_cast<std::ptrdiff_t>(old.i), replacement.begin(),
                    replacement.end());
  const std::ptrdiff_t delta =
      static_cast<std::ptrdiff_t>(replacement.size()) - static_cast<std::ptrdiff_t>(old.length());
  for (auto& s : ann.spans) {
    if (s.i > old.j) {
      s.i = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s.i) + delta);
      s.j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s.j) + delta);
    }
  }
  ann.spans[span_index] = {old.i, old.i + replacement.size() - 1, kind};
}

}  // namespace hear
