#include "hear/remedy.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "hear/perturb.hpp"

namespace hear {

namespace {

bool is_remove(const std::string& c) { return c == kRemove; }

void validate_candidate(const std::string& c) {
  if (c.empty()) throw std::invalid_argument("empty candidate");
  for (const auto& w : split_words(c)) {
    if (w == kBeginHallucination || w == kEndHallucination) {
      throw std::invalid_argument("candidate contains marker tokens: " + c);
    }
    if (w == kRemove && c != kRemove) throw std::invalid_argument("malformed candidate: " + c);
  }
  if (split_words(c).empty()) throw std::invalid_argument("empty candidate");
}

std::size_t clause_index_of(const std::vector<TokenRange>& clauses, std::size_t token) {
  for (std::size_t c = 0; c < clauses.size(); ++c) {
    if (clauses[c].contains(token)) return c;
  }
  return clauses.empty() ? 0 : clauses.size() - 1;
}

std::vector<std::string> slice(const std::vector<std::string>& tokens, TokenRange r) {
  return {tokens.begin() + static_cast<std::ptrdiff_t>(r.begin),
          tokens.begin() + static_cast<std::ptrdiff_t>(r.end)};
}

Highlight make_highlight(const AnnotatedInstruction& ann, TokenRange range,
                         std::vector<std::size_t> members, bool merged, double confidence) {
  Highlight h;
  h.range = range;
  h.confidence = confidence;
  h.members = std::move(members);
  for (auto m : h.members) h.member_spans.push_back(ann.spans[m]);
  h.merged = merged;
  h.snapshot = slice(ann.tokens, range);
  return h;
}

}  // namespace

void sort_suggestions(std::vector<Suggestion>& items, std::size_t k) {
  std::sort(items.begin(), items.end(), [](const Suggestion& a, const Suggestion& b) {
    if (a.score != b.score) return a.score > b.score;
    const bool ra = is_remove(a.candidate);
    const bool rb = is_remove(b.candidate);
    if (ra != rb) return rb;
    if (a.candidate != b.candidate) return a.candidate < b.candidate;
    return a.member < b.member;
  });
  std::vector<Suggestion> unique;
  for (auto& s : items) {
    const bool dup = std::any_of(unique.begin(), unique.end(), [&](const Suggestion& u) {
      return u.candidate == s.candidate && (is_remove(s.candidate) || u.member == s.member);
    });
    if (!dup) unique.push_back(std::move(s));
  }
  if (unique.size() > k) unique.resize(k);
  items = std::move(unique);
}

std::vector<Highlight> select_highlights(const AnnotatedInstruction& ann,
                                         const std::vector<bool>& positive,
                                         const std::vector<double>& confidence, std::size_t cap) {
  if (positive.size() != ann.spans.size() || confidence.size() != ann.spans.size()) {
    throw std::invalid_argument("one decision per span required");
  }
  const auto clauses = ann.clause_bounds();
  std::map<std::size_t, std::vector<std::size_t>> by_clause;
  for (std::size_t s = 0; s < ann.spans.size(); ++s) {
    by_clause[clause_index_of(clauses, ann.spans[s].i)].push_back(s);
  }
  std::vector<Highlight> all;
  for (const auto& [c, members] : by_clause) {
    const bool every = std::all_of(members.begin(), members.end(), [&](std::size_t m) { return positive[m]; });
    if (every) {
      double conf = 0.0;
      for (auto m : members) conf = std::max(conf, confidence[m]);
      all.push_back(make_highlight(ann, clauses[c], members, true, conf));
      continue;
    }
    for (auto m : members) {
      if (!positive[m]) continue;
      all.push_back(make_highlight(ann, {ann.spans[m].i, ann.spans[m].j + 1}, {m}, false, confidence[m]));
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Highlight& a, const Highlight& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.range.begin < b.range.begin;
  });
  if (all.size() > cap) all.resize(cap);
  std::sort(all.begin(), all.end(),
            [](const Highlight& a, const Highlight& b) { return a.range.begin < b.range.begin; });
  return all;
}

DetectionExample span_example(const RemedyContext& ctx, const AnnotatedInstruction& ann,
                              std::size_t span_index) {
  if (ctx.route == nullptr) throw std::invalid_argument("remedy context has no route");
  if (span_index >= ann.spans.size()) throw std::out_of_range("span index out of range");
  return make_example(ctx.route->env_id, "", ann, ann.spans[span_index], false);
}

std::vector<Prediction> classify_spans(const GroundingModel& detector, const RemedyContext& ctx,
                                       const AnnotatedInstruction& ann) {
  std::vector<Prediction> out;
  for (std::size_t s = 0; s < ann.spans.size(); ++s) {
    const auto f = featurize(*ctx.env, *ctx.route, span_example(ctx, ann, s), ctx.features, *ctx.lexicon);
    out.push_back(predict(detector, f));
  }
  return out;
}

std::vector<Highlight> detect_highlights(const GroundingModel& detector, const RemedyContext& ctx,
                                         const AnnotatedInstruction& ann, std::size_t cap) {
  const auto preds = classify_spans(detector, ctx, ann);
  std::vector<bool> positive;
  std::vector<double> conf;
  for (const auto& p : preds) {
    positive.push_back(p.label);
    conf.push_back(p.confidence);
  }
  return select_highlights(ann, positive, conf, cap);
}

std::vector<Highlight> gold_highlights(const AnnotatedInstruction& ann, std::size_t cap) {
  std::vector<bool> positive;
  std::vector<double> conf;
  for (std::size_t s = 0; s < ann.spans.size(); ++s) {
    const bool h = s < ann.gold.size() && ann.gold[s].is_hallucination;
    positive.push_back(h);
    conf.push_back(h ? 1.0 : 0.0);
  }
  return select_highlights(ann, positive, conf, cap);
}

double replacement_score(double p_intrinsic, double p_hallucinated_hat) {
  return p_intrinsic * (1.0 - p_hallucinated_hat);
}

double removal_score(double p_intrinsic) { return 1.0 - p_intrinsic; }

namespace {

double span_confidence(const GroundingModel& model, const RemedyContext& ctx,
                       const DetectionExample& ex) {
  return confidence(model, featurize(*ctx.env, *ctx.route, ex, ctx.features, *ctx.lexicon));
}

DetectionExample candidate_example(const RemedyContext& ctx, const AnnotatedInstruction& ann,
                                   std::size_t span_index, const std::string& candidate) {
  const auto& span = ann.spans[span_index];
  return substitute_example(ctx.route->env_id, "", ann, span, split_words(candidate), span.kind,
                            false);
}

void append_two_stage(std::vector<Suggestion>& items, const GroundingModel& detector,
                      const GroundingModel& type_model, const RemedyContext& ctx,
                      const AnnotatedInstruction& ann, std::size_t span_index,
                      const std::vector<std::string>& candidates, std::size_t member,
                      bool include_remove) {
  const double p_i = span_confidence(type_model, ctx, span_example(ctx, ann, span_index));
  for (const auto& c : candidates) {
    validate_candidate(c);
    if (is_remove(c)) {
      if (include_remove) items.push_back({c, removal_score(p_i), 0});
      continue;
    }
    const double p_h = span_confidence(detector, ctx, candidate_example(ctx, ann, span_index, c));
    items.push_back({c, replacement_score(p_i, p_h), member});
  }
}

void append_one_stage(std::vector<Suggestion>& items, const GroundingModel& joint,
                      const RemedyContext& ctx, const AnnotatedInstruction& ann,
                      std::size_t span_index, const std::vector<std::string>& candidates,
                      std::size_t member, bool include_remove) {
  for (const auto& c : candidates) {
    validate_candidate(c);
    if (is_remove(c) && !include_remove) continue;
    const double p = span_confidence(joint, ctx, candidate_example(ctx, ann, span_index, c));
    items.push_back({c, 1.0 - p, is_remove(c) ? 0 : member});
  }
}

void require_candidates(const AnnotatedInstruction& ann, std::size_t span_index,
                        const std::vector<std::string>& candidates) {
  if (span_index >= ann.spans.size()) throw std::out_of_range("span index out of range");
  if (candidates.empty()) throw std::invalid_argument("candidate set is empty");
}

std::size_t representative(const Highlight& h, const GroundingModel* model, const RemedyContext& ctx,
                           const AnnotatedInstruction& ann) {
  if (h.members.size() == 1 || model == nullptr) return 0;
  std::size_t best = 0;
  double best_conf = -1.0;
  for (std::size_t m = 0; m < h.members.size(); ++m) {
    const double c = span_confidence(*model, ctx, span_example(ctx, ann, h.members[m]));
    if (c > best_conf) {
      best_conf = c;
      best = m;
    }
  }
  return best;
}

void require_fresh(const AnnotatedInstruction& ann, const Highlight& h) {
  if (h.range.end > ann.tokens.size() || h.range.begin >= h.range.end ||
      slice(ann.tokens, h.range) != h.snapshot) {
    throw std::invalid_argument("stale highlight: instruction changed since it was computed");
  }
  for (std::size_t m = 0; m < h.members.size(); ++m) {
    if (h.members[m] >= ann.spans.size() || ann.spans[h.members[m]] != h.member_spans[m]) {
      throw std::invalid_argument("stale highlight: spans changed since it was computed");
    }
  }
}

}  // namespace

SuggestionList rank_candidates(const GroundingModel& detector, const GroundingModel& type_model,
                               const RemedyContext& ctx, const AnnotatedInstruction& ann,
                               std::size_t span_index, const std::vector<std::string>& candidates,
                               std::size_t k) {
  require_candidates(ann, span_index, candidates);
  SuggestionList out;
  out.for_highlight = {ann.spans[span_index].i, ann.spans[span_index].j + 1};
  append_two_stage(out.items, detector, type_model, ctx, ann, span_index, candidates, 0, true);
  sort_suggestions(out.items, k);
  return out;
}

SuggestionList rank_one_stage(const GroundingModel& joint, const RemedyContext& ctx,
                              const AnnotatedInstruction& ann, std::size_t span_index,
                              const std::vector<std::string>& candidates, std::size_t k) {
  require_candidates(ann, span_index, candidates);
  SuggestionList out;
  out.for_highlight = {ann.spans[span_index].i, ann.spans[span_index].j + 1};
  append_one_stage(out.items, joint, ctx, ann, span_index, candidates, 0, true);
  sort_suggestions(out.items, k);
  return out;
}

SuggestionList suggest(const GroundingModel& detector, const GroundingModel& type_model,
                       const RemedyContext& ctx, const AnnotatedInstruction& ann,
                       const Highlight& highlight, std::size_t k) {
  require_fresh(ann, highlight);
  SuggestionList out;
  out.for_highlight = highlight.range;
  const std::size_t rep = representative(highlight, &detector, ctx, ann);
  for (std::size_t m = 0; m < highlight.members.size(); ++m) {
    const auto span_index = highlight.members[m];
    const auto set = generate_candidates(*ctx.env, ann, ann.spans[span_index], *ctx.lexicon);
    append_two_stage(out.items, detector, type_model, ctx, ann, span_index, set.candidates, m,
                     m == rep);
  }
  sort_suggestions(out.items, k);
  return out;
}

SuggestionList suggest_one_stage(const GroundingModel& joint, const RemedyContext& ctx,
                                 const AnnotatedInstruction& ann, const Highlight& highlight,
                                 std::size_t k) {
  require_fresh(ann, highlight);
  SuggestionList out;
  out.for_highlight = highlight.range;
  const std::size_t rep = representative(highlight, &joint, ctx, ann);
  for (std::size_t m = 0; m < highlight.members.size(); ++m) {
    const auto span_index = highlight.members[m];
    const auto set = generate_candidates(*ctx.env, ann, ann.spans[span_index], *ctx.lexicon);
    append_one_stage(out.items, joint, ctx, ann, span_index, set.candidates, m, m == rep);
  }
  sort_suggestions(out.items, k);
  return out;
}

SuggestionList oracle_suggestions(const AnnotatedInstruction& ann, const Highlight& highlight) {
  require_fresh(ann, highlight);
  SuggestionList out;
  out.for_highlight = highlight.range;
  std::size_t rep = 0;
  for (std::size_t m = 0; m < highlight.members.size(); ++m) {
    const auto s = highlight.members[m];
    if (s < ann.gold.size() && ann.gold[s].is_hallucination) {
      rep = m;
      break;
    }
  }
  const auto span_index = highlight.members[rep];
  const std::string original = ann.phrase(ann.spans[span_index]);
  const GoldLabel gold = span_index < ann.gold.size() ? ann.gold[span_index] : GoldLabel::clean();
  const std::string correction = gold.is_hallucination ? gold.correction : original;
  out.items.push_back({correction, 1.0, rep});
  if (correction != original) out.items.push_back({original, 0.0, rep});
  return out;
}

namespace {

struct Edit {
  TokenRange erase;
  std::vector<std::string> insert;
  std::optional<std::size_t> replaced_span;
  std::string candidate;
  bool clause_removed = false;
  std::size_t clause_index = 0;
};

AnnotatedInstruction apply_edit(const AnnotatedInstruction& ann, const Edit& e,
                                const Lexicon& lexicon) {
  AnnotatedInstruction out;

  out.tokens = ann.tokens;
  const bool ends_sentence = e.erase.end > e.erase.begin && ann.tokens[e.erase.end - 1] == ".";
  out.tokens.erase(out.tokens.begin() + static_cast<std::ptrdiff_t>(e.erase.begin),
                   out.tokens.begin() + static_cast<std::ptrdiff_t>(e.erase.end));
  out.tokens.insert(out.tokens.begin() + static_cast<std::ptrdiff_t>(e.erase.begin),
                    e.insert.begin(), e.insert.end());
  if (e.clause_removed && ends_sentence && e.erase.begin > 0 &&
      out.tokens[e.erase.begin - 1] == ",") {
    out.tokens[e.erase.begin - 1] = ".";
  }
  const std::ptrdiff_t delta = static_cast<std::ptrdiff_t>(e.insert.size()) -
                               static_cast<std::ptrdiff_t>(e.erase.size());
  auto moved = [&](const PhraseSpan& s) -> std::optional<PhraseSpan> {
    if (s.j < e.erase.begin) return s;
    if (s.i >= e.erase.end) {
      return PhraseSpan{static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s.i) + delta),
                        static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s.j) + delta), s.kind};
    }
    return std::nullopt;
  };

  out.spans = extract_phrases(out.tokens, lexicon);
  out.gold.assign(out.spans.size(), GoldLabel::clean());
  for (std::size_t n = 0; n < out.spans.size(); ++n) {
    const auto& ns = out.spans[n];
    if (e.replaced_span && ns.i == e.erase.begin && ns.length() == e.insert.size()) {
      const auto old = *e.replaced_span;
      const GoldLabel g = old < ann.gold.size() ? ann.gold[old] : GoldLabel::clean();
      const std::string before = ann.phrase(ann.spans[old]);
      if (g.is_hallucination) {
        out.gold[n] = e.candidate == g.correction ? GoldLabel::clean() : g;
      } else if (e.candidate != before) {
        out.gold[n] = {true, HallucinationType::intrinsic, before};
      }
      continue;
    }
    for (std::size_t o = 0; o < ann.spans.size(); ++o) {
      auto m = moved(ann.spans[o]);
      if (m && m->i == ns.i && m->j == ns.j) {
        if (o < ann.gold.size()) out.gold[n] = ann.gold[o];
        break;
      }
    }
  }
  out.alignment = ann.alignment;
  if (e.clause_removed && out.alignment.size() == ann.clause_bounds().size() &&
      e.clause_index < out.alignment.size()) {
    out.alignment.erase(out.alignment.begin() + static_cast<std::ptrdiff_t>(e.clause_index));
  }
  return out;
}

}  // namespace

AnnotatedInstruction apply_suggestion(const AnnotatedInstruction& ann, const Highlight& highlight,
                                      const Suggestion& suggestion, const Lexicon& lexicon) {
  require_fresh(ann, highlight);
  validate_candidate(suggestion.candidate);
  const auto clauses = ann.clause_bounds();
  Edit e;
  e.candidate = suggestion.candidate;
  if (is_remove(suggestion.candidate)) {
    const auto& first = highlight.member_spans.front();
    const std::size_t c = clause_index_of(clauses, first.i);
    bool whole = highlight.merged;
    if (!whole) {
      const auto others = std::count_if(ann.spans.begin(), ann.spans.end(), [&](const PhraseSpan& s) {
        return clauses[c].contains(s.i) && !(s == first);
      });
      whole = others == 0;
    }
    if (whole) {
      e.erase = clauses[c];
      e.clause_removed = true;
      e.clause_index = c;
    } else {
      e.erase = {first.i, first.j + 1};
    }
  } else {
    if (suggestion.member >= highlight.members.size()) {
      throw std::invalid_argument("suggestion refers to a missing highlight member");
    }
    const auto span_index = highlight.members[suggestion.member];
    const auto& span = ann.spans[span_index];
    e.erase = {span.i, span.j + 1};
    e.insert = split_words(suggestion.candidate);
    e.replaced_span = span_index;
  }
  return apply_edit(ann, e, lexicon);
}

AnnotatedInstruction apply_gold_corrections(const AnnotatedInstruction& ann, const Lexicon& lexicon) {
  AnnotatedInstruction cur = ann;
  for (std::size_t guard = 0; guard <= ann.spans.size(); ++guard) {
    std::optional<std::size_t> target;
    for (std::size_t s = cur.spans.size(); s-- > 0;) {
      if (s < cur.gold.size() && cur.gold[s].is_hallucination) {
        target = s;
        break;
      }
    }
    if (!target) return cur;
    const auto& span = cur.spans[*target];
    const auto& g = cur.gold[*target];
    Highlight h;
    if (g.correction == kRemove) {
      const auto clauses = cur.clause_bounds();
      const auto c = clause_index_of(clauses, span.i);
      std::vector<std::size_t> members;
      for (std::size_t s = 0; s < cur.spans.size(); ++s) {
        if (clauses[c].contains(cur.spans[s].i)) members.push_back(s);
      }
      h = make_highlight(cur, clauses[c], members, true, 1.0);
      cur = apply_suggestion(cur, h, {std::string(kRemove), 1.0, 0}, lexicon);
    } else {
      h = make_highlight(cur, {span.i, span.j + 1}, {*target}, false, 1.0);
      cur = apply_suggestion(cur, h, {g.correction, 1.0, 0}, lexicon);
    }
  }
  throw std::logic_error("gold corrections did not converge");
}

}  // namespace hear
