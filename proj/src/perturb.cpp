#include "hear/perturb.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "hear/rng.hpp"

namespace hear {

namespace {

void require_span(const AnnotatedInstruction& ann, std::size_t span_index, PhraseKind kind) {
  if (span_index >= ann.spans.size()) throw std::out_of_range("span index out of range");
  if (ann.spans[span_index].kind != kind) {
    throw std::invalid_argument("span kind is not " + std::string(to_string(kind)));
  }
  if (span_index < ann.gold.size() && ann.gold[span_index].is_hallucination) {
    throw std::invalid_argument("span is already a hallucination");
  }
}

PerturbResult replace_span(const AnnotatedInstruction& ann, std::size_t span_index,
                           const std::string& replacement, PerturbationKind pkind, bool fallback) {
  PerturbResult out{ann, {}};
  const PhraseSpan span = ann.spans[span_index];
  const std::string original = ann.phrase(span);
  out.record.kind = pkind;
  out.record.position = span.i;
  out.record.original = split_words(original);
  out.record.replacement = split_words(replacement);
  out.record.fallback = fallback;
  splice_span(out.instruction, span_index, out.record.replacement, span.kind);
  out.instruction.gold.resize(out.instruction.spans.size());
  out.instruction.gold[span_index] = {true, HallucinationType::intrinsic, original};
  out.instruction.records.push_back(out.record);
  return out;
}

std::vector<std::string> without(const std::vector<std::string>& pool, const std::string& item) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& p : pool) {
    if (p != item && seen.insert(p).second) out.push_back(p);
  }
  return out;
}

}  // namespace

PerturbResult perturb_room(const AnnotatedInstruction& ann, std::size_t span_index,
                           const std::vector<std::string>& room_list, std::uint64_t seed) {
  require_span(ann, span_index, PhraseKind::room);
  const std::string original = ann.phrase(ann.spans[span_index]);
  auto pool = without(room_list, original);
  if (pool.empty()) throw std::invalid_argument("room list needs at least two entries");
  Rng rng(seed);
  return replace_span(ann, span_index, rng.pick(pool), PerturbationKind::room, false);
}

PerturbResult perturb_object_from(const AnnotatedInstruction& ann, std::size_t span_index,
                                  const std::vector<std::string>& pool, std::uint64_t seed) {
  require_span(ann, span_index, PhraseKind::object);
  const std::string original = ann.phrase(ann.spans[span_index]);
  auto options = without(pool, original);
  if (options.empty()) throw std::invalid_argument("no alternative object available");
  Rng rng(seed);
  return replace_span(ann, span_index, rng.pick(options), PerturbationKind::object, false);
}

PerturbResult perturb_object(const AnnotatedInstruction& ann, std::size_t span_index,
                             const std::vector<std::string>& fallback_vocab, std::uint64_t seed) {
  require_span(ann, span_index, PhraseKind::object);
  const std::string original = ann.phrase(ann.spans[span_index]);
  std::vector<std::string> in_instruction;
  for (const auto& s : ann.spans) {
    if (s.kind == PhraseKind::object) in_instruction.push_back(ann.phrase(s));
  }
  std::sort(in_instruction.begin(), in_instruction.end());
  auto options = without(in_instruction, original);
  Rng rng(seed);
  if (!options.empty()) {
    return replace_span(ann, span_index, rng.pick(options), PerturbationKind::object, false);
  }
  auto fallback = without(fallback_vocab, original);
  if (fallback.empty()) throw std::invalid_argument("no alternative object available");
  return replace_span(ann, span_index, rng.pick(fallback), PerturbationKind::object, true);
}

PerturbResult perturb_direction(const AnnotatedInstruction& ann, std::size_t span_index,
                                std::uint64_t seed, const Lexicon& lexicon) {
  require_span(ann, span_index, PhraseKind::direction);
  const std::string original = ann.phrase(ann.spans[span_index]);
  const auto& row = lexicon.substitutes(original);
  Rng rng(seed);
  return replace_span(ann, span_index, rng.pick(row), PerturbationKind::direction, false);
}

PerturbResult insert_extrinsic(const AnnotatedInstruction& ann,
                               const std::vector<std::string>& donor, std::uint64_t seed,
                               const Lexicon& lexicon) {
  if (donor.empty()) throw std::invalid_argument("donor sentence is empty");
  if (donor.back() != ".") throw std::invalid_argument("donor sentence must end with '.'");
  if (ann.tokens.size() + donor.size() > kMaxInstructionTokens) {
    throw std::length_error("insertion would exceed the instruction length cap");
  }
  std::vector<std::size_t> starts{0};
  for (const auto& b : ann.sentence_bounds()) {
    if (b.begin > 0) starts.push_back(b.begin);
  }
  Rng rng(seed);
  const std::size_t position = starts[rng.index(starts.size())];

  PerturbResult out{ann, {}};
  auto& res = out.instruction;
  res.tokens.insert(res.tokens.begin() + static_cast<std::ptrdiff_t>(position), donor.begin(),
                    donor.end());

  std::vector<PhraseSpan> spans;
  std::vector<GoldLabel> gold;
  res.gold.resize(res.spans.size());
  std::size_t k = 0;
  for (; k < ann.spans.size() && ann.spans[k].i < position; ++k) {
    spans.push_back(ann.spans[k]);
    gold.push_back(res.gold[k]);
  }
  for (auto s : extract_phrases(donor, lexicon)) {
    s.i += position;
    s.j += position;
    spans.push_back(s);
    gold.push_back({true, HallucinationType::extrinsic, std::string(kRemove)});
  }
  for (; k < ann.spans.size(); ++k) {
    auto s = ann.spans[k];
    s.i += donor.size();
    s.j += donor.size();
    spans.push_back(s);
    gold.push_back(res.gold[k]);
  }
  res.spans = std::move(spans);
  res.gold = std::move(gold);

  if (!res.alignment.empty()) {
    const std::size_t clause_index = ann.clause_of(position);
    const std::size_t donor_clauses = clause_bounds(donor).size();
    res.alignment.insert(res.alignment.begin() + static_cast<std::ptrdiff_t>(clause_index),
                         donor_clauses, kNoStep);
  }

  out.record.kind = PerturbationKind::extrinsic;
  out.record.position = position;
  out.record.replacement = donor;
  res.records.push_back(out.record);
  return out;
}

AnnotatedInstruction revert_record(const AnnotatedInstruction& ann, const PerturbationRecord& rec,
                                   const Lexicon& lexicon) {
  AnnotatedInstruction res = ann;
  const auto len = rec.replacement.size();
  if (rec.position + len > res.tokens.size() ||
      !std::equal(rec.replacement.begin(), rec.replacement.end(),
                  res.tokens.begin() + static_cast<std::ptrdiff_t>(rec.position))) {
    throw std::invalid_argument("perturbation record does not match instruction tokens");
  }
  if (!res.records.empty() && res.records.back() == rec) res.records.pop_back();
  res.gold.resize(res.spans.size());

  if (rec.kind == PerturbationKind::extrinsic) {
    const std::size_t clause_index = res.clause_of(rec.position);
    const std::size_t removed_clauses = clause_bounds(rec.replacement).size();
    res.tokens.erase(res.tokens.begin() + static_cast<std::ptrdiff_t>(rec.position),
                     res.tokens.begin() + static_cast<std::ptrdiff_t>(rec.position + len));
    std::vector<PhraseSpan> spans;
    std::vector<GoldLabel> gold;
    for (std::size_t k = 0; k < res.spans.size(); ++k) {
      auto s = res.spans[k];
      if (s.i >= rec.position && s.i < rec.position + len) continue;
      if (s.i >= rec.position + len) {
        s.i -= len;
        s.j -= len;
      }
      spans.push_back(s);
      gold.push_back(res.gold[k]);
    }
    res.spans = std::move(spans);
    res.gold = std::move(gold);
    if (!res.alignment.empty()) {
      auto first = res.alignment.begin() + static_cast<std::ptrdiff_t>(clause_index);
      res.alignment.erase(first, first + static_cast<std::ptrdiff_t>(removed_clauses));
    }
    return res;
  }

  auto it = std::find_if(res.spans.begin(), res.spans.end(),
                         [&](const PhraseSpan& s) { return s.i == rec.position; });
  if (it == res.spans.end()) throw std::invalid_argument("no span at perturbation position");
  const auto idx = static_cast<std::size_t>(it - res.spans.begin());
  const auto kind = lexicon.kind_of(join_words(rec.original)).value_or(it->kind);
  splice_span(res, idx, rec.original, kind);
  res.gold[idx] = GoldLabel::clean();
  return res;
}

AnnotatedInstruction restore_original(const AnnotatedInstruction& ann, const Lexicon& lexicon) {
  AnnotatedInstruction res = ann;
  while (!res.records.empty()) {
    const auto rec = res.records.back();
    res = revert_record(res, rec, lexicon);
  }
  return res;
}

// -- corpus -------------------------------------------------------------------

void Corpus::index() {
  env_index_.clear();
  record_index_.clear();
  for (std::size_t k = 0; k < environments.size(); ++k) env_index_[environments[k].id()] = k;
  for (std::size_t k = 0; k < records.size(); ++k) record_index_[records[k].route_id] = k;
}

const Environment& Corpus::env(const std::string& id) const {
  auto it = env_index_.find(id);
  if (it == env_index_.end()) {
    for (const auto& e : environments) {
      if (e.id() == id) return e;
    }
    throw std::out_of_range("unknown environment: " + id);
  }
  return environments[it->second];
}

const CorpusRecord& Corpus::record(const std::string& route_id) const {
  auto it = record_index_.find(route_id);
  if (it == record_index_.end()) {
    for (const auto& r : records) {
      if (r.route_id == route_id) return r;
    }
    throw std::out_of_range("unknown route: " + route_id);
  }
  return records[it->second];
}

std::string_view to_string(PairStrategy s) {
  return s == PairStrategy::same_env_swap ? "same_env_swap" : "default";
}

PairStrategy pair_strategy_from_string(std::string_view text) {
  if (text == "default") return PairStrategy::default_swap;
  if (text == "same_env_swap") return PairStrategy::same_env_swap;
  throw std::invalid_argument("unknown pair strategy: " + std::string(text));
}

std::vector<std::string> DetectionExample::plain_tokens() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (t != kBeginHallucination && t != kEndHallucination) out.push_back(t);
  }
  return out;
}

PhraseSpan DetectionExample::plain_span() const { return {i - 1, j - 1, kind}; }

DetectionExample substitute_example(const std::string& env_id, const std::string& route_id,
                                    const AnnotatedInstruction& ann, const PhraseSpan& span,
                                    const std::vector<std::string>& replacement, PhraseKind kind,
                                    bool label) {
  if (span.j >= ann.tokens.size() || span.i > span.j) {
    throw std::out_of_range("span outside instruction");
  }
  if (replacement.empty()) throw std::invalid_argument("replacement must be non-empty");
  DetectionExample ex;
  ex.env_id = env_id;
  ex.route_id = route_id;
  ex.kind = kind;
  ex.label = label;
  ex.alignment = ann.alignment;
  ex.tokens.assign(ann.tokens.begin(), ann.tokens.begin() + static_cast<std::ptrdiff_t>(span.i));
  ex.tokens.emplace_back(kBeginHallucination);
  ex.i = ex.tokens.size();
  ex.tokens.insert(ex.tokens.end(), replacement.begin(), replacement.end());
  ex.j = ex.tokens.size() - 1;
  ex.tokens.emplace_back(kEndHallucination);
  ex.tokens.insert(ex.tokens.end(), ann.tokens.begin() + static_cast<std::ptrdiff_t>(span.j + 1),
                   ann.tokens.end());
  return ex;
}

DetectionExample make_example(const std::string& env_id, const std::string& route_id,
                              const AnnotatedInstruction& ann, const PhraseSpan& span, bool label) {
  std::vector<std::string> wrapped(ann.tokens.begin() + static_cast<std::ptrdiff_t>(span.i),
                                   ann.tokens.begin() + static_cast<std::ptrdiff_t>(span.j + 1));
  return substitute_example(env_id, route_id, ann, span, wrapped, span.kind, label);
}

namespace {

std::vector<std::string> route_objects(const Environment& env, const Route& route) {
  std::set<std::string> names;
  for (const auto& s : route.steps) {
    for (const auto& [name, dir] : s.observation.visible) names.insert(name);
  }
  for (const auto& o : env.node(route.final_node()).objects) names.insert(o.name);
  return {names.begin(), names.end()};
}

std::vector<std::size_t> spans_where(const AnnotatedInstruction& ann, auto pred) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < ann.spans.size(); ++k) {
    const GoldLabel g = k < ann.gold.size() ? ann.gold[k] : GoldLabel::clean();
    if (pred(ann.spans[k], g)) out.push_back(k);
  }
  return out;
}

}  // namespace

AnnotatedInstruction inject_hallucinations(const AnnotatedInstruction& clean,
                                           const std::vector<PerturbationKind>& kinds,
                                           const InjectionContext& ctx, std::uint64_t seed) {
  const Lexicon& lex = *ctx.lexicon;
  Rng rng(seed);
  AnnotatedInstruction ann = clean;
  ann.gold.resize(ann.spans.size());
  bool want_extrinsic = false;

  for (const auto kind : kinds) {
    if (kind == PerturbationKind::extrinsic) {
      want_extrinsic = true;
      continue;
    }
    const PhraseKind pk = kind == PerturbationKind::room     ? PhraseKind::room
                          : kind == PerturbationKind::object ? PhraseKind::object
                                                             : PhraseKind::direction;
    auto candidates = spans_where(ann, [&](const PhraseSpan& s, const GoldLabel& g) {
      if (s.kind != pk || g.is_hallucination) return false;
      return pk != PhraseKind::direction || lex.has_direction(ann.phrase(s));
    });
    if (candidates.empty()) continue;
    const std::size_t idx = rng.pick(candidates);
    const std::uint64_t sub_seed = rng.next();
    const std::string original = ann.phrase(ann.spans[idx]);

    switch (kind) {
      case PerturbationKind::room: {
        std::vector<std::string> pool = lex.rooms();
        if (ctx.strategy == PairStrategy::same_env_swap && ctx.env) {
          std::vector<std::string> env_rooms(ctx.env->room_vocab().begin(),
                                             ctx.env->room_vocab().end());
          if (without(env_rooms, original).size() >= 1) pool = env_rooms;
        }
        ann = perturb_room(ann, idx, pool, sub_seed).instruction;
        break;
      }
      case PerturbationKind::object: {
        std::vector<std::string> fallback = lex.objects();
        if (ctx.env) fallback.assign(ctx.env->object_vocab().begin(), ctx.env->object_vocab().end());
        if (without(fallback, original).empty()) fallback = lex.objects();
        if (ctx.strategy == PairStrategy::same_env_swap && ctx.env && ctx.route) {
          auto pool = route_objects(*ctx.env, *ctx.route);
          if (without(pool, original).empty()) pool = fallback;
          ann = perturb_object_from(ann, idx, pool, sub_seed).instruction;
        } else {
          ann = perturb_object(ann, idx, fallback, sub_seed).instruction;
        }
        break;
      }
      case PerturbationKind::direction:
        ann = perturb_direction(ann, idx, sub_seed, lex).instruction;
        break;
      case PerturbationKind::extrinsic:
        break;
    }
  }

  if (want_extrinsic) {
    std::vector<std::vector<std::string>> own;
    const std::vector<std::vector<std::string>>* donors = ctx.donors;
    if (donors == nullptr || donors->empty()) {
      for (const auto& b : clean.sentence_bounds()) {
        if (b.end > b.begin && clean.tokens[b.end - 1] == ".") {
          own.emplace_back(clean.tokens.begin() + static_cast<std::ptrdiff_t>(b.begin),
                           clean.tokens.begin() + static_cast<std::ptrdiff_t>(b.end));
        }
      }
      donors = &own;
    }
    std::vector<std::size_t> order(donors->size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    rng.shuffle(order);
    const std::uint64_t sub_seed = rng.next();
    for (auto k : order) {
      const auto& donor = (*donors)[k];
      if (donor.size() < 2 || donor.back() != ".") continue;
      if (ann.tokens.size() + donor.size() > kMaxInstructionTokens) continue;
      if (extract_phrases(donor, lex).empty()) continue;
      ann = insert_extrinsic(ann, donor, sub_seed, lex).instruction;
      break;
    }
  }
  return ann;
}

std::vector<std::vector<std::string>> donor_sentences(const Corpus& corpus) {
  std::vector<std::vector<std::string>> out;
  for (const auto& rec : corpus.records) {
    const auto& toks = rec.instruction.tokens;
    for (const auto& b : sentence_bounds(toks)) {
      if (b.end > b.begin && toks[b.end - 1] == ".") {
        out.emplace_back(toks.begin() + static_cast<std::ptrdiff_t>(b.begin),
                         toks.begin() + static_cast<std::ptrdiff_t>(b.end));
      }
    }
  }
  return out;
}

namespace {

PerturbationKind draw_kind(Rng& rng, const PairOptions& o, bool intrinsic_only) {
  const double weights[] = {o.room_weight, o.object_weight, o.direction_weight,
                            intrinsic_only ? 0.0 : o.extrinsic_weight};
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (int k = 0; k < 4; ++k) {
    if (u < weights[k]) return static_cast<PerturbationKind>(k);
    u -= weights[k];
  }
  return PerturbationKind::direction;
}

std::vector<PerturbationKind> draw_kinds(Rng& rng, const PairOptions& o, int count,
                                         std::vector<PerturbationKind> forced = {}) {
  std::vector<PerturbationKind> kinds = std::move(forced);
  while (static_cast<int>(kinds.size()) < count) kinds.push_back(draw_kind(rng, o, false));
  return kinds;
}

InjectionContext context_for(const Corpus& corpus, const CorpusRecord& rec, PairStrategy strategy,
                             const std::vector<std::vector<std::string>>& donors) {
  InjectionContext ctx;
  ctx.env = &corpus.env(rec.route.env_id);
  ctx.route = &rec.route;
  ctx.strategy = strategy;
  ctx.donors = &donors;
  return ctx;
}

/// A hallucinated span chosen so each intrinsic perturbation and the inserted
/// sentence (as one unit) are equally likely.
std::optional<std::size_t> pick_hallucinated(const AnnotatedInstruction& ann, Rng& rng) {
  std::vector<std::vector<std::size_t>> units;
  std::vector<std::size_t> extrinsic;
  for (std::size_t k = 0; k < ann.spans.size(); ++k) {
    if (!ann.gold[k].is_hallucination) continue;
    if (ann.gold[k].type == HallucinationType::extrinsic) {
      extrinsic.push_back(k);
    } else {
      units.push_back({k});
    }
  }
  if (!extrinsic.empty()) units.push_back(extrinsic);
  if (units.empty()) return std::nullopt;
  const auto& unit = rng.pick(units);
  return rng.pick(unit);
}

std::optional<std::size_t> pick_where(const AnnotatedInstruction& ann, Rng& rng, auto pred) {
  std::vector<std::size_t> options;
  for (std::size_t k = 0; k < ann.spans.size(); ++k) {
    if (pred(ann.gold[k])) options.push_back(k);
  }
  if (options.empty()) return std::nullopt;
  return rng.pick(options);
}

}  // namespace

std::vector<SourcedPair> build_detection_sources(const Corpus& corpus, std::uint64_t seed,
                                                 PairStrategy strategy, const PairOptions& options) {
  if (corpus.records.empty()) throw std::invalid_argument("corpus is empty");
  const auto donors = donor_sentences(corpus);
  std::vector<SourcedPair> out;
  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    const auto& rec = corpus.records[r];
    const auto ctx = context_for(corpus, rec, strategy, donors);
    for (int p = 0; p < options.pairs_per_instruction; ++p) {
      Rng rng(derive_seed(seed, r * 1024 + static_cast<std::uint64_t>(p)));
      const int k_pos = rng.range(1, options.max_hallucinations);
      auto pos_ann =
          inject_hallucinations(rec.instruction, draw_kinds(rng, options, k_pos), ctx, rng.next());
      const int k_neg = rng.range(0, options.max_hallucinations);
      auto neg_ann =
          inject_hallucinations(rec.instruction, draw_kinds(rng, options, k_neg), ctx, rng.next());
      auto pos = pick_hallucinated(pos_ann, rng);
      auto neg = pick_where(neg_ann, rng, [](const GoldLabel& g) { return !g.is_hallucination; });
      if (!pos || !neg) continue;
      SourcedPair sp;
      sp.pair = {make_example(rec.route.env_id, rec.route_id, pos_ann, pos_ann.spans[*pos], true),
                 make_example(rec.route.env_id, rec.route_id, neg_ann, neg_ann.spans[*neg], false)};
      sp.positive_instruction = std::move(pos_ann);
      sp.negative_instruction = std::move(neg_ann);
      sp.positive_span = *pos;
      sp.negative_span = *neg;
      out.push_back(std::move(sp));
    }
  }
  return out;
}

std::vector<PairedExample> build_detection_pairs(const Corpus& corpus, std::uint64_t seed,
                                                 PairStrategy strategy, const PairOptions& options) {
  std::vector<PairedExample> pairs;
  for (auto& sp : build_detection_sources(corpus, seed, strategy, options)) {
    pairs.push_back(std::move(sp.pair));
  }
  return pairs;
}

std::vector<PairedExample> build_type_pairs(const Corpus& corpus, std::uint64_t seed,
                                            const PairOptions& options) {
  if (corpus.records.empty()) throw std::invalid_argument("corpus is empty");
  const auto donors = donor_sentences(corpus);
  std::vector<PairedExample> pairs;
  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    const auto& rec = corpus.records[r];
    const auto ctx = context_for(corpus, rec, PairStrategy::default_swap, donors);
    for (int p = 0; p < options.pairs_per_instruction; ++p) {
      Rng rng(derive_seed(derive_seed(seed, "type"), r * 1024 + static_cast<std::uint64_t>(p)));
      const int k_pos = rng.range(1, options.max_hallucinations);
      const auto pos_kinds = draw_kinds(rng, options, k_pos, {draw_kind(rng, options, true)});
      const auto pos_ann = inject_hallucinations(rec.instruction, pos_kinds, ctx, rng.next());
      const int k_neg = rng.range(1, options.max_hallucinations);
      const auto neg_kinds = draw_kinds(rng, options, k_neg, {PerturbationKind::extrinsic});
      const auto neg_ann = inject_hallucinations(rec.instruction, neg_kinds, ctx, rng.next());
      auto pos = pick_where(pos_ann, rng, [](const GoldLabel& g) {
        return g.type == HallucinationType::intrinsic;
      });
      auto neg = pick_where(neg_ann, rng, [](const GoldLabel& g) {
        return g.type == HallucinationType::extrinsic;
      });
      if (!pos || !neg) continue;
      pairs.push_back({make_example(rec.route.env_id, rec.route_id, pos_ann, pos_ann.spans[*pos], true),
                       make_example(rec.route.env_id, rec.route_id, neg_ann, neg_ann.spans[*neg], false)});
    }
  }
  return pairs;
}

std::vector<PairedExample> build_one_stage_pairs(const Corpus& corpus, std::uint64_t seed,
                                                 const PairOptions& options) {
  auto pairs = build_detection_pairs(corpus, seed, PairStrategy::default_swap, options);
  const auto donors = donor_sentences(corpus);
  const std::vector<std::string> remove{std::string(kRemove)};
  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    const auto& rec = corpus.records[r];
    const auto ctx = context_for(corpus, rec, PairStrategy::default_swap, donors);
    for (int p = 0; p < options.pairs_per_instruction; ++p) {
      Rng rng(derive_seed(derive_seed(seed, "one-stage"), r * 1024 + static_cast<std::uint64_t>(p)));
      const int k_pos = rng.range(0, options.max_hallucinations);
      const auto pos_ann =
          inject_hallucinations(rec.instruction, draw_kinds(rng, options, k_pos), ctx, rng.next());
      const int k_neg = rng.range(1, options.max_hallucinations);
      const auto neg_kinds = draw_kinds(rng, options, k_neg, {PerturbationKind::extrinsic});
      const auto neg_ann = inject_hallucinations(rec.instruction, neg_kinds, ctx, rng.next());
      auto pos = pick_where(pos_ann, rng, [](const GoldLabel& g) { return !g.is_hallucination; });
      auto neg = pick_where(neg_ann, rng, [](const GoldLabel& g) {
        return g.type == HallucinationType::extrinsic;
      });
      if (!pos || !neg) continue;
      const auto& ps = pos_ann.spans[*pos];
      const auto& ns = neg_ann.spans[*neg];
      pairs.push_back(
          {substitute_example(rec.route.env_id, rec.route_id, pos_ann, ps, remove, ps.kind, true),
           substitute_example(rec.route.env_id, rec.route_id, neg_ann, ns, remove, ns.kind, false)});
    }
  }
  return pairs;
}

CandidateSet generate_candidates(const Environment& env, const AnnotatedInstruction& ann,
                                 const PhraseSpan& span, const Lexicon& lexicon) {
  if (span.j >= ann.tokens.size()) throw std::out_of_range("span outside instruction");
  CandidateSet out;
  out.span = span;
  out.original = ann.phrase(span);
  std::set<std::string> pool;
  if (span.kind == PhraseKind::direction) {
    const auto& row = lexicon.substitutes(out.original);
    pool.insert(row.begin(), row.end());
  } else {
    pool.insert(env.room_vocab().begin(), env.room_vocab().end());
    pool.insert(env.object_vocab().begin(), env.object_vocab().end());
  }
  pool.erase(out.original);
  pool.erase(std::string(kRemove));
  out.candidates.assign(pool.begin(), pool.end());
  out.candidates.emplace_back(kRemove);

  auto it = std::find(ann.spans.begin(), ann.spans.end(), span);
  if (it != ann.spans.end()) {
    const auto idx = static_cast<std::size_t>(it - ann.spans.begin());
    if (idx < ann.gold.size() && ann.gold[idx].is_hallucination) {
      auto g = std::find(out.candidates.begin(), out.candidates.end(), ann.gold[idx].correction);
      if (g != out.candidates.end()) {
        out.gold_index = static_cast<std::size_t>(g - out.candidates.begin());
      }
    }
  }
  return out;
}

}  // namespace hear
