#include <algorithm>
#include <stdexcept>

#include "hear/instruction.hpp"
#include "hear/perturb.hpp"
#include "hear/rng.hpp"

namespace hear {

namespace {

enum class ClauseShape { bare, in_room, past_object, past_object_in_room };

struct Clause {
  ClauseShape shape = ClauseShape::bare;
  std::string direction;
  std::string room;
  std::string object;
  bool terminal = false;
  int step = 0;
};

void append(std::vector<std::string>& out, std::vector<PhraseSpan>& spans, const std::string& phrase,
            PhraseKind kind) {
  const auto words = split_words(phrase);
  spans.push_back({out.size(), out.size() + words.size() - 1, kind});
  out.insert(out.end(), words.begin(), words.end());
}

void append_words(std::vector<std::string>& out, std::initializer_list<const char*> words) {
  for (const char* w : words) out.emplace_back(w);
}

void render(const Clause& c, std::vector<std::string>& out, std::vector<PhraseSpan>& spans) {
  if (c.terminal) {
    out.emplace_back("stop");
    if (c.shape == ClauseShape::past_object) {
      append_words(out, {"near", "the"});
      append(out, spans, c.object, PhraseKind::object);
    } else {
      append_words(out, {"in", "the"});
      append(out, spans, c.room, PhraseKind::room);
    }
    return;
  }
  switch (c.shape) {
    case ClauseShape::bare:
      append(out, spans, c.direction, PhraseKind::direction);
      break;
    case ClauseShape::in_room:
      append(out, spans, c.direction, PhraseKind::direction);
      append_words(out, {"in", "the"});
      append(out, spans, c.room, PhraseKind::room);
      break;
    case ClauseShape::past_object:
      out.emplace_back("walk");
      append(out, spans, std::string(kLandmarkPreposition), PhraseKind::direction);
      out.emplace_back("the");
      append(out, spans, c.object, PhraseKind::object);
      out.emplace_back("and");
      append(out, spans, c.direction, PhraseKind::direction);
      break;
    case ClauseShape::past_object_in_room:
      out.emplace_back("walk");
      append(out, spans, std::string(kLandmarkPreposition), PhraseKind::direction);
      out.emplace_back("the");
      append(out, spans, c.object, PhraseKind::object);
      append_words(out, {"in", "the"});
      append(out, spans, c.room, PhraseKind::room);
      out.emplace_back("and");
      append(out, spans, c.direction, PhraseKind::direction);
      break;
  }
}

std::size_t rendered_size(const Clause& c) {
  std::vector<std::string> out;
  std::vector<PhraseSpan> spans;
  render(c, out, spans);
  return out.size() + 1;
}

ClauseShape simpler(ClauseShape s) {
  switch (s) {
    case ClauseShape::past_object_in_room:
      return ClauseShape::past_object;
    case ClauseShape::past_object:
      return ClauseShape::in_room;
    default:
      return ClauseShape::bare;
  }
}

}  // namespace

AnnotatedInstruction describe_route(const Environment& env, const Route& route, std::uint64_t seed,
                                    const SpeakerConfig& config) {
  if (route.steps.empty()) throw std::invalid_argument("route has no steps");
  if (config.templates.empty()) throw std::invalid_argument("speaker needs at least one template");
  if (config.max_clauses_per_sentence < 1) {
    throw std::invalid_argument("max_clauses_per_sentence must be positive");
  }
  Rng rng(seed);
  std::vector<Clause> clauses;
  for (std::size_t t = 0; t < route.steps.size(); ++t) {
    const auto& step = route.steps[t];
    Clause c;
    c.step = static_cast<int>(t);
    c.direction = step.action.direction;
    c.room = step.observation.room;
    const auto tmpl = rng.pick(config.templates);
    c.shape = tmpl == StepTemplate::in_room       ? ClauseShape::in_room
              : tmpl == StepTemplate::past_object ? ClauseShape::past_object
                                                  : ClauseShape::past_object_in_room;
    const auto& objects = env.node(step.node).objects;
    if (c.shape != ClauseShape::in_room) {
      if (objects.empty()) {
        c.shape = ClauseShape::in_room;
      } else {
        c.object = objects[rng.index(objects.size())].name;
      }
    }
    clauses.push_back(c);
  }
  Clause stop;
  stop.terminal = true;
  stop.step = static_cast<int>(route.steps.size());
  const Node& goal = env.node(route.final_node());
  stop.room = goal.room;
  const bool near_object = !goal.objects.empty() && rng.bernoulli(0.5);
  if (near_object) {
    stop.shape = ClauseShape::past_object;
    stop.object = goal.objects[rng.index(goal.objects.size())].name;
  }
  if (!goal.objects.empty() && !near_object) rng.next();

  auto total = [&] {
    std::size_t n = 0;
    for (const auto& c : clauses) n += rendered_size(c);
    return n + rendered_size(stop);
  };
  // Simplify the longest step clauses until the instruction fits the cap.
  while (total() > kMaxInstructionTokens) {
    auto it = std::max_element(clauses.begin(), clauses.end(), [](const Clause& a, const Clause& b) {
      return rendered_size(a) < rendered_size(b);
    });
    if (it->shape == ClauseShape::bare) throw std::length_error("route too long to describe");
    it->shape = simpler(it->shape);
  }

  clauses.push_back(stop);
  AnnotatedInstruction ann;
  std::size_t k = 0;
  while (k < clauses.size()) {
    const auto n = std::min<std::size_t>(
        static_cast<std::size_t>(rng.range(1, config.max_clauses_per_sentence)), clauses.size() - k);
    for (std::size_t m = 0; m < n; ++m) {
      render(clauses[k + m], ann.tokens, ann.spans);
      ann.tokens.emplace_back(m + 1 == n ? "." : ",");
      ann.alignment.push_back(clauses[k + m].step);
    }
    k += n;
  }
  ann.gold.assign(ann.spans.size(), GoldLabel::clean());
  return ann;
}

CorruptionRates CorruptionRates::paper_calibrated() {
  CorruptionRates r;
  r.room = 0.3;
  r.object = 0.3;
  r.direction = 0.3;
  r.extrinsic = 0.9;
  r.instruction = 0.675;
  r.max_hallucinations = 3;
  return r;
}

AnnotatedInstruction corrupt_instruction(const AnnotatedInstruction& ann,
                                         const CorruptionRates& rates, std::uint64_t seed,
                                         const std::vector<std::vector<std::string>>& donors,
                                         const Lexicon& lexicon) {
  for (double r : {rates.room, rates.object, rates.direction, rates.extrinsic, rates.instruction}) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("corruption rates must lie in [0, 1]");
  }
  Rng rng(seed);
  struct Planned {
    std::size_t span = 0;
    bool extrinsic = false;
  };
  std::vector<Planned> plan;
  auto draw = [&] {
    plan.clear();
    for (std::size_t k = 0; k < ann.spans.size(); ++k) {
      if (k < ann.gold.size() && ann.gold[k].is_hallucination) continue;
      const auto& s = ann.spans[k];
      const double rate = s.kind == PhraseKind::room     ? rates.room
                          : s.kind == PhraseKind::object ? rates.object
                                                         : rates.direction;
      if (rng.bernoulli(rate)) {
        if (s.kind == PhraseKind::direction && !lexicon.has_direction(ann.phrase(s))) continue;
        plan.push_back({k, false});
      }
    }
    if (rng.bernoulli(rates.extrinsic)) plan.push_back({0, true});
  };
  if (rates.instruction >= 1.0) {
    draw();
  } else if (rng.bernoulli(rates.instruction)) {
    for (int attempt = 0; attempt < 64 && plan.empty(); ++attempt) draw();
  }
  const auto cap = static_cast<std::size_t>(std::max(0, rates.max_hallucinations));
  if (plan.size() > cap) {
    rng.shuffle(plan);
    plan.resize(cap);
    std::sort(plan.begin(), plan.end(), [](const Planned& a, const Planned& b) {
      return std::pair(a.extrinsic, a.span) < std::pair(b.extrinsic, b.span);
    });
  }

  AnnotatedInstruction out = ann;
  out.gold.resize(out.spans.size());
  for (const auto& p : plan) {
    const std::uint64_t sub = rng.next();
    if (p.extrinsic) {
      std::vector<std::vector<std::string>> own;
      const auto* pool = &donors;
      if (pool->empty()) {
        for (const auto& b : ann.sentence_bounds()) {
          if (b.end > b.begin && ann.tokens[b.end - 1] == ".") {
            own.emplace_back(ann.tokens.begin() + static_cast<std::ptrdiff_t>(b.begin),
                             ann.tokens.begin() + static_cast<std::ptrdiff_t>(b.end));
          }
        }
        pool = &own;
      }
      std::vector<std::size_t> fits;
      for (std::size_t d = 0; d < pool->size(); ++d) {
        const auto& donor = (*pool)[d];
        if (!donor.empty() && donor.back() == "." &&
            out.tokens.size() + donor.size() <= kMaxInstructionTokens &&
            !extract_phrases(donor, lexicon).empty()) {
          fits.push_back(d);
        }
      }
      if (fits.empty()) continue;
      Rng pick(sub);
      const auto& donor = (*pool)[pick.pick(fits)];
      out = insert_extrinsic(out, donor, pick.next(), lexicon).instruction;
      continue;
    }
    const auto kind = out.spans[p.span].kind;
    if (kind == PhraseKind::room) {
      out = perturb_room(out, p.span, lexicon.rooms(), sub).instruction;
    } else if (kind == PhraseKind::object) {
      out = perturb_object(out, p.span, lexicon.objects(), sub).instruction;
    } else {
      out = perturb_direction(out, p.span, sub, lexicon).instruction;
    }
  }
  return out;
}

}  // namespace hear
