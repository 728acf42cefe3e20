#include "hear/follower.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

#include "hear/rng.hpp"

namespace hear {

std::string_view to_string(FollowerMode m) {
  switch (m) {
    case FollowerMode::literal:
      return "literal";
    case FollowerMode::highlight_aware:
      return "highlight_aware";
    case FollowerMode::suggestion_aware:
      return "suggestion_aware";
  }
  return "literal";
}

FollowerMode follower_mode_from_string(std::string_view text) {
  if (text == "literal") return FollowerMode::literal;
  if (text == "highlight_aware") return FollowerMode::highlight_aware;
  if (text == "suggestion_aware") return FollowerMode::suggestion_aware;
  throw std::invalid_argument("unknown follower mode: " + std::string(text));
}

namespace {

struct Slot {
  std::optional<std::size_t> span;  // index into instruction spans
  std::string phrase;
};

struct ParsedClause {
  bool stop = false;
  Slot direction;
  Slot room;
  Slot object;
  std::optional<std::size_t> merged_highlight;
};

struct Alternative {
  enum Kind { skip, stop, move } kind = move;
  NodeId target = 0;

  bool operator==(const Alternative&) const = default;
};

struct Frame {
  std::size_t clause = 0;
  NodeId node = 0;
  double heading = 0.0;
  std::vector<Alternative> alternatives;
  std::size_t next = 1;
};

/// Phrase fields used to score one move.
struct Reading {
  std::optional<std::string> direction;
  std::optional<std::string> room;
  std::optional<std::string> object;
};

class Follower {
 public:
  Follower(const Environment& env, const AnnotatedInstruction& ann,
           const std::vector<Highlight>& highlights, const std::vector<SuggestionList>& suggestions,
           const FollowerPolicy& policy, const Lexicon& lexicon)
      : env_(env), ann_(ann), highlights_(highlights), suggestions_(suggestions), policy_(policy),
        rng_(policy.seed) {
    const auto clauses = ann.clause_bounds();
    for (std::size_t h = 0; h < highlights.size(); ++h) {
      for (auto m : highlights[h].members) span_highlight_[m] = h;
    }
    for (std::size_t c = 0; c < clauses.size(); ++c) {
      ParsedClause pc;
      pc.stop = ann.tokens[clauses[c].begin] == "stop";
      for (std::size_t s = 0; s < ann.spans.size(); ++s) {
        const auto& sp = ann.spans[s];
        if (!clauses[c].contains(sp.i)) continue;
        const std::string phrase = ann.phrase(sp);
        if (sp.kind == PhraseKind::room) pc.room = {s, phrase};
        if (sp.kind == PhraseKind::object) pc.object = {s, phrase};
        if (sp.kind == PhraseKind::direction) {
          const bool label = is_action_label(phrase);
          if (label || !pc.direction.span) {
            if (label || phrase != kLandmarkPreposition) pc.direction = {s, phrase};
          }
        }
      }
      for (std::size_t h = 0; h < highlights.size(); ++h) {
        if (highlights[h].merged && clauses[c].contains(highlights[h].range.begin)) {
          pc.merged_highlight = h;
        }
      }
      clauses_.push_back(pc);
    }
    (void)lexicon;
  }

  Episode run(NodeId start, double heading, NodeId goal) {
    Episode ep;
    ep.goal = goal;
    ep.trajectory.push_back(start);
    NodeId node = start;
    std::size_t c = 0;
    std::vector<Frame> stack;
    const bool explores = policy_.mode != FollowerMode::literal;
    const int budget = std::max(1, policy_.check_budget);

    while (true) {
      bool finished = c >= clauses_.size();
      while (!finished) {
        const auto alts = alternatives(c, node, heading);
        const bool branching = explores && alts.size() > 1;
        if (branching) stack.push_back({c, node, heading, alts, 1});
        finished = take(alts.front(), c, node, heading, ep);
      }
      ++ep.checks_used;
      ep.check_nodes.push_back(node);
      if (within_success_radius(env_, node, goal)) {
        ep.success = true;
        break;
      }
      if (!explores || ep.checks_used >= budget) break;
      while (!stack.empty() && stack.back().next >= stack.back().alternatives.size()) stack.pop_back();
      if (stack.empty()) break;
      Frame& f = stack.back();
      const auto back = shortest_path(env_, node, f.node);
      for (std::size_t k = 1; k < back.size(); ++k) ep.trajectory.push_back(back[k]);
      node = f.node;
      heading = f.heading;
      c = f.clause;
      const Alternative alt = f.alternatives[f.next++];
      if (!take(alt, c, node, heading, ep)) continue;
      // The alternative itself stopped the walk; loop to the check.
      c = clauses_.size();
    }
    ep.final_node = node;
    return ep;
  }

 private:
  bool highlighted(const Slot& s) const {
    return s.span && span_highlight_.count(*s.span) > 0;
  }

  /// Applies an alternative; returns true when the walk is over.
  bool take(const Alternative& alt, std::size_t& c, NodeId& node, double& heading, Episode& ep) {
    switch (alt.kind) {
      case Alternative::stop:
        return true;
      case Alternative::skip:
        ++c;
        return c >= clauses_.size();
      case Alternative::move:
        heading = heading_after(env_, node, alt.target, heading);
        node = alt.target;
        ep.trajectory.push_back(node);
        ++c;
        return c >= clauses_.size();
    }
    return true;
  }

  double move_score(NodeId from, double heading, NodeId to, const Reading& r) const {
    double s = 0.0;
    if (r.direction && action_label_for(env_, from, to, heading) == *r.direction) {
      s += policy_.direction_weight;
    }
    const Node& n = env_.node(to);
    if (r.room && n.room == *r.room) s += policy_.room_weight;
    if (r.object && std::any_of(n.objects.begin(), n.objects.end(),
                                [&](const PlacedObject& o) { return o.name == *r.object; })) {
      s += policy_.object_weight;
    }
    return s;
  }

  /// Neighbours by descending score; ties by node id, or shuffled when asked.
  std::vector<NodeId> ranked_moves(NodeId from, double heading, const Reading& r, bool shuffle_ties) {
    std::vector<std::pair<double, NodeId>> scored;
    for (const auto& nb : env_.neighbors(from)) scored.emplace_back(move_score(from, heading, nb.node, r), nb.node);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<NodeId> out;
    std::size_t k = 0;
    while (k < scored.size()) {
      std::size_t e = k;
      std::vector<NodeId> group;
      while (e < scored.size() && scored[e].first == scored[k].first) group.push_back(scored[e++].second);
      if (shuffle_ties) rng_.shuffle(group);
      out.insert(out.end(), group.begin(), group.end());
      k = e;
    }
    return out;
  }

  Reading literal_reading(std::size_t c, bool wildcards) const {
    Reading r;
    const auto& pc = clauses_[c];
    if (!pc.direction.phrase.empty() && !(wildcards && highlighted(pc.direction))) {
      r.direction = pc.direction.phrase;
    }
    if (c + 1 < clauses_.size()) {
      const auto& next = clauses_[c + 1];
      if (!next.room.phrase.empty() && !(wildcards && highlighted(next.room))) r.room = next.room.phrase;
      if (!next.object.phrase.empty() && !(wildcards && highlighted(next.object))) {
        r.object = next.object.phrase;
      }
    }
    return r;
  }

  bool decision_highlighted(std::size_t c) const {
    const auto& pc = clauses_[c];
    if (pc.merged_highlight) return true;
    if (highlighted(pc.direction)) return true;
    if (c + 1 < clauses_.size()) {
      const auto& next = clauses_[c + 1];
      if (highlighted(next.room) || highlighted(next.object)) return true;
    }
    return false;
  }

  /// Highlights whose spans feed decision `c`.
  std::vector<std::size_t> touching(std::size_t c) const {
    std::set<std::size_t> hs;
    const auto& pc = clauses_[c];
    if (pc.merged_highlight) hs.insert(*pc.merged_highlight);
    auto add = [&](const Slot& s) {
      if (s.span) {
        auto it = span_highlight_.find(*s.span);
        if (it != span_highlight_.end()) hs.insert(it->second);
      }
    };
    add(pc.direction);
    if (c + 1 < clauses_.size()) {
      add(clauses_[c + 1].room);
      add(clauses_[c + 1].object);
    }
    return {hs.begin(), hs.end()};
  }

  /// Alternative implied by taking suggestion `s` of highlight `h` at decision `c`.
  Alternative from_suggestion(std::size_t c, NodeId node, double heading, std::size_t h,
                              const Suggestion& s) {
    const auto& hl = highlights_[h];
    const auto& pc = clauses_[c];
    Reading r = literal_reading(c, true);
    const bool remove = s.candidate == kRemove;
    if (remove && pc.merged_highlight && *pc.merged_highlight == h) return {Alternative::skip, 0};
    const std::size_t member = remove ? 0 : std::min(s.member, hl.members.size() - 1);
    const std::size_t span = hl.members[member];
    std::optional<std::string> value;
    if (!remove) value = s.candidate;
    if (pc.direction.span == span) r.direction = value;
    if (c + 1 < clauses_.size()) {
      if (clauses_[c + 1].room.span == span) r.room = value;
      if (clauses_[c + 1].object.span == span) r.object = value;
    }
    if (pc.stop) return {Alternative::stop, 0};
    return {Alternative::move, ranked_moves(node, heading, r, false).front()};
  }

  std::vector<Alternative> alternatives(std::size_t c, NodeId node, double heading) {
    const auto& pc = clauses_[c];
    const bool last = c + 1 == clauses_.size();
    const bool explores = policy_.mode != FollowerMode::literal;
    if (!explores || !decision_highlighted(c)) {
      if (pc.stop) return {{Alternative::stop, 0}};
      return {{Alternative::move, ranked_moves(node, heading, literal_reading(c, false), false).front()}};
    }
    std::vector<Alternative> alts;
    auto push = [&](const Alternative& a) {
      if (std::find(alts.begin(), alts.end(), a) == alts.end()) alts.push_back(a);
    };
    if (policy_.mode == FollowerMode::suggestion_aware) {
      const auto hs = touching(c);
      std::size_t depth = 0;
      for (auto h : hs) {
        if (h < suggestions_.size()) depth = std::max(depth, suggestions_[h].items.size());
      }
      for (std::size_t rank = 0; rank < depth; ++rank) {
        for (auto h : hs) {
          if (h < suggestions_.size() && rank < suggestions_[h].items.size()) {
            push(from_suggestion(c, node, heading, h, suggestions_[h].items[rank]));
          }
        }
      }
    }
    if (pc.merged_highlight && !(pc.stop && last)) push({Alternative::skip, 0});
    if (pc.stop) {
      push({Alternative::stop, 0});
      return alts;
    }
    for (NodeId m : ranked_moves(node, heading, literal_reading(c, true), true)) {
      push({Alternative::move, m});
    }
    return alts;
  }

  const Environment& env_;
  const AnnotatedInstruction& ann_;
  const std::vector<Highlight>& highlights_;
  const std::vector<SuggestionList>& suggestions_;
  FollowerPolicy policy_;
  Rng rng_;
  std::vector<ParsedClause> clauses_;
  std::map<std::size_t, std::size_t> span_highlight_;
};

}  // namespace

Episode simulate_follower(const Environment& env, NodeId start, double start_heading,
                          const AnnotatedInstruction& instruction,
                          const std::vector<Highlight>& highlights,
                          const std::vector<SuggestionList>& suggestions, NodeId goal,
                          const FollowerPolicy& policy, const Lexicon& lexicon) {
  if (policy.check_budget < 1) throw std::invalid_argument("check budget must be at least 1");
  if (!env.has_node(start) || !env.has_node(goal)) throw std::invalid_argument("unknown node");
  Follower f(env, instruction, highlights, suggestions, policy, lexicon);
  Episode ep = f.run(start, start_heading, goal);
  ep.env_id = env.id();
  return ep;
}

}  // namespace hear
