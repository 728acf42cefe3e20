#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "hear/env.hpp"
#include "hear/instruction.hpp"
#include "hear/metrics.hpp"
#include "hear/remedy.hpp"

namespace hear {

enum class FollowerMode { literal, highlight_aware, suggestion_aware };

std::string_view to_string(FollowerMode m);
FollowerMode follower_mode_from_string(std::string_view text);

struct FollowerPolicy {
  FollowerMode mode = FollowerMode::literal;
  int check_budget = 6;
  std::uint64_t seed = 0;
  double direction_weight = 3.0;
  double room_weight = 2.0;
  double object_weight = 1.0;
};

/// Simulated instruction follower.
///
/// Each clause moves to the neighbour that best matches its direction phrase
/// and the room/object named by the following clause. A "stop" clause ends
/// the walk, followed by a check. Highlighted phrases are treated as unknown;
/// when a check fails the follower returns to the latest highlighted decision
/// and tries its next alternative, one check per attempt. `suggestions` is
/// parallel to `highlights` and only read in suggestion-aware mode.
Episode simulate_follower(const Environment& env, NodeId start, double start_heading,
                          const AnnotatedInstruction& instruction,
                          const std::vector<Highlight>& highlights,
                          const std::vector<SuggestionList>& suggestions, NodeId goal,
                          const FollowerPolicy& policy,
                          const Lexicon& lexicon = Lexicon::builtin());

}  // namespace hear
