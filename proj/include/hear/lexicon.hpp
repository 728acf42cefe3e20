#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hear {

enum class PhraseKind { room, object, direction };

std::string_view to_string(PhraseKind kind);
PhraseKind phrase_kind_from_string(std::string_view text);

/// Distinguished candidate meaning "delete the span".
inline constexpr std::string_view kRemove = "[REMOVE]";
inline constexpr std::string_view kBeginHallucination = "[BH]";
inline constexpr std::string_view kEndHallucination = "[EH]";

/// Preposition the speaker uses in "walk past the <object>".
inline constexpr std::string_view kLandmarkPreposition = "past";

/// Direction labels an Action can carry.
inline constexpr std::string_view kActionLabels[] = {
    "turn left", "turn right", "go straight", "turn around", "go up", "go down"};

bool is_action_label(std::string_view phrase);

std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words, std::size_t begin,
                       std::size_t end);
std::string join_words(const std::vector<std::string>& words);

/// Room, object and direction phrase inventories plus the direction
/// substitution table. The built-in instance is loaded from the shipped data
/// files; tests construct small custom ones.
class Lexicon {
 public:
  Lexicon(std::vector<std::string> rooms, std::vector<std::string> objects,
          std::map<std::string, std::vector<std::string>> direction_rows);

  static const Lexicon& builtin();

  /// Parses the shipped text formats: one phrase per line for rooms/objects,
  /// "phrase<TAB>sub|sub|..." for directions. '#' starts a comment line.
  static Lexicon parse(std::string_view rooms, std::string_view objects,
                       std::string_view directions);

  const std::vector<std::string>& rooms() const { return rooms_; }
  const std::vector<std::string>& objects() const { return objects_; }

  /// Symmetric-closed substitution rows, keyed by phrase, values sorted.
  const std::map<std::string, std::vector<std::string>>& direction_table() const {
    return directions_;
  }

  /// Substitutes for a direction phrase; throws if the phrase has no row.
  const std::vector<std::string>& substitutes(std::string_view phrase) const;
  bool has_direction(std::string_view phrase) const;

  bool is_room(std::string_view phrase) const;
  bool is_object(std::string_view phrase) const;
  std::optional<PhraseKind> kind_of(std::string_view phrase) const;

  /// Longest phrase length in tokens across all inventories.
  std::size_t max_phrase_tokens() const { return max_tokens_; }

 private:
  std::vector<std::string> rooms_;
  std::vector<std::string> objects_;
  std::map<std::string, std::vector<std::string>> directions_;
  std::map<std::string, PhraseKind, std::less<>> kinds_;
  std::size_t max_tokens_ = 1;
};

}  // namespace hear
