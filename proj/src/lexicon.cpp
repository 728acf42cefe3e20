#include "hear/lexicon.hpp"

#include <algorithm>
#include <sstream>

namespace hear {

namespace data {
extern const std::string_view kRooms;
extern const std::string_view kObjects;
extern const std::string_view kDirections;
}  // namespace data

std::string_view to_string(PhraseKind kind) {
  switch (kind) {
    case PhraseKind::room:
      return "room";
    case PhraseKind::object:
      return "object";
    case PhraseKind::direction:
      return "direction";
  }
  return "unknown";
}

PhraseKind phrase_kind_from_string(std::string_view text) {
  if (text == "room") return PhraseKind::room;
  if (text == "object") return PhraseKind::object;
  if (text == "direction") return PhraseKind::direction;
  throw std::invalid_argument("unknown phrase kind: " + std::string(text));
}

bool is_action_label(std::string_view phrase) {
  return std::find(std::begin(kActionLabels), std::end(kActionLabels), phrase) !=
         std::end(kActionLabels);
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    std::size_t end = pos;
    while (end < text.size() && text[end] != ' ' && text[end] != '\t') ++end;
    if (end > pos) out.emplace_back(text.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

std::string join_words(const std::vector<std::string>& words, std::size_t begin,
                       std::size_t end) {
  std::string out;
  for (std::size_t k = begin; k < end && k < words.size(); ++k) {
    if (k > begin) out += ' ';
    out += words[k];
  }
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  return join_words(words, 0, words.size());
}

namespace {

std::vector<std::string> parse_list(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto words = split_words(line);
    if (words.empty() || words.front().starts_with('#')) continue;
    out.push_back(join_words(words));
  }
  return out;
}

}  // namespace

Lexicon::Lexicon(std::vector<std::string> rooms, std::vector<std::string> objects,
                 std::map<std::string, std::vector<std::string>> direction_rows)
    : rooms_(std::move(rooms)), objects_(std::move(objects)) {
  std::sort(rooms_.begin(), rooms_.end());
  rooms_.erase(std::unique(rooms_.begin(), rooms_.end()), rooms_.end());
  std::sort(objects_.begin(), objects_.end());
  objects_.erase(std::unique(objects_.begin(), objects_.end()), objects_.end());

  // Symmetric closure of the substitution relation.
  std::map<std::string, std::set<std::string>> closed;
  for (const auto& [phrase, subs] : direction_rows) {
    for (const auto& sub : subs) {
      if (sub == phrase) continue;
      closed[phrase].insert(sub);
      closed[sub].insert(phrase);
    }
  }
  for (auto& [phrase, subs] : closed) {
    directions_[phrase] = {subs.begin(), subs.end()};
  }

  auto add = [this](const std::string& phrase, PhraseKind kind) {
    auto [it, inserted] = kinds_.emplace(phrase, kind);
    if (!inserted && it->second != kind) {
      throw std::invalid_argument("phrase listed under two kinds: " + phrase);
    }
    max_tokens_ = std::max(max_tokens_, split_words(phrase).size());
  };
  for (const auto& r : rooms_) add(r, PhraseKind::room);
  for (const auto& o : objects_) add(o, PhraseKind::object);
  for (const auto& [d, subs] : directions_) add(d, PhraseKind::direction);
}

Lexicon Lexicon::parse(std::string_view rooms, std::string_view objects,
                       std::string_view directions) {
  std::map<std::string, std::vector<std::string>> rows;
  std::istringstream in{std::string(directions)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument("direction row without tab: " + line);
    }
    std::string phrase = join_words(split_words(line.substr(0, tab)));
    std::string rest = line.substr(tab + 1);
    std::vector<std::string> subs;
    std::size_t start = 0;
    while (start <= rest.size()) {
      auto bar = rest.find('|', start);
      if (bar == std::string::npos) bar = rest.size();
      auto sub = join_words(split_words(std::string_view(rest).substr(start, bar - start)));
      if (!sub.empty()) subs.push_back(sub);
      start = bar + 1;
    }
    auto& row = rows[phrase];
    row.insert(row.end(), subs.begin(), subs.end());
  }
  return Lexicon(parse_list(rooms), parse_list(objects), std::move(rows));
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lexicon = parse(data::kRooms, data::kObjects, data::kDirections);
  return lexicon;
}

const std::vector<std::string>& Lexicon::substitutes(std::string_view phrase) const {
  auto it = directions_.find(std::string(phrase));
  if (it == directions_.end()) {
    throw std::invalid_argument("direction phrase not in substitution table: " +
                                std::string(phrase));
  }
  return it->second;
}

bool Lexicon::has_direction(std::string_view phrase) const {
  return directions_.count(std::string(phrase)) > 0;
}

bool Lexicon::is_room(std::string_view phrase) const {
  return kind_of(phrase) == PhraseKind::room;
}

bool Lexicon::is_object(std::string_view phrase) const {
  return kind_of(phrase) == PhraseKind::object;
}

std::optional<PhraseKind> Lexicon::kind_of(std::string_view phrase) const {
  auto it = kinds_.find(phrase);
  if (it == kinds_.end()) return std::nullopt;
  return it->second;
}

}  // namespace hear
