#include "hear/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace hear {

namespace {

template <typename T>
T get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field: ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad field ") + key + ": " + e.what());
  }
}

Json range_json(const TokenRange& r) { return Json::array({r.begin, r.end}); }

Json span_json(const PhraseSpan& s) {
  return {{"i", s.i}, {"j", s.j}, {"kind", to_string(s.kind)}};
}

PhraseSpan span_from(const Json& j) {
  PhraseSpan s;
  s.i = get<std::size_t>(j, "i");
  s.j = get<std::size_t>(j, "j");
  s.kind = phrase_kind_from_string(get<std::string>(j, "kind"));
  if (s.j < s.i) throw FormatError("span end before start");
  return s;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(std::string_view text) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (ec != std::errc() || p != text.data() + text.size() || text.size() != 16) {
    throw FormatError("bad hex value: " + std::string(text));
  }
  return v;
}

}  // namespace

// -- environments ------------------------------------------------------------------

Json to_json(const Environment& env) {
  Json nodes = Json::array();
  for (const auto& n : env.nodes()) {
    Json objects = Json::array();
    for (const auto& o : n.objects) objects.push_back({{"name", o.name}, {"bearing", o.bearing}});
    nodes.push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}, {"level", n.level}, {"room", n.room},
                     {"objects", objects}});
  }
  Json edges = Json::array();
  for (const auto& e : env.edges()) edges.push_back({{"from", e.from}, {"to", e.to}, {"length_m", e.length_m}});
  return {{"id", env.id()}, {"level_height", env.level_height()}, {"nodes", nodes}, {"edges", edges}};
}

Environment environment_from_json(const Json& j) {
  std::vector<Node> nodes;
  for (const auto& jn : get<Json>(j, "nodes")) {
    Node n;
    n.id = get<NodeId>(jn, "id");
    n.x = get<double>(jn, "x");
    n.y = get<double>(jn, "y");
    n.level = get<int>(jn, "level");
    n.room = get<std::string>(jn, "room");
    for (const auto& jo : get<Json>(jn, "objects")) {
      n.objects.push_back({get<std::string>(jo, "name"), get<double>(jo, "bearing")});
    }
    nodes.push_back(std::move(n));
  }
  std::vector<Edge> edges;
  for (const auto& je : get<Json>(j, "edges")) {
    edges.push_back({get<NodeId>(je, "from"), get<NodeId>(je, "to"), get<double>(je, "length_m")});
  }
  try {
    return Environment(get<std::string>(j, "id"), std::move(nodes), std::move(edges),
                       get<double>(j, "level_height"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid environment: ") + e.what());
  }
}

Json to_json(const Route& route) {
  Json steps = Json::array();
  for (const auto& s : route.steps) {
    Json visible = Json::array();
    for (const auto& [name, dir] : s.observation.visible) visible.push_back({name, to_string(dir)});
    steps.push_back({{"node", s.node},
                     {"heading", s.heading},
                     {"room", s.observation.room},
                     {"visible", visible},
                     {"direction", s.action.direction},
                     {"target", s.action.target}});
  }
  return {{"env_id", route.env_id}, {"start_heading", route.start_heading}, {"steps", steps}};
}

namespace {
EgoDirection ego_from(const std::string& s) {
  for (auto d : {EgoDirection::ahead, EgoDirection::right, EgoDirection::behind, EgoDirection::left}) {
    if (to_string(d) == s) return d;
  }
  throw FormatError("unknown egocentric direction: " + s);
}
}  // namespace

Route route_from_json(const Json& j) {
  Route r;
  r.env_id = get<std::string>(j, "env_id");
  r.start_heading = get<double>(j, "start_heading");
  for (const auto& js : get<Json>(j, "steps")) {
    RouteStep s;
    s.node = get<NodeId>(js, "node");
    s.heading = get<double>(js, "heading");
    s.observation.room = get<std::string>(js, "room");
    for (const auto& v : get<Json>(js, "visible")) {
      if (!v.is_array() || v.size() != 2) throw FormatError("visible entries are [name, direction]");
      s.observation.visible.emplace_back(v[0].get<std::string>(), ego_from(v[1].get<std::string>()));
    }
    s.action.direction = get<std::string>(js, "direction");
    s.action.target = get<NodeId>(js, "target");
    r.steps.push_back(std::move(s));
  }
  if (r.steps.empty()) throw FormatError("route without steps");
  return r;
}

// -- instructions ------------------------------------------------------------------

Json to_json(const AnnotatedInstruction& ann) {
  Json spans = Json::array();
  for (const auto& s : ann.spans) spans.push_back(span_json(s));
  Json gold = Json::array();
  for (const auto& g : ann.gold) {
    gold.push_back({{"hallucination", g.is_hallucination},
                    {"type", to_string(g.type)},
                    {"correction", g.correction}});
  }
  Json records = Json::array();
  for (const auto& r : ann.records) {
    records.push_back({{"kind", to_string(r.kind)},
                       {"position", r.position},
                       {"original", r.original},
                       {"replacement", r.replacement},
                       {"fallback", r.fallback}});
  }
  return {{"tokens", ann.tokens}, {"spans", spans},     {"gold", gold},
          {"alignment", ann.alignment}, {"records", records}};
}

AnnotatedInstruction instruction_from_json(const Json& j) {
  AnnotatedInstruction ann;
  ann.tokens = get<std::vector<std::string>>(j, "tokens");
  for (const auto& s : get<Json>(j, "spans")) {
    ann.spans.push_back(span_from(s));
    if (ann.spans.back().j >= ann.tokens.size()) throw FormatError("span outside token range");
  }
  for (const auto& g : get<Json>(j, "gold")) {
    GoldLabel l;
    l.is_hallucination = get<bool>(g, "hallucination");
    l.type = hallucination_type_from_string(get<std::string>(g, "type"));
    l.correction = get<std::string>(g, "correction");
    ann.gold.push_back(std::move(l));
  }
  if (ann.gold.size() != ann.spans.size()) throw FormatError("gold labels not parallel to spans");
  ann.alignment = get<std::vector<int>>(j, "alignment");
  for (const auto& r : get<Json>(j, "records")) {
    PerturbationRecord rec;
    rec.kind = perturbation_kind_from_string(get<std::string>(r, "kind"));
    rec.position = get<std::size_t>(r, "position");
    rec.original = get<std::vector<std::string>>(r, "original");
    rec.replacement = get<std::vector<std::string>>(r, "replacement");
    rec.fallback = get<bool>(r, "fallback");
    ann.records.push_back(std::move(rec));
  }
  return ann;
}

Json to_json(const CorpusRecord& rec) {
  return {{"route_id", rec.route_id}, {"route", to_json(rec.route)}, {"instruction", to_json(rec.instruction)}};
}

CorpusRecord record_from_json(const Json& j) {
  return {get<std::string>(j, "route_id"), route_from_json(get<Json>(j, "route")),
          instruction_from_json(get<Json>(j, "instruction"))};
}

Json to_json(const DetectionExample& ex) {
  return {{"env_id", ex.env_id}, {"route_id", ex.route_id}, {"tokens", ex.tokens}, {"i", ex.i},
          {"j", ex.j},           {"kind", to_string(ex.kind)}, {"label", ex.label},
          {"alignment", ex.alignment}};
}

DetectionExample example_from_json(const Json& j) {
  DetectionExample ex;
  ex.env_id = get<std::string>(j, "env_id");
  ex.route_id = get<std::string>(j, "route_id");
  ex.tokens = get<std::vector<std::string>>(j, "tokens");
  ex.i = get<std::size_t>(j, "i");
  ex.j = get<std::size_t>(j, "j");
  ex.kind = phrase_kind_from_string(get<std::string>(j, "kind"));
  ex.label = get<bool>(j, "label");
  ex.alignment = get<std::vector<int>>(j, "alignment");
  if (ex.i == 0 || ex.j + 1 >= ex.tokens.size() || ex.j < ex.i) throw FormatError("bad marker positions");
  return ex;
}

Json to_json(const PairedExample& p) {
  return {{"positive", to_json(p.positive)}, {"negative", to_json(p.negative)}};
}

PairedExample pair_from_json(const Json& j) {
  return {example_from_json(get<Json>(j, "positive")), example_from_json(get<Json>(j, "negative"))};
}

Json to_json(const SourcedPair& p) {
  return {{"pair", to_json(p.pair)},
          {"positive_instruction", to_json(p.positive_instruction)},
          {"negative_instruction", to_json(p.negative_instruction)},
          {"positive_span", p.positive_span},
          {"negative_span", p.negative_span}};
}

SourcedPair sourced_pair_from_json(const Json& j) {
  SourcedPair p;
  p.pair = pair_from_json(get<Json>(j, "pair"));
  p.positive_instruction = instruction_from_json(get<Json>(j, "positive_instruction"));
  p.negative_instruction = instruction_from_json(get<Json>(j, "negative_instruction"));
  p.positive_span = get<std::size_t>(j, "positive_span");
  p.negative_span = get<std::size_t>(j, "negative_span");
  if (p.positive_span >= p.positive_instruction.spans.size() ||
      p.negative_span >= p.negative_instruction.spans.size()) {
    throw FormatError("span index out of range");
  }
  return p;
}

Json to_json(const EpisodeTask& t) {
  return {{"id", t.id}, {"route_id", t.route_id}, {"instruction", to_json(t.instruction)}};
}

EpisodeTask episode_task_from_json(const Json& j) {
  return {get<std::string>(j, "id"), get<std::string>(j, "route_id"),
          instruction_from_json(get<Json>(j, "instruction"))};
}

Json to_json(const Highlight& h) {
  Json spans = Json::array();
  for (const auto& s : h.member_spans) spans.push_back(span_json(s));
  return {{"range", range_json(h.range)}, {"confidence", h.confidence}, {"members", h.members},
          {"member_spans", spans},       {"merged", h.merged},         {"snapshot", h.snapshot}};
}

Json to_json(const SuggestionList& s) {
  Json items = Json::array();
  for (const auto& it : s.items) {
    items.push_back({{"candidate", it.candidate}, {"score", it.score}, {"member", it.member}});
  }
  return {{"span", range_json(s.for_highlight)}, {"items", items}};
}

Json to_json(const Episode& e) {
  return {{"id", e.id},
          {"env_id", e.env_id},
          {"goal", e.goal},
          {"final_node", e.final_node},
          {"trajectory", e.trajectory},
          {"check_nodes", e.check_nodes},
          {"checks_used", e.checks_used},
          {"success", e.success}};
}

Episode episode_from_json(const Json& j) {
  Episode e;
  e.id = get<std::string>(j, "id");
  e.env_id = get<std::string>(j, "env_id");
  e.goal = get<NodeId>(j, "goal");
  e.final_node = get<NodeId>(j, "final_node");
  e.trajectory = get<std::vector<NodeId>>(j, "trajectory");
  e.check_nodes = get<std::vector<NodeId>>(j, "check_nodes");
  e.checks_used = get<int>(j, "checks_used");
  e.success = get<bool>(j, "success");
  return e;
}

// -- configuration -------------------------------------------------------------------

Json to_json(const SuiteConfig& c) {
  return {
      {"seed", c.seed},
      {"environments", c.environments},
      {"env",
       {{"min_nodes", c.env.min_nodes},
        {"max_nodes", c.env.max_nodes},
        {"spacing_m", c.env.spacing_m},
        {"jitter_m", c.env.jitter_m},
        {"extra_edge_prob", c.env.extra_edge_prob},
        {"max_objects", c.env.max_objects},
        {"levels", c.env.levels},
        {"level_height_m", c.env.level_height_m}}},
      {"min_steps", c.min_steps},
      {"max_steps", c.max_steps},
      {"train_routes_per_env", c.train_routes_per_env},
      {"eval_routes_per_env", c.eval_routes_per_env},
      {"episode_routes_per_env", c.episode_routes_per_env},
      {"train_pairs", c.train_pairs},
      {"dev_examples", c.dev_examples},
      {"test_examples", c.test_examples},
      {"episodes", c.episodes},
      {"pairs",
       {{"pairs_per_instruction", c.pairs.pairs_per_instruction},
        {"max_hallucinations", c.pairs.max_hallucinations},
        {"room_weight", c.pairs.room_weight},
        {"object_weight", c.pairs.object_weight},
        {"direction_weight", c.pairs.direction_weight},
        {"extrinsic_weight", c.pairs.extrinsic_weight}}},
      {"episode_rates",
       {{"room", c.episode_rates.room},
        {"object", c.episode_rates.object},
        {"direction", c.episode_rates.direction},
        {"extrinsic", c.episode_rates.extrinsic},
        {"instruction", c.episode_rates.instruction},
        {"max_hallucinations", c.episode_rates.max_hallucinations}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"epochs", c.train.epochs},
        {"seed", c.train.seed},
        {"pointwise_mix", c.train.pointwise_mix}}},
      {"features",
       {{"aligned_radius", c.features.aligned_radius},
        {"proportional_radius", c.features.proportional_radius}}},
      {"check_budget", c.check_budget},
      {"top_k", c.top_k},
      {"highlight_cap", c.highlight_cap},
  };
}

namespace {

/// Overwrites fields of `target` present in `j`; unknown keys are errors.
template <typename T>
void take(const Json& j, const char* key, T& target, std::set<std::string>& seen) {
  seen.insert(key);
  if (j.contains(key)) {
    try {
      target = j.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw FormatError(std::string("bad config value ") + key + ": " + e.what());
    }
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw FormatError("unknown config key: " + where + k);
  }
}

}  // namespace

SuiteConfig suite_config_from_json(const Json& j, SuiteConfig c) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  std::set<std::string> seen;
  take(j, "seed", c.seed, seen);
  take(j, "environments", c.environments, seen);
  take(j, "min_steps", c.min_steps, seen);
  take(j, "max_steps", c.max_steps, seen);
  take(j, "train_routes_per_env", c.train_routes_per_env, seen);
  take(j, "eval_routes_per_env", c.eval_routes_per_env, seen);
  take(j, "episode_routes_per_env", c.episode_routes_per_env, seen);
  take(j, "train_pairs", c.train_pairs, seen);
  take(j, "dev_examples", c.dev_examples, seen);
  take(j, "test_examples", c.test_examples, seen);
  take(j, "episodes", c.episodes, seen);
  take(j, "check_budget", c.check_budget, seen);
  take(j, "top_k", c.top_k, seen);
  take(j, "highlight_cap", c.highlight_cap, seen);
  auto section = [&](const char* key, auto&& fill) {
    seen.insert(key);
    if (!j.contains(key)) return;
    const Json& s = j.at(key);
    if (!s.is_object()) throw FormatError(std::string("config section must be an object: ") + key);
    std::set<std::string> inner;
    fill(s, inner);
    reject_unknown(s, inner, std::string(key) + ".");
  };
  section("env", [&](const Json& s, std::set<std::string>& k) {
    take(s, "min_nodes", c.env.min_nodes, k);
    take(s, "max_nodes", c.env.max_nodes, k);
    take(s, "spacing_m", c.env.spacing_m, k);
    take(s, "jitter_m", c.env.jitter_m, k);
    take(s, "extra_edge_prob", c.env.extra_edge_prob, k);
    take(s, "max_objects", c.env.max_objects, k);
    take(s, "levels", c.env.levels, k);
    take(s, "level_height_m", c.env.level_height_m, k);
  });
  section("pairs", [&](const Json& s, std::set<std::string>& k) {
    take(s, "pairs_per_instruction", c.pairs.pairs_per_instruction, k);
    take(s, "max_hallucinations", c.pairs.max_hallucinations, k);
    take(s, "room_weight", c.pairs.room_weight, k);
    take(s, "object_weight", c.pairs.object_weight, k);
    take(s, "direction_weight", c.pairs.direction_weight, k);
    take(s, "extrinsic_weight", c.pairs.extrinsic_weight, k);
  });
  section("episode_rates", [&](const Json& s, std::set<std::string>& k) {
    take(s, "room", c.episode_rates.room, k);
    take(s, "object", c.episode_rates.object, k);
    take(s, "direction", c.episode_rates.direction, k);
    take(s, "extrinsic", c.episode_rates.extrinsic, k);
    take(s, "instruction", c.episode_rates.instruction, k);
    take(s, "max_hallucinations", c.episode_rates.max_hallucinations, k);
  });
  section("train", [&](const Json& s, std::set<std::string>& k) {
    take(s, "learning_rate", c.train.learning_rate, k);
    take(s, "epochs", c.train.epochs, k);
    take(s, "seed", c.train.seed, k);
    take(s, "pointwise_mix", c.train.pointwise_mix, k);
  });
  section("features", [&](const Json& s, std::set<std::string>& k) {
    take(s, "aligned_radius", c.features.aligned_radius, k);
    take(s, "proportional_radius", c.features.proportional_radius, k);
  });
  reject_unknown(j, seen, "");
  return c;
}

// -- reports -----------------------------------------------------------------------------

namespace {

Json class_json(const ClassScores& c) {
  return {{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}};
}

ClassScores class_from(const Json& j) {
  return {get<double>(j, "precision"), get<double>(j, "recall"), get<double>(j, "f1")};
}

}  // namespace

Json to_json(const ExperimentReport& r) {
  Json detection = Json::array();
  for (const auto& d : r.intrinsic.detection) {
    detection.push_back({{"system", d.system},
                         {"split", d.split},
                         {"macro_f1", d.macro_f1},
                         {"positive", class_json(d.positive)},
                         {"negative", class_json(d.negative)},
                         {"counts", {{"tp", d.counts.tp}, {"fp", d.counts.fp}, {"tn", d.counts.tn}, {"fn", d.counts.fn}}},
                         {"warnings", d.warnings}});
  }
  Json suggestion = Json::array();
  for (const auto& s : r.intrinsic.suggestion) {
    suggestion.push_back({{"system", s.system},
                          {"split", s.split},
                          {"recall_at_k", s.recall_at_k},
                          {"k", s.k},
                          {"evaluated", s.evaluated},
                          {"excluded", s.excluded},
                          {"mean_candidates", s.mean_candidates}});
  }
  Json buckets = Json::array();
  for (const auto& [size, b] : r.intrinsic.random_by_size) {
    buckets.push_back({{"candidates", size}, {"examples", b.examples}, {"hits", b.hits}});
  }
  Json conditions = Json::array();
  for (const auto& n : r.extrinsic.conditions) {
    conditions.push_back({{"condition", n.condition},
                          {"success_rate", n.success_rate},
                          {"mean_error", n.mean_error},
                          {"median_error", n.median_error},
                          {"mean_checks", n.mean_checks},
                          {"episodes", n.episodes}});
  }
  Json episodes = Json::object();
  for (const auto& [cond, eps] : r.extrinsic.episodes) {
    Json rows = Json::array();
    for (const auto& e : eps) rows.push_back(to_json(e));
    episodes[cond] = rows;
  }
  return {{"format", "hear-report"},
          {"schema_version", kSchemaVersion},
          {"seed", r.seed},
          {"config_hash", hex64(r.config_hash)},
          {"intrinsic", {{"detection", detection}, {"suggestion", suggestion}, {"random_by_size", buckets}}},
          {"extrinsic", {{"conditions", conditions}, {"episodes", episodes}}}};
}

ExperimentReport report_from_json(const Json& j) {
  if (get<std::string>(j, "format") != "hear-report") throw FormatError("not a report");
  if (get<int>(j, "schema_version") != kSchemaVersion) throw FormatError("unsupported report schema version");
  ExperimentReport r;
  r.seed = get<std::uint64_t>(j, "seed");
  r.config_hash = parse_hex64(get<std::string>(j, "config_hash"));
  const Json& in = get<Json>(j, "intrinsic");
  for (const auto& d : get<Json>(in, "detection")) {
    DetectionReport x;
    x.system = get<std::string>(d, "system");
    x.split = get<std::string>(d, "split");
    x.macro_f1 = get<double>(d, "macro_f1");
    x.positive = class_from(get<Json>(d, "positive"));
    x.negative = class_from(get<Json>(d, "negative"));
    const Json& c = get<Json>(d, "counts");
    x.counts = {get<std::size_t>(c, "tp"), get<std::size_t>(c, "fp"), get<std::size_t>(c, "tn"),
                get<std::size_t>(c, "fn")};
    x.warnings = get<std::vector<std::string>>(d, "warnings");
    r.intrinsic.detection.push_back(std::move(x));
  }
  for (const auto& s : get<Json>(in, "suggestion")) {
    SuggestionReport x;
    x.system = get<std::string>(s, "system");
    x.split = get<std::string>(s, "split");
    x.recall_at_k = get<double>(s, "recall_at_k");
    x.k = get<int>(s, "k");
    x.evaluated = get<std::size_t>(s, "evaluated");
    x.excluded = get<std::size_t>(s, "excluded");
    x.mean_candidates = get<double>(s, "mean_candidates");
    r.intrinsic.suggestion.push_back(std::move(x));
  }
  for (const auto& b : get<Json>(in, "random_by_size")) {
    r.intrinsic.random_by_size[get<std::size_t>(b, "candidates")] = {get<std::size_t>(b, "examples"),
                                                                     get<std::size_t>(b, "hits")};
  }
  const Json& ex = get<Json>(j, "extrinsic");
  for (const auto& n : get<Json>(ex, "conditions")) {
    NavReport x;
    x.condition = get<std::string>(n, "condition");
    x.success_rate = get<double>(n, "success_rate");
    x.mean_error = get<double>(n, "mean_error");
    x.median_error = get<double>(n, "median_error");
    x.mean_checks = get<double>(n, "mean_checks");
    x.episodes = get<std::size_t>(n, "episodes");
    r.extrinsic.conditions.push_back(std::move(x));
  }
  const Json episodes = get<Json>(ex, "episodes");
  for (const auto& [cond, rows] : episodes.items()) {
    auto& eps = r.extrinsic.episodes[cond];
    for (const auto& row : rows) eps.push_back(episode_from_json(row));
  }
  return r;
}

std::string write_report(const ExperimentReport& report) { return to_json(report).dump(2) + "\n"; }

ExperimentReport read_report(std::string_view text) {
  try {
    return report_from_json(Json::parse(text));
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what());
  }
}

// -- line-delimited files ------------------------------------------------------------------

std::string write_jsonl(std::string_view format, const std::vector<Json>& records) {
  std::string out = Json{{"format", format}, {"schema_version", kSchemaVersion}}.dump();
  out += '\n';
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::vector<Json> read_jsonl(std::string_view text, std::string_view format) {
  std::vector<Json> out;
  std::size_t pos = 0;
  bool header = true;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (header) {
      if (get<std::string>(j, "format") != format) {
        throw FormatError("expected format " + std::string(format) + ", got " + get<std::string>(j, "format"));
      }
      if (get<int>(j, "schema_version") != kSchemaVersion) throw FormatError("unsupported schema version");
      header = false;
      continue;
    }
    out.push_back(std::move(j));
  }
  if (header) throw FormatError("missing header line");
  return out;
}

namespace {

template <typename T, typename F>
std::string write_all(std::string_view format, const std::vector<T>& items, F&& conv) {
  std::vector<Json> rows;
  rows.reserve(items.size());
  for (const auto& x : items) rows.push_back(conv(x));
  return write_jsonl(format, rows);
}

template <typename F>
auto read_all(std::string_view text, std::string_view format, F&& conv) {
  std::vector<decltype(conv(Json{}))> out;
  for (const auto& j : read_jsonl(text, format)) out.push_back(conv(j));
  return out;
}

}  // namespace

std::string write_environments(const std::vector<Environment>& envs) {
  return write_all("hear-environments", envs, [](const Environment& e) { return to_json(e); });
}
std::vector<Environment> read_environments(std::string_view text) {
  return read_all(text, "hear-environments", environment_from_json);
}

std::string write_routes(const std::vector<NamedRoute>& routes) {
  return write_all("hear-routes", routes, [](const NamedRoute& r) {
    return Json{{"route_id", r.route_id}, {"route", to_json(r.route)}};
  });
}
std::vector<NamedRoute> read_routes(std::string_view text) {
  return read_all(text, "hear-routes", [](const Json& j) {
    return NamedRoute{get<std::string>(j, "route_id"), route_from_json(get<Json>(j, "route"))};
  });
}

std::string write_corpus(const std::vector<CorpusRecord>& records) {
  return write_all("hear-corpus", records, [](const CorpusRecord& r) { return to_json(r); });
}
std::vector<CorpusRecord> read_corpus(std::string_view text) {
  return read_all(text, "hear-corpus", record_from_json);
}

std::string write_pairs(const std::vector<PairedExample>& pairs) {
  return write_all("hear-pairs", pairs, [](const PairedExample& p) { return to_json(p); });
}
std::vector<PairedExample> read_pairs(std::string_view text) {
  return read_all(text, "hear-pairs", pair_from_json);
}

std::string write_sourced_pairs(const std::vector<SourcedPair>& pairs) {
  return write_all("hear-sourced-pairs", pairs, [](const SourcedPair& p) { return to_json(p); });
}
std::vector<SourcedPair> read_sourced_pairs(std::string_view text) {
  return read_all(text, "hear-sourced-pairs", sourced_pair_from_json);
}

std::string write_episode_tasks(const std::vector<EpisodeTask>& tasks) {
  return write_all("hear-episodes", tasks, [](const EpisodeTask& t) { return to_json(t); });
}
std::vector<EpisodeTask> read_episode_tasks(std::string_view text) {
  return read_all(text, "hear-episodes", episode_task_from_json);
}

// -- models ------------------------------------------------------------------------------

std::string format_real(double v) {
  if (std::isnan(v)) throw std::invalid_argument("cannot format NaN");
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("to_chars failed");
  return std::string(buf, p);
}

double parse_real(std::string_view text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || std::isnan(v) || std::isinf(v)) {
    throw FormatError("bad real value: " + std::string(text));
  }
  return v;
}

std::string write_model(const GroundingModel& model) {
  if (model.weights.size() != kFeatureDim) throw std::invalid_argument("model has wrong dimension");
  std::string out = "hear-model " + std::to_string(kSchemaVersion) + "\n";
  out += "task " + std::string(to_string(model.task)) + "\n";
  out += "seed " + std::to_string(model.seed) + "\n";
  out += "config_hash " + hex64(model.config_hash) + "\n";
  out += "threshold " + (model.threshold ? format_real(*model.threshold) : std::string("none")) + "\n";
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    out += "weight " + std::string(kFeatureNames[k]) + " " + format_real(model.weights[k]) + "\n";
  }
  return out;
}

GroundingModel read_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next = [&](const std::string& key) {
    if (!std::getline(in, line)) throw FormatError("model file truncated before " + key);
    if (line.rfind(key + " ", 0) != 0) throw FormatError("expected '" + key + "', got '" + line + "'");
    return line.substr(key.size() + 1);
  };
  if (next("hear-model") != std::to_string(kSchemaVersion)) throw FormatError("unsupported model schema version");
  GroundingModel m;
  try {
    m.task = model_task_from_string(next("task"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  const auto seed = next("seed");
  auto [p, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), m.seed);
  if (ec != std::errc() || p != seed.data() + seed.size()) throw FormatError("bad seed");
  m.config_hash = parse_hex64(next("config_hash"));
  const auto tau = next("threshold");
  if (tau != "none") m.threshold = parse_real(tau);
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    const auto rest = next("weight");
    const auto sp = rest.find(' ');
    if (sp == std::string::npos || rest.substr(0, sp) != kFeatureNames[k]) {
      throw FormatError("expected weight for " + std::string(kFeatureNames[k]));
    }
    m.weights[k] = parse_real(rest.substr(sp + 1));
  }
  while (std::getline(in, line)) {
    if (!line.empty()) throw FormatError("trailing content in model file");
  }
  return m;
}

// -- files and directories --------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void save_suite(const std::filesystem::path& dir, const SuiteData& data) {
  write_file(dir / "environments.jsonl", write_environments(data.corpus.environments));
  write_file(dir / "corpus.jsonl", write_corpus(data.corpus.records));
  const Json splits = {{"format", "hear-splits"},
                       {"schema_version", kSchemaVersion},
                       {"train", data.train_ids},
                       {"dev", data.dev_ids},
                       {"test", data.test_ids},
                       {"episodes", data.episode_ids}};
  write_file(dir / "splits.json", splits.dump(2) + "\n");
  write_file(dir / "pairs-detection.jsonl", write_pairs(data.detection_pairs));
  write_file(dir / "pairs-same-env.jsonl", write_pairs(data.same_env_pairs));
  write_file(dir / "pairs-type.jsonl", write_pairs(data.type_pairs));
  write_file(dir / "pairs-one-stage.jsonl", write_pairs(data.one_stage_pairs));
  write_file(dir / "dev.jsonl", write_sourced_pairs(data.dev));
  write_file(dir / "test.jsonl", write_sourced_pairs(data.test));
  write_file(dir / "type-dev.jsonl", write_pairs(data.type_dev));
  write_file(dir / "one-stage-dev.jsonl", write_pairs(data.one_stage_dev));
  write_file(dir / "episodes.jsonl", write_episode_tasks(data.episodes));
}

SuiteData load_suite(const std::filesystem::path& dir) {
  SuiteData data;
  data.corpus.environments = read_environments(read_file(dir / "environments.jsonl"));
  data.corpus.records = read_corpus(read_file(dir / "corpus.jsonl"));
  data.corpus.index();
  Json splits;
  try {
    splits = Json::parse(read_file(dir / "splits.json"));
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("splits.json: ") + e.what());
  }
  if (get<std::string>(splits, "format") != "hear-splits") throw FormatError("splits.json has wrong format");
  data.train_ids = get<std::vector<std::string>>(splits, "train");
  data.dev_ids = get<std::vector<std::string>>(splits, "dev");
  data.test_ids = get<std::vector<std::string>>(splits, "test");
  data.episode_ids = get<std::vector<std::string>>(splits, "episodes");
  data.detection_pairs = read_pairs(read_file(dir / "pairs-detection.jsonl"));
  data.same_env_pairs = read_pairs(read_file(dir / "pairs-same-env.jsonl"));
  data.type_pairs = read_pairs(read_file(dir / "pairs-type.jsonl"));
  data.one_stage_pairs = read_pairs(read_file(dir / "pairs-one-stage.jsonl"));
  data.dev = read_sourced_pairs(read_file(dir / "dev.jsonl"));
  data.test = read_sourced_pairs(read_file(dir / "test.jsonl"));
  data.type_dev = read_pairs(read_file(dir / "type-dev.jsonl"));
  data.one_stage_dev = read_pairs(read_file(dir / "one-stage-dev.jsonl"));
  data.episodes = read_episode_tasks(read_file(dir / "episodes.jsonl"));
  return data;
}

void save_models(const std::filesystem::path& dir, const TrainedModels& m) {
  write_file(dir / "detection.model", write_model(m.detection));
  write_file(dir / "type.model", write_model(m.type));
  write_file(dir / "same-env.model", write_model(m.same_env_detection));
  write_file(dir / "one-stage.model", write_model(m.one_stage));
}

TrainedModels load_models(const std::filesystem::path& dir) {
  TrainedModels m;
  m.detection = read_model(read_file(dir / "detection.model"));
  m.type = read_model(read_file(dir / "type.model"));
  m.same_env_detection = read_model(read_file(dir / "same-env.model"));
  m.one_stage = read_model(read_file(dir / "one-stage.model"));
  return m;
}

}  // namespace hear
