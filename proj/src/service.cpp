#include "hear/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>

#include "hear/rng.hpp"

namespace hear {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::move:
      return "move";
    case EventKind::check:
      return "check";
    case EventKind::open_menu:
      return "open_menu";
    case EventKind::apply_suggestion:
      return "apply_suggestion";
    case EventKind::revert:
      return "revert";
    case EventKind::rating:
      return "rating";
    case EventKind::submit:
      return "submit";
  }
  return "move";
}

EventKind event_kind_from_string(std::string_view text) {
  for (auto k : {EventKind::move, EventKind::check, EventKind::open_menu, EventKind::apply_suggestion,
                 EventKind::revert, EventKind::rating, EventKind::submit}) {
    if (to_string(k) == text) return k;
  }
  throw FormatError("unknown event kind: " + std::string(text));
}

Json to_json(const Event& e) {
  return {{"session", e.session}, {"seq", e.seq}, {"task", e.task}, {"kind", to_string(e.kind)},
          {"payload", e.payload}};
}

Event event_from_json(const Json& j) {
  try {
    return {j.at("session").get<std::string>(), j.at("seq").get<std::uint64_t>(),
            j.at("task").get<std::string>(), event_kind_from_string(j.at("kind").get<std::string>()),
            j.at("payload")};
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad event: ") + e.what());
  }
}

Episode replay_episode(const std::vector<Event>& events, const std::string& task_id,
                       const Environment& env, NodeId start, NodeId goal) {
  Episode ep;
  ep.env_id = env.id();
  ep.goal = goal;
  ep.trajectory.push_back(start);
  NodeId node = start;
  for (const auto& e : events) {
    if (e.task != task_id) continue;
    if (e.kind == EventKind::move && e.payload.value("accepted", false)) {
      node = e.payload.at("target").get<NodeId>();
      ep.trajectory.push_back(node);
    } else if (e.kind == EventKind::check) {
      ++ep.checks_used;
      ep.check_nodes.push_back(node);
      if (within_success_radius(env, node, goal)) ep.success = true;
    }
  }
  ep.final_node = node;
  return ep;
}

struct Service::TaskSpec {
  std::string id;
  std::string route_id;
  bool qc = false;
  AnnotatedInstruction instruction;
};

struct Service::TaskState {
  TaskSpec spec;
  NodeId node = 0;
  double heading = 0.0;
  AnnotatedInstruction current;
  std::vector<AnnotatedInstruction> history;
  std::vector<NodeId> trajectory;
  int checks = 0;
  bool success = false;
  bool submitted = false;
  std::optional<RatingForm> rating;
  std::map<std::pair<std::size_t, std::size_t>, SuggestionList> served;

  bool finalized() const { return success || submitted; }
};

struct Service::SessionState {
  std::string id;
  Condition condition = Condition::none;
  std::uint64_t seed = 0;
  std::string created_at;
  std::vector<TaskState> tasks;
  std::vector<Event> events;
  std::uint64_t next_seq = 1;
  int fd = -1;
  std::mutex mutex;

  ~SessionState() {
    if (fd >= 0) ::close(fd);
  }
};

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_all_fd(int fd, const std::string& line) {
  std::size_t done = 0;
  while (done < line.size()) {
    const auto n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0) throw std::runtime_error("event log write failed");
    done += static_cast<std::size_t>(n);
  }
}

Json bad_request(const std::string& message) { throw ServiceError(400, "bad_request", message); }

template <typename T>
T field(const Json& body, const char* key) {
  if (!body.is_object() || !body.contains(key)) bad_request(std::string("missing field: ") + key);
  try {
    return body.at(key).get<T>();
  } catch (const Json::exception&) {
    bad_request(std::string("bad field: ") + key);
  }
  return T{};
}

std::pair<std::size_t, std::size_t> inclusive(const TokenRange& r) { return {r.begin, r.end - 1}; }

Json span_pair(const TokenRange& r) { return Json::array({r.begin, r.end - 1}); }

}  // namespace

Service::Service(SuiteData data, TrainedModels models, SuiteConfig suite, ServiceConfig config)
    : data_(std::move(data)), models_(std::move(models)), suite_(std::move(suite)), config_(std::move(config)) {
  data_.corpus.index();
  if (data_.episodes.size() < config_.tasks_per_session) {
    throw std::invalid_argument("suite has fewer episodes than tasks per session");
  }
  if (!data_.test_ids.empty()) {
    qc_route_ = data_.test_ids.front();
  } else if (!data_.dev_ids.empty()) {
    qc_route_ = data_.dev_ids.front();
  } else {
    throw std::invalid_argument("suite has no held-out route for the quality-control task");
  }
  if (!config_.log_dir.empty()) {
    std::filesystem::create_directories(config_.log_dir);
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(config_.log_dir)) {
      if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) restore(f);
  }
}

Service::~Service() = default;

std::vector<Service::TaskSpec> Service::assign_tasks(std::uint64_t seed) const {
  Rng rng(derive_seed(seed, "tasks"));
  std::vector<std::size_t> order(data_.episodes.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  rng.shuffle(order);
  order.resize(config_.tasks_per_session);
  std::vector<TaskSpec> specs;
  for (auto k : order) {
    const auto& ep = data_.episodes[k];
    specs.push_back({"", ep.route_id, false, ep.instruction});
  }
  const auto qc_at = static_cast<std::ptrdiff_t>(rng.index(specs.size() + 1));
  specs.insert(specs.begin() + qc_at, TaskSpec{"", qc_route_, true, data_.corpus.record(qc_route_).instruction});
  for (std::size_t k = 0; k < specs.size(); ++k) specs[k].id = "t" + std::to_string(k);
  return specs;
}

Json Service::create_session(const Json& request) {
  if (!request.is_object()) bad_request("request body must be a JSON object");
  Condition condition;
  try {
    condition = condition_from_string(field<std::string>(request, "condition"));
  } catch (const std::invalid_argument& e) {
    throw ServiceError(400, "unknown_condition", e.what());
  }
  const auto seed = request.contains("seed") ? field<std::uint64_t>(request, "seed") : suite_.seed;

  auto s = std::make_unique<SessionState>();
  s->condition = condition;
  s->seed = seed;
  s->created_at = now_utc();
  for (auto& spec : assign_tasks(seed)) {
    TaskState t;
    const auto& route = data_.corpus.record(spec.route_id).route;
    t.node = route.start_node();
    t.heading = route.start_heading;
    t.trajectory.push_back(t.node);
    t.current = spec.instruction;
    t.spec = std::move(spec);
    s->tasks.push_back(std::move(t));
  }

  std::unique_lock lock(sessions_mutex_);
  do {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s-%016llx",
                  static_cast<unsigned long long>(derive_seed(seed, created_++)));
    s->id = buf;
  } while (sessions_.count(s->id));
  const Json header = {{"format", "hear-session-log"}, {"schema_version", kSchemaVersion},
                       {"session", s->id},            {"condition", to_string(condition)},
                       {"seed", seed},                {"created_at", s->created_at}};
  if (!config_.log_dir.empty()) {
    const auto path = config_.log_dir / (s->id + ".jsonl");
    s->fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_TRUNC, 0644);
    if (s->fd < 0) throw std::runtime_error("cannot create event log " + path.string());
    write_all_fd(s->fd, header.dump() + "\n");
    ::fsync(s->fd);
  }
  const std::string id = s->id;
  sessions_[id] = std::move(s);
  lock.unlock();
  return get_session(id);
}

void Service::restore(const std::filesystem::path& file) {
  const auto text = read_file(file);
  std::vector<Json> lines;
  std::size_t pos = 0;
  std::size_t good = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) break;  // torn final line
    if (end > pos) {
      try {
        lines.push_back(Json::parse(text.substr(pos, end - pos)));
      } catch (const Json::parse_error&) {
        break;
      }
    }
    pos = end + 1;
    good = pos;
  }
  if (lines.empty() || lines[0].value("format", "") != "hear-session-log") {
    throw FormatError("not a session log: " + file.string());
  }
  const Json& header = lines[0];
  auto s = std::make_unique<SessionState>();
  s->id = header.at("session").get<std::string>();
  s->condition = condition_from_string(header.at("condition").get<std::string>());
  s->seed = header.at("seed").get<std::uint64_t>();
  s->created_at = header.at("created_at").get<std::string>();
  for (auto& spec : assign_tasks(s->seed)) {
    TaskState t;
    const auto& route = data_.corpus.record(spec.route_id).route;
    t.node = route.start_node();
    t.heading = route.start_heading;
    t.trajectory.push_back(t.node);
    t.current = spec.instruction;
    t.spec = std::move(spec);
    s->tasks.push_back(std::move(t));
  }
  for (std::size_t k = 1; k < lines.size(); ++k) {
    Event e = event_from_json(lines[k]);
    if (e.seq != s->next_seq) throw FormatError("event log out of sequence: " + file.string());
    apply_event(*s, e);
    s->events.push_back(std::move(e));
    ++s->next_seq;
  }
  if (good < text.size()) std::filesystem::resize_file(file, good);
  s->fd = ::open(file.c_str(), O_WRONLY | O_APPEND);
  if (s->fd < 0) throw std::runtime_error("cannot reopen event log " + file.string());
  std::lock_guard lock(sessions_mutex_);
  sessions_[s->id] = std::move(s);
  ++created_;
}

Service::SessionState& Service::find(const std::string& session) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(session);
  if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "no such session: " + session);
  return *it->second;
}

Service::TaskState& Service::find_task(SessionState& s, const std::string& task) const {
  for (auto& t : s.tasks) {
    if (t.spec.id == task) return t;
  }
  throw ServiceError(404, "unknown_task", "no such task: " + task);
}

void Service::check_seq(const SessionState& s, const Json& body) const {
  if (body.is_object() && body.contains("expected_seq")) {
    const auto expected = field<std::uint64_t>(body, "expected_seq");
    if (expected != s.next_seq) {
      throw ServiceError(409, "sequence_conflict",
                         "expected_seq " + std::to_string(expected) + " but next is " + std::to_string(s.next_seq));
    }
  }
}

void Service::append(SessionState& s, const std::string& task, EventKind kind, Json payload, bool sync) {
  Event e{s.id, s.next_seq, task, kind, std::move(payload)};
  if (s.fd >= 0) {
    write_all_fd(s.fd, to_json(e).dump() + "\n");
    if (sync) ::fsync(s.fd);
  }
  apply_event(s, e);
  s.events.push_back(std::move(e));
  ++s.next_seq;
}

std::vector<Highlight> Service::highlights_for(const SessionState& s, const TaskState& t) const {
  if (!shows_highlights(s.condition)) return {};
  if (is_oracle(s.condition)) return gold_highlights(t.current, suite_.highlight_cap);
  const auto& rec = data_.corpus.record(t.spec.route_id);
  RemedyContext ctx;
  ctx.env = &data_.corpus.env(rec.route.env_id);
  ctx.route = &rec.route;
  ctx.features = suite_.features;
  return detect_highlights(models_.detection, ctx, t.current, suite_.highlight_cap);
}

void Service::apply_event(SessionState& s, const Event& e) {
  TaskState& t = find_task(s, e.task);
  const auto& rec = data_.corpus.record(t.spec.route_id);
  const auto& env = data_.corpus.env(rec.route.env_id);
  switch (e.kind) {
    case EventKind::move:
      if (e.payload.value("accepted", false)) {
        const auto target = e.payload.at("target").get<NodeId>();
        t.heading = heading_after(env, t.node, target, t.heading);
        t.node = target;
        t.trajectory.push_back(target);
      }
      break;
    case EventKind::check:
      ++t.checks;
      if (within_success_radius(env, t.node, rec.route.final_node())) t.success = true;
      break;
    case EventKind::open_menu: {
      const auto i = e.payload.at("span").at(0).get<std::size_t>();
      const auto j = e.payload.at("span").at(1).get<std::size_t>();
      for (const auto& h : highlights_for(s, t)) {
        if (inclusive(h.range) != std::pair(i, j)) continue;
        SuggestionList list;
        if (s.condition == Condition::oracle_full) {
          list = oracle_suggestions(t.current, h);
        } else {
          RemedyContext ctx;
          ctx.env = &env;
          ctx.route = &rec.route;
          ctx.features = suite_.features;
          list = suggest(models_.detection, models_.type, ctx, t.current, h, suite_.top_k);
        }
        t.served[{i, j}] = std::move(list);
      }
      break;
    }
    case EventKind::apply_suggestion: {
      const auto i = e.payload.at("span").at(0).get<std::size_t>();
      const auto j = e.payload.at("span").at(1).get<std::size_t>();
      const auto candidate = e.payload.at("candidate").get<std::string>();
      const auto member = e.payload.at("member").get<std::size_t>();
      for (const auto& h : highlights_for(s, t)) {
        if (inclusive(h.range) != std::pair(i, j)) continue;
        t.history.push_back(t.current);
        t.current = apply_suggestion(t.current, h, Suggestion{candidate, 0.0, member});
        t.served.clear();
        break;
      }
      break;
    }
    case EventKind::revert:
      if (!t.history.empty()) {
        t.current = t.history.back();
        t.history.pop_back();
        t.served.clear();
      }
      break;
    case EventKind::rating:
      t.rating = RatingForm{e.payload.at("easy_to_follow").get<int>(), e.payload.at("confident").get<int>(),
                            e.payload.at("mental_demand").get<int>()};
      break;
    case EventKind::submit:
      t.submitted = true;
      break;
  }
}

Json Service::get_session(const std::string& session) const {
  SessionState& s = find(session);
  std::lock_guard lock(s.mutex);
  Json tasks = Json::array();
  for (const auto& t : s.tasks) {
    tasks.push_back({{"task", t.spec.id}, {"finalized", t.finalized()}, {"submitted", t.submitted}});
  }
  return {{"schema_version", kSchemaVersion},
          {"session", s.id},
          {"condition", to_string(s.condition)},
          {"seed", s.seed},
          {"created_at", s.created_at},
          {"tasks", tasks},
          {"next_seq", s.next_seq}};
}

Json Service::task_payload(const SessionState& s, const TaskState& t) const {
  const auto& rec = data_.corpus.record(t.spec.route_id);
  const auto& env = data_.corpus.env(rec.route.env_id);
  const auto obs = observation_at(env, t.node, t.heading);
  Json visible = Json::array();
  for (const auto& [name, dir] : obs.visible) visible.push_back({{"name", name}, {"direction", to_string(dir)}});
  Json neighbors = Json::array();
  for (const auto& nb : env.neighbors(t.node)) {
    neighbors.push_back({{"node", nb.node},
                         {"direction", action_label_for(env, t.node, nb.node, t.heading)},
                         {"room", env.node(nb.node).room},
                         {"distance_m", nb.length_m}});
  }
  Json highlights = Json::array();
  for (const auto& h : highlights_for(s, t)) {
    Json members = Json::array();
    for (const auto& m : h.member_spans) members.push_back(Json::array({m.i, m.j}));
    highlights.push_back({{"span", span_pair(h.range)}, {"merged", h.merged}, {"members", members}});
  }
  Json spans = Json::array();
  for (const auto& sp : t.current.spans) spans.push_back({{"span", Json::array({sp.i, sp.j})}, {"kind", to_string(sp.kind)}});
  Json payload = {
      {"schema_version", kSchemaVersion},
      {"session", s.id},
      {"task", t.spec.id},
      {"condition", to_string(s.condition)},
      {"flags", {{"highlights", shows_highlights(s.condition)}, {"suggestions", shows_suggestions(s.condition)}}},
      {"disclaimer", "The instruction may be imperfect."},
      {"instruction", {{"tokens", t.current.tokens}, {"text", t.current.text()}, {"spans", spans}}},
      {"highlights", highlights},
      {"view",
       {{"node", t.node},
        {"heading", t.heading},
        {"level", env.node(t.node).level},
        {"room", obs.room},
        {"visible", visible},
        {"neighbors", neighbors}}},
      {"state",
       {{"checks_used", t.checks},
        {"moves", t.trajectory.size() - 1},
        {"success", t.success},
        {"finalized", t.finalized()},
        {"submitted", t.submitted},
        {"rated", t.rating.has_value()},
        {"can_revert", !t.history.empty()}}},
      {"next_seq", s.next_seq},
  };
  return payload;
}

Json Service::get_task(const std::string& session, const std::string& task) const {
  SessionState& s = find(session);
  std::lock_guard lock(s.mutex);
  return task_payload(s, find_task(s, task));
}

Json Service::get_suggestions(const std::string& session, const std::string& task, std::size_t i,
                              std::size_t j) {
  SessionState& s = find(session);
  std::lock_guard lock(s.mutex);
  TaskState& t = find_task(s, task);
  if (!shows_suggestions(s.condition)) {
    throw ServiceError(403, "suggestions_disabled", "suggestions disabled under condition " +
                                                        std::string(to_string(s.condition)));
  }
  bool found = false;
  for (const auto& h : highlights_for(s, t)) found = found || inclusive(h.range) == std::pair(i, j);
  if (!found) throw ServiceError(404, "unknown_highlight", "no highlight at the requested span");
  append(s, task, EventKind::open_menu, {{"span", Json::array({i, j})}}, false);
  const auto& list = t.served.at({i, j});
  Json items = Json::array();
  for (const auto& it : list.items) {
    items.push_back({{"candidate", it.candidate}, {"score", it.score}, {"member", it.member}});
  }
  return {{"schema_version", kSchemaVersion}, {"span", Json::array({i, j})}, {"items", items},
          {"next_seq", s.next_seq}};
}

Json Service::post_move(const std::string& session, const std::string& task, const Json& body) {
  SessionState& s = find(session);
  std::lock_guard lock(s.mutex);
  TaskState& t = find_task(s, task);
  check_seq(s, body);
  const auto target = field<NodeId>(body, "target");
  if (t.finalized()) throw ServiceError(409, "task_finalized", "task already finalized");
  const auto& env = data_.corpus.env(data_.corpus.record(t.spec.route_id).route.env_id);
  if (!env.has_node(target) || !env.adjacent(t.node, target)) {
    append(s, task, EventKind::move, {{"target", target}, {"accepted", false}, {"from", t.node}}, false);
    throw ServiceError(422, "illegal_move", "target is not adjacent to the current node");
  }
  const double heading = heading_after(env, t.node, target, t.heading);
  append(s, task, EventKind::move,
         {{"target", target}, {"accepted", true}, {"from", t.node}, {"heading", heading}}, false);
  return task_payload(s, t);
}

Json Service::post_check(const std::string& session, const std::string& task, const Json& body) {
  SessionState& s = find(session);
  std::lock_guard lock(s.mutex);
  TaskState& t = find_task(s, task);
  check_seq(s, body);
  if (t.finalized()) throw ServiceError(409, "task_finalized", "task already finalized");
  const auto& rec = data_.corpus.record(t.spec.route_id);
  const bool success = within_success_radius(data_.corpus.env(rec.route.env_id), t.node, rec.route.final_node());
  append(s, task, EventKind::check, {{"node", t.node}, {"success", success}}, true);
  return {{"schema_version", kSchemaVersion}, {"success", success}, {"checks_used", t.checks},
          {"finalized", t.finalized()}, {"next_seq", s.next_seq}};
}

Json Service::post_apply(const std::string& session, const std::string& task, const Json& body) {
  SessionState& s = find(session);
  std::lock_guard lock(s.mutex);
  TaskState& t = find_task(s, task);
  check_seq(s, body);
  if (!shows_suggestions(s.condition)) {
    throw ServiceError(403, "suggestions_disabled", "suggestions disabled under this condition");
  }
  if (t.submitted) throw ServiceError(409, "task_finalized", "task already submitted");
  const auto span = field<std::vector<std::size_t>>(body, "span");
  if (span.size() != 2) bad_request("span must be [i, j]");
  const auto candidate = field<std::string>(body, "candidate");
  auto served = t.served.find({span[0], span[1]});
  if (served == t.served.end()) throw ServiceError(409, "menu_not_open", "no suggestions served for this span");
  const Suggestion* chosen = nullptr;
  for (const auto& it : served->second.items) {
    if (it.candidate != candidate) continue;
    if (body.contains("member") && field<std::size_t>(body, "member") != it.member) continue;
    chosen = &it;
    break;
  }
  if (!chosen) throw ServiceError(422, "unknown_candidate", "candidate not in the served list");
  bool fresh = false;
  for (const auto& h : highlights_for(s, t)) fresh = fresh || inclusive(h.range) == std::pair(span[0], span[1]);
  if (!fresh) throw ServiceError(409, "stale_highlight", "highlight no longer present");
  const auto before = t.current.tokens.size();
  append(s, task, EventKind::apply_suggestion,
         {{"span", span}, {"candidate", candidate}, {"member", chosen->member}, {"tokens_before", before}},
         false);
  return task_payload(s, t);
}

Json Service::post_revert(const std::string& session, const std::string& task, const Json& body) {
  SessionState& s = find(session);
  std::lock_guard lock(s.mutex);
  TaskState& t = find_task(s, task);
  check_seq(s, body);
  if (t.submitted) throw ServiceError(409, "task_finalized", "task already submitted");
  if (t.history.empty()) throw ServiceError(409, "nothing_to_revert", "no applied suggestion to revert");
  append(s, task, EventKind::revert, Json::object(), false);
  return task_payload(s, t);
}

Json Service::post_rating(const std::string& session, const std::string& task, const Json& body) {
  SessionState& s = find(session);
  std::lock_guard lock(s.mutex);
  TaskState& t = find_task(s, task);
  check_seq(s, body);
  if (t.submitted) throw ServiceError(409, "task_finalized", "task already submitted");
  Json payload = Json::object();
  for (const char* key : {"easy_to_follow", "confident", "mental_demand"}) {
    const int v = field<int>(body, key);
    if (v < 1 || v > 5) throw ServiceError(422, "bad_rating", std::string(key) + " must be an integer 1-5");
    payload[key] = v;
  }
  append(s, task, EventKind::rating, payload, false);
  return {{"schema_version", kSchemaVersion}, {"rated", true}, {"next_seq", s.next_seq}};
}

Json Service::post_submit(const std::string& session, const std::string& task, const Json& body) {
  SessionState& s = find(session);
  std::lock_guard lock(s.mutex);
  TaskState& t = find_task(s, task);
  check_seq(s, body);
  if (t.submitted) throw ServiceError(409, "task_finalized", "task already submitted");
  append(s, task, EventKind::submit, {{"node", t.node}, {"success", t.success}}, true);
  std::optional<std::string> next;
  for (const auto& other : s.tasks) {
    if (!other.submitted) {
      next = other.spec.id;
      break;
    }
  }
  return {{"schema_version", kSchemaVersion},
          {"submitted", true},
          {"success", t.success},
          {"next_task", next ? Json(*next) : Json(nullptr)},
          {"next_seq", s.next_seq}};
}

std::vector<Event> Service::events(const std::string& session) const {
  SessionState& s = find(session);
  std::lock_guard lock(s.mutex);
  return s.events;
}

Json Service::export_logs(const std::optional<std::string>& session) const {
  std::vector<SessionState*> chosen;
  {
    std::lock_guard lock(sessions_mutex_);
    for (const auto& [id, s] : sessions_) {
      if (!session || *session == id) chosen.push_back(s.get());
    }
  }
  if (session && chosen.empty()) throw ServiceError(404, "unknown_session", "no such session: " + *session);
  Json events = Json::array();
  Json episodes = Json::array();
  Json sessions = Json::array();
  std::map<std::string, const Environment*> envs;
  for (const auto& e : data_.corpus.environments) envs[e.id()] = &e;
  std::map<std::string, std::vector<Episode>> by_condition;
  for (auto* s : chosen) {
    std::lock_guard lock(s->mutex);
    for (const auto& e : s->events) events.push_back(to_json(e));
    bool qc_passed = false;
    std::vector<Episode> session_eps;
    for (const auto& t : s->tasks) {
      const auto& rec = data_.corpus.record(t.spec.route_id);
      auto ep = replay_episode(s->events, t.spec.id, data_.corpus.env(rec.route.env_id),
                               rec.route.start_node(), rec.route.final_node());
      ep.id = s->id + "/" + t.spec.id;
      Json row = to_json(ep);
      row["session"] = s->id;
      row["task"] = t.spec.id;
      row["route_id"] = t.spec.route_id;
      row["condition"] = to_string(s->condition);
      row["qc"] = t.spec.qc;
      row["submitted"] = t.submitted;
      episodes.push_back(row);
      if (t.spec.qc) {
        qc_passed = ep.success && ep.checks_used <= config_.qc_check_budget;
      } else {
        session_eps.push_back(std::move(ep));
      }
    }
    sessions.push_back({{"session", s->id}, {"condition", to_string(s->condition)}, {"qc_passed", qc_passed}});
    if (qc_passed) {
      auto& into = by_condition[std::string(to_string(s->condition))];
      into.insert(into.end(), session_eps.begin(), session_eps.end());
    }
  }
  Json reports = Json::array();
  for (auto& [cond, eps] : by_condition) {
    if (eps.empty()) continue;
    const auto r = nav_report(cond, envs, eps);
    reports.push_back({{"condition", r.condition},
                       {"success_rate", r.success_rate},
                       {"mean_error", r.mean_error},
                       {"median_error", r.median_error},
                       {"mean_checks", r.mean_checks},
                       {"episodes", r.episodes}});
  }
  return {{"schema_version", kSchemaVersion}, {"events", events},   {"episodes", episodes},
          {"sessions", sessions},             {"reports", reports}};
}

}  // namespace hear
