#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hear/experiment.hpp"
#include "hear/io.hpp"

namespace hear {

/// Request failure carrying an HTTP status and a stable error code.
struct ServiceError : std::runtime_error {
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status(status), code(std::move(code)) {}
  int status;
  std::string code;
};

struct ServiceConfig {
  /// One append-only event log per session; empty keeps sessions in memory only.
  std::filesystem::path log_dir;
  std::size_t tasks_per_session = 6;
  /// Checks allowed for the quality-control task to count as passed.
  int qc_check_budget = 6;
};

enum class EventKind { move, check, open_menu, apply_suggestion, revert, rating, submit };

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view text);

struct Event {
  std::string session;
  std::uint64_t seq = 0;
  std::string task;
  EventKind kind = EventKind::move;
  Json payload;

  bool operator==(const Event&) const = default;
};

Json to_json(const Event& e);
Event event_from_json(const Json& j);

struct RatingForm {
  int easy_to_follow = 0;
  int confident = 0;
  int mental_demand = 0;
};

/// Navigation outcome of one task reconstructed from its events alone.
Episode replay_episode(const std::vector<Event>& events, const std::string& task_id,
                       const Environment& env, NodeId start, NodeId goal);

/// Serves navigation tasks to sessions under one of the five conditions.
///
/// Every mutating request is appended to the session's event log before the
/// response is produced. Sessions found in `config.log_dir` at construction
/// are restored by replaying their logs. Thread-safe; requests of one session
/// are serialized.
class Service {
 public:
  Service(SuiteData data, TrainedModels models, SuiteConfig suite, ServiceConfig config = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// {"condition": ..., "seed": ...}
  Json create_session(const Json& request);
  Json get_session(const std::string& session) const;
  Json get_task(const std::string& session, const std::string& task) const;
  /// `span` is the inclusive token range [i, j] of a served highlight.
  Json get_suggestions(const std::string& session, const std::string& task, std::size_t i, std::size_t j);
  /// {"target": node, "expected_seq"?: n}
  Json post_move(const std::string& session, const std::string& task, const Json& body);
  Json post_check(const std::string& session, const std::string& task, const Json& body);
  /// {"span": [i, j], "candidate": text, "member"?: k, "expected_seq"?: n}
  Json post_apply(const std::string& session, const std::string& task, const Json& body);
  Json post_revert(const std::string& session, const std::string& task, const Json& body);
  /// {"easy_to_follow": 1-5, "confident": 1-5, "mental_demand": 1-5}
  Json post_rating(const std::string& session, const std::string& task, const Json& body);
  Json post_submit(const std::string& session, const std::string& task, const Json& body);

  /// Events ordered by (session, seq), per-task episodes, quality-control
  /// outcomes and per-condition navigation reports over passing sessions.
  Json export_logs(const std::optional<std::string>& session = std::nullopt) const;
  std::vector<Event> events(const std::string& session) const;

  const SuiteData& data() const { return data_; }

 private:
  struct TaskSpec;
  struct TaskState;
  struct SessionState;

  SessionState& find(const std::string& session) const;
  TaskState& find_task(SessionState& s, const std::string& task) const;
  std::vector<TaskSpec> assign_tasks(std::uint64_t seed) const;
  Json task_payload(const SessionState& s, const TaskState& t) const;
  std::vector<Highlight> highlights_for(const SessionState& s, const TaskState& t) const;
  void append(SessionState& s, const std::string& task, EventKind kind, Json payload, bool sync);
  void check_seq(const SessionState& s, const Json& body) const;
  void apply_event(SessionState& s, const Event& e);
  void restore(const std::filesystem::path& file);

  SuiteData data_;
  TrainedModels models_;
  SuiteConfig suite_;
  ServiceConfig config_;
  std::string qc_route_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<SessionState>> sessions_;
  std::uint64_t created_ = 0;
};

}  // namespace hear
