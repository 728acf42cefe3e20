#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "hear/http.hpp"
#include "hear/service.hpp"
#include "httplib.h"

using namespace hear;
namespace fs = std::filesystem;

namespace {

Service make_service(const fs::path& log_dir = {}) {
  ServiceConfig sc;
  sc.log_dir = log_dir;
  sc.tasks_per_session = 3;
  return Service(fixture::small_suite(), fixture::small_models(), fixture::small_config(), sc);
}

template <typename F>
int status_of(F&& f) {
  try {
    f();
  } catch (const ServiceError& e) {
    return e.status;
  }
  return 200;
}

/// Route id of each task, read from the export.
std::map<std::string, std::string> task_routes(const Service& svc, const std::string& sid) {
  std::map<std::string, std::string> out;
  const auto exp = svc.export_logs(sid);
  for (const auto& row : exp.at("episodes")) out[row.at("task").get<std::string>()] = row.at("route_id").get<std::string>();
  return out;
}

/// Walks the shortest path to the goal of `task`, then checks and submits.
void solve(Service& svc, const std::string& sid, const std::string& task, const std::string& route_id) {
  const auto& rec = svc.data().corpus.record(route_id);
  const auto& env = svc.data().corpus.env(rec.route.env_id);
  const NodeId here = svc.get_task(sid, task).at("view").at("node");
  const auto path = shortest_path(env, here, rec.route.final_node());
  for (std::size_t k = 1; k < path.size(); ++k) svc.post_move(sid, task, {{"target", path[k]}});
  CHECK(svc.post_check(sid, task, {}).at("success") == true);
  svc.post_rating(sid, task, {{"easy_to_follow", 4}, {"confident", 5}, {"mental_demand", 2}});
  svc.post_submit(sid, task, {});
}

fs::path temp_dir(const char* tag) {
  auto p = fs::temp_directory_path() / (std::string(tag) + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("event kinds and events round-trip") {
  for (auto k : {EventKind::move, EventKind::check, EventKind::open_menu, EventKind::apply_suggestion,
                 EventKind::revert, EventKind::rating, EventKind::submit})
    CHECK(event_kind_from_string(to_string(k)) == k);
  Event e{"s", 3, "t1", EventKind::check, Json{{"node", 2}}};
  CHECK(event_from_json(to_json(e)) == e);
}

TEST_CASE("sessions: task assignment and payload shape") {
  auto svc = make_service();
  const auto s = svc.create_session({{"condition", "model_full"}, {"seed", 1}});
  const auto sid = s.at("session").get<std::string>();
  CHECK(s.at("tasks").size() == 4);
  CHECK(s.at("condition") == "model_full");
  const auto t = svc.get_task(sid, "t0");
  for (const char* key : {"schema_version", "session", "task", "condition", "flags", "disclaimer", "instruction",
                          "highlights", "view", "state", "next_seq"})
    CHECK_MESSAGE(t.contains(key), key);
  CHECK(t.at("flags").at("suggestions") == true);
  CHECK(!t.at("view").at("neighbors").empty());
  CHECK(t.at("instruction").at("text").get<std::string>().size() > 0);

  std::size_t qc = 0;
  const auto exp = svc.export_logs(sid);
  for (const auto& row : exp.at("episodes")) qc += row.at("qc").get<bool>();
  CHECK(qc == 1);

  const auto again = svc.create_session({{"condition", "model_full"}, {"seed", 1}});
  CHECK(again.at("session") != s.at("session"));
  CHECK(task_routes(svc, again.at("session").get<std::string>()) == task_routes(svc, sid));

  CHECK(status_of([&] { svc.create_session({{"condition", "bogus"}}); }) == 400);
  CHECK(status_of([&] { svc.create_session(Json::array()); }) == 400);
  CHECK(status_of([&] { svc.get_session("nope"); }) == 404);
  CHECK(status_of([&] { svc.get_task(sid, "t99"); }) == 404);
}

TEST_CASE("moves, checks and error codes") {
  auto svc = make_service();
  const auto sid = svc.create_session({{"condition", "none"}}).at("session").get<std::string>();
  const auto t = svc.get_task(sid, "t0");
  const NodeId here = t.at("view").at("node");
  const auto& routes = task_routes(svc, sid);
  const auto& env = svc.data().corpus.env(svc.data().corpus.record(routes.at("t0")).route.env_id);
  NodeId far = -1;
  for (const auto& n : env.nodes())
    if (n.id != here && !env.adjacent(here, n.id)) far = n.id;
  REQUIRE(far >= 0);
  const auto before = svc.events(sid).size();
  CHECK(status_of([&] { svc.post_move(sid, "t0", {{"target", far}}); }) == 422);
  CHECK(svc.events(sid).size() == before + 1);
  CHECK(svc.events(sid).back().payload.at("accepted") == false);
  CHECK(status_of([&] { svc.post_move(sid, "t0", {{"target", "x"}}); }) == 400);
  CHECK(status_of([&] { svc.post_move(sid, "t0", {{"target", 0}, {"expected_seq", 999}}); }) == 409);
  CHECK(status_of([&] { svc.get_suggestions(sid, "t0", 0, 1); }) == 403);
  CHECK(status_of([&] { svc.post_apply(sid, "t0", {{"span", {0, 1}}, {"candidate", "x"}}); }) == 403);
  CHECK(status_of([&] { svc.post_revert(sid, "t0", {}); }) == 409);
  CHECK(status_of([&] {
          svc.post_rating(sid, "t0", {{"easy_to_follow", 9}, {"confident", 1}, {"mental_demand", 1}});
        }) == 422);
  CHECK(svc.get_task(sid, "t0").at("highlights").empty());

  solve(svc, sid, "t0", routes.at("t0"));
  CHECK(status_of([&] { svc.post_move(sid, "t0", {{"target", here}}); }) == 409);
  CHECK(status_of([&] { svc.post_submit(sid, "t0", {}); }) == 409);
}

TEST_CASE("suggestion menu, apply and revert under oracle_full") {
  auto svc = make_service();
  const auto sid = svc.create_session({{"condition", "oracle_full"}, {"seed", 3}}).at("session").get<std::string>();
  bool exercised = false;
  for (const auto& [task, route] : task_routes(svc, sid)) {
    const auto t = svc.get_task(sid, task);
    if (t.at("highlights").empty()) continue;
    const auto span = t.at("highlights")[0].at("span");
    const std::size_t i = span[0], j = span[1];
    CHECK(status_of([&] { svc.post_apply(sid, task, {{"span", span}, {"candidate", "x"}}); }) == 409);
    const auto menu = svc.get_suggestions(sid, task, i, j);
    REQUIRE(!menu.at("items").empty());
    CHECK(status_of([&] { svc.post_apply(sid, task, {{"span", span}, {"candidate", "not served"}}); }) == 422);
    const auto before = t.at("instruction").at("text");
    const auto after = svc.post_apply(sid, task, {{"span", span}, {"candidate", menu.at("items")[0].at("candidate")}});
    CHECK(after.at("instruction").at("text") != before);
    CHECK(after.at("state").at("can_revert") == true);
    CHECK(after.at("highlights").size() < t.at("highlights").size());
    CHECK(status_of([&] { svc.post_apply(sid, task, {{"span", span}, {"candidate", "x"}}); }) == 409);
    const auto reverted = svc.post_revert(sid, task, {});
    CHECK(reverted.at("instruction").at("text") == before);
    CHECK(status_of([&] { svc.get_suggestions(sid, task, 9999, 10000); }) == 404);
    exercised = true;
    break;
  }
  CHECK(exercised);
}

TEST_CASE("event logs restore sessions and export reports") {
  const auto dir = temp_dir("hear-svc");
  std::string sid;
  Json task_before;
  {
    auto svc = make_service(dir);
    sid = svc.create_session({{"condition", "oracle_highlights"}, {"seed", 8}}).at("session").get<std::string>();
    for (const auto& [task, route] : task_routes(svc, sid)) solve(svc, sid, task, route);
    task_before = svc.get_task(sid, "t1");
  }
  CHECK(fs::exists(dir / (sid + ".jsonl")));
  auto svc = make_service(dir);
  CHECK(svc.get_task(sid, "t1") == task_before);
  const auto exp = svc.export_logs(std::nullopt);
  REQUIRE(exp.at("sessions").size() == 1);
  CHECK(exp.at("sessions")[0].at("qc_passed") == true);
  REQUIRE(exp.at("reports").size() == 1);
  CHECK(exp.at("reports")[0].at("condition") == "oracle_highlights");
  CHECK(exp.at("reports")[0].at("episodes") == 3);
  CHECK(exp.at("reports")[0].at("success_rate") == 1.0);
  std::uint64_t seq = 1;
  for (const auto& e : exp.at("events")) CHECK(e.at("seq") == seq++);
  for (const auto& row : exp.at("episodes")) CHECK(row.at("submitted") == true);
  CHECK(status_of([&] { svc.export_logs(std::string("nope")); }) == 404);

  // A torn final line is dropped on restore.
  {
    std::ofstream f(dir / (sid + ".jsonl"), std::ios::app);
    f << "{\"session\":";
  }
  auto again = make_service(dir);
  CHECK(again.events(sid).size() == svc.events(sid).size());
  const auto text = read_file(dir / (sid + ".jsonl"));
  REQUIRE(!text.empty());
  CHECK(text.back() == '\n');
  CHECK(text.find("{\"session\":", text.rfind('\n', text.size() - 2)) == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("replay_episode") {
  Environment env("line", {{0, 0, 0, 0, "a", {}}, {1, 0, 4, 0, "a", {}}, {2, 0, 8, 0, "a", {}}},
                  {{0, 1, 4}, {1, 2, 4}});
  std::vector<Event> ev = {{"s", 0, "t0", EventKind::move, {{"target", 1}, {"accepted", true}}},
                           {"s", 1, "t1", EventKind::move, {{"target", 2}, {"accepted", true}}},
                           {"s", 2, "t0", EventKind::check, {}},
                           {"s", 3, "t0", EventKind::move, {{"target", 0}, {"accepted", false}}},
                           {"s", 4, "t0", EventKind::move, {{"target", 2}, {"accepted", true}}},
                           {"s", 5, "t0", EventKind::check, {}}};
  const auto ep = replay_episode(ev, "t0", env, 0, 2);
  CHECK(ep.trajectory == std::vector<NodeId>{0, 1, 2});
  CHECK(ep.checks_used == 2);
  CHECK(ep.check_nodes == std::vector<NodeId>{1, 2});
  CHECK(ep.success);
  CHECK(ep.final_node == 2);
}

TEST_CASE("http endpoints") {
  auto svc = make_service();
  httplib::Server server;
  mount_service(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto res = cli.Post("/session", R"({"condition":"model_full","seed":4})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto session = Json::parse(res->body);
  const auto sid = session.at("session").get<std::string>();

  res = cli.Get("/session/" + sid);
  REQUIRE(res);
  CHECK(Json::parse(res->body).at("tasks").size() == 4);

  res = cli.Get("/session/" + sid + "/task/t0");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "application/json");
  const auto task = Json::parse(res->body);
  const NodeId next = task.at("view").at("neighbors")[0].at("node");

  res = cli.Post("/session/" + sid + "/task/t0/move", Json{{"target", next}}.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body).at("view").at("node") == next);

  res = cli.Post("/session/" + sid + "/task/t0/move", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  const auto err = Json::parse(res->body);
  CHECK(err.at("error") == "bad_json");
  CHECK(err.at("schema_version") == kSchemaVersion);

  res = cli.Post("/session/" + sid + "/task/t0/check", "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body).contains("success"));

  if (!task.at("highlights").empty()) {
    const auto span = task.at("highlights")[0].at("span");
    res = cli.Get("/session/" + sid + "/task/t0/suggestions?span=" + std::to_string(span[0].get<int>()) + "-" +
                  std::to_string(span[1].get<int>()));
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(Json::parse(res->body).at("items").size() <= kDefaultTopK);
  }
  res = cli.Get("/session/" + sid + "/task/t0/suggestions?span=a-b");
  REQUIRE(res);
  CHECK(res->status == 400);
  res = cli.Get("/session/" + sid + "/task/t0/suggestions");
  REQUIRE(res);
  CHECK(res->status == 400);
  res = cli.Get("/session/nope/task/t0");
  REQUIRE(res);
  CHECK(res->status == 404);
  CHECK(Json::parse(res->body).at("error") == "unknown_session");

  res = cli.Post("/session/" + sid + "/task/t0/rating", R"({"easy_to_follow":3,"confident":3,"mental_demand":3})",
                 "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  res = cli.Post("/session/" + sid + "/task/t0/submit", "{}", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body).at("next_task") == "t1");

  res = cli.Get("/export?session=" + sid);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body).at("events").size() == svc.events(sid).size());
  res = cli.Get("/export");
  REQUIRE(res);
  CHECK(res->status == 200);

  server.stop();
  th.join();
}
