#include "doctest.h"
#include "fixtures.hpp"
#include "hear/follower.hpp"

using namespace hear;

TEST_CASE("literal follower completes clean instructions") {
  const auto& data = fixture::small_suite();
  std::size_t ok = 0, n = 0;
  for (const auto& rec : data.corpus.records) {
    if (n == 50) break;
    const auto& env = data.corpus.env(rec.route.env_id);
    FollowerPolicy p;
    const auto ep = simulate_follower(env, rec.route.start_node(), rec.route.start_heading, rec.instruction, {}, {},
                                      rec.route.final_node(), p);
    ++n;
    if (ep.success) ++ok;
    CHECK(ep.trajectory.front() == rec.route.start_node());
    CHECK(ep.final_node == ep.trajectory.back());
    CHECK(ep.checks_used == 1);
    for (std::size_t k = 0; k + 1 < ep.trajectory.size(); ++k)
      CHECK(env.adjacent(ep.trajectory[k], ep.trajectory[k + 1]));
    CHECK(ep.success == within_success_radius(env, ep.final_node, rec.route.final_node()));
  }
  CHECK(n == 50);
  CHECK(ok == n);
}

TEST_CASE("follower is deterministic and modes round-trip") {
  const auto& data = fixture::small_suite();
  const auto& ep = data.episodes.front();
  const auto& rec = data.corpus.record(ep.route_id);
  const auto& env = data.corpus.env(rec.route.env_id);
  FollowerPolicy p;
  p.mode = FollowerMode::highlight_aware;
  p.seed = 4;
  const auto hs = gold_highlights(ep.instruction);
  const auto a = simulate_follower(env, rec.route.start_node(), rec.route.start_heading, ep.instruction, hs, {},
                                   rec.route.final_node(), p);
  const auto b = simulate_follower(env, rec.route.start_node(), rec.route.start_heading, ep.instruction, hs, {},
                                   rec.route.final_node(), p);
  CHECK(a.trajectory == b.trajectory);
  CHECK(a.checks_used == b.checks_used);
  for (auto m : {FollowerMode::literal, FollowerMode::highlight_aware, FollowerMode::suggestion_aware})
    CHECK(follower_mode_from_string(to_string(m)) == m);
}

TEST_CASE("oracle highlights help on corrupted episodes") {
  const auto& data = fixture::small_suite();
  std::size_t literal = 0, aware = 0;
  for (const auto& ep : data.episodes) {
    const auto& rec = data.corpus.record(ep.route_id);
    const auto& env = data.corpus.env(rec.route.env_id);
    FollowerPolicy p;
    if (simulate_follower(env, rec.route.start_node(), rec.route.start_heading, ep.instruction, {}, {},
                          rec.route.final_node(), p).success)
      ++literal;
    p.mode = FollowerMode::highlight_aware;
    if (simulate_follower(env, rec.route.start_node(), rec.route.start_heading, ep.instruction,
                          gold_highlights(ep.instruction), {}, rec.route.final_node(), p).success)
      ++aware;
  }
  CHECK(aware >= literal);
}
