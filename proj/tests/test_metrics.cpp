#include <map>

#include "doctest.h"
#include "hear/metrics.hpp"
#include "oracles.hpp"

using namespace hear;

TEST_CASE("confusion and macro-F1") {
  const std::vector<bool> pred = {true, true, false, false, true};
  const std::vector<bool> gold = {true, false, false, true, true};
  const auto c = confusion(pred, gold);
  CHECK(c == ConfusionCounts{2, 1, 1, 1});
  CHECK(macro_f1(c) == doctest::Approx(oracle::macro_f1(pred, gold)));
  CHECK(macro_f1(pred, gold) == doctest::Approx(0.5 * (4.0 / 6.0 + 2.0 / 4.0)));
  CHECK(macro_f1(std::vector<bool>{true, true}, std::vector<bool>{true, true}) == doctest::Approx(0.5));
  CHECK_THROWS(confusion({true}, {}));
}

TEST_CASE("detection report") {
  const auto r = detection_report("s", "test", {true, false, true, false}, {true, false, false, false});
  CHECK(r.counts == ConfusionCounts{1, 1, 2, 0});
  CHECK(r.positive.precision == doctest::Approx(0.5));
  CHECK(r.positive.recall == doctest::Approx(1.0));
  CHECK(r.negative.recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.macro_f1 == doctest::Approx(0.5 * (r.positive.f1 + r.negative.f1)));
}

TEST_CASE("random detection baseline is a fair coin") {
  const auto a = random_detection_baseline(20000, 3);
  CHECK(a == random_detection_baseline(20000, 3));
  const auto ones = std::count(a.begin(), a.end(), true);
  CHECK(std::abs(double(ones) / 20000 - 0.5) < 0.015);
}

TEST_CASE("recall at k with exclusions") {
  const std::vector<std::vector<std::string>> ranked = {{"a", "b", "c", "d"}, {"x", "y"}, {"p"}};
  const std::vector<std::vector<std::string>> sets = {{"a", "b", "c", "d"}, {"x", "y"}, {"p", "q"}};
  const auto r = recall_at_k(ranked, sets, {"d", "y", "z"}, 3);
  CHECK(r.evaluated == 2);
  CHECK(r.excluded == 1);
  CHECK(r.recall_at_k == doctest::Approx(0.5));
  CHECK(r.mean_candidates == doctest::Approx(3.0));
  CHECK_THROWS(recall_at_k(ranked, sets, {"a"}, 3));
}

TEST_CASE("random suggestion baseline hit rate is 3/M") {
  std::vector<std::vector<std::string>> sets(6000, {"a", "b", "c", "d", "e", "f"});
  const auto picks = random_suggestion_baseline(sets, 4);
  std::size_t hits = 0;
  for (const auto& p : picks) {
    REQUIRE(p.size() == 3);
    if (std::find(p.begin(), p.end(), "a") != p.end()) ++hits;
  }
  const auto [lo, hi] = oracle::clopper_pearson(sets.size(), hits, 0.999);
  CHECK(lo <= 0.5);
  CHECK(hi >= 0.5);
  CHECK(random_suggestion_baseline({{"a", "b"}}, 1)[0].size() == 2);
}

TEST_CASE("clopper-pearson oracle sanity") {
  const auto [lo, hi] = oracle::clopper_pearson(100, 50, 0.95);
  CHECK(lo == doctest::Approx(0.3983).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.6017).epsilon(1e-3));
}

TEST_CASE("navigation metrics") {
  // 0 -- 1 -- 2 -- 3, 2 m apart
  Environment env("line",
                  {{0, 0, 0, 0, "a", {}}, {1, 0, 2, 0, "a", {}}, {2, 0, 4, 0, "a", {}}, {3, 0, 6, 0, "a", {}}},
                  {{0, 1, 2}, {1, 2, 2}, {2, 3, 2}});
  CHECK(within_success_radius(env, 2, 3));
  CHECK_FALSE(within_success_radius(env, 1, 3));
  std::vector<Episode> eps(3);
  for (std::size_t k = 0; k < eps.size(); ++k) {
    eps[k].id = "e" + std::to_string(k);
    eps[k].env_id = "line";
    eps[k].goal = 3;
    eps[k].checks_used = static_cast<int>(k);
  }
  eps[0].final_node = 3;
  eps[1].final_node = 2;
  eps[2].final_node = 0;
  std::map<std::string, const Environment*> envs{{"line", &env}};
  const auto r = nav_report("c", envs, eps);
  CHECK(r.episodes == 3);
  CHECK(r.success_rate == doctest::Approx(2.0 / 3.0));
  CHECK(r.mean_error == doctest::Approx((0 + 2 + 6) / 3.0));
  CHECK(r.median_error == doctest::Approx(2.0));
  CHECK(r.mean_checks == doctest::Approx(1.0));
  CHECK(nav_report("c", envs, {}).episodes == 0);
  eps[0].env_id = "nope";
  CHECK_THROWS(success_rate(envs, eps));
}
