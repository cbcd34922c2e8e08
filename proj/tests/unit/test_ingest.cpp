#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "phantom/core/model.hpp"
#include "phantom/ingest/ingest.hpp"
#include "phantom/renewal/bump.hpp"
#include "phantom/util/error.hpp"

using namespace phantom;
using namespace phantom::ingest;
using std::chrono::days;

namespace {

const std::string kData = PHANTOM_TEST_DATA_DIR;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DailyCounts counts_from(Date start, const std::vector<int>& per_day) {
  DailyCounts c;
  for (std::size_t i = 0; i < per_day.size(); ++i)
    if (per_day[i] > 0) c[start + days{static_cast<int>(i)}] = per_day[i];
  return c;
}

}  // namespace

TEST_CASE("dates and timestamps") {
  const Date d = parse_date("2024-02-29");
  CHECK(format_date(d) == "2024-02-29");
  CHECK(weekday_of(parse_date("2024-01-01")) == 0);  // a Monday
  CHECK(weekday_of(parse_date("2024-01-07")) == 6);
  CHECK_THROWS_AS(parse_date("2023-02-29"), InvalidArgument);
  CHECK_THROWS_AS(parse_date("2024-1-01"), InvalidArgument);
  CHECK_THROWS_AS(parse_date("2024-01-0x"), InvalidArgument);
  CHECK(parse_timestamp_date("2024-03-05T23:30:00Z") == parse_date("2024-03-05"));
  CHECK(parse_timestamp_date("2024-03-05T23:30:00-02:00") == parse_date("2024-03-06"));
  CHECK(parse_timestamp_date("2024-03-05T01:00:00+05:30") == parse_date("2024-03-04"));
  CHECK_THROWS_AS(parse_timestamp_date("2024-03-05T01:00:00"), InvalidArgument);
  CHECK_THROWS_AS(parse_timestamp_date("2024-03-05T25:00:00Z"), InvalidArgument);
}

TEST_CASE("daily counts: empty and same-day events") {
  CHECK(daily_counts({}, "vote").empty());
  const Date d = parse_date("2024-05-01");
  const std::vector<Event> ev{{"a", d, "vote"}, {"a", d, "vote"}, {"a", d, "vote"}, {"a", d, "edit"}};
  const auto c = daily_counts(ev, "vote");
  REQUIRE(c.size() == 1);
  REQUIRE(c.at("a").size() == 1);
  CHECK(c.at("a").at(d) == 3);
}

TEST_CASE("daily counts: golden fixture with rejected lines") {
  const auto parsed = read_events_file(kData + "/events_fixture.jsonl");
  CHECK(parsed.events.size() == 100);
  REQUIRE(parsed.rejects.size() == 5);
  std::vector<std::size_t> lines;
  for (const auto& r : parsed.rejects) lines.push_back(r.line);
  CHECK(lines == std::vector<std::size_t>{18, 41, 42, 78, 100});
  std::ostringstream out;
  write_daily_counts(out, daily_counts(parsed.events, "vote"));
  CHECK(out.str() == slurp(kData + "/events_fixture_vote_counts.csv"));
  std::ostringstream rej;
  write_rejects(rej, parsed.rejects);
  CHECK(rej.str().find("\"line\":18") != std::string::npos);
}

TEST_CASE("badge day examples") {
  BadgeSpec spec;
  const Date start = parse_date("2020-01-01");
  const auto constant = counts_from(start, std::vector<int>(700, 1));
  CHECK(*badge_day(constant, spec) == start + days{599});  // the 600th day

  std::vector<int> lumpy(50, 0);
  lumpy[0] = 599;
  lumpy[49] = 2;
  CHECK(*badge_day(counts_from(start, lumpy), spec) == start + days{49});
  CHECK_FALSE(badge_day(counts_from(start, {5, 5}), spec).has_value());
}

TEST_CASE("badge day uses daily resolution on a multi-action crossing day") {
  std::istringstream in(
      "{\"user_id\":\"x\",\"timestamp\":\"2024-03-01T10:00:00Z\",\"action_type\":\"vote\"}\n"
      "{\"user_id\":\"x\",\"timestamp\":\"2024-03-01T11:00:00Z\",\"action_type\":\"vote\"}\n"
      "{\"user_id\":\"x\",\"timestamp\":\"2024-03-02T09:00:00Z\",\"action_type\":\"vote\"}\n"
      "{\"user_id\":\"x\",\"timestamp\":\"2024-03-05T23:50:00Z\",\"action_type\":\"vote\"}\n"
      "{\"user_id\":\"x\",\"timestamp\":\"2024-03-05T00:10:00Z\",\"action_type\":\"vote\"}\n"
      "{\"user_id\":\"x\",\"timestamp\":\"2024-03-05T00:20:00Z\",\"action_type\":\"vote\"}\n");
  const auto parsed = read_events(in);
  BadgeSpec spec;
  spec.threshold = 5;
  const auto c = daily_counts(parsed.events, "vote");
  CHECK(*badge_day(c.at("x"), spec) == parse_date("2024-03-05"));
}

TEST_CASE("badge day never moves later when events are added") {
  Rng rng(4);
  BadgeSpec spec;
  spec.threshold = 40;
  const Date start = parse_date("2021-06-01");
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> per_day(60);
    for (int& x : per_day) x = std::uniform_int_distribution<int>(0, 2)(rng);
    auto base = counts_from(start, per_day);
    const auto before = badge_day(base, spec);
    const int extra_day = std::uniform_int_distribution<int>(0, 59)(rng);
    base[start + days{extra_day}] += 1 + std::uniform_int_distribution<int>(0, 3)(rng);
    const auto after = badge_day(base, spec);
    if (before) {
      REQUIRE(after.has_value());
      CHECK(*after <= *before);
    }
  }
}

TEST_CASE("extract_window: full window, pre-window and post-window rejections") {
  BadgeSpec spec;
  spec.threshold = 10;
  const Date first = parse_date("2024-01-01");
  std::vector<int> per_day(70, 0);
  per_day[0] = 5;
  per_day[35] = 7;
  per_day[69] = 2;
  const auto counts = counts_from(first, per_day);
  const Date badge = first + days{35};
  const auto ok = extract_window("u", counts, badge, spec, first + days{69});
  REQUIRE(ok.trajectory.has_value());
  CHECK(ok.trajectory->counts == per_day);
  CHECK(ok.trajectory->day0_index == 35);
  CHECK(ok.trajectory->weekday_of_day0 == weekday_of(badge));

  const auto late = extract_window("u", counts, badge, spec, first + days{68});
  REQUIRE(late.rejection.has_value());
  CHECK(late.rejection->reason == kInsufficientPost);

  DailyCounts one_day{{badge, 12}};
  const auto early = extract_window("v", one_day, badge, spec, badge + days{100});
  REQUIRE(early.rejection.has_value());
  CHECK(early.rejection->reason == kInsufficientPre);
}

TEST_CASE("ingest reports users who never reach the threshold") {
  const Date d = parse_date("2024-01-01");
  std::vector<Event> ev{{"b", d, "vote"}};
  const auto r = ingest_events(ev, BadgeSpec{});
  CHECK(r.trajectories.empty());
  REQUIRE(r.rejections.size() == 1);
  CHECK(r.rejections[0].reason == kNoBadge);
}

TEST_CASE("synthetic cohort round-trips through the event log") {
  core::CohortSpec cs;
  cs.users = 300;
  cs.seed = 31;
  cs.require_day0_action = true;
  const auto cohort = core::simulate_cohort(cs);
  BadgeSpec spec;
  const auto exported = trajectories_to_events(cohort.trajectories, spec, parse_date("2024-01-01"));
  std::stringstream log;
  write_events(log, exported.events);
  const auto parsed = read_events(log);
  CHECK(parsed.rejects.empty());
  const auto r = ingest_events(parsed.events, spec, exported.observed_until);
  CHECK(r.rejections.empty());
  REQUIRE(r.trajectories.size() == cohort.trajectories.size());
  for (std::size_t i = 0; i < r.trajectories.size(); ++i) CHECK(r.trajectories[i] == cohort.trajectories[i]);
}

TEST_CASE("split sizes, determinism and disjointness") {
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back(core::user_id_for(static_cast<std::size_t>(i)));
  const auto all = split(ids, {1.0, 0.0, 0.0}, 3);
  CHECK(all.train.size() == 100);
  CHECK(all.validation.empty());
  const auto s = split(ids, {0.6, 0.2, 0.2}, 3);
  CHECK(s.train.size() == 60);
  CHECK(s.validation.size() == 20);
  CHECK(s.test.size() == 20);
  auto reversed = ids;
  std::reverse(reversed.begin(), reversed.end());
  const auto t = split(reversed, {0.6, 0.2, 0.2}, 3);
  CHECK(s.train == t.train);
  CHECK(s.test == t.test);
  std::set<std::string> seen;
  for (const auto* part : {&s.train, &s.validation, &s.test})
    for (const auto& id : *part) CHECK(seen.insert(id).second);
  CHECK(seen.size() == 100);
  CHECK(split(ids, {0.6, 0.2, 0.2}, 4).train != s.train);
  CHECK_THROWS_AS(split(ids, {0.6, 0.3, 0.2}, 3), InvalidArgument);
  CHECK_THROWS_AS(split(ids, {1.2, -0.2, 0.0}, 3), InvalidArgument);

  const auto back = split_from_manifest(split_manifest(s, {0.6, 0.2, 0.2}, 3));
  CHECK(back.validation == s.validation);
  CHECK_THROWS_AS(split_from_manifest(nlohmann::ordered_json::object()), InvalidArgument);
}

TEST_CASE("local-day activity logged in UTC also lifts day -1") {
  // Users act on local calendar days; timestamps carry their UTC offset and
  // are binned by UTC date, so the threshold day's activity straddles the
  // UTC boundary.
  std::mt19937_64 rng(404);
  std::bernoulli_distribution active(0.6);
  std::poisson_distribution<int> count(3.0);
  std::uniform_int_distribution<int> second_of_day(0, 86399);
  const Date start = parse_date("2024-01-01");
  constexpr int kUsers = 3000, kDays = 260;
  std::string log;
  char buf[160];
  for (int u = 0; u < kUsers; ++u) {
    const int off = u % 23 - 11;
    for (int d = 0; d < kDays; ++d) {
      if (!active(rng)) continue;
      const auto ymd = std::chrono::year_month_day{start + days{d}};
      for (int k = count(rng); k > 0; --k) {
        const int sec = second_of_day(rng);
        std::snprintf(buf, sizeof buf,
                      "{\"user_id\":\"u%04d\",\"timestamp\":\"%04d-%02u-%02uT%02d:%02d:%02d%c%02d:00\","
                      "\"action_type\":\"vote\"}\n",
                      u, static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                      static_cast<unsigned>(ymd.day()), sec / 3600, sec / 60 % 60, sec % 60,
                      off < 0 ? '-' : '+', std::abs(off));
        log += buf;
      }
    }
  }
  std::istringstream in(log);
  const auto events = read_events(in);
  REQUIRE(events.rejects.empty());
  const BadgeSpec spec{"vote", 300, 5, 5};
  const auto res = ingest_events(events.events, spec);
  REQUIRE(res.trajectories.size() > kUsers / 2);
  const auto curves = renewal::centered_mean_curve(res.trajectories);
  CHECK(curves.at("all", -1) >= curves.at("all", -8));
  CHECK(curves.at("all", 0) > curves.at("all", -8));
}
