#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "phantom/core/model.hpp"
#include "phantom/renewal/bump.hpp"
#include "phantom/renewal/discrete_dist.hpp"
#include "phantom/renewal/visits.hpp"
#include "phantom/util/error.hpp"
#include "phantom/util/parallel.hpp"

using namespace phantom;
using namespace phantom::renewal;

namespace {

DiscreteDist uniform12() { return DiscreteDist::uniform({1, 2}); }

// Pr[m is hit by a partial sum] by brute-force dynamic programming over
// sequences: state = current sum, probability mass carried forward.
std::vector<double> brute_visits(const DiscreteDist& d, long m_max) {
  std::vector<double> mass(m_max + 1, 0.0), hit(m_max + 1, 0.0);
  mass[0] = 1.0;
  // Process sums in increasing order; zero-free dists only.
  for (long s = 0; s <= m_max; ++s) {
    hit[s] = mass[s];
    for (std::size_t i = 0; i < d.support().size(); ++i) {
      const long t = s + d.support()[i];
      if (t <= m_max) mass[t] += mass[s] * d.probs()[i];
    }
  }
  return hit;
}

}  // namespace

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(DiscreteDist({1, 2}, {0.5, 0.4}), InvalidArgument);
  CHECK_THROWS_AS(DiscreteDist({1, 1}, {0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(DiscreteDist({-1, 1}, {0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(DiscreteDist({1, 2}, {1.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(DiscreteDist({}, {}), InvalidArgument);
  const auto d = DiscreteDist::parse("4:1,0:1,2:2");
  CHECK(d.support() == std::vector<long>{0, 2, 4});
  CHECK(d.prob(2) == doctest::Approx(0.5));
  CHECK(d.prob(3) == 0.0);
  CHECK(d.mean() == doctest::Approx(2.0));
  CHECK(d.second_moment() == doctest::Approx(6.0));
  CHECK(d.variance() == doctest::Approx(2.0));
  CHECK(d.gcd() == 2);
  CHECK(d.max_value() == 4);
  CHECK(DiscreteDist::parse(d.to_string()).probs() == d.probs());
  CHECK_THROWS_AS(DiscreteDist::parse("1-2"), InvalidArgument);
}

TEST_CASE("gcd_reduce") {
  const auto a = gcd_reduce(DiscreteDist::uniform({2, 4}));
  CHECK(a.g == 2);
  CHECK(a.value.support() == std::vector<long>{1, 2});
  const auto b = gcd_reduce(uniform12());
  CHECK(b.g == 1);
  CHECK(b.value.support() == std::vector<long>{1, 2});
  const auto s = gcd_reduce(WeeklySchedule{{DiscreteDist::point(2), DiscreteDist::point(4)}});
  CHECK(s.g == 2);
  CHECK(s.value.slots[0].support() == std::vector<long>{1});
  CHECK(s.value.slots[1].support() == std::vector<long>{2});
  CHECK_THROWS_AS(gcd_reduce(DiscreteDist::point(0)), InvalidArgument);
  CHECK_THROWS_AS(gcd_reduce(WeeklySchedule{{DiscreteDist::point(0), DiscreteDist::point(0)}}),
                  InvalidArgument);
}

TEST_CASE("visit probabilities: recurrence examples") {
  for (double p : visit_probabilities(DiscreteDist::point(1), 50)) CHECK(p == 1.0);
  const auto p = visit_probabilities(uniform12(), 60);
  CHECK(std::abs(p[60] - 2.0 / 3.0) < 1e-9);
  const auto q = visit_probabilities(DiscreteDist::uniform({2, 4}), 121);
  for (std::size_t m = 1; m < q.size(); m += 2) CHECK(q[m] == 0.0);
  CHECK(std::abs(q[120] - 2.0 / 3.0) < 1e-9);
  CHECK_THROWS_AS(visit_probabilities(uniform12(), -1), InvalidArgument);
  CHECK_THROWS_AS(visit_probabilities(DiscreteDist::point(0), 3), InvalidArgument);
}

TEST_CASE("visit probabilities agree with forward dynamic programming") {
  for (const auto& d : {uniform12(), DiscreteDist::parse("1:1,3:2,7:1"), DiscreteDist::parse("2:1,3:1")}) {
    const auto p = visit_probabilities(d, 200);
    const auto b = brute_visits(d, 200);
    for (std::size_t m = 0; m <= 200; ++m) CHECK(p[m] == doctest::Approx(b[m]).epsilon(1e-12));
  }
}

TEST_CASE("visit probabilities with mass at zero scale by the lingering factor") {
  const auto d = DiscreteDist::parse("0:1,1:1,2:2");
  const auto positive = d.conditional_positive();
  const auto p = visit_probabilities(d, 100);
  const auto q = visit_probabilities(positive, 100);
  for (std::size_t m = 0; m <= 100; ++m) CHECK(p[m] == doctest::Approx(q[m] / (1.0 - 0.25)).epsilon(1e-12));
}

TEST_CASE("Lemma-1 limit holds past an automatically detected knee") {
  const std::vector<DiscreteDist> dists{uniform12(),
                                        DiscreteDist::uniform({2, 4}),
                                        DiscreteDist::parse("0:1,2:1"),
                                        DiscreteDist::parse("1:5,4:1,9:2"),
                                        DiscreteDist::parse("3:1,5:1,6:3"),
                                        DiscreteDist::parse("0:3,6:1,10:1,15:1")};
  for (const auto& d : dists) {
    const long g = d.gcd();
    const double limit = static_cast<double>(g) / d.mean();
    const auto p = visit_probabilities(d, 4000);
    std::vector<double> sub;
    for (std::size_t n = 0; n * g < p.size(); ++n) sub.push_back(p[n * g]);
    const auto knee = convergence_knee(sub, limit, 1e-8);
    CAPTURE(d.to_string());
    REQUIRE(knee.has_value());
    CHECK(*knee < sub.size() / 2);
    for (std::size_t n = *knee; n < sub.size(); ++n) CHECK(std::abs(sub[n] - limit) < 1e-8);
    // Off-lattice sites are never visited.
    for (std::size_t m = 0; m < p.size(); ++m)
      if (m % g != 0) CHECK(p[m] == 0.0);
  }
}

TEST_CASE("epoch matrix: structure and agreement with the recurrence") {
  const auto one = epoch_matrix(DiscreteDist::point(1));
  CHECK(one.order() == 1);
  CHECK(one(0, 0) == 1.0);

  const auto a = epoch_matrix(uniform12());
  CHECK(a.order() == 2);
  CHECK(a(0, 0) == doctest::Approx(0.5));
  CHECK(a(1, 1) == doctest::Approx(0.75));
  CHECK(a.primitive());

  for (const auto& d : {uniform12(), DiscreteDist::parse("1:5,4:1,9:2"), DiscreteDist::parse("2:1,5:3,7:1")}) {
    const auto m = epoch_matrix(d);
    const std::size_t M = m.order();
    for (std::size_t r = 0; r < M; ++r) {
      double row = 0.0;
      for (std::size_t s = 0; s < M; ++s) row += m(r, s);
      CHECK(std::abs(row - 1.0) < 1e-12);
    }
    // Iterating the block map reproduces the recurrence values.
    const auto p = visit_probabilities(d, static_cast<long>(6 * M));
    for (unsigned k = 1; k <= 5; ++k) {
      const auto q = m.block(k);
      for (std::size_t r = 0; r < M; ++r) CHECK(q[r] == doctest::Approx(p[(k - 1) * M + r + 1]).epsilon(1e-12));
    }
    const auto lim = epoch_visit_limit(d);
    const auto far = visit_probabilities(d, 5000);
    CHECK(std::abs(lim.limit - far.back()) < 1e-10);
    CHECK(std::abs(lim.limit - 1.0 / d.mean()) < 1e-10);
    const auto u = m.stationary();
    CHECK(std::accumulate(u.begin(), u.end(), 0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("epoch limit handles gcd and zero mass") {
  const auto a = epoch_visit_limit(DiscreteDist::uniform({2, 4}));
  CHECK(a.g == 2);
  CHECK(a.limit == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const auto b = epoch_visit_limit(DiscreteDist::parse("0:1,2:1"));
  CHECK(b.limit == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("epoch matrix powers converge geometrically") {
  const auto m = epoch_matrix(DiscreteDist::parse("1:5,4:1,9:2"));
  const auto norms = m.power_step_norms(60);
  CHECK(log_slope(std::span(norms).subspan(5)) < 0.0);
  CHECK(norms.back() < 1e-6);
  const auto p10 = m.power(10);
  const auto p11 = m.power(11);
  double diff = 0.0;
  for (std::size_t i = 0; i < p10.size(); ++i) diff = std::max(diff, std::abs(p11[i] - p10[i]));
  CHECK(diff <= norms[10] + 1e-15);
}

TEST_CASE("bump limits") {
  CHECK(expected_bump_limit(DiscreteDist::point(4)) == 4.0);
  CHECK(expected_bump_limit(uniform12()) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(expected_bump_limit(DiscreteDist::parse("0:1,2:1")) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(expected_bump_limit(DiscreteDist::point(0)), InvalidArgument);

  const auto d = DiscreteDist::parse("1:3,2:5,6:1");
  CHECK(weekly_bump_limit(WeeklySchedule{std::vector<DiscreteDist>(7, d)}) == expected_bump_limit(d));
  CHECK(weekly_bump_limit(WeeklySchedule{{DiscreteDist::point(1), DiscreteDist::point(3)}}) == 2.5);
  CHECK(weekly_bump_limit(WeeklySchedule{{uniform12(), DiscreteDist::point(0), uniform12()}}) ==
        doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(weekly_bump_limit(WeeklySchedule{{DiscreteDist::point(0)}}), InvalidArgument);
}

TEST_CASE("mc_crossing: trivial and Theorem-1 cases") {
  CrossingOptions o;
  o.threshold = 37;
  o.trials = 1000;
  const auto r = mc_crossing(DiscreteDist::point(1), o);
  CHECK(r.mean == 1.0);
  CHECK(r.histogram.size() == 1);
  CHECK(r.stderr_mean == 0.0);

  o.threshold = 1000;
  o.trials = 200000;
  const auto u = mc_crossing(uniform12(), o);
  CHECK(std::abs(u.mean - 5.0 / 3.0) < 0.01);
  CHECK(std::abs(u.mean - 5.0 / 3.0) < 3.0 * u.stderr_mean + 1e-3);
  std::size_t total = 0;
  for (const auto& [k, v] : u.histogram) total += v;
  CHECK(total == 200000);

  CHECK_THROWS_AS(mc_crossing(WeeklySchedule{{DiscreteDist::point(0)}}, o), InvalidArgument);
  o.threshold = 0;
  CHECK_THROWS_AS(mc_crossing(uniform12(), o), InvalidArgument);
}

TEST_CASE("mc_crossing with mass at zero matches the analytic limit") {
  CrossingOptions o;
  o.threshold = 1000;
  o.trials = 100000;
  o.seed = 3;
  const auto d = DiscreteDist::parse("0:1,1:1,3:1");
  const auto r = mc_crossing(d, o);
  // Zeros never complete a crossing, so the limit equals that of X | X > 0.
  CHECK(expected_bump_limit(d) == doctest::Approx(expected_bump_limit(d.conditional_positive())));
  CHECK(std::abs(r.mean - expected_bump_limit(d)) < 3.0 * r.stderr_mean + 1e-3);
}

TEST_CASE("mc_crossing is reproducible across thread counts") {
  CrossingOptions o;
  o.threshold = 200;
  o.trials = 20000;
  o.seed = 9;
  const unsigned before = max_threads();
  set_max_threads(1);
  const auto a = mc_crossing(DiscreteDist::parse("1:1,2:1,5:1"), o);
  set_max_threads(4);
  const auto b = mc_crossing(DiscreteDist::parse("1:1,2:1,5:1"), o);
  set_max_threads(before);
  CHECK(a.mean == b.mean);
  CHECK(a.histogram == b.histogram);
}

TEST_CASE("Theorem-1 convergence improves with the threshold") {
  const auto d = DiscreteDist::parse("1:2,3:1,8:1");
  const double limit = expected_bump_limit(d);
  CrossingOptions o;
  o.trials = 200000;
  o.seed = 21;
  o.threshold = 2;
  const auto small = mc_crossing(d, o);
  o.threshold = static_cast<long>(100 * d.mean());
  const auto large = mc_crossing(d, o);
  CHECK(std::abs(large.mean - limit) < std::abs(small.mean - limit));
  CHECK(std::abs(large.mean - limit) < 3.0 * (large.stderr_mean + 1e-3));
}

TEST_CASE("weekly schedule with a uniform start slot") {
  // Slots {uniform{1,2}, 0, uniform{1,2}}: the crossing slot is never the zero slot.
  CrossingOptions o;
  o.threshold = 500;
  o.trials = 100000;
  o.start = StartSlot::uniform;
  const WeeklySchedule s{{uniform12(), DiscreteDist::point(0), uniform12()}};
  const auto r = mc_crossing(s, o);
  CHECK(r.slot_counts[1] == 0);
  CHECK(std::abs(r.mean - 5.0 / 3.0) < 3.0 * r.stderr_mean + 1e-3);
}

TEST_CASE("zip distribution and weekly schedule from a profile") {
  const auto z = zip_distribution(0.6, 3.0);
  CHECK(z.zero_mass() == doctest::Approx(0.4 + 0.6 * std::exp(-3.0)).epsilon(1e-12));
  CHECK(z.mean() == doctest::Approx(1.8).epsilon(1e-12));
  CHECK(z.second_moment() == doctest::Approx(0.6 * (3.0 + 9.0)).epsilon(1e-12));
  core::PreferredProfile p;
  p.p1_week.fill(0.0);
  p.p2_week.fill(1.0);
  const auto s = weekly_schedule(p);
  CHECK(s.size() == 7);
  CHECK(s.total_mean() == doctest::Approx(7 * 0.5 * std::log1p(std::exp(1.0))).epsilon(1e-12));
}

TEST_CASE("centered mean curve") {
  core::ActionTrajectory t{"a", {1, 4, 2, 0, 3}, 2, 2};
  const std::vector<core::ActionTrajectory> same{t, t, t};
  const auto c = centered_mean_curve(same);
  CHECK(c.relative_days == std::vector<int>{-2, -1, 0, 1, 2});
  REQUIRE(c.groups.size() == 1);
  for (std::size_t d = 0; d < 5; ++d) CHECK(c.groups[0].mean[d] == t.counts[d]);
  CHECK(c.at("all", 0) == 2.0);

  auto u = t;
  u.counts = {3, 0, 0, 2, 1};
  const std::vector<core::ActionTrajectory> two{t, u};
  const std::vector<core::SteeringClass> labels{core::SteeringClass::strong_steerer, core::SteeringClass::non_steerer};
  const auto g = centered_mean_curve(two, labels);
  CHECK(g.groups.size() == 3);
  CHECK(g.warnings.size() == 1);
  CHECK(g.at("all", -2) == 2.0);
  CHECK(g.at("strong-steerer", -1) == 4.0);
  CHECK(g.at("non-steerer", 1) == 2.0);
  CHECK_THROWS_AS(g.group("other"), InvalidArgument);

  auto misaligned = u;
  misaligned.day0_index = 1;
  const std::vector<core::ActionTrajectory> bad{t, misaligned};
  CHECK_THROWS_AS(centered_mean_curve(bad), InvalidArgument);

  std::ostringstream csv;
  write_curve_csv(csv, g);
  CHECK(csv.str().rfind("relative_day,group,mean_count\n-2,all,2.000000\n", 0) == 0);
}

TEST_CASE("csv writers") {
  std::ostringstream v;
  const std::vector<double> p{1.0, 0.5};
  write_visit_csv(v, p);
  CHECK(v.str() == "m,p_m\n0,1.000000000000\n1,0.500000000000\n");
  std::ostringstream c;
  const std::vector<ConvergenceRow> rows{{10, 1.5, 0.01, 1.6666666666}};
  write_convergence_csv(c, rows);
  CHECK(c.str() == "N,mc_mean,stderr,analytic_limit\n10,1.500000,0.010000,1.666667\n");
}

TEST_CASE("minimal period of a schedule") {
  const auto a = DiscreteDist::point(1), b = DiscreteDist::point(3);
  CHECK(minimal_period(WeeklySchedule{{a, b, a, b}}).size() == 2);
  CHECK(minimal_period(WeeklySchedule{{a, a, a}}).size() == 1);
  CHECK(minimal_period(WeeklySchedule{{a, b, a}}).size() == 3);
}
