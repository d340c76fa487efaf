#include "fixtures.hpp"
#include "leakage.hpp"

using namespace dtsurv;
using fixtures::clicks;
using fixtures::enrollment;

TEST_CASE("week_of_day") {
  CHECK(week_of_day(0) == 0);
  CHECK(week_of_day(13) == 1);
  CHECK(week_of_day(-3) == 0);
  CHECK(week_of_day(-7) == 0);
  CHECK(week_of_day(6) == 0);
  CHECK(week_of_day(7) == 1);
}

TEST_CASE("expand follows the recursions") {
  const auto rows = expand(enrollment(1, true, 2), clicks({{0, 5}, {2, 1}}));
  REQUIRE(rows.size() == 3);
  const int active[] = {1, 0, 1}, recency[] = {0, 1, 0}, streak[] = {1, 0, 1}, event[] = {0, 0, 1};
  for (int t = 0; t < 3; ++t) {
    CAPTURE(t);
    CHECK(rows[t].t == t);
    CHECK(rows[t].active == (active[t] == 1));
    CHECK(rows[t].recency == recency[t]);
    CHECK(rows[t].streak == streak[t]);
    CHECK(rows[t].event == (event[t] == 1));
  }
}

TEST_CASE("single censored week") {
  const auto rows = expand(enrollment(1, false, 0), clicks({{0, 0}}));
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].active);
  CHECK_FALSE(rows[0].event);
  CHECK(rows[0].recency == 1);
  CHECK(rows[0].streak == 0);
}

TEST_CASE("longer hand unroll and post-terminal clicks") {
  // weeks:      0  1  2  3  4  5 | 7 (after t_final, discarded)
  // clicks:     0  3  2  0  0  1 | 9
  const auto rows = expand(enrollment(1, false, 5),
                           clicks({{1, 3}, {2, 2}, {5, 1}, {7, 9}}));
  REQUIRE(rows.size() == 6);
  const int recency[] = {1, 0, 0, 1, 2, 0}, streak[] = {0, 1, 2, 0, 0, 1};
  for (int t = 0; t < 6; ++t) {
    CAPTURE(t);
    CHECK(rows[t].recency == recency[t]);
    CHECK(rows[t].streak == streak[t]);
    CHECK_FALSE(rows[t].event);
  }
}

TEST_CASE("negative t_final is a contract violation") {
  auto e = enrollment(1, false, 0);
  e.t_final = -1;
  CHECK(fixtures::code_of([&] { expand(e, {}); }) == ErrorCode::kContract);
}

TEST_CASE("table invariants on a generated cohort") {
  SynthSpec spec;
  spec.n_enrollments = 300;
  spec.effects = {{"inactive", 1.0}};
  const auto c = fixtures::synth_cohort(spec);
  const auto& t = c.table;
  std::size_t expected_rows = 0;
  for (const auto& e : t.enrollments) expected_rows += static_cast<std::size_t>(e.t_final) + 1;
  CHECK(t.rows() == expected_rows);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& e = t.enrollments[i];
    int events = 0;
    for (std::size_t r = t.begin_row(i); r < t.end_row(i); ++r) {
      CHECK(t.week[r] == static_cast<int>(r - t.begin_row(i)));
      const bool a = t.active[r] != 0;
      CHECK(a == (t.total_clicks[r] > 0));
      CHECK((t.recency[r] == 0) == a);
      CHECK((t.streak[r] == 0) == !a);
      if (r > t.begin_row(i)) {
        CHECK(t.recency[r] == (a ? 0 : t.recency[r - 1] + 1));
        CHECK(t.streak[r] == (a ? t.streak[r - 1] + 1 : 0));
      }
      events += t.event[r];
    }
    CHECK(events == (e.event ? 1 : 0));
    if (e.event) CHECK(t.event[t.end_row(i) - 1] == 1);
  }
  CHECK(leakage::truncation(t, c.synth.raw).empty());
}

TEST_CASE("subset and file round trip") {
  SynthSpec spec;
  spec.n_enrollments = 50;
  const auto c = fixtures::synth_cohort(spec);
  const std::vector<std::size_t> keep{1, 3, 4};
  const auto s = subset(c.table, keep);
  REQUIRE(s.size() == 3);
  CHECK(s.enrollments[1] == c.table.enrollments[3]);
  CHECK(s.rows() == (c.table.end_row(1) - c.table.begin_row(1)) +
                        (c.table.end_row(3) - c.table.begin_row(3)) +
                        (c.table.end_row(4) - c.table.begin_row(4)));

  auto path = fixtures::scratch("pp_rt") / "pp.csv";
  write_person_period(path, c.table);
  const auto back = read_person_period(path);
  CHECK(back.enrollments == c.table.enrollments);
  CHECK(back.offsets == c.table.offsets);
  CHECK(back.total_clicks == c.table.total_clicks);
  CHECK(back.recency == c.table.recency);
  CHECK(back.streak == c.table.streak);
  CHECK(back.submitted == c.table.submitted);
  CHECK(back.event == c.table.event);
}
