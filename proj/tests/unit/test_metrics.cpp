#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "rtbctl/errors.hpp"
#include "rtbctl/metrics.hpp"

using namespace rtbctl;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("kpi ratios on a worked example") {
  KpiCounts c;
  c.bids = 1000;
  c.wins = 400;
  c.clicks = 100;
  c.cost = 50000;
  CHECK(*ecpc(c) == doctest::Approx(500.0).epsilon(1e-12));
  CHECK(*awr(c) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(*cpm(c) == doctest::Approx(125000.0).epsilon(1e-12));
  CHECK(*ctr(c) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("ratios are empty when the denominator is zero") {
  KpiCounts c;
  c.bids = 10;
  CHECK(!ecpc(c).has_value());
  CHECK(!cpm(c).has_value());
  CHECK(!ctr(c).has_value());
  CHECK(*awr(c) == 0.0);
  KpiCounts zero;
  CHECK(!awr(zero).has_value());
}

TEST_CASE("cumulative ratios are ratios of sums, not means of ratios") {
  KpiCounts r1;
  r1.wins = 100;
  r1.cost = 10000;  // cpm 100000
  KpiCounts r2;
  r2.wins = 400;
  r2.cost = 50000;  // cpm 125000
  KpiCounts total = r1;
  total += r2;
  CHECK(total.wins == 500);
  CHECK(total.cost == 60000);
  CHECK(*cpm(total) == doctest::Approx(120000.0).epsilon(1e-12));
  // which differs from the mean of the two per-round values
  CHECK(*cpm(total) != doctest::Approx(112500.0));
}

TEST_CASE("counts validation catches impossible tallies") {
  KpiCounts ok;
  ok.bids = 5;
  ok.wins = 3;
  ok.clicks = 1;
  ok.cost = 42;
  CHECK_NOTHROW(validate(ok));

  KpiCounts bad = ok;
  bad.wins = 6;
  CHECK_THROWS_AS(validate(bad), DataError);
  bad = ok;
  bad.clicks = 4;
  CHECK_THROWS_AS(validate(bad), DataError);
  bad = ok;
  bad.cost = -1;
  CHECK_THROWS_AS(validate(bad), DataError);
}

TEST_CASE("control report on a six-round hand example") {
  // Band is [9, 11]. Rounds: 13 out, 11.5 out, 10.8 in, 9.5 in, 10.2 in,
  // 10.1 in. First value is above x_r, so overshoot measures the dip below.
  const std::vector<double> xs{13.0, 11.5, 10.8, 9.5, 10.2, 10.1};
  const auto rep = control_report(xs, 10.0);
  REQUIRE(rep.rise_round.has_value());
  CHECK(*rep.rise_round == 3);
  REQUIRE(rep.settling_round.has_value());
  CHECK(*rep.settling_round == 3);
  CHECK(rep.overshoot_pct == doctest::Approx(5.0).epsilon(1e-12));

  // Steady state covers rounds 3..6. Residuals of x/x_r - 1:
  // 0.08, -0.05, 0.02, 0.01.
  const std::vector<double> res{0.08, -0.05, 0.02, 0.01};
  double sq = 0.0;
  double mean = 0.0;
  for (const double r : res) {
    sq += r * r;
    mean += r;
  }
  mean /= static_cast<double>(res.size());
  double var = 0.0;
  for (const double r : res) var += (r - mean) * (r - mean);
  REQUIRE(rep.rmse_ss.has_value());
  CHECK(*rep.rmse_ss ==
        doctest::Approx(std::sqrt(sq / res.size())).epsilon(1e-12));
  REQUIRE(rep.sd_ss.has_value());
  CHECK(*rep.sd_ss ==
        doctest::Approx(std::sqrt(var / res.size())).epsilon(1e-12));
}

TEST_CASE("report is invariant to rescaling the series and reference") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> xs;
  for (int k = 0; k < 40; ++k) xs.push_back(10.0 * u(rng));
  const auto base = control_report(xs, 10.0);

  for (const double scale : {1e-4, 3.0, 1e6}) {
    std::vector<double> scaled;
    for (const double x : xs) scaled.push_back(x * scale);
    const auto rep = control_report(scaled, 10.0 * scale);
    CHECK(rep.rise_round == base.rise_round);
    CHECK(rep.settling_round == base.settling_round);
    CHECK(rep.overshoot_pct ==
          doctest::Approx(base.overshoot_pct).epsilon(1e-9));
    CHECK(*rep.rmse_ss == doctest::Approx(*base.rmse_ss).epsilon(1e-9));
    CHECK(*rep.sd_ss == doctest::Approx(*base.sd_ss).epsilon(1e-9));
  }
}

TEST_CASE("settling never precedes rising") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs;
    const int n = 1 + static_cast<int>(rng() % 30);
    for (int k = 0; k < n; ++k) xs.push_back(u(rng));
    const auto rep = control_report(xs, 1.0);
    CHECK(rep.rise_round.has_value() == rep.settling_round.has_value());
    if (rep.rise_round) CHECK(*rep.settling_round >= *rep.rise_round);
  }
}

TEST_CASE("one-sided approach has zero overshoot") {
  const std::vector<double> xs{20.0, 15.0, 12.0, 10.5, 10.2};
  const auto rep = control_report(xs, 10.0);
  CHECK(rep.overshoot_pct == 0.0);

  const std::vector<double> from_below{4.0, 7.0, 9.0, 9.8};
  CHECK(control_report(from_below, 10.0).overshoot_pct == 0.0);
}

TEST_CASE("overshoot is measured opposite the approach side") {
  // Starts below, peaks at 12 after crossing: 20 percent overshoot.
  const std::vector<double> xs{5.0, 9.0, 12.0, 10.4, 10.0};
  const auto rep = control_report(xs, 10.0);
  CHECK(rep.overshoot_pct == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("undefined rounds never count as settled") {
  const std::vector<double> xs{kNan, 10.0, 10.0, kNan, 10.0};
  const auto rep = control_report(xs, 10.0);
  REQUIRE(rep.rise_round.has_value());
  CHECK(*rep.rise_round == 2);
  REQUIRE(rep.settling_round.has_value());
  CHECK(*rep.settling_round == 5);

  const std::vector<double> never{kNan, kNan, kNan};
  const auto rep2 = control_report(never, 10.0);
  CHECK(!rep2.rise_round.has_value());
  CHECK(!rep2.settling_round.has_value());
  CHECK(!rep2.rmse_ss.has_value());
  CHECK(rep2.overshoot_pct == 0.0);
}

TEST_CASE("a series that ends out of band never settles") {
  const std::vector<double> xs{10.0, 10.0, 25.0};
  const auto rep = control_report(xs, 10.0);
  REQUIRE(rep.rise_round.has_value());
  CHECK(*rep.rise_round == 1);
  CHECK(!rep.settling_round.has_value());
  CHECK(!rep.rmse_ss.has_value());
  CHECK(!rep.sd_ss.has_value());
}

TEST_CASE("band edges are inside the band") {
  const std::vector<double> xs{11.0};
  CHECK(*control_report(xs, 10.0).settling_round == 1);
  const std::vector<double> lo{9.0};
  CHECK(*control_report(lo, 10.0).settling_round == 1);
  const std::vector<double> out{11.0000001};
  CHECK(!control_report(out, 10.0).settling_round.has_value());
}

TEST_CASE("report rejects degenerate inputs") {
  const std::vector<double> xs{1.0};
  CHECK_THROWS_AS(control_report(xs, 0.0), ConfigError);
  CHECK_THROWS_AS(control_report(xs, -2.0), ConfigError);
  CHECK_THROWS_AS(control_report({}, 10.0), ConfigError);
}

}  // TEST_SUITE
