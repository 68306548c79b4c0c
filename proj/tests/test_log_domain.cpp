#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "svrank/log_domain.hpp"

using svrank::LogMagnitude;

TEST_CASE("log magnitudes round-trip through ordinary arithmetic") {
  const LogMagnitude a = LogMagnitude::from_value(3.0);
  const LogMagnitude b = LogMagnitude::from_value(4.0);
  CHECK((a + b).value() == Catch::Approx(7.0));
  CHECK((a * b).value() == Catch::Approx(12.0));
  CHECK((b / a).value() == Catch::Approx(4.0 / 3.0));
}

TEST_CASE("zero is absorbing for products and neutral for sums") {
  const LogMagnitude zero = LogMagnitude::zero();
  const LogMagnitude a = LogMagnitude::from_value(5.0);
  CHECK(zero.is_zero());
  CHECK((zero * a).is_zero());
  CHECK((zero + a).value() == Catch::Approx(5.0));
}

TEST_CASE("sums stay finite far outside double range") {
  const LogMagnitude big = LogMagnitude::from_log(5000.0);
  const LogMagnitude bigger = LogMagnitude::from_log(5001.0);
  const LogMagnitude sum = big + bigger;
  CHECK(std::isfinite(sum.log_value));
  CHECK(sum.log_value == Catch::Approx(5001.0 + std::log1p(std::exp(-1.0))));
}

TEST_CASE("log_sum_exp matches direct evaluation on moderate inputs") {
  const std::vector<double> logs{-1.0, 0.5, 2.0, -30.0};
  double direct = 0.0;
  for (double l : logs) direct += std::exp(l);
  CHECK(svrank::log_sum_exp(logs) == Catch::Approx(std::log(direct)));
}

TEST_CASE("log_sum_exp of all-zero terms is zero") {
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(svrank::log_sum_exp(std::vector<double>{ninf, ninf}) == ninf);
}

TEST_CASE("from_log rejects NaN") {
  CHECK_THROWS_AS(LogMagnitude::from_log(std::nan("")), svrank::parameter_error);
}
