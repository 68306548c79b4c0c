#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "svrank/baseline_tests.hpp"
#include "svrank/rng.hpp"
#include "svrank/spectra.hpp"

using svrank::SingularSpectrum;

namespace {

SingularSpectrum spectrum_of(std::initializer_list<double> values, int n) {
  SingularSpectrum s;
  s.values.resize(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) s.values[i++] = v;
  s.left.resize(n, s.values.size());
  s.right.resize(s.values.size(), s.values.size());
  return s;
}

}  // namespace

TEST_CASE("centering constants at N=50, p=10") {
  CHECK(svrank::pseudorank_mu(50, 10) == Catch::Approx(102.3705).margin(1e-3));
  CHECK(svrank::pseudorank_sigma(50, 10) ==
        Catch::Approx(7.8473).margin(1e-3));
}

TEST_CASE("tracy-widom quantiles at published anchors") {
  CHECK(svrank::tw1_quantile(0.05) == Catch::Approx(0.98).margin(0.01));
  CHECK(svrank::tw1_quantile(0.5) == Catch::Approx(-1.27).margin(0.01));
  CHECK(svrank::tw1_quantile(0.01) == Catch::Approx(2.02).margin(0.03));
}

TEST_CASE("tracy-widom cdf is monotone and inverts the quantile") {
  double prev = -1.0;
  for (double x = -4.0; x <= 2.5; x += 0.1) {
    const double f = svrank::tw1_cdf(x);
    CHECK(f >= prev);
    prev = f;
  }
  const double q = svrank::tw1_quantile(0.1);
  CHECK(svrank::tw1_cdf(q) == Catch::Approx(0.9).margin(2e-3));
}

TEST_CASE("tracy-widom cdf clamps outside the table") {
  bool clamped = false;
  svrank::tw1_cdf(-100.0, &clamped);
  CHECK(clamped);
  svrank::tw1_cdf(100.0, &clamped);
  CHECK(clamped);
  svrank::tw1_cdf(0.0, &clamped);
  CHECK_FALSE(clamped);
}

TEST_CASE("tw table parser rejects non-monotone input") {
  CHECK_THROWS_AS(svrank::TracyWidomTable::parse(
                      "0.1 0.0\n0.2 -1.0\n0.3 1.0\n0.4 2.0\n"),
                  svrank::input_error);
}

TEST_CASE("pseudorank statistic standardizes the top eigenvalue") {
  // d_1^2 = mu_{30,8} exactly -> statistic 0, p-value = 1 - F1(0) ~ 0.17
  const double mu = svrank::pseudorank_mu(30, 7);
  auto s = spectrum_of({std::sqrt(mu), 2.0, 1.8, 1.5, 1.2, 1.0, 0.7, 0.5}, 30);
  const auto out = svrank::pseudorank_test(s, 1, 1.0, 0.05);
  CHECK(out.statistic == Catch::Approx(0.0).margin(1e-12));
  CHECK(out.p_value == Catch::Approx(1.0 - svrank::tw1_cdf(0.0)));
  CHECK(out.diagnostics.at("threshold") ==
        Catch::Approx(svrank::tw1_quantile(0.05)));
}

TEST_CASE("pseudorank scales by the noise variance") {
  auto s = spectrum_of({10.0, 4.0, 3.0, 2.0}, 40);
  const auto unit = svrank::pseudorank_test(s, 1, 1.0, 0.05);
  auto s2 = spectrum_of({20.0, 8.0, 6.0, 4.0}, 40);
  const auto scaled = svrank::pseudorank_test(s2, 1, 4.0, 0.05);
  CHECK(unit.statistic == Catch::Approx(scaled.statistic));
}

TEST_CASE("muirhead hand-worked value at q=2") {
  // p=2, k=1, N=3, equal trailing values: V = (N-1) = 2
  auto s = spectrum_of({1.0, 1.0}, 3);
  const auto out = svrank::muirhead_test(s, 3, 1, 0.05);
  CHECK(out.diagnostics.at("log_v") == Catch::Approx(std::log(2.0)));
  CHECK(out.diagnostics.at("df") == Catch::Approx(2.0));
}

TEST_CASE("muirhead p-value is small when trailing values are unequal") {
  auto equal = spectrum_of({9.0, 2.0, 2.0, 2.0}, 100);
  // the verbatim (N-1)^{q-1} factor means only an extreme spread rejects
  auto spread = spectrum_of({9.0, 6.0, 2.0, 0.01}, 100);
  const double p_equal = svrank::muirhead_test(equal, 100, 2, 0.05).p_value;
  const double p_spread = svrank::muirhead_test(spread, 100, 2, 0.05).p_value;
  CHECK(p_equal > 0.9);
  CHECK(p_spread < 1e-6);
}

TEST_CASE("muirhead rejects a zero trailing block") {
  auto s = spectrum_of({5.0, 0.0, 0.0}, 10);
  CHECK_THROWS_AS(svrank::muirhead_test(s, 10, 2, 0.05),
                  svrank::degenerate_error);
}
