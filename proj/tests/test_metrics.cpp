#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "slwave/metrics.hpp"

using namespace slwave;

TEST_CASE("kerr inverse reduces to the static form at a = 0") {
  const KerrInverse inv = kerr_inverse_components(1.0, 0.0, 4.0, kPi / 2.0);
  CHECK(inv.tt == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(inv.rr == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(inv.tphi == doctest::Approx(0.0));
}

TEST_CASE("kerr inverse approaches flat polar values far out") {
  for (double th : {0.3, kPi / 2.0, 2.5}) {
    const KerrInverse inv = kerr_inverse_components(1.0, 0.5, 1e6, th);
    CHECK(std::abs(inv.tt + 1.0) < 1e-5);
    CHECK(std::abs(inv.rr - 1.0) < 1e-5);
  }
}

TEST_CASE("kerr inverse matches the dense matrix-inverse oracle") {
  const double M = 1.0, a = 0.5, r = 3.0, th = kPi / 2.0;
  const auto g = kerr_components(M, a, r, th);
  const auto ginv_oracle = oracle::inv4(g);
  const auto ginv = kerr_inverse_matrix(M, a, r, th);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double scale = std::max(std::abs(ginv_oracle[i][j]), 1e-30);
      if (std::abs(ginv_oracle[i][j]) < 1e-15 && std::abs(ginv[i][j]) < 1e-15) continue;
      CHECK(std::abs(ginv[i][j] - ginv_oracle[i][j]) / scale < 1e-10);
    }
}

TEST_CASE("kerr inverse rejects horizon and bad spin") {
  CHECK_THROWS_AS(kerr_inverse_components(1.0, 0.5, 1.5, kPi / 2.0), std::domain_error);
  CHECK_THROWS_AS(kerr_inverse_components(1.0, 1.5, 10.0, kPi / 2.0), std::domain_error);
  CHECK_THROWS_AS(kerr_inverse_components(1.0, 0.5, 10.0, 0.0), std::domain_error);
}

TEST_CASE("inverse consistency across the catalog at random exterior points") {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double r = 3.0 + 80.0 * u(rng);
    const double th = 0.2 + (kPi - 0.4) * u(rng);
    const double t = 5.0 * u(rng);
    // Kerr at several spins
    for (double a : {0.0, 0.3, 0.95}) {
      const auto g = kerr_components(1.0, a, r, th);
      const auto gi = kerr_inverse_matrix(1.0, a, r, th);
      const auto id = oracle::mul4(g, gi);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          CHECK(std::abs(id[i][j] - (i == j ? 1.0 : 0.0)) < 1e-10);
    }
    // spherically symmetric presets
    for (const MetricSpec& m :
         {schwarzschild_sphsym(1.0), reissner_nordstrom(1.0, 0.4), minkowski_sphsym()}) {
      const SphComponents c = sph_components(m, t, r);
      const SphInverse gi = sph_inverse(m, t, r);
      CHECK(std::abs(c.tt * gi.tt + c.tr * gi.tr - 1.0) < 1e-10);
      CHECK(std::abs(c.tr * gi.rr + c.rr * gi.tr) < 1e-10);
      CHECK(std::abs(c.tt * gi.tr + c.tr * gi.rr - 0.0) < 1e-10);
    }
  }
}

TEST_CASE("kerr inverse is continuous in the a -> 0 limit") {
  const double r = 5.0, th = 1.1;
  const KerrInverse tiny = kerr_inverse_components(1.0, 1e-8, r, th);
  const KerrInverse zero = kerr_inverse_components(1.0, 0.0, r, th);
  CHECK(std::abs(tiny.tt - zero.tt) / std::abs(zero.tt) < 1e-6);
  CHECK(std::abs(tiny.rr - zero.rr) / std::abs(zero.rr) < 1e-6);
  CHECK(std::abs(tiny.thth - zero.thth) / std::abs(zero.thth) < 1e-6);
  CHECK(std::abs(tiny.phph - zero.phph) / std::abs(zero.phph) < 1e-6);
}

TEST_CASE("volume element: flat polar, static chart, kerr") {
  const MetricSpec mink = minkowski();
  Point4 p{0.0, 3.0, kPi / 4.0, 0.0};
  CHECK(volume_element(mink, p) ==
        doctest::Approx(9.0 * std::sin(kPi / 4.0)).epsilon(1e-14));

  // Schwarzschild (t, r) chart: G = 1, so r^2 sin(theta)
  const MetricSpec schw = schwarzschild(1.0);
  Point4 q{0.0, 4.0, kPi / 2.0, 0.0};
  CHECK(volume_element(schw, q) == doctest::Approx(16.0).epsilon(1e-12));
  // against the 4x4 determinant oracle
  const auto mat = sph_components_matrix(schw, q);
  CHECK(volume_element(schw, q) ==
        doctest::Approx(std::sqrt(-oracle::det4(mat))).epsilon(1e-10));

  const MetricSpec km = kerr(1.0, 0.5);
  Point4 k{0.0, 3.0, kPi / 3.0, 0.0};
  const double rho2 = 9.0 + 0.25 * std::cos(kPi / 3.0) * std::cos(kPi / 3.0);
  CHECK(volume_element(km, k) == doctest::Approx(rho2 * std::sin(kPi / 3.0)).epsilon(1e-12));
  const auto kmat = kerr_components(1.0, 0.5, 3.0, kPi / 3.0);
  CHECK(volume_element(km, k) ==
        doctest::Approx(std::sqrt(-oracle::det4(kmat))).epsilon(1e-10));
}

TEST_CASE("tortoise coordinate and its inverse") {
  CHECK(tortoise(1.0, 3.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(tortoise(1.0, 4.0) == doctest::Approx(4.0 + 2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(inverse_tortoise(1.0, tortoise(1.0, 7.3)) == doctest::Approx(7.3).epsilon(1e-10));
  CHECK_THROWS_AS(tortoise(1.0, 1.9), std::domain_error);

  // monotonicity and the O(h^2) derivative property at random radii
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(2.2, 400.0);
  double prev_r = 2.0001, prev_rs = tortoise(1.0, prev_r);
  for (int i = 0; i < 200; ++i) {
    const double r = u(rng);
    const double h = 1e-2;
    const double fd = (tortoise(1.0, r + h) - tortoise(1.0, r - h)) / (2.0 * h);
    const double exact = 1.0 / (1.0 - 2.0 / r);
    // |error| <= h^2/6 sup|f'''| with f''' = 4M/(r-2M)^3, plus rounding slack
    const double bound = h * h / 6.0 * 4.0 / std::pow(r - h - 2.0, 3.0) * 1.5 + 1e-9 * exact;
    CHECK(std::abs(fd - exact) <= bound);
    if (r > prev_r) CHECK(tortoise(1.0, r) > prev_rs);
    prev_r = r;
    prev_rs = tortoise(1.0, r);
  }
  // halving the step divides the truncation error by about four
  {
    const double r = 2.5, exact = 1.0 / (1.0 - 2.0 / r);
    auto err = [&](double h) {
      return std::abs((tortoise(1.0, r + h) - tortoise(1.0, r - h)) / (2.0 * h) - exact);
    };
    CHECK(err(0.01) < err(0.02) / 3.0);
  }
  // deep negative branch round trip
  CHECK(tortoise(1.0, inverse_tortoise(1.0, -30.0)) == doctest::Approx(-30.0).epsilon(1e-10));
}

TEST_CASE("structural residual vanishes for stationary axisymmetric metrics") {
  const MetricSpec km = kerr(1.0, 0.7);
  Point4 p{0.0, 4.0, kPi / 4.0, 0.0};
  CHECK(std::abs(structural_residual(km, p, 1e-4)) < 1e-6);
  const MetricSpec mink = minkowski();
  Point4 q{1.0, 7.0, 1.0, 2.0};
  CHECK(structural_residual(mink, q, 1e-4) == 0.0);
}

TEST_CASE("structural residual matches the hand-differentiated value") {
  // g_tt = -(1 + t e^-r), g_rr = 1, g_tr = 0: the only surviving term is
  // d_t (g^{1/2} g^{tt}) = r^2 sin(theta) d_t (-1/G) with G = sqrt(1 + t e^-r)
  Component tt, tr, rr;
  tt.v = [](double t, double r) { return -(1.0 + t * std::exp(-r)); };
  tr = constant_component(0.0);
  rr = constant_component(1.0);
  const MetricSpec m = generic_sphsym(tt, tr, rr, 1.0, 1.0, 1e-6, "toy");
  Point4 p{0.0, 2.0, kPi / 2.0, 0.0};
  // P_t = -r^2 sin(theta)/G, so d_t P_t = r^2 sin(theta) G^-2 dG/dt with
  // dG/dt = e^-r/(2G); at t = 0, r = 2 this is 2 e^-2
  const double analytic = (0.5 * std::exp(-2.0)) * 4.0 * std::sin(kPi / 2.0);
  const double res = structural_residual(m, p, 1e-5);
  CHECK(res == doctest::Approx(analytic).epsilon(1e-6));
  CHECK(std::abs(res) > 1e-3);  // genuinely nonzero
}

TEST_CASE("structural residual is grid-convergent on a time-dependent metric") {
  Component tt, tr, rr;
  tt.v = [](double t, double r) { return -(1.0 + std::sin(t) * std::exp(-r)); };
  tr.v = [](double t, double r) { return 0.1 * std::cos(t) / (r * r); };
  rr = constant_component(1.0);
  const MetricSpec m = generic_sphsym(tt, tr, rr, 1.0, 1.0, 1e-6, "toy2");
  Point4 p{0.7, 3.0, kPi / 3.0, 0.0};
  const double rh = structural_residual(m, p, 2e-3);
  const double rh2 = structural_residual(m, p, 1e-3);
  const double exact = structural_residual(m, p, 1e-5);
  CHECK(std::abs(rh2 - exact) * 3.5 <= std::abs(rh - exact) + 1e-12);
}

TEST_CASE("asymptotic decay audit") {
  const auto samples = log_spaced(20.0, 2000.0, 40);

  SUBCASE("schwarzschild has slope -1 deviations") {
    const DecayReport rep = af_decay_audit(schwarzschild(1.0), 10.0, samples);
    CHECK(rep.pass);
    for (const auto& c : rep.components)
      if (c.name == "g_tt") CHECK(c.slope == doctest::Approx(-1.0).epsilon(1e-3));
  }
  SUBCASE("minkowski is exact") {
    const DecayReport rep = af_decay_audit(minkowski(), 1.0, samples);
    CHECK(rep.pass);
    for (const auto& c : rep.components) CHECK(c.exact);
  }
  SUBCASE("kerr passes with delta0 = 1") {
    const DecayReport rep = af_decay_audit(kerr(1.0, 0.9), 10.0, samples);
    CHECK(rep.pass);
  }
  SUBCASE("slow tails fail the stated rate") {
    Component tt = constant_component(-1.0), tr = constant_component(0.0), rr;
    rr.v = [](double, double r) { return 1.0 + std::pow(r, -0.5); };
    MetricSpec m = generic_sphsym(tt, tr, rr, 10.0, 1.0, 1e-6, "slowtail");
    DecayReport rep = af_decay_audit(m, 10.0, samples);
    CHECK_FALSE(rep.pass);
    for (const auto& c : rep.components)
      if (c.name == "g_rr") CHECK(c.slope == doctest::Approx(-0.5).epsilon(2e-2));
    m.delta0 = 0.4;
    CHECK(af_decay_audit(m, 10.0, samples).pass);
  }
  SUBCASE("insufficient range is an error") {
    CHECK_THROWS_AS(af_decay_audit(schwarzschild(1.0), 10.0, log_spaced(20.0, 100.0, 10)),
                    std::domain_error);
  }
}

TEST_CASE("metric registry resolves ids and custom expression tables") {
  std::map<std::string, std::string> kv{{"metric", "kerr"}, {"M", "1"}, {"a", "0.3"}};
  CHECK(metric_from_config(kv).kind == MetricKind::Kerr);

  std::map<std::string, std::string> rn{{"metric", "reissner-nordstrom"},
                                        {"M", "1"},
                                        {"Q", "0.5"}};
  const MetricSpec mrn = metric_from_config(rn);
  // f = 1 - 2/r + 0.25/r^2 at r = 4
  const double f = 1.0 - 0.5 + 0.25 / 16.0;
  CHECK(sph_components(mrn, 0.0, 4.0).tt == doctest::Approx(-f).epsilon(1e-14));
  CHECK(mrn.exterior_rmin() > 1.0 + std::sqrt(1.0 - 0.25));

  std::map<std::string, std::string> cu{{"metric", "custom"},
                                        {"g_tt", "-(1 - 2/r)"},
                                        {"g_tr", "0"},
                                        {"g_rr", "1/(1 - 2/r)"},
                                        {"R", "10"},
                                        {"delta0", "1"},
                                        {"exterior_rmin", "2"}};
  const MetricSpec mcu = metric_from_config(cu);
  const MetricSpec msc = schwarzschild_sphsym(1.0);
  for (double r : {3.0, 7.0, 40.0}) {
    CHECK(sph_components(mcu, 0.0, r).tt ==
          doctest::Approx(sph_components(msc, 0.0, r).tt).epsilon(1e-12));
    CHECK(sph_components(mcu, 0.0, r).rr ==
          doctest::Approx(sph_components(msc, 0.0, r).rr).epsilon(1e-12));
  }
  CHECK_THROWS_AS(metric_from_config({{"metric", "nonsense"}}), ConfigError);
}

TEST_CASE("expression parser handles the documented operator set") {
  const Expr e = Expr::parse("-(1 + 2*t) / r ^ 2 + ln(exp(r))");
  CHECK(e.eval(0.5, 2.0) == doctest::Approx(-(2.0) / 4.0 + 2.0).epsilon(1e-14));
  CHECK(Expr::parse("2 ^ 3 ^ 2").eval(0, 0) == doctest::Approx(512.0));  // right assoc
  CHECK_THROWS_AS(Expr::parse("1 +"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("q + 1"), std::invalid_argument);
}
