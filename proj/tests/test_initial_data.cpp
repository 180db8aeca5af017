#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "slwave/initial_data.hpp"

using namespace slwave;

TEST_CASE("profile construction derives the family exponents") {
  SUBCASE("outgoing power law on the static background") {
    const DataProfile q = make_profile(DataFamily::SchwarzschildOutgoing, 2.0, 3, 0.1, 0.5,
                                       0.1, 0.5, 0.0);
    CHECK(q.alpha == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(q.N == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(q.core_lo == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(q.core_hi == doctest::Approx(1000.0).epsilon(1e-12));
  }
  SUBCASE("shell family scales") {
    const DataProfile q = make_profile(DataFamily::KerrShell, 2.0, 3, 0.1, 0.5, 0.1, 0.5);
    CHECK(q.L == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(q.supp_lo >= 500.0);
    CHECK(q.supp_hi <= 1000.0);
    CHECK(q.core_lo == doctest::Approx(600.0));
    CHECK(q.core_hi == doctest::Approx(800.0));
  }
  SUBCASE("outgoing AF family checks the open alpha interval") {
    CHECK_THROWS_AS(
        make_profile(DataFamily::AFOutgoing, 2.0, 3, 0.1, 0.5, 0.1, 0.5, 0.0, 1.0),
        std::invalid_argument);
    const DataProfile q =
        make_profile(DataFamily::AFOutgoing, 2.0, 3, 0.1, 0.5, 0.1, 0.5, 0.0, 0.9);
    CHECK(q.N == doctest::Approx(2.5).epsilon(1e-15));
  }
  SUBCASE("constraint messages name the violated inequality") {
    try {
      make_profile(DataFamily::SchwarzschildOutgoing, 2.0, 3, 0.1, 0.5, 0.6, 0.5, 0.0);
      FAIL("expected a constraint violation");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("theta0 < theta1") != std::string::npos);
    }
    CHECK_THROWS_AS(
        make_profile(DataFamily::SchwarzschildOutgoing, 2.5, 3, 0.1, 0.5, 0.1, 0.5, 0.0),
        std::invalid_argument);  // p above 1 + sqrt(2)
    CHECK_THROWS_AS(make_profile(DataFamily::KerrShell, 2.0, 3, 0.6, 0.5, 0.1, 0.5),
                    std::invalid_argument);  // eps >= eps0
    CHECK_THROWS_AS(make_profile(DataFamily::KerrShell, 2.0, 3, 0.1, 0.5, 0.3, 0.35),
                    std::invalid_argument);  // 2 theta1 <= (p+1) theta0
  }
}

TEST_CASE("data evaluation: power law on the core, zero outside") {
  const DataProfile q =
      make_profile(DataFamily::SchwarzschildOutgoing, 2.0, 3, 0.1, 0.5, 0.1, 0.5, 0.0);
  const double epsN = std::pow(0.1, -q.N);
  const DataValues edge = evaluate_data(q, epsN);
  CHECK(edge.u0 ==
        doctest::Approx(std::pow(0.5, -0.1) * std::pow(0.1, q.N * (q.alpha + 1.0)))
            .epsilon(1e-12));

  // shell family matches the documented amplitude at the shell interior
  const DataProfile k = make_profile(DataFamily::KerrShell, 2.0, 3, 0.005, 0.01, 0.25, 0.5);
  const double L = k.L;
  const DataValues mid = evaluate_data(k, 7.0 * L);
  CHECK(mid.u0 ==
        doctest::Approx(std::pow(0.01, -0.25) * std::pow(7.0 * L, -2.0)).epsilon(1e-12));

  CHECK(evaluate_data(q, q.supp_lo * 0.99).u0 == 0.0);
  CHECK(evaluate_data(q, q.supp_hi * 1.01).u0 == 0.0);
  CHECK(evaluate_data(q, q.supp_hi * 1.01).u1 == 0.0);
}

TEST_CASE("extension is smooth across the collar") {
  const DataProfile q =
      make_profile(DataFamily::SchwarzschildOutgoing, 2.0, 3, 0.2, 0.5, 0.1, 0.5, 0.0);
  auto u0_of = [&](double r) { return evaluate_data_jet(q, r).u0; };
  for (double frac : {0.97, 0.995, 1.0, 10.02, 10.08}) {
    const double r = frac * q.core_lo;
    if (r <= q.supp_lo || r >= q.supp_hi) continue;
    const DataJet j = evaluate_data_jet(q, r);
    auto fd1 = [&](double h) { return (u0_of(r + h) - u0_of(r - h)) / (2.0 * h); };
    auto fd2 = [&](double h) {
      return (u0_of(r + h) - 2.0 * u0_of(r) + u0_of(r - h)) / (h * h);
    };
    const double h = 1e-3 * q.collar_width();
    const double e1 = std::abs(fd1(h) - j.u0_r), e1h = std::abs(fd1(2.0 * h) - j.u0_r);
    const double e2 = std::abs(fd2(h) - j.u0_rr), e2h = std::abs(fd2(2.0 * h) - j.u0_rr);
    const double scale1 = std::abs(j.u0_r) + 1e-12, scale2 = std::abs(j.u0_rr) + 1e-12;
    CHECK(e1 / scale1 < 1e-4);
    CHECK(e2 / scale2 < 1e-3);
    if (e1h / scale1 > 1e-9) CHECK(e1 < 0.5 * e1h);
    if (e2h / scale2 > 1e-7) CHECK(e2 < 0.5 * e2h);
  }
}

TEST_CASE("support of u0 and u1 coincide and are intervals") {
  const DataProfile q = make_profile(DataFamily::KerrShell, 2.0, 3, 0.1, 0.5, 0.1, 0.5);
  bool inside = false;
  int transitions = 0;
  for (double r = 0.5 * q.supp_lo; r < 1.5 * q.supp_hi; r += q.L * 0.01) {
    const DataValues v = evaluate_data(q, r);
    CHECK((v.u0 != 0.0) == (v.u1 != 0.0));
    const bool now = v.u0 != 0.0;
    if (now != inside) ++transitions;
    inside = now;
  }
  CHECK(transitions == 2);
}

TEST_CASE("norm audit agrees with brute-force quadrature") {
  const DataProfile q =
      make_profile(DataFamily::AFOutgoing, 2.0, 3, 0.1, 0.5, 0.1, 0.5, 0.0, 0.9);
  // |u0| in L^2(r^2 dr), oracle by dense trapezoid over the support
  const double brute = std::sqrt(oracle::trapz(
      [&](double r) {
        const double v = evaluate_data_jet(q, r).u0;
        return v * v * r * r;
      },
      q.supp_lo, q.supp_hi, 400000));
  const NormAuditReport rep = norm_scale_audit(q, 2);
  CHECK(rep.rows[0].u0_norm == doctest::Approx(brute).epsilon(1e-6));

  // closed-form core piece of the squared norm against a dense oracle
  const double Rc = q.core_lo;
  const double qq = 2.0 * q.alpha - 1.0;
  const double core =
      q.amp0 * q.amp0 * (std::pow(Rc, -qq) - std::pow(10.0 * Rc, -qq)) / qq;
  const double brute_core = oracle::trapz(
      [&](double r) {
        const double v = q.amp0 * std::pow(r, q.pow0);
        return v * v * r * r;
      },
      q.core_lo, q.core_hi, 400000);
  CHECK(core == doctest::Approx(brute_core).epsilon(1e-8));
}

TEST_CASE("norm audit: scaling exponents and the eps0^-1 eps bound") {
  SUBCASE("shell family tracks the documented shell exponent") {
    const DataProfile q = make_profile(DataFamily::KerrShell, 2.0, 3, 0.1, 0.5, 0.1, 0.5);
    const NormAuditReport rep = norm_scale_audit(q, 2);
    CHECK(rep.pass);
    for (const auto& row : rep.rows) {
      CHECK(row.scaling_ok);
      CHECK(row.bound_ok);
      CHECK(row.expected_exponent ==
            doctest::Approx(3.0 / 2.0 - 2.0 - 1.0 - row.m).epsilon(1e-12));
    }
    // the norm of u0 itself scales like L^{n/2 - 2/(p-1)}
    const DataProfile q2 = make_profile(DataFamily::KerrShell, 2.0, 3, 0.05, 0.5, 0.1, 0.5);
    const NormAuditReport rep2 = norm_scale_audit(q2, 0);
    const double measured =
        std::log(rep2.rows[0].u0_norm / rep.rows[0].u0_norm) / std::log(q2.L / q.L);
    CHECK(measured == doctest::Approx(1.5 - 2.0).epsilon(2e-2));
  }
  SUBCASE("power-law families") {
    // the critical-order bound needs eps0 small enough to absorb the
    // order-one shell constants
    for (DataFamily fam : {DataFamily::SchwarzschildOutgoing, DataFamily::AFOutgoing}) {
      const DataProfile q = make_profile(fam, 2.0, 3, 0.1, 0.25, 0.1, 0.5, 0.0);
      const NormAuditReport rep = norm_scale_audit(q, 2);
      CHECK(rep.pass);
      CHECK(rep.x_proxy_ok);
    }
  }
  SUBCASE("critical-order proxy scales linearly in eps") {
    const DataProfile qa =
        make_profile(DataFamily::SchwarzschildOutgoing, 2.0, 3, 0.2, 0.5, 0.1, 0.5, 0.0);
    const DataProfile qb =
        make_profile(DataFamily::SchwarzschildOutgoing, 2.0, 3, 0.1, 0.5, 0.1, 0.5, 0.0);
    const double ratio = norm_scale_audit(qa, 0).x_proxy / norm_scale_audit(qb, 0).x_proxy;
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.02));
  }
  SUBCASE("zero amplitude zeroes every norm") {
    DataProfile q = make_profile(DataFamily::KerrShell, 2.0, 3, 0.1, 0.5, 0.1, 0.5);
    q.amp0 = 0.0;
    q.amp1 = 0.0;
    const NormAuditReport rep = norm_scale_audit(q, 1);
    for (const auto& row : rep.rows) {
      CHECK(row.pair_norm == 0.0);
      CHECK(row.bound_ok);
    }
  }
}

TEST_CASE("outgoing sign conditions on the core") {
  const double M = 1.0;
  SUBCASE("positive u1 and positive outgoing derivative for theta1 > theta0") {
    const DataProfile q =
        make_profile(DataFamily::SchwarzschildOutgoing, 2.0, 3, 0.1, 0.5, 0.1, 0.5, 0.0);
    for (int i = 0; i < 1000; ++i) {
      const double r = q.core_lo + (q.core_hi - q.core_lo) * (i + 0.5) / 1000.0;
      CHECK(evaluate_data_jet(q, r).u1 > 0.0);
      CHECK(initial_outgoing_derivative(q, M, r) > 0.0);
    }
  }
  SUBCASE("p below 2 needs eps0 under the threshold") {
    // alpha > 1 for p < 2, so eps0 too close to 1 flips the sign
    const double thr = sign_threshold_eps0(DataFamily::SchwarzschildOutgoing, 1.6, 0.1, 0.3,
                                           0.0, M, 0.01);
    CHECK(thr < 1.0);
    CHECK(thr > 0.0);
    const DataProfile good = make_profile(DataFamily::SchwarzschildOutgoing, 1.6, 3,
                                          0.4 * thr, 0.8 * thr, 0.1, 0.3, 0.0);
    double zmin = 1e300;
    for (int i = 0; i < 1000; ++i) {
      const double r = good.core_lo + (good.core_hi - good.core_lo) * (i + 0.5) / 1000.0;
      zmin = std::min(zmin, initial_outgoing_derivative(good, M, r));
    }
    CHECK(zmin > 0.0);
    const double eps0_bad = std::min(0.999, 1.6 * thr);
    const DataProfile bad = make_profile(DataFamily::SchwarzschildOutgoing, 1.6, 3,
                                         0.4 * eps0_bad, eps0_bad, 0.1, 0.3, 0.0);
    double zmin_bad = 1e300;
    for (int i = 0; i < 1000; ++i) {
      const double r = bad.core_lo + (bad.core_hi - bad.core_lo) * (i + 0.5) / 1000.0;
      zmin_bad = std::min(zmin_bad, initial_outgoing_derivative(bad, M, r));
    }
    CHECK(zmin_bad <= 0.0);
  }
}

TEST_CASE("profile blocks round-trip through the text form") {
  const DataProfile q =
      make_profile(DataFamily::AFOutgoing, 2.2, 3, 0.07, 0.4, 0.1, 0.45, 0.0, 0.55);
  std::istringstream in(profile_to_text(q));
  const auto kv = parse_kv_text(in);
  const DataProfile back = profile_from_kv(kv);
  CHECK(back.family == q.family);
  CHECK(back.alpha == doctest::Approx(q.alpha).epsilon(1e-14));
  CHECK(back.N == doctest::Approx(q.N).epsilon(1e-14));
  CHECK(back.core_lo == doctest::Approx(q.core_lo).epsilon(1e-12));
}
