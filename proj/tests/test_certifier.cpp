#include <doctest.h>

#include "oracles.hpp"
#include "slwave/certifier.hpp"
#include "slwave/charsolver.hpp"

using namespace slwave;

TEST_CASE("lower-bound iteration recursion") {
  const BoundState s0{std::log(0.5), 1.0, 0.0};

  SUBCASE("one step at p = 2") {
    const BoundState s1 = iterate_bound(s0, 2.0);
    CHECK(std::exp(s1.lnC) == doctest::Approx(1.0 / 24.0).epsilon(1e-14));
    CHECK(s1.b == doctest::Approx(2.0));
    CHECK(s1.a == doctest::Approx(2.0 * (1.0 + 1.0) - 1.0));
  }
  SUBCASE("b matches the closed form") {
    BoundState s = s0;
    for (int m = 1; m <= 40; ++m) {
      s = iterate_bound(s, 2.0);
      CHECK(s.b == doctest::Approx(bm_closed(2.0, m)).epsilon(1e-12));
    }
    CHECK(bm_closed(2.0, 3) == doctest::Approx(14.0));
    // the same holds away from p = 2
    for (double p : {1.5, 2.2, 2.4}) {
      BoundState t{std::log(0.5), 0.7, 0.0};
      for (int m = 1; m <= 40; ++m) {
        t = iterate_bound(t, p);
        CHECK(t.b == doctest::Approx(bm_closed(p, m)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("null-frame flavor bookkeeping") {
    const BoundState s1 = iterate_bound(s0, 2.0, IterFlavor::NullFrame, 3);
    // ln 6 instead of ln 3, a -> a p + (n-1)(p-1)/2
    CHECK(std::exp(s1.lnC) == doctest::Approx(0.25 / (6.0 * 2.0)).epsilon(1e-14));
    CHECK(s1.a == doctest::Approx(2.0 + 1.0));
    CHECK(s1.b == doctest::Approx(2.0));
  }
}

TEST_CASE("d_m sequence: recursion, product form, growth certificate") {
  SUBCASE("small cases by hand") {
    const CertSequence s = dm_sequence(2.0, 4);
    CHECK(s.ln_dm[0] == doctest::Approx(std::log(2.0)));
    CHECK(s.ln_dm[1] == doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-14));  // 2^{p+3}
    CHECK(s.ln_dm[2] == doctest::Approx(18.0 * std::log(2.0)).epsilon(1e-13)); // 2^18
    CHECK(s.ln_dm_prod[2] == doctest::Approx(18.0 * std::log(2.0)).epsilon(1e-13));
  }
  SUBCASE("cross-check and tail for the p grid") {
    for (double p : {1.5, 2.0, 2.2, 2.4}) {
      const CertSequence s = dm_sequence(p, 50);
      CHECK(s.max_rel_mismatch < 1e-10);
      CHECK(s.tail_ratio_max <= 1.1 / p);
      CHECK(std::isfinite(s.sup_x));
      // x_m increasing and bounded by sup
      for (std::size_t m = 2; m < s.x.size(); ++m) {
        CHECK(s.x[m] >= s.x[m - 1] - 1e-13);
        CHECK(s.x[m] <= s.sup_x + 1e-13);
      }
    }
  }
  SUBCASE("large m stays in log space") {
    // mildly supercritical growth keeps ln d_m representable out to 1e4
    const CertSequence slow = dm_sequence(1.05, 10000);
    CHECK(std::isfinite(slow.ln_dm_prod.back()));
    CHECK(std::isfinite(slow.sup_x));
    CHECK(slow.tail_ratio_max <= 1.1 / 1.05);
    // at p = 2 the raw logarithm leaves double range near m ~ 1024 but the
    // normalized sequence stays finite and bounded
    const CertSequence fast = dm_sequence(2.0, 2000);
    CHECK(std::isfinite(fast.sup_x));
    for (double x : fast.x) CHECK(std::isfinite(x));
    CHECK(fast.x.back() <= fast.sup_x + 1e-12);
  }
  SUBCASE("certificate dominates the direct recursion") {
    for (double p : {1.5, 2.0, 2.2, 2.4}) {
      const CertSequence s = dm_sequence(p, 50);
      BoundState st{std::log(0.5), 1.0, 0.0};
      for (int m = 0; m <= 50; ++m) {
        CHECK(st.lnC + s.ln_dm_prod[m] >= -1e-10);  // C(m) >= 1/d_m
        st = iterate_bound(st, p);
      }
      // footnote inequality b_m p + 2 <= 2 b_m p needs b_m >= 2
      for (int m = 1; m <= 20; ++m) {
        const double bm = bm_closed(p, m);
        CHECK(bm >= 2.0);
        CHECK(bm * p + 2.0 <= 2.0 * bm * p);
      }
    }
  }
}

TEST_CASE("comparison ODE blow-up") {
  SUBCASE("zero-energy closed form") {
    const double c = 1.0, p = 3.0;
    const double W0p = std::sqrt(2.0 * c / (p + 1.0));
    const OdeBlowupResult r = blowup_ode_solve(c, p, 1.0, W0p, 10.0);
    CHECK(r.blew_up);
    CHECK(separatrix_blowup_time(c, p, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(r.T_blow == doctest::Approx(std::sqrt(2.0)).epsilon(5e-3));
  }
  SUBCASE("nine-point oracle grid to one percent") {
    for (double c : {0.1, 1.0, 10.0})
      for (double p : {1.5, 2.0, 3.0}) {
        const double W0 = 1.0;
        const double W0p = std::sqrt(2.0 * c / (p + 1.0)) * std::pow(W0, (p + 1.0) / 2.0);
        const double T = separatrix_blowup_time(c, p, W0);
        const OdeBlowupResult r = blowup_ode_solve(c, p, W0, W0p, 10.0 * T);
        CHECK(r.blew_up);
        CHECK(std::abs(r.T_blow - T) / T < 0.01);
      }
  }
  SUBCASE("no force, no blow-up") {
    const OdeBlowupResult r = blowup_ode_solve(0.0, 2.0, 1.0, 1.0, 5.0);
    CHECK_FALSE(r.blew_up);
  }
  SUBCASE("positive energy respects the separation bound") {
    const OdeBlowupResult r = blowup_ode_solve(1.0, 2.0, 1.0, 10.0, 10.0);
    CHECK(r.blew_up);
    CHECK(r.energy_nonneg);
    CHECK(r.T_blow <= r.T_separation_bound * 1.01);
  }
}

namespace {
// synthetic radial field u(t, r) = shape(r) * amp(t) on a shell grid
slwave::TimeRadialField synthetic_field(double r1, double r2, std::size_t nt, std::size_t nr,
                                        double t_hi,
                                        const std::function<double(double)>& shape,
                                        const std::function<double(double)>& amp) {
  slwave::TimeRadialField f;
  f.tgrid.resize(nt);
  f.rgrid.resize(nr);
  f.u.resize(nt * nr);
  for (std::size_t i = 0; i < nt; ++i) f.tgrid[i] = t_hi * double(i) / double(nt - 1);
  for (std::size_t j = 0; j < nr; ++j)
    f.rgrid[j] = r1 + (r2 - r1) * double(j) / double(nr - 1);
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nr; ++j) f.u[i * nr + j] = shape(f.rgrid[j]) * amp(f.tgrid[i]);
  return f;
}

double bump(double r, double a, double b) {
  if (r <= a || r >= b) return 0.0;
  const double s = (r - a) / (b - a);
  return std::exp(-1.0 / (s * (1.0 - s)));
}
}  // namespace

TEST_CASE("volume functional trace on synthetic fields") {
  const MetricSpec m = schwarzschild_sphsym(1.0);
  const double r1 = 30.0, r2 = 120.0;
  auto shape = [&](double r) { return bump(r, 50.0, 90.0); };

  SUBCASE("zero field gives zero traces") {
    const auto f = synthetic_field(r1, r2, 21, 201, 2.0, shape, [](double) { return 0.0; });
    const FunctionalTrace tr = volume_functional_trace(f, m, r1, r2, 2.0);
    for (double w : tr.W) CHECK(w == 0.0);
    for (double w : tr.rhs) CHECK(w == 0.0);
  }
  SUBCASE("linear-in-time amplitude has vanishing second derivative") {
    const auto f =
        synthetic_field(r1, r2, 21, 201, 2.0, shape, [](double t) { return 1.0 + 0.5 * t; });
    const FunctionalTrace tr = volume_functional_trace(f, m, r1, r2, 2.0);
    for (std::size_t i = 2; i + 2 < tr.Wpp.size(); ++i)
      CHECK(std::abs(tr.Wpp[i]) < 1e-8 * std::abs(tr.W[i]));
  }
  SUBCASE("quadratic amplitude is differentiated exactly by the stencil") {
    const auto f = synthetic_field(r1, r2, 21, 201, 2.0, shape,
                                   [](double t) { return 1.0 + t * t; });
    const FunctionalTrace tr = volume_functional_trace(f, m, r1, r2, 2.0);
    const double W_shape = tr.W[0];  // amp(0) = 1
    for (std::size_t i = 2; i + 2 < tr.Wpp.size(); ++i)
      CHECK(tr.Wpp[i] == doctest::Approx(2.0 * W_shape).epsilon(1e-9));
  }
  SUBCASE("support violations are rejected") {
    auto wide = [&](double r) { return bump(r, 25.0, 125.0); };
    const auto f = synthetic_field(r1, r2, 11, 101, 1.0, wide, [](double) { return 1.0; });
    CHECK_THROWS_AS(volume_functional_trace(f, m, r1, r2, 2.0), std::domain_error);
  }
}

TEST_CASE("volume functional on evolved shell fields") {
  const DataProfile q = make_profile(DataFamily::KerrShell, 2.0, 3, 0.3, 0.5, 0.15, 0.45);
  const double L = q.L, t_win = 0.3 * L;
  const MetricSpec metric = schwarzschild_sphsym(1.0);

  SUBCASE("a free field has vanishing second derivative") {
    ReducedProblem prb = make_full_support_problem(1.0, q, 1.05 * t_win, Nonlinearity::None);
    std::vector<double> wpp;
    for (double div : {48.0, 96.0}) {
      const NullGridField f = evolve(prb, L / div);
      const TimeRadialField u = lattice_radial_slices(f, 1.0, t_win, 41, 3.0 * L, 12.0 * L);
      const FunctionalTrace tr =
          volume_functional_trace(u, metric, u.rgrid.front(), u.rgrid.back(), 2.0);
      double worst = 0.0;
      for (std::size_t i = 2; i + 2 < tr.t.size(); ++i) worst = std::max(worst, std::abs(tr.Wpp[i]));
      // scale: curvature a quadratic amplitude would produce over the window
      const double scale = tr.W[0] / (t_win * t_win);
      wpp.push_back(worst / scale);
    }
    CHECK(wpp[0] < 1e-3);
    CHECK(wpp[1] < 0.35 * wpp[0]);  // second-order decrease
  }
  SUBCASE("the nonlinear run closes the identity under refinement") {
    ReducedProblem prb = make_full_support_problem(1.0, q, 1.05 * t_win, Nonlinearity::Abs);
    std::vector<double> res;
    for (double div : {48.0, 96.0}) {
      const NullGridField f = evolve(prb, L / div);
      const TimeRadialField u = lattice_radial_slices(f, 1.0, t_win, 41, 3.0 * L, 12.0 * L);
      const FunctionalTrace tr =
          volume_functional_trace(u, metric, u.rgrid.front(), u.rgrid.back(), 2.0);
      res.push_back(tr.max_identity_residual);
      CHECK(tr.max_holder_slack <= 1.05);
      for (std::size_t i = 1; i + 1 < tr.t.size(); ++i) {
        CHECK(tr.W[i] > 0.0);
        CHECK(tr.Wp[i] > 0.0);
      }
    }
    CHECK(res[0] < 0.03);
    CHECK(res[1] < res[0]);
  }
}

TEST_CASE("certificates and traces serialize to JSON") {
  const CertSequence s = dm_sequence(2.0, 10);
  const nlohmann::json js = cert_sequence_to_json(s);
  CHECK(js.at("p").get<double>() == 2.0);
  CHECK(js.at("rows").size() == 11);
  CHECK(js.at("rows")[3].at("b_m").get<double>() == doctest::Approx(14.0));
  CHECK(js.at("rows")[1].at("ln_d_m").get<double>() ==
        doctest::Approx(5.0 * std::log(2.0)));

  FunctionalTrace tr;
  tr.t = {0.0, 0.1, 0.2};
  tr.W = {1.0, 1.1, 1.2};
  tr.Wp = {1.0, 1.0, 1.0};
  tr.Wpp = {0.0, 0.0, 0.0};
  tr.rhs = {0.0, 0.0, 0.0};
  const nlohmann::json jt = trace_to_json(tr);
  CHECK(jt.at("rows").size() == 3);
  CHECK(jt.at("rows")[1].at("W").get<double>() == doctest::Approx(1.1));
}

TEST_CASE("critical exponent") {
  CHECK(strauss_exponent(3) == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-15));
  CHECK(strauss_exponent(4) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(strauss_exponent(2) == doctest::Approx((3.0 + std::sqrt(17.0)) / 2.0).epsilon(1e-15));
  CHECK_THROWS_AS(strauss_exponent(1), std::domain_error);
}

TEST_CASE("lifespan scaling exponent") {
  SUBCASE("n = 3, p = 2") {
    const LifespanExponent e = lifespan_exponent(3, 2.0);
    CHECK(e.value == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(e.n3_form == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(e.inv_sobolev_gap) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("general formula agrees with the n = 3 special form") {
    for (double p : {1.3, 1.8, 2.0, 2.3}) {
      const LifespanExponent e = lifespan_exponent(3, p);
      CHECK(e.general_n == doctest::Approx(e.n3_form).epsilon(1e-13));
    }
  }
  SUBCASE("n = 4 value") {
    const LifespanExponent e = lifespan_exponent(4, 1.5);
    CHECK(e.value == doctest::Approx(1.5 / 2.75).epsilon(1e-13));
  }
  SUBCASE("supercritical powers are out of regime") {
    CHECK_THROWS_AS(lifespan_exponent(3, 2.5), std::domain_error);
    CHECK_THROWS_AS(lifespan_exponent(4, 2.0), std::domain_error);
  }
}
