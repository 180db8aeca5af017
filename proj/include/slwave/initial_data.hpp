// initial_data.hpp
//
// The three explicit small-data families (outgoing power law on
// Schwarzschild, shell data for Kerr, outgoing power law on general AF
// backgrounds), their C^inf compactly supported extensions, and the
// power-law norm scaling audit.

#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slwave/common.hpp"
#include "slwave/metrics.hpp"

namespace slwave {

enum class DataFamily { SchwarzschildOutgoing, KerrShell, AFOutgoing };

inline const char* family_name(DataFamily f) {
  switch (f) {
    case DataFamily::SchwarzschildOutgoing: return "schwarzschild-outgoing";
    case DataFamily::KerrShell: return "kerr-shell";
    case DataFamily::AFOutgoing: return "af-outgoing";
  }
  return "?";
}

inline std::optional<DataFamily> family_from_name(const std::string& s) {
  if (s == "schwarzschild-outgoing") return DataFamily::SchwarzschildOutgoing;
  if (s == "kerr-shell") return DataFamily::KerrShell;
  if (s == "af-outgoing") return DataFamily::AFOutgoing;
  return std::nullopt;
}

struct DataProfile {
  DataFamily family = DataFamily::SchwarzschildOutgoing;
  double p = 2.0;
  int n = 3;
  double eps = 0.1;
  double eps0 = 0.5;
  double theta0 = 0.1;
  double theta1 = 0.5;
  double mu = 0.0;
  double transition = 0.1;  // collar width as a fraction of the inner core radius

  // derived
  double alpha = 0.0;
  double N = 0.0;       // lifespan exponent of the family scale
  double L = 0.0;       // core length scale (eps^-N for power families)
  double core_lo = 0.0, core_hi = 0.0;
  double supp_lo = 0.0, supp_hi = 0.0;
  double amp0 = 0.0, amp1 = 0.0;  // eps0^-theta0, eps0^-theta1
  double pow0 = 0.0, pow1 = 0.0;  // u0 ~ amp0 r^pow0, u1 ~ amp1 r^pow1 on the core

  double collar_width() const { return transition * core_lo; }
};

namespace detail {
[[noreturn]] inline void constraint_fail(const std::string& family, const std::string& ineq) {
  throw std::invalid_argument("make_profile(" + family + "): constraint violated: " + ineq);
}
inline void check(bool ok, const char* family, const std::string& ineq) {
  if (!ok) constraint_fail(family, ineq);
}
}  // namespace detail

// alpha is only a free parameter for the AF family; pass NaN to take the
// midpoint of its admissible interval.
inline DataProfile make_profile(DataFamily family, double p, int n, double eps, double eps0,
                                double theta0, double theta1, double mu = 0.0,
                                double alpha = std::numeric_limits<double>::quiet_NaN(),
                                double transition = 0.1) {
  using detail::check;
  DataProfile q;
  q.family = family;
  q.p = p;
  q.n = n;
  q.eps = eps;
  q.eps0 = eps0;
  q.theta0 = theta0;
  q.theta1 = theta1;
  q.mu = mu;
  q.transition = transition;

  const char* fam = family_name(family);
  check(p > 1.0, fam, "p > 1");
  check(eps0 > 0.0 && eps0 < 1.0, fam, "eps0 in (0, 1)");
  check(eps > 0.0 && eps < eps0, fam, "eps in (0, eps0)");
  check(transition > 0.0 && transition < 0.5, fam, "transition in (0, 1/2)");
  q.amp0 = std::pow(eps0, -theta0);
  q.amp1 = std::pow(eps0, -theta1);

  switch (family) {
    case DataFamily::SchwarzschildOutgoing: {
      check(n == 3, fam, "n = 3");
      check(theta0 > 0.0 && theta0 < theta1 && theta1 < 1.0, fam, "0 < theta0 < theta1 < 1");
      check(mu >= 0.0 && mu < eps0, fam, "mu in [0, eps0)");
      const double denom = 1.0 + 2.0 * p - p * p - mu;
      check(denom > 0.0, fam, "1 + 2p - p^2 - mu > 0 (p below 1 + sqrt(2))");
      q.alpha = 2.0 / (p - 1.0) - 1.0 - mu / (p * (p - 1.0));
      q.N = p * (p - 1.0) / denom;
      check(q.alpha > 1.0 / p, fam, "alpha > 1/p");
      if (std::abs(q.N * (q.alpha - 1.0 / p) - 1.0) > 1e-12)
        detail::constraint_fail(fam, "N (alpha - 1/p) = 1 (internal identity)");
      q.L = std::pow(eps, -q.N);
      q.core_lo = q.L;
      q.core_hi = 10.0 * q.L;
      q.pow0 = -q.alpha - 1.0;
      q.pow1 = -q.alpha - 2.0;
      break;
    }
    case DataFamily::KerrShell: {
      check(n == 3, fam, "n = 3");
      check(theta0 > 0.0 && theta0 < theta1 && theta1 < 1.0, fam, "0 < theta0 < theta1 < 1");
      check(2.0 * theta1 > (p + 1.0) * theta0, fam, "2 theta1 > (p+1) theta0");
      const double denom = 1.0 + 2.0 * p - p * p;
      check(denom > 0.0, fam, "1 + 2p - p^2 > 0 (p below 1 + sqrt(2))");
      check(transition <= 1.0 / 6.0, fam, "transition <= 1/6 (support inside [5L, 10L])");
      q.N = p * (p - 1.0) / denom;
      q.L = std::pow(eps, -q.N);
      q.alpha = 2.0 / (p - 1.0) - 1.0;
      q.core_lo = 6.0 * q.L;
      q.core_hi = 8.0 * q.L;
      q.pow0 = -2.0 / (p - 1.0);
      q.pow1 = -2.0 / (p - 1.0) - 1.0;
      break;
    }
    case DataFamily::AFOutgoing: {
      check(n >= 2, fam, "n >= 2");
      check(theta0 > 0.0 && 2.0 * theta0 < theta1 && theta1 < 1.0, fam,
            "0 < 2 theta0 < theta1 < 1");
      const double alpha_hi = 2.0 / (p - 1.0) - (n - 1.0) / 2.0;
      check(alpha_hi > 1.0 / p, fam, "p < p_c(n) so that 2/(p-1) - (n-1)/2 > 1/p");
      if (std::isnan(alpha)) alpha = 0.5 * (1.0 / p + alpha_hi);
      check(alpha > 1.0 / p && alpha < alpha_hi, fam, "1/p < alpha < 2/(p-1) - (n-1)/2");
      q.alpha = alpha;
      q.N = p / (alpha * p - 1.0);
      q.L = std::pow(eps, -q.N);
      q.core_lo = q.L;
      q.core_hi = 10.0 * q.L;
      q.pow0 = -alpha - (n - 1.0) / 2.0;
      q.pow1 = -alpha - 1.0 - (n - 1.0) / 2.0;
      break;
    }
  }
  const double w = q.collar_width();
  q.supp_lo = q.core_lo - w;
  q.supp_hi = q.core_hi + w;
  return q;
}

// --- evaluation --------------------------------------------------------------

// cutoff chi(r): 1 on the core, smooth ramp over the collars, 0 outside
inline void profile_cutoff(const DataProfile& q, double r, double& chi, double& chi1,
                           double& chi2) {
  const double w = q.collar_width();
  if (r >= q.core_lo && r <= q.core_hi) { chi = 1.0; chi1 = 0.0; chi2 = 0.0; return; }
  if (r <= q.supp_lo || r >= q.supp_hi) { chi = 0.0; chi1 = 0.0; chi2 = 0.0; return; }
  if (r < q.core_lo) {
    const double s = (r - q.supp_lo) / w;
    SmoothStep::eval(s, chi, chi1, chi2);
    chi1 /= w;
    chi2 /= (w * w);
  } else {
    const double s = (q.supp_hi - r) / w;
    SmoothStep::eval(s, chi, chi1, chi2);
    chi1 = -chi1 / w;
    chi2 /= (w * w);
  }
}

struct DataValues {
  double u0 = 0, u1 = 0;
};

struct DataJet {
  double u0 = 0, u0_r = 0, u0_rr = 0;
  double u1 = 0, u1_r = 0;
};

inline DataJet evaluate_data_jet(const DataProfile& q, double r) {
  DataJet j;
  if (r <= q.supp_lo || r >= q.supp_hi || r <= 0.0) return j;
  double chi, chi1, chi2;
  profile_cutoff(q, r, chi, chi1, chi2);
  const double raw0 = q.amp0 * std::pow(r, q.pow0);
  const double raw0_r = raw0 * q.pow0 / r;
  const double raw0_rr = raw0 * q.pow0 * (q.pow0 - 1.0) / (r * r);
  const double raw1 = q.amp1 * std::pow(r, q.pow1);
  const double raw1_r = raw1 * q.pow1 / r;
  j.u0 = chi * raw0;
  j.u0_r = chi * raw0_r + chi1 * raw0;
  j.u0_rr = chi * raw0_rr + 2.0 * chi1 * raw0_r + chi2 * raw0;
  j.u1 = chi * raw1;
  j.u1_r = chi * raw1_r + chi1 * raw1;
  return j;
}

inline DataValues evaluate_data(const DataProfile& q, double r) {
  const DataJet j = evaluate_data_jet(q, r);
  return {j.u0, j.u1};
}

// Outgoing sign condition on Schwarzschild:  Z(0) = r u1 + (1 - 2M/r) d_r(r u0)
// evaluated on the core.  Positive when theta1 > theta0 and eps0 is below the
// family threshold.
inline double initial_outgoing_derivative(const DataProfile& q, double M, double r) {
  const DataJet j = evaluate_data_jet(q, r);
  const double f = 1.0 - 2.0 * M / r;
  return r * j.u1 + f * (j.u0 + r * j.u0_r);
}

// Largest eps0 keeping Z(0) > 0 across a 1000-point core grid, by bisection.
inline double sign_threshold_eps0(DataFamily family, double p, double theta0, double theta1,
                                  double mu, double M, double eps_probe) {
  auto min_z = [&](double eps0v) {
    const DataProfile q = make_profile(family, p, 3, std::min(eps_probe, 0.5 * eps0v), eps0v,
                                       theta0, theta1, mu);
    double zmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000; ++i) {
      const double r = q.core_lo + (q.core_hi - q.core_lo) * (i + 0.5) / 1000.0;
      zmin = std::min(zmin, initial_outgoing_derivative(q, M, r));
    }
    return zmin;
  };
  double lo = 1e-6, hi = 1.0 - 1e-9;
  if (min_z(hi) > 0.0) return hi;
  if (min_z(lo) <= 0.0) return 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (min_z(mid) > 0.0 ? lo : hi) = mid;
  }
  return lo;
}

// --- norm scaling audit -------------------------------------------------------

struct NormAuditRow {
  int m = 0;                  // derivative order applied to (d_r u0, u1)
  double pair_norm = 0.0;     // sqrt(|d^m d_r u0|^2 + |d^m u1|^2) in L^2(r^{n-1} dr)
  double u0_norm = 0.0;       // |d^m u0| in the same measure (scaling report only)
  double expected_exponent = 0.0;
  double measured_exponent = 0.0;
  bool scaling_ok = false;
  bool bound_ok = false;      // pair_norm <= eps0^{-1} eps
};

struct NormAuditReport {
  std::vector<NormAuditRow> rows;
  double bound = 0.0;        // eps0^{-1} eps
  double x_proxy = 0.0;      // interpolation proxy at the critical order s_d
  bool x_proxy_ok = false;
  bool pass = false;
  std::string failure;
};

namespace detail {

// m-th radial derivative of the extended profile pieces, by nested central
// differences of the analytic first-derivative jet (m <= 3 needed)
inline double deriv_m_u(const DataProfile& q, double r, int m, bool first_component) {
  if (m == 0) {
    const DataJet j = evaluate_data_jet(q, r);
    return first_component ? j.u0 : j.u1;
  }
  const double h = std::max(1e-9 * q.core_lo, 1e-3 * q.collar_width());
  return (deriv_m_u(q, r + h, m - 1, first_component) -
          deriv_m_u(q, r - h, m - 1, first_component)) /
         (2.0 * h);
}

// L^2(r^{n-1} dr) norm of d_r^m applied to (u0 or u1): closed-form power
// integral on the core plus Simpson quadrature on the two collars.
inline double radial_seminorm(const DataProfile& q, int m, bool first_component) {
  const double amp = first_component ? q.amp0 : q.amp1;
  const double pw = first_component ? q.pow0 : q.pow1;
  // falling factorial pw (pw-1) ... (pw-m+1)
  double coef = 1.0;
  for (int k = 0; k < m; ++k) coef *= (pw - k);
  const double qq = 2.0 * (pw - m) + (q.n - 1);
  // core: int_{lo}^{hi} (amp coef r^{pw-m})^2 r^{n-1} dr
  double core;
  if (std::abs(qq + 1.0) < 1e-14)
    core = amp * amp * coef * coef * std::log(q.core_hi / q.core_lo);
  else
    core = amp * amp * coef * coef *
           (std::pow(q.core_hi, qq + 1.0) - std::pow(q.core_lo, qq + 1.0)) / (qq + 1.0);
  auto collar_f = [&](double r) {
    const double d = deriv_m_u(q, r, m, first_component);
    return d * d * std::pow(r, q.n - 1.0);
  };
  const double inner = simpson(collar_f, q.supp_lo, q.core_lo, 256);
  const double outer = simpson(collar_f, q.core_hi, q.supp_hi, 256);
  return std::sqrt(std::max(0.0, core + inner + outer));
}

inline double pair_norm(const DataProfile& q, int m) {
  const double a = radial_seminorm(q, m + 1, true);   // d^m (d_r u0)
  const double b = radial_seminorm(q, m, false);      // d^m u1
  return std::sqrt(a * a + b * b);
}

// expected scale exponent of the order-m pair norm in the core length L
inline double expected_pair_exponent(const DataProfile& q, int m) {
  if (q.family == DataFamily::KerrShell)
    return q.n / 2.0 - 2.0 / (q.p - 1.0) - 1.0 - m;
  return 0.5 - q.alpha - 1.0 - m;  // power-law families, scale eps^-N
}

}  // namespace detail

// Audits the L^2 / integer-seminorm scaling of a data family instance: each
// order must scale in the core length like the closed-form power integral
// predicts, and the (grad u0, u1)-type norms must stay below eps0^{-1} eps.
// The fractional critical norm is replaced by the interpolation proxy between
// the weighted-L^2 and L^2 pair norms.
inline NormAuditReport norm_scale_audit(const DataProfile& q, int k_max) {
  if (k_max > 3) throw std::invalid_argument("norm_scale_audit: k_max <= 3");
  NormAuditReport rep;
  rep.bound = std::pow(q.eps0, -1.0) * q.eps;

  // sibling profile at eps/2 for the measured scaling exponent
  const DataProfile q2 = make_profile(q.family, q.p, q.n, 0.5 * q.eps, q.eps0, q.theta0,
                                      q.theta1, q.mu, q.alpha, q.transition);
  const double lnL = std::log(q2.L / q.L);

  bool all_ok = true;
  for (int m = 0; m <= k_max; ++m) {
    NormAuditRow row;
    row.m = m;
    row.pair_norm = detail::pair_norm(q, m);
    row.u0_norm = detail::radial_seminorm(q, m, true);
    row.expected_exponent = detail::expected_pair_exponent(q, m);
    const double nm2 = detail::pair_norm(q2, m);
    row.measured_exponent = std::log(nm2 / row.pair_norm) / lnL;
    row.scaling_ok =
        std::abs(row.measured_exponent - row.expected_exponent) <=
        0.02 * std::abs(row.expected_exponent) + 0.01;
    row.bound_ok = row.pair_norm <= rep.bound;
    if (!row.scaling_ok) {
      all_ok = false;
      rep.failure = "order " + std::to_string(m) + ": scaling exponent " +
                    std::to_string(row.measured_exponent) + " vs expected " +
                    std::to_string(row.expected_exponent);
    }
    if (!row.bound_ok) {
      all_ok = false;
      rep.failure = "order " + std::to_string(m) + ": norm exceeds eps0^-1 eps";
    }
    rep.rows.push_back(row);
  }

  // interpolation proxy for the critical fractional order s_d = 1/2 - 1/p:
  // A_{-1}^{1-s_d} A_0^{s_d} with A_{-1} = sqrt(|u0|^2 + |r u1|^2).
  const double sd = 0.5 - 1.0 / q.p;
  const double a0 = detail::pair_norm(q, 0);
  const double u0n = detail::radial_seminorm(q, 0, true);
  auto r_weighted_u1 = [&](double r) {
    const DataJet j = evaluate_data_jet(q, r);
    return j.u1 * j.u1 * r * r * std::pow(r, q.n - 1.0);
  };
  const double ru1 = std::sqrt(simpson(r_weighted_u1, q.supp_lo, q.supp_hi, 2048));
  const double am1 = std::sqrt(u0n * u0n + ru1 * ru1);
  rep.x_proxy = std::pow(am1, 1.0 - sd) * std::pow(a0, sd);
  rep.x_proxy_ok = rep.x_proxy <= rep.bound;
  rep.pass = all_ok;
  return rep;
}

// --- serialization ------------------------------------------------------------

inline std::string profile_to_text(const DataProfile& q) {
  std::ostringstream os;
  os.precision(17);
  os << "family = " << family_name(q.family) << "\n"
     << "p = " << q.p << "\n"
     << "n = " << q.n << "\n"
     << "eps = " << q.eps << "\n"
     << "eps0 = " << q.eps0 << "\n"
     << "theta0 = " << q.theta0 << "\n"
     << "theta1 = " << q.theta1 << "\n"
     << "mu = " << q.mu << "\n"
     << "alpha = " << q.alpha << "\n"
     << "transition = " << q.transition << "\n";
  return os.str();
}

inline DataProfile profile_from_kv(const std::map<std::string, std::string>& kv) {
  auto get = [&kv](const std::string& k, double dflt, bool required = false) -> double {
    auto it = kv.find(k);
    if (it == kv.end()) {
      if (required) throw ConfigError("profile: missing key '" + k + "'");
      return dflt;
    }
    return std::stod(it->second);
  };
  auto fit = kv.find("family");
  if (fit == kv.end()) throw ConfigError("profile: missing key 'family'");
  auto fam = family_from_name(fit->second);
  if (!fam) throw ConfigError("profile: unknown family '" + fit->second + "'");
  const double alpha = get("alpha", std::numeric_limits<double>::quiet_NaN());
  return make_profile(*fam, get("p", 2.0, true), int(get("n", 3.0)), get("eps", 0.1, true),
                      get("eps0", 0.5, true), get("theta0", 0.1, true),
                      get("theta1", 0.5, true), get("mu", 0.0),
                      (fam == DataFamily::AFOutgoing) ? alpha
                                                      : std::numeric_limits<double>::quiet_NaN(),
                      get("transition", 0.1));
}

}  // namespace slwave
