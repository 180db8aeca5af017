// certifier.hpp
//
// Discrete certificates behind the blow-up arguments: the lower-bound
// iteration in log space, the d_m constant sequence with its closed product
// form, comparison ODE blow-up with separable closed forms, the volume
// functional identity on spherically symmetric backgrounds, and the
// Strauss/lifespan exponent formulas.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slwave/common.hpp"
#include "slwave/metrics.hpp"

namespace slwave {

// --- lower-bound iteration ----------------------------------------------------
//
// States track W >= C t^b (r*+t)^{-a} (outgoing form) or the xi-exponent
// bookkeeping of the double-null variant.

struct BoundState {
  double lnC = 0.0;
  double a = 0.0;
  double b = 0.0;
};

enum class IterFlavor { Schwarzschild, NullFrame };

inline BoundState iterate_bound(const BoundState& s, double p,
                                IterFlavor flavor = IterFlavor::Schwarzschild, int n = 3) {
  if (!(p > 1.0)) throw std::domain_error("iterate_bound: p > 1");
  if (s.b < 0.0) throw std::domain_error("iterate_bound: b >= 0");
  BoundState out;
  const double bp = s.b * p;
  const double lnK = (flavor == IterFlavor::Schwarzschild) ? std::log(3.0) : std::log(6.0);
  out.lnC = p * s.lnC - lnK - std::log(bp + 1.0) - std::log(bp + 2.0);
  out.b = bp + 2.0;
  if (flavor == IterFlavor::Schwarzschild)
    out.a = p * (1.0 + s.a) - 1.0;
  else
    out.a = p * s.a + (n - 1.0) * (p - 1.0) / 2.0;
  return out;
}

inline double bm_closed(double p, int m) {
  return 2.0 * (std::pow(p, m) - 1.0) / (p - 1.0);
}

// log of b_m, stable for large m
inline double ln_bm(double p, int m) {
  if (m == 0) return -std::numeric_limits<double>::infinity();
  return std::log(2.0 / (p - 1.0)) + m * std::log(p) + std::log1p(-std::pow(p, -m));
}

// --- d_m sequence ---------------------------------------------------------------
//
// d_0 = 2, d_1 = 2^{p+3}, d_{m+1} = d_m^p (4 p b_m)^2 for m >= 1, with the
// closed product d_m = d_1^{p^{m-1}} prod_j (4 p b_j)^{2 p^{m-1-j}} and the
// certificate C(m) >= 1/d_m.

struct CertSequence {
  double p = 2.0;
  std::vector<double> ln_dm;        // recursion route (saturates to +inf if e^x overflows ln)
  std::vector<double> ln_dm_prod;   // closed product route
  std::vector<double> ln_C_lower;   // -ln_dm
  std::vector<double> x;            // ln d_m / p^m (bounded, Cauchy)
  double sup_x = 0.0;
  // sup of successive increment ratios of x_m over the tail m >= kTailStart;
  // the ratio tends to 1/p once ln(4 p b_m) is dominated by m ln p
  double tail_ratio_max = 0.0;
  double max_rel_mismatch = 0.0;    // recursion vs product, relative in log space
  static constexpr int kTailStart = 8;
};

inline CertSequence dm_sequence(double p, int m_max) {
  if (!(p > 1.0)) throw std::domain_error("dm_sequence: p > 1");
  if (m_max < 1 || m_max > 10000) throw std::domain_error("dm_sequence: 1 <= m_max <= 1e4");
  CertSequence seq;
  seq.p = p;
  const double lnp = std::log(p);
  const double ln2 = std::log(2.0);

  seq.ln_dm.resize(m_max + 1);
  seq.ln_dm_prod.resize(m_max + 1);
  seq.ln_C_lower.resize(m_max + 1);
  seq.x.resize(m_max + 1);

  seq.ln_dm[0] = ln2;
  if (m_max >= 1) seq.ln_dm[1] = (p + 3.0) * ln2;
  auto ln_4pbm = [&](int m) { return std::log(4.0 * p) + ln_bm(p, m); };
  for (int m = 1; m < m_max; ++m)
    seq.ln_dm[m + 1] = p * seq.ln_dm[m] + 2.0 * ln_4pbm(m);

  // product form: ln d_m = p^{m-1} [ (p+3) ln 2 + sum_{j=1}^{m-1} 2 p^{-j} ln(4 p b_j) ]
  seq.ln_dm_prod[0] = ln2;
  double acc = 0.0, comp = 0.0;  // compensated sum of 2 p^{-j} ln(4 p b_j)
  for (int m = 1; m <= m_max; ++m) {
    if (m >= 2) {
      const int j = m - 1;
      const double term = 2.0 * std::exp(-j * lnp) * ln_4pbm(j);
      const double y = term - comp;
      const double t = acc + y;
      comp = (t - acc) - y;
      acc = t;
    }
    const double bracket = (p + 3.0) * ln2 + acc;
    seq.ln_dm_prod[m] = std::exp((m - 1) * lnp) * bracket;
    seq.x[m] = bracket / p;  // ln d_m / p^m
  }
  seq.x[0] = ln2;

  for (int m = 0; m <= m_max; ++m) {
    seq.ln_C_lower[m] = -seq.ln_dm_prod[m];
    if (m >= 1 && std::isfinite(seq.ln_dm[m]))
      seq.max_rel_mismatch =
          std::max(seq.max_rel_mismatch, std::abs(seq.ln_dm[m] - seq.ln_dm_prod[m]) /
                                             std::max(1.0, std::abs(seq.ln_dm_prod[m])));
  }
  seq.sup_x = *std::max_element(seq.x.begin(), seq.x.end());

  // increments of x_m are 2 p^{-m-1} ln(4 p b_m); their ratio tends to 1/p
  double prev = 0.0;
  for (int m = 2; m < m_max; ++m) {
    const double inc = 2.0 * std::exp(-(m + 1) * lnp) * ln_4pbm(m);
    if (m > CertSequence::kTailStart && prev > 0.0)
      seq.tail_ratio_max = std::max(seq.tail_ratio_max, inc / prev);
    prev = inc;
  }
  return seq;
}

// --- comparison ODE W'' = c W^p --------------------------------------------------

struct OdeBlowupResult {
  bool blew_up = false;
  double T_blow = 0.0;            // extrapolated blow-up time (valid when blew_up)
  double T_separation_bound = 0.0;  // analytic bound, valid when energy >= 0
  bool energy_nonneg = false;
  std::size_t steps = 0;
};

// Closed-form blow-up time on the zero-energy separatrix
// (W')^2 = 2c W^{p+1}/(p+1); also the separation upper bound for E >= 0.
inline double separatrix_blowup_time(double c, double p, double W0) {
  return (2.0 / (p - 1.0)) * std::pow(W0, -(p - 1.0) / 2.0) / std::sqrt(2.0 * c / (p + 1.0));
}

inline OdeBlowupResult blowup_ode_solve(double c, double p, double W0, double W0p,
                                        double T_max) {
  if (!(W0 > 0.0) || W0p < 0.0) throw std::domain_error("blowup_ode_solve: W0 > 0, W0' >= 0");
  OdeBlowupResult res;
  const double E0 = 0.5 * W0p * W0p - (c > 0 ? c * std::pow(W0, p + 1.0) / (p + 1.0) : 0.0);
  res.energy_nonneg = (E0 >= -1e-14 * std::max(1.0, std::abs(E0)));
  if (c > 0.0 && res.energy_nonneg)
    res.T_separation_bound = separatrix_blowup_time(c, p, W0);

  const double W_stop = 1e12 * W0;
  double t = 0.0, W = W0, V = W0p;
  auto acc = [&](double w) { return (c == 0.0) ? 0.0 : c * std::pow(w, p); };
  // samples over the last decade of growth for the tail fit
  std::vector<double> ts, ys;
  const double tail_lo = 1e11 * W0;

  while (t < T_max && W < W_stop) {
    // step control tied to the local timescale 1/sqrt(c W^{p-1})
    double dt = 1e-3;
    if (c > 0.0) {
      const double rate = std::sqrt(c * std::pow(W, p - 1.0));
      const double vscale = (V > 0.0) ? W / V : 1e30;
      dt = 1e-2 * std::min(1.0 / std::max(rate, 1e-30), vscale);
      dt = std::min(dt, T_max * 1e-3);
    } else {
      dt = T_max * 1e-3;
    }
    dt = std::min(dt, T_max - t);
    // classic RK4 on (W, V)
    const double k1w = V, k1v = acc(W);
    const double k2w = V + 0.5 * dt * k1v, k2v = acc(W + 0.5 * dt * k1w);
    const double k3w = V + 0.5 * dt * k2v, k3v = acc(W + 0.5 * dt * k2w);
    const double k4w = V + dt * k3v, k4v = acc(W + dt * k3w);
    W += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    V += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    t += dt;
    ++res.steps;
    if (!std::isfinite(W) || !std::isfinite(V)) break;
    if (W >= tail_lo) {
      ts.push_back(t);
      ys.push_back(std::pow(W, -(p - 1.0) / 2.0));  // asymptotically linear in t
    }
    if (res.steps > 50'000'000) break;
  }

  if (W >= W_stop || !std::isfinite(W)) {
    res.blew_up = true;
    if (ts.size() >= 3) {
      const LineFit f = fit_line(ts, ys);
      res.T_blow = -f.intercept / f.slope;  // zero crossing of W^{-(p-1)/2}
    } else {
      res.T_blow = t;
    }
  }
  return res;
}

// --- volume functional on a shell --------------------------------------------

// Radial field u(t, r) on tensor grids.  The columns may be tabulated along
// a pullback coordinate (tortoise values, say) that is uniform while the
// physical radii are not; `jac` then holds dr/dcoord per column and
// `coord_spacing` the uniform step, so shell integrals keep the r-measure.
struct TimeRadialField {
  std::vector<double> tgrid;
  std::vector<double> rgrid;  // physical radii per column
  std::vector<double> u;      // row-major, u[it * rgrid.size() + ir]
  std::vector<double> jac;    // empty: uniform-r tabulation, unit weights
  double coord_spacing = 0.0;

  double at(std::size_t it, std::size_t ir) const { return u[it * rgrid.size() + ir]; }
  double weight(std::size_t ir) const { return jac.empty() ? 1.0 : jac[ir]; }
  double spacing() const { return jac.empty() ? rgrid[1] - rgrid[0] : coord_spacing; }
};

struct FunctionalTrace {
  std::vector<double> t;
  std::vector<double> W;        // int (-g^tt) u g^{1/2} dx
  std::vector<double> Wp;       // central differences
  std::vector<double> Wpp;      // 5-point interior, 3-point ends
  std::vector<double> rhs;      // int F_p(u) g^{1/2} dx
  std::vector<double> vol;      // int g^{1/2} dx
  double max_identity_residual = 0.0;  // relative to rhs magnitude, interior times
  double max_holder_slack = 0.0;       // W / ((Wpp)^{1/p} vol^{1/p'}), interior times
};

// int_shell over the full solid angle; 4 pi from the angular sector (n = 3)
inline FunctionalTrace volume_functional_trace(const TimeRadialField& fld,
                                               const MetricSpec& metric, double r1, double r2,
                                               double p) {
  const std::size_t nt = fld.tgrid.size();
  const std::size_t nr = fld.rgrid.size();
  if (nt < 5 || nr < 5) throw std::invalid_argument("volume_functional_trace: grid too small");
  if (metric.kind == MetricKind::Kerr)
    throw std::domain_error("volume_functional_trace: needs a spherically symmetric chart");
  if (std::abs(fld.rgrid.front() - r1) > 1e-9 * std::abs(r1) ||
      std::abs(fld.rgrid.back() - r2) > 1e-9 * std::abs(r2))
    throw std::invalid_argument("volume_functional_trace: field grid does not cover the shell");

  // support must stay strictly inside the shell
  for (std::size_t it = 0; it < nt; ++it) {
    const double b0 = std::abs(fld.at(it, 0)), b1 = std::abs(fld.at(it, nr - 1));
    double amax = 0.0;
    for (std::size_t ir = 0; ir < nr; ++ir) amax = std::max(amax, std::abs(fld.at(it, ir)));
    if (amax > 0.0 && std::max(b0, b1) > 1e-10 * amax)
      throw std::domain_error("volume_functional_trace: field support touches the shell boundary at t=" +
                              std::to_string(fld.tgrid[it]));
  }

  FunctionalTrace tr;
  tr.t = fld.tgrid;
  tr.W.resize(nt);
  tr.rhs.resize(nt);
  tr.vol.resize(nt);

  // composite Simpson over the tabulated radial grid (uniform spacing in the
  // tabulation coordinate; `weight` carries the pullback to the r-measure)
  auto integrate = [&](const std::function<double(std::size_t)>& f) {
    const double h = fld.spacing();
    double s = f(0) * fld.weight(0) + f(nr - 1) * fld.weight(nr - 1);
    for (std::size_t i = 1; i + 1 < nr; ++i) s += f(i) * fld.weight(i) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
  };

  for (std::size_t it = 0; it < nt; ++it) {
    const double tt = fld.tgrid[it];
    tr.W[it] = 4.0 * kPi * integrate([&](std::size_t ir) {
      const double r = fld.rgrid[ir];
      const SphInverse inv = sph_inverse(metric, tt, r);
      return (-inv.tt) * fld.at(it, ir) * inv.G * r * r;
    });
    tr.rhs[it] = 4.0 * kPi * integrate([&](std::size_t ir) {
      const double r = fld.rgrid[ir];
      const SphInverse inv = sph_inverse(metric, tt, r);
      return std::pow(std::abs(fld.at(it, ir)), p) * inv.G * r * r;
    });
    tr.vol[it] = 4.0 * kPi * integrate([&](std::size_t ir) {
      const double r = fld.rgrid[ir];
      const SphInverse inv = sph_inverse(metric, tt, r);
      return inv.G * r * r;
    });
  }

  const double dt = fld.tgrid[1] - fld.tgrid[0];
  tr.Wp.assign(nt, 0.0);
  tr.Wpp.assign(nt, 0.0);
  for (std::size_t i = 1; i + 1 < nt; ++i) tr.Wp[i] = (tr.W[i + 1] - tr.W[i - 1]) / (2.0 * dt);
  tr.Wp[0] = (tr.W[1] - tr.W[0]) / dt;
  tr.Wp[nt - 1] = (tr.W[nt - 1] - tr.W[nt - 2]) / dt;
  for (std::size_t i = 0; i < nt; ++i) {
    if (i >= 2 && i + 2 < nt) {
      tr.Wpp[i] = (-tr.W[i - 2] + 16.0 * tr.W[i - 1] - 30.0 * tr.W[i] + 16.0 * tr.W[i + 1] -
                   tr.W[i + 2]) /
                  (12.0 * dt * dt);
    } else if (i == 0) {
      tr.Wpp[i] = (tr.W[0] - 2.0 * tr.W[1] + tr.W[2]) / (dt * dt);
    } else if (i == nt - 1) {
      tr.Wpp[i] = (tr.W[nt - 3] - 2.0 * tr.W[nt - 2] + tr.W[nt - 1]) / (dt * dt);
    } else {
      tr.Wpp[i] = (tr.W[i - 1] - 2.0 * tr.W[i] + tr.W[i + 1]) / (dt * dt);
    }
  }

  const double pprime = p / (p - 1.0);
  for (std::size_t i = 2; i + 2 < nt; ++i) {
    if (tr.rhs[i] > 0.0)
      tr.max_identity_residual =
          std::max(tr.max_identity_residual, std::abs(tr.Wpp[i] - tr.rhs[i]) / tr.rhs[i]);
    if (tr.Wpp[i] > 0.0) {
      const double holder_rhs = std::pow(tr.Wpp[i], 1.0 / p) * std::pow(tr.vol[i], 1.0 / pprime);
      tr.max_holder_slack = std::max(tr.max_holder_slack, tr.W[i] / holder_rhs);
    }
  }
  return tr;
}

// --- JSON exports ----------------------------------------------------------------

inline nlohmann::json cert_sequence_to_json(const CertSequence& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t m = 0; m < s.ln_dm_prod.size(); ++m) {
    rows.push_back({{"m", m},
                    {"b_m", bm_closed(s.p, int(m))},
                    {"ln_d_m", s.ln_dm_prod[m]},
                    {"ln_C_lower", s.ln_C_lower[m]}});
  }
  return {{"p", s.p},
          {"rows", rows},
          {"sup_ln_dm_over_pm", s.sup_x},
          {"tail_ratio_max", s.tail_ratio_max},
          {"recursion_product_mismatch", s.max_rel_mismatch}};
}

inline nlohmann::json trace_to_json(const FunctionalTrace& tr) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    rows.push_back({{"t", tr.t[i]},
                    {"W", tr.W[i]},
                    {"Wp", tr.Wp[i]},
                    {"Wpp", tr.Wpp[i]},
                    {"rhs", tr.rhs[i]}});
  }
  return {{"rows", rows},
          {"max_identity_residual", tr.max_identity_residual},
          {"max_holder_slack", tr.max_holder_slack}};
}

// --- exponents -----------------------------------------------------------------

// positive root of (n-1) p^2 - (n+1) p - 2 = 0
inline double strauss_exponent(int n) {
  if (n < 2) throw std::domain_error("strauss_exponent: n >= 2");
  const double A = n - 1.0, B = -(n + 1.0), C = -2.0;
  return (-B + std::sqrt(B * B - 4.0 * A * C)) / (2.0 * A);
}

enum class LifespanVariant { GeneralN, N3 };

struct LifespanExponent {
  double value = 0.0;      // positive scaling exponent: T* ~ eps^{-value}
  double general_n = 0.0;  // 2p(p-1) / (2 + (n+1)p - (n-1)p^2)
  double n3_form = 0.0;    // p(p-1) / (1 + 2p - p^2), n = 3 only
  double inv_sobolev_gap = 0.0;  // 1 / (s_d - s_c)
};

inline LifespanExponent lifespan_exponent(int n, double p,
                                          LifespanVariant variant = LifespanVariant::GeneralN) {
  if (!(p > 1.0) || p >= strauss_exponent(n))
    throw std::domain_error("lifespan_exponent: need 1 < p < p_c(n)");
  LifespanExponent e;
  const double denom = 2.0 + (n + 1.0) * p - (n - 1.0) * p * p;
  e.general_n = 2.0 * p * (p - 1.0) / denom;
  if (n == 3) e.n3_form = p * (p - 1.0) / (1.0 + 2.0 * p - p * p);
  const double sc = n / 2.0 - 2.0 / (p - 1.0);
  const double sd = 0.5 - 1.0 / p;
  e.inv_sobolev_gap = 1.0 / (sd - sc);
  if (std::abs(e.inv_sobolev_gap - e.general_n) > 1e-12 * std::abs(e.general_n))
    throw std::runtime_error("lifespan_exponent: Sobolev-gap identity violated");
  if (variant == LifespanVariant::N3) {
    if (n != 3) throw std::domain_error("lifespan_exponent: N3 variant needs n = 3");
    e.value = e.n3_form;
  } else {
    e.value = e.general_n;
  }
  return e;
}

}  // namespace slwave
