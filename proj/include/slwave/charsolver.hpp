// charsolver.hpp
//
// Characteristic-lattice evolution of the reduced 1+1 semilinear wave
// equation in null coordinates u = t - r*, v = t + r*, with blow-up
// detection, lifespan measurement under grid refinement, and the pointwise
// lower-bound / outgoing-derivative / light-cone-functional audits on the
// computed field.
//
// Scheme: explicit diamond cells,  W_N = W_E + W_W - W_S + h^2 Q(center),
// where Q is the cell value of d_u d_v W and the state at the center is the
// average of the E and W corners.  Second order on smooth solutions.

#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slwave/certifier.hpp"
#include "slwave/common.hpp"
#include "slwave/initial_data.hpp"
#include "slwave/metrics.hpp"

namespace slwave {

// None switches the forcing off for linear reference runs
enum class Nonlinearity { Abs, Signed, PositiveBranch, None };

inline const char* nonlinearity_name(Nonlinearity n) {
  switch (n) {
    case Nonlinearity::Abs: return "abs";
    case Nonlinearity::Signed: return "signed";
    case Nonlinearity::PositiveBranch: return "positive";
    case Nonlinearity::None: return "none";
  }
  return "?";
}

inline std::optional<Nonlinearity> nonlinearity_from_name(const std::string& s) {
  if (s == "abs") return Nonlinearity::Abs;
  if (s == "signed") return Nonlinearity::Signed;
  if (s == "positive") return Nonlinearity::PositiveBranch;
  if (s == "none") return Nonlinearity::None;
  return std::nullopt;
}

inline double apply_nonlinearity(Nonlinearity kind, double p, double u) {
  switch (kind) {
    case Nonlinearity::Abs: return std::pow(std::abs(u), p);
    case Nonlinearity::Signed: {
      const double a = std::pow(std::abs(u), p - 1.0);
      return a * u;
    }
    case Nonlinearity::PositiveBranch: return u > 0.0 ? std::pow(u, p) : 0.0;
    case Nonlinearity::None: return 0.0;
  }
  return 0.0;
}

// G(r*, W) of the tortoise-coordinate reduction on Schwarzschild:
//   (d_t^2 - d_{r*}^2) W = (1 - 2M/r) [ r F_p(W/r) - (2M/r^3) W ].
// M = 0 collapses to the flat reduction r F_p(W/r).
inline double schwarzschild_rhs(double M, double p, Nonlinearity nonlin, double rstar,
                                double W) {
  const double r = inverse_tortoise(M, rstar);
  if (M > 0.0 && !(r > 2.0 * M)) throw std::domain_error("schwarzschild_rhs: r <= 2M");
  if (M == 0.0 && !(r > 0.0)) throw std::domain_error("schwarzschild_rhs: r <= 0 at M = 0");
  const double f = (M > 0.0) ? 1.0 - 2.0 * M / r : 1.0;
  const double pot = (M > 0.0) ? (2.0 * M / (r * r * r)) * W : 0.0;
  return f * (r * apply_nonlinearity(nonlin, p, W / r) - pot);
}

// --- problem -------------------------------------------------------------------

struct ReducedProblem {
  double M = 1.0;
  double p = 2.0;
  int n = 3;
  Nonlinearity nonlin = Nonlinearity::PositiveBranch;

  // characteristic data on t = 0, as functions of r*
  std::function<double(double)> w0;      // W(0, r*)
  std::function<double(double)> w1;      // d_t W(0, r*)
  std::function<double(double)> w0_d2;   // d_{r*}^2 W(0, r*); optional (FD fallback)

  // lattice box; the outgoing trapezoid has its left boundary at u = u_max
  double u_min = 0.0, u_max = 0.0, v_max = 0.0;
  double t_max = 0.0;

  // optional manufactured source S(t, r*) added to (d_t^2 - d_{r*}^2) W
  std::function<double(double, double)> source;
  // optional replacement for the metric right-hand side, G(r*, W)
  std::function<double(double, double)> rhs_override;
  // values for the leftmost u-column at t > 0; zero when absent (correct
  // whenever the column lies outside the influence cone of the data)
  std::function<double(double, double)> boundary_w;  // (u, v)

  double overflow_guard = 1e280;
};

// W-level characteristic data assembled from an initial-data profile:
//   W = r u,  d_t W = r u1,  d_{r*}^2 W = f d_r ( f d_r (r u0) ).
inline void attach_profile_data(ReducedProblem& prb, const DataProfile& profile) {
  const double M = prb.M;
  prb.w0 = [profile, M](double rs) {
    const double r = inverse_tortoise(M, rs);
    return r * evaluate_data_jet(profile, r).u0;
  };
  prb.w1 = [profile, M](double rs) {
    const double r = inverse_tortoise(M, rs);
    return r * evaluate_data_jet(profile, r).u1;
  };
  prb.w0_d2 = [profile, M](double rs) {
    const double r = inverse_tortoise(M, rs);
    const DataJet j = evaluate_data_jet(profile, r);
    const double f = (M > 0.0) ? 1.0 - 2.0 * M / r : 1.0;
    const double fp = (M > 0.0) ? 2.0 * M / (r * r) : 0.0;
    const double d1 = j.u0 + r * j.u0_r;              // d_r (r u0)
    const double d2 = 2.0 * j.u0_r + r * j.u0_rr;     // d_r^2 (r u0)
    return f * (fp * d1 + f * d2);
  };
}

// Outgoing trapezoid of the Schwarzschild construction:
// t in [0, t_max], r* >= t + 2 eps^-N, right edge padded past the data support.
inline ReducedProblem make_outgoing_problem(double M, const DataProfile& profile, double t_max,
                                            Nonlinearity nonlin = Nonlinearity::PositiveBranch) {
  ReducedProblem prb;
  prb.M = M;
  prb.p = profile.p;
  prb.n = profile.n;
  prb.nonlin = nonlin;
  attach_profile_data(prb, profile);
  const double epsN = std::pow(profile.eps, -profile.N);
  prb.u_max = -2.0 * epsN;
  prb.u_min = -(tortoise(M, profile.supp_hi) + 2.0);
  prb.t_max = t_max;
  prb.v_max = 2.0 * t_max - prb.u_min;
  return prb;
}

// Rectangle covering the full domain of influence of the data support up to
// t_max (for volume-functional runs, which need whole radial slices).
inline ReducedProblem make_full_support_problem(double M, const DataProfile& profile,
                                                double t_max,
                                                Nonlinearity nonlin = Nonlinearity::Abs) {
  ReducedProblem prb;
  prb.M = M;
  prb.p = profile.p;
  prb.n = profile.n;
  prb.nonlin = nonlin;
  attach_profile_data(prb, profile);
  const double rs_lo = tortoise(M, profile.supp_lo);
  const double rs_hi = tortoise(M, profile.supp_hi);
  prb.u_min = -(rs_hi + 2.0);
  prb.u_max = 2.0 * t_max - rs_lo + 2.0;
  prb.v_max = rs_hi + 2.0 * t_max + 2.0;
  prb.t_max = t_max;
  return prb;
}

// --- lattice field ---------------------------------------------------------------

enum : std::uint8_t { kNodeOutside = 0, kNodeValid = 1, kNodeBlowup = 2 };

struct NullGridField {
  double h = 0.0;
  double u0 = 0.0, v0 = 0.0;  // coordinates of node (0, 0)
  std::size_t nu = 0, nv = 0;
  std::vector<double> w;          // flagged nodes store 0, never NaN/inf
  std::vector<std::uint8_t> mask;
  double u_boundary = 0.0;  // left characteristic boundary (outgoing trapezoid)
  double p = 2.0;

  std::size_t idx(std::size_t iu, std::size_t iv) const { return iu * nv + iv; }
  double u_of(std::size_t iu) const { return u0 + h * double(iu); }
  double v_of(std::size_t iv) const { return v0 + h * double(iv); }
  double t_of(std::size_t iu, std::size_t iv) const { return 0.5 * (u_of(iu) + v_of(iv)); }
  double rstar_of(std::size_t iu, std::size_t iv) const {
    return 0.5 * (v_of(iv) - u_of(iu));
  }
  double value(std::size_t iu, std::size_t iv) const { return w[idx(iu, iv)]; }
  std::uint8_t state(std::size_t iu, std::size_t iv) const { return mask[idx(iu, iv)]; }

  // bilinear interpolation in (u, v); all four surrounding nodes must be valid
  double sample(double u, double v, bool* ok = nullptr) const {
    const double fu = (u - u0) / h, fv = (v - v0) / h;
    auto iu = static_cast<std::ptrdiff_t>(std::floor(fu));
    auto iv = static_cast<std::ptrdiff_t>(std::floor(fv));
    // points landing exactly on the last lattice line use the final cell
    if (iu + 1 == std::ptrdiff_t(nu) && fu <= double(nu - 1) + 1e-12) --iu;
    if (iv + 1 == std::ptrdiff_t(nv) && fv <= double(nv - 1) + 1e-12) --iv;
    if (ok) *ok = false;
    if (iu < 0 || iv < 0 || iu + 1 >= std::ptrdiff_t(nu) || iv + 1 >= std::ptrdiff_t(nv))
      return 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        if (mask[idx(iu + a, iv + b)] != kNodeValid) return 0.0;
    const double au = fu - double(iu), av = fv - double(iv);
    const double w00 = w[idx(iu, iv)], w01 = w[idx(iu, iv + 1)];
    const double w10 = w[idx(iu + 1, iv)], w11 = w[idx(iu + 1, iv + 1)];
    if (ok) *ok = true;
    return (1 - au) * (1 - av) * w00 + (1 - au) * av * w01 + au * (1 - av) * w10 +
           au * av * w11;
  }

  void export_csv(std::ostream& os) const {
    os << "u_index,v_index,t,r_star,W\n";
    char line[160];
    for (std::size_t iu = 0; iu < nu; ++iu)
      for (std::size_t iv = 0; iv < nv; ++iv) {
        if (mask[idx(iu, iv)] != kNodeValid) continue;
        std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g,%.17g\n", iu, iv,
                      t_of(iu, iv), rstar_of(iu, iv), w[idx(iu, iv)]);
        os << line;
      }
  }

  // little-endian dump: f64 h, u64 nu, u64 nv, f64 u0, f64 v0, nu*nv f64
  // row-major (u-index major), then nu*nv mask bytes
  void export_binary(std::ostream& os) const {
    auto put = [&os](const void* p, std::size_t n) {
      os.write(static_cast<const char*>(p), std::streamsize(n));
    };
    std::uint64_t dims[2] = {nu, nv};
    put(&h, 8);
    put(dims, 16);
    put(&u0, 8);
    put(&v0, 8);
    put(w.data(), w.size() * 8);
    put(mask.data(), mask.size());
  }
};

// --- evolution -------------------------------------------------------------------

// Marches the diamond scheme over the box.  When `stop_threshold` is finite
// the march ends a few diagonals after the first slice that reaches it (or
// that flags an overflow node); otherwise flagged cones are excluded and the
// march continues to t_max.
inline NullGridField evolve(const ReducedProblem& prb, double h,
                            double stop_threshold = std::numeric_limits<double>::infinity(),
                            int extra_diagonals = 8) {
  if (!(h > 0.0)) throw std::invalid_argument("evolve: h > 0");
  NullGridField f;
  f.h = h;
  f.p = prb.p;
  f.u_boundary = prb.u_max;
  f.nu = std::size_t(std::ceil((prb.u_max - prb.u_min) / h)) + 1;
  f.u0 = prb.u_max - h * double(f.nu - 1);  // align the left boundary column exactly
  f.v0 = -prb.u_max;                        // t = 0 corner at the boundary column
  f.nv = std::size_t(std::ceil((prb.v_max - f.v0) / h)) + 1;
  f.w.assign(f.nu * f.nv, 0.0);
  f.mask.assign(f.nu * f.nv, kNodeOutside);

  const std::ptrdiff_t s0 = std::ptrdiff_t(f.nu) - 1;  // t = 0 anti-diagonal
  const std::ptrdiff_t s_max =
      std::min<std::ptrdiff_t>(s0 + std::ptrdiff_t(std::floor(2.0 * prb.t_max / h)),
                               std::ptrdiff_t(f.nu + f.nv) - 2);

  // r(r*) depends on iv - iu only; cache once per diagonal offset
  const bool metric_rhs = !prb.rhs_override;
  std::vector<double> rcache;
  auto rstar_of_offset = [&](std::ptrdiff_t d) {
    return 0.5 * ((f.v0 - f.u0) + h * double(d - s0));
  };
  if (metric_rhs && prb.M > 0.0) {
    rcache.resize(f.nu + f.nv - 1);
    for (std::size_t d = 0; d < rcache.size(); ++d)
      rcache[d] = inverse_tortoise(prb.M, rstar_of_offset(std::ptrdiff_t(d)));
  }

  auto rhs_metric = [&](std::ptrdiff_t d, double rs, double W) -> double {
    if (prb.M <= 0.0) {
      if (!(rs > 0.0)) return std::numeric_limits<double>::quiet_NaN();
      return rs * apply_nonlinearity(prb.nonlin, prb.p, W / rs);
    }
    const double r = rcache[std::size_t(d)];
    const double fp = 1.0 - 2.0 * prb.M / r;
    return fp * (r * apply_nonlinearity(prb.nonlin, prb.p, W / r) -
                 (2.0 * prb.M / (r * r * r)) * W);
  };

  auto cell_rhs = [&](std::ptrdiff_t d, double t_c, double rs_c, double Wbar) -> double {
    double g = prb.rhs_override ? prb.rhs_override(rs_c, Wbar) : rhs_metric(d, rs_c, Wbar);
    if (prb.source) g += prb.source(t_c, rs_c);
    return 0.25 * g;  // d_u d_v W = G / 4
  };

  auto flag = [&](std::size_t iu, std::size_t iv) {
    f.mask[f.idx(iu, iv)] = kNodeBlowup;
    f.w[f.idx(iu, iv)] = 0.0;
  };

  // t = 0 diagonal
  for (std::size_t iu = 0; iu < f.nu; ++iu) {
    const std::ptrdiff_t iv = s0 - std::ptrdiff_t(iu);
    if (iv < 0 || iv >= std::ptrdiff_t(f.nv)) continue;
    f.w[f.idx(iu, iv)] = prb.w0(f.rstar_of(iu, iv));
    f.mask[f.idx(iu, iv)] = kNodeValid;
  }
  // t = h/2 diagonal by second-order Taylor start, using the equation for d_t^2 W
  for (std::size_t iu = 0; iu < f.nu; ++iu) {
    const std::ptrdiff_t ivs = s0 + 1 - std::ptrdiff_t(iu);
    if (ivs < 0 || ivs >= std::ptrdiff_t(f.nv)) continue;
    const std::size_t iv = std::size_t(ivs);
    if (iu == 0) {  // supplied boundary column, or zero outside the influence cone
      if (prb.boundary_w) f.w[f.idx(iu, iv)] = prb.boundary_w(f.u_of(0), f.v_of(iv));
      f.mask[f.idx(iu, iv)] = kNodeValid;
      continue;
    }
    const double rs = f.rstar_of(iu, iv);
    const double w0v = prb.w0(rs);
    const double wrr = prb.w0_d2 ? prb.w0_d2(rs)
                                 : (prb.w0(rs + h) - 2.0 * w0v + prb.w0(rs - h)) / (h * h);
    const std::ptrdiff_t d = std::ptrdiff_t(iv) - std::ptrdiff_t(iu) + s0;
    double g = prb.rhs_override ? prb.rhs_override(rs, w0v) : rhs_metric(d, rs, w0v);
    if (prb.source) g += prb.source(0.0, rs);
    const double ht = 0.5 * h;
    f.w[f.idx(iu, iv)] = w0v + ht * prb.w1(rs) + 0.5 * ht * ht * (wrr + g);
    f.mask[f.idx(iu, iv)] = kNodeValid;
  }

  std::ptrdiff_t stop_after = -1;
  const bool stopping = std::isfinite(stop_threshold);
  for (std::ptrdiff_t s = s0 + 2; s <= s_max; ++s) {
    const std::size_t iu_lo =
        std::size_t(std::max<std::ptrdiff_t>(1, s - std::ptrdiff_t(f.nv) + 1));
    const std::size_t iu_hi =
        std::size_t(std::min<std::ptrdiff_t>(std::ptrdiff_t(f.nu) - 1, s - 1));
    double slice_sup = 0.0;
    bool slice_flagged = false;
    if (s < std::ptrdiff_t(f.nv)) {
      if (prb.boundary_w)
        f.w[f.idx(0, std::size_t(s))] = prb.boundary_w(f.u_of(0), f.v_of(std::size_t(s)));
      f.mask[f.idx(0, std::size_t(s))] = kNodeValid;
    }
    for (std::size_t iu = iu_lo; iu <= iu_hi; ++iu) {
      const std::size_t iv = std::size_t(s) - iu;
      const std::size_t iN = f.idx(iu, iv);
      const std::size_t iE = f.idx(iu - 1, iv);
      const std::size_t iW = f.idx(iu, iv - 1);
      const std::size_t iS = f.idx(iu - 1, iv - 1);
      if (f.mask[iE] == kNodeOutside || f.mask[iW] == kNodeOutside ||
          f.mask[iS] == kNodeOutside)
        continue;
      if (f.mask[iE] == kNodeBlowup || f.mask[iW] == kNodeBlowup ||
          f.mask[iS] == kNodeBlowup) {
        flag(iu, iv);  // future cone of a flagged node
        slice_flagged = true;
        continue;
      }
      const double wbar = 0.5 * (f.w[iE] + f.w[iW]);
      const double t_c = f.t_of(iu, iv) - 0.5 * h;
      const double rs_c = f.rstar_of(iu, iv);
      const std::ptrdiff_t d = std::ptrdiff_t(iv) - std::ptrdiff_t(iu) + s0;
      const double q = cell_rhs(d, t_c, rs_c, wbar);
      const double wn = f.w[iE] + f.w[iW] - f.w[iS] + h * h * q;
      if (!std::isfinite(wn) || std::abs(wn) > prb.overflow_guard || std::abs(q) > 1e290) {
        flag(iu, iv);
        slice_flagged = true;
        continue;
      }
      f.w[iN] = wn;
      f.mask[iN] = kNodeValid;
      slice_sup = std::max(slice_sup, std::abs(wn));
    }
    if (stopping && stop_after < 0 && (slice_sup >= stop_threshold || slice_flagged))
      stop_after = s + extra_diagonals;
    if (stop_after >= 0 && s >= stop_after) break;
  }
  return f;
}

// --- blow-up detection -------------------------------------------------------------

struct LifespanEstimate {
  bool blew_up = false;
  double T_star = 0.0;
  double error_bar = 0.0;
  double threshold = 0.0;
  double first_t = 0.0;       // first threshold crossing (finest grid)
  double first_rstar = 0.0;
  std::string warning;
  std::vector<double> T_per_h;  // aligned with the h sequence
};

namespace detail {
struct Crossing {
  bool found = false;
  double t = 0.0, rstar = 0.0;
};

inline Crossing first_crossing(const NullGridField& f, double threshold) {
  Crossing c;
  const std::ptrdiff_t s0 = std::ptrdiff_t(f.nu) - 1;
  for (std::ptrdiff_t s = s0; s <= std::ptrdiff_t(f.nu + f.nv) - 2; ++s) {
    double best = 0.0;
    bool hit = false;
    double rs_hit = 0.0, t_hit = 0.0;
    const std::size_t iu_lo =
        std::size_t(std::max<std::ptrdiff_t>(0, s - std::ptrdiff_t(f.nv) + 1));
    const std::size_t iu_hi =
        std::size_t(std::min<std::ptrdiff_t>(std::ptrdiff_t(f.nu) - 1, s));
    for (std::size_t iu = iu_lo; iu <= iu_hi; ++iu) {
      const std::size_t iv = std::size_t(s) - iu;
      const std::uint8_t m = f.state(iu, iv);
      if (m == kNodeOutside) continue;
      const double val = (m == kNodeBlowup) ? std::numeric_limits<double>::infinity()
                                            : std::abs(f.value(iu, iv));
      if (val >= threshold && val > best) {
        best = val;
        hit = true;
        rs_hit = f.rstar_of(iu, iv);
        t_hit = f.t_of(iu, iv);
      }
    }
    if (hit) {
      c.found = true;
      c.t = t_hit;
      c.rstar = rs_hit;
      return c;
    }
  }
  return c;
}
}  // namespace detail

// T*_num(h) is the earliest lattice time whose slice sup reaches the
// threshold; the estimate is taken at the finest grid with the error bar
// |T*(h_min) - T*(2 h_min)|.
inline LifespanEstimate detect_blowup(const ReducedProblem& prb,
                                      const std::vector<double>& h_sequence,
                                      double threshold) {
  if (h_sequence.size() < 2)
    throw std::invalid_argument("detect_blowup: need at least two grid spacings");
  for (std::size_t i = 1; i < h_sequence.size(); ++i)
    if (!(h_sequence[i] < h_sequence[i - 1]))
      throw std::invalid_argument("detect_blowup: h sequence must be strictly decreasing");
  // threshold floor relative to the data
  double sup0 = 0.0;
  const double hs = h_sequence.back();
  for (double rs = -prb.u_max; rs <= -prb.u_min; rs += hs)
    sup0 = std::max(sup0, std::abs(prb.w0(rs)));
  if (sup0 > 0.0 && threshold < 1e3 * sup0)
    throw std::invalid_argument("detect_blowup: threshold below 1e3 x initial sup |W|");

  LifespanEstimate est;
  est.threshold = threshold;
  std::vector<detail::Crossing> crossings;
  for (double h : h_sequence) {
    const NullGridField f = evolve(prb, h, threshold);
    crossings.push_back(detail::first_crossing(f, threshold));
    est.T_per_h.push_back(crossings.back().found ? crossings.back().t : prb.t_max);
  }
  const auto& fine = crossings.back();
  const auto& coarse = crossings[crossings.size() - 2];
  est.blew_up = fine.found;
  est.T_star = fine.found ? fine.t : prb.t_max;
  est.first_t = fine.t;
  est.first_rstar = fine.rstar;
  est.error_bar = std::abs(est.T_per_h.back() - est.T_per_h[est.T_per_h.size() - 2]);
  if (!coarse.found && fine.found)
    est.warning = "blow-up detected only at the finest grid";
  for (std::size_t i = 2; i < est.T_per_h.size(); ++i) {
    const double d1 = est.T_per_h[i - 1] - est.T_per_h[i - 2];
    const double d2 = est.T_per_h[i] - est.T_per_h[i - 1];
    if (d1 * d2 < 0.0 && std::abs(d2) > 2.0 * est.error_bar)
      est.warning = "lifespan estimates not monotone across refinements";
  }
  return est;
}

// --- audits -------------------------------------------------------------------------

struct AuditViolation {
  std::size_t iu = 0, iv = 0;
  double t = 0.0, rstar = 0.0;
  double value = 0.0, bound = 0.0;
  int m = -1;  // -1 marks the (r* - t)-form initial-bound row
};

struct AuditReport {
  std::size_t nodes_checked = 0;
  std::vector<AuditViolation> violations;
  bool pass() const { return violations.empty(); }
};

// Lower bounds of the outgoing-region iteration, audited with 0.9 slack at
// every valid pre-blow-up node whose backward cone stays inside the window
// where the data keep the exact power-law form (r* - t between 2 eps^-N and
// the tortoise image of the outer core radius):
//   row m = -1:  W >= 0.9 * 1/2 eps0^-theta0 (r* - t)^-alpha
//   row m >= 0:  W >= 0.9 * C(m) eps0^{-theta0 p^m} (r* + t)^{1-(alpha+1)p^m} t^{b_m}
inline AuditReport lower_bound_audit(const NullGridField& f, const DataProfile& profile,
                                     int m_max, double M, double t_cut) {
  AuditReport rep;
  const double epsN = std::pow(profile.eps, -profile.N);
  const double s_lo = 2.0 * epsN;
  const double s_hi = tortoise(M, profile.core_hi);
  const double lt0 = -profile.theta0 * std::log(profile.eps0);  // ln eps0^-theta0

  std::vector<BoundState> states;
  BoundState st{std::log(0.5), profile.alpha, 0.0};
  for (int m = 0; m <= m_max; ++m) {
    states.push_back(st);
    st = iterate_bound(st, profile.p);
  }

  for (std::size_t iu = 0; iu < f.nu; ++iu)
    for (std::size_t iv = 0; iv < f.nv; ++iv) {
      if (f.state(iu, iv) != kNodeValid) continue;
      const double t = f.t_of(iu, iv);
      if (t < 0.0 || t >= t_cut) continue;
      const double rs = f.rstar_of(iu, iv);
      const double s = rs - t;
      if (s < s_lo - 1e-9 || s > s_hi + 1e-9) continue;
      ++rep.nodes_checked;
      const double W = f.value(iu, iv);

      const double b_init = 0.5 * std::exp(lt0) * std::pow(s, -profile.alpha);
      if (W < 0.9 * b_init) rep.violations.push_back({iu, iv, t, rs, W, b_init, -1});

      for (int m = 0; m <= m_max; ++m) {
        if (m > 0 && t <= 0.0) continue;  // t^{b_m} vanishes
        const double pm = std::pow(profile.p, m);
        double lnb = states[m].lnC + pm * lt0 - states[m].a * std::log(rs + t);
        if (m > 0) lnb += states[m].b * std::log(t);
        const double bound = std::exp(lnb);
        if (W < 0.9 * bound) rep.violations.push_back({iu, iv, t, rs, W, bound, m});
      }
    }
  return rep;
}

// Outgoing derivative monotonicity: Z = (d_t + d_{r*}) W = 2 d_v W must stay
// above its transported initial value (0.9 slack, sign-safe), and Z(0, .) > 0
// on the power-law window.
struct ZAuditReport {
  std::size_t nodes_checked = 0;
  std::size_t initial_sign_failures = 0;
  std::vector<AuditViolation> violations;
  bool pass() const { return violations.empty() && initial_sign_failures == 0; }
};

inline ZAuditReport z_monotonicity_audit(const NullGridField& f, const DataProfile& profile,
                                         double M, double t_cut) {
  ZAuditReport rep;
  const double epsN = std::pow(profile.eps, -profile.N);
  const double s_lo = 2.0 * epsN;
  const double s_hi = tortoise(M, profile.core_hi);

  auto z0 = [&](double rs) {  // analytic Z(0, r*) from the data jet
    return initial_outgoing_derivative(profile, M, inverse_tortoise(M, rs));
  };

  double zscale = 0.0;
  const double ds = (s_hi - s_lo) / 1000.0;
  for (double s = s_lo; s <= s_hi; s += ds) {
    const double z = z0(s);
    if (!(z > 0.0)) ++rep.initial_sign_failures;
    zscale = std::max(zscale, std::abs(z));
  }
  const double atol = 1e-6 * zscale + 1e-300;

  // Only nodes whose ingoing characteristic traces back into the power-law
  // window are audited; beyond it the truncated data break the transported
  // reference.
  for (std::size_t iu = 1; iu < f.nu; ++iu)
    for (std::size_t iv = 1; iv < f.nv; ++iv) {
      if (f.state(iu, iv) != kNodeValid || f.state(iu, iv - 1) != kNodeValid) continue;
      const double t = f.t_of(iu, iv);
      if (t <= 0.0 || t >= t_cut) continue;
      const double rs = f.rstar_of(iu, iv);
      if (rs - t < s_lo - 1e-9 || rs + t > s_hi + 1e-9) continue;
      const double Z = 2.0 * (f.value(iu, iv) - f.value(iu, iv - 1)) / f.h;
      const double Zref = z0(rs + t - 0.5 * f.h);  // same v-line, half-cell upwind offset
      ++rep.nodes_checked;
      if (Z < Zref - 0.1 * std::abs(Zref) - atol)
        rep.violations.push_back({iu, iv, t, rs, Z, Zref, -1});
    }
  return rep;
}

// --- light-cone functional -----------------------------------------------------------

struct LightconeSample {
  double G = 0.0;
  double Gp = 0.0;
  bool valid = false;
};

// Composite-Simpson integral of lambda^nu W along the segment
// lambda -> (t - lambda, t + 2 eps^-N + lambda); `line` supplies W.
inline double lightcone_G(const std::function<double(double, bool&)>& line, double nu,
                          bool& ok) {
  ok = true;
  const int nseg = 128;
  const double h = 1.0 / nseg;
  double sum = 0.0;
  for (int i = 0; i <= nseg; ++i) {
    const double lam = i * h;
    bool o = true;
    const double wv = line(lam, o);
    if (!o) {
      ok = false;
      return 0.0;
    }
    const double coef = (i == 0 || i == nseg) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += coef * std::pow(lam, nu) * wv;
  }
  return sum * h / 3.0;
}

// G(t) with bilinear sampling of the lattice field; G' by central difference
// with step h.  Only defined on the validity window t >= 6 + 2 eps^-N.
inline LightconeSample lightcone_functional(const NullGridField& f, double nu, double t,
                                            double eps_neg_N) {
  if (t < 6.0 + 2.0 * eps_neg_N - 1e-12)
    throw std::domain_error("lightcone_functional: t below the validity window 6 + 2 eps^-N");
  auto G_at = [&](double tt, bool& ok) {
    auto line = [&](double lam, bool& o) {
      const double ta = tt - lam;
      const double ra = tt + 2.0 * eps_neg_N + lam;
      return f.sample(ta - ra, ta + ra, &o);
    };
    return lightcone_G(line, nu, ok);
  };
  LightconeSample s;
  bool ok0 = false, okp = false, okm = false;
  const double g0 = G_at(t, ok0);
  const double gp = G_at(t + f.h, okp);
  const double gm = G_at(t - f.h, okm);
  if (!(ok0 && okp && okm)) return s;
  s.G = g0;
  s.Gp = (gp - gm) / (2.0 * f.h);
  s.valid = true;
  return s;
}

// Differential-inequality audit for the functional along a blow-up run:
// counts sampled window times where
//   G' >= 0.8 ((p-1)/(p+1)) eps0^{-theta0 (p-1)/2} G^{(p+1)/2}.
struct OdiAuditReport {
  std::size_t sampled = 0;
  std::size_t satisfied = 0;
  std::vector<double> times, G, Gp, rhs;
  double fraction() const { return sampled ? double(satisfied) / double(sampled) : 0.0; }
};

inline OdiAuditReport odi_audit(const NullGridField& f, const DataProfile& profile,
                                double t_cut) {
  OdiAuditReport rep;
  const double p = profile.p;
  const double nu = 2.0 / (p - 1.0);
  const double epsN = std::pow(profile.eps, -profile.N);
  const double c0 =
      0.8 * (p - 1.0) / (p + 1.0) * std::pow(profile.eps0, -profile.theta0 * (p - 1.0) / 2.0);
  const double t_lo = 6.0 + 2.0 * epsN;
  for (double t = t_lo; t < t_cut; t += f.h) {
    const LightconeSample s = lightcone_functional(f, nu, t, epsN);
    if (!s.valid || !(s.G > 0.0)) continue;
    const double rhs = c0 * std::pow(s.G, (p + 1.0) / 2.0);
    ++rep.sampled;
    if (s.Gp >= rhs) ++rep.satisfied;
    rep.times.push_back(t);
    rep.G.push_back(s.G);
    rep.Gp.push_back(s.Gp);
    rep.rhs.push_back(rhs);
  }
  return rep;
}

// --- radial slices for the volume functional ------------------------------------------

// Slices along same-parity lattice diagonals: node values are exact (no
// interpolation), the radial tabulation coordinate is r* with spacing h, and
// the tortoise Jacobian dr/dr* = 1 - 2M/r rides along per column.  Windows
// beyond the lattice are zero-filled, which is exact outside the influence
// cone of the data.
inline TimeRadialField lattice_radial_slices(const NullGridField& f, double M,
                                             double t_window, std::size_t target_slices,
                                             double r_lo, double r_hi) {
  const std::ptrdiff_t s0 = std::ptrdiff_t(f.nu) - 1;  // t = 0 diagonal
  const double dt_req = t_window / double(std::max<std::size_t>(target_slices, 2) - 1);
  const std::size_t stride =
      std::max<std::size_t>(2, 2 * std::size_t(std::llround(dt_req / f.h)));
  const std::size_t slice_count =
      std::size_t(std::floor(t_window / (0.5 * double(stride) * f.h) + 1e-9)) + 1;
  const double rs_lo = tortoise(M, r_lo), rs_hi = tortoise(M, r_hi);

  // nodes on diagonal s have rs = (v0 - u0)/2 + (s - 2 iu) h / 2; stepping s
  // by the even stride keeps every slice on one common rs lattice (mod h)
  const double rs_anchor = 0.5 * (f.v0 - f.u0) + 0.5 * double(s0 % 2) * f.h;
  auto snap = [&](double rs, bool up) {
    const double k = (rs - rs_anchor) / f.h;
    return rs_anchor + (up ? std::ceil(k - 1e-9) : std::floor(k + 1e-9)) * f.h;
  };
  const double rs_first = snap(rs_lo, true);
  std::size_t nr = std::size_t(std::floor((rs_hi - rs_first) / f.h + 1e-9)) + 1;
  if (nr % 2 == 0) --nr;  // Simpson wants an odd count

  TimeRadialField out;
  out.coord_spacing = f.h;
  out.tgrid.resize(slice_count);
  out.rgrid.resize(nr);
  out.jac.resize(nr);
  out.u.assign(slice_count * nr, 0.0);
  for (std::size_t j = 0; j < nr; ++j) {
    const double rs = rs_first + double(j) * f.h;
    const double r = inverse_tortoise(M, rs);
    out.rgrid[j] = r;
    out.jac[j] = (M > 0.0) ? 1.0 - 2.0 * M / r : 1.0;
  }
  for (std::size_t i = 0; i < slice_count; ++i) {
    const std::ptrdiff_t s = s0 + std::ptrdiff_t(i * stride);
    out.tgrid[i] = double(s - s0) * 0.5 * f.h;
    for (std::size_t j = 0; j < nr; ++j) {
      const double rs = rs_first + double(j) * f.h;
      // rs = (v0 - u0)/2 + (s - 2 iu) h/2  =>  iu = (s - (2 rs - v0 + u0)/h) / 2
      const double iu_real = 0.5 * (double(s) - (2.0 * rs - f.v0 + f.u0) / f.h);
      const std::ptrdiff_t iu = std::ptrdiff_t(std::llround(iu_real));
      if (std::abs(iu_real - double(iu)) > 1e-6) continue;  // off-lattice: stays zero
      const std::ptrdiff_t iv = s - iu;
      if (iu < 0 || iv < 0 || iu >= std::ptrdiff_t(f.nu) || iv >= std::ptrdiff_t(f.nv))
        continue;
      if (f.state(std::size_t(iu), std::size_t(iv)) != kNodeValid) continue;
      out.u[i * nr + j] = f.value(std::size_t(iu), std::size_t(iv)) / out.rgrid[j];
    }
  }
  return out;
}

inline TimeRadialField resample_radial(const NullGridField& f, double M, double t_lo,
                                       double t_hi, std::size_t nt, double r_lo, double r_hi,
                                       std::size_t nr) {
  if (nr % 2 == 0) ++nr;  // Simpson wants an odd point count
  TimeRadialField out;
  out.tgrid.resize(nt);
  out.rgrid.resize(nr);
  out.u.assign(nt * nr, 0.0);
  for (std::size_t i = 0; i < nt; ++i)
    out.tgrid[i] = t_lo + (t_hi - t_lo) * double(i) / double(nt - 1);
  for (std::size_t j = 0; j < nr; ++j)
    out.rgrid[j] = r_lo + (r_hi - r_lo) * double(j) / double(nr - 1);
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nr; ++j) {
      const double t = out.tgrid[i];
      const double rs = tortoise(M, out.rgrid[j]);
      bool ok = false;
      const double W = f.sample(t - rs, t + rs, &ok);
      out.u[i * nr + j] = ok ? W / out.rgrid[j] : 0.0;
    }
  return out;
}

}  // namespace slwave
