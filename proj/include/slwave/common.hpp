// common.hpp
//
// Shared numerics for the slwave library: least-squares fits, quadrature,
// the C^inf bump used for compactly supported data extensions, and small
// utilities (error types, hashing, compensated summation).

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace slwave {

// Thrown for malformed configuration files / bad CLI input.  Maps to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when an audit that must hold is violated.  Maps to exit code 3.
struct AuditFailure : std::runtime_error {
  explicit AuditFailure(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// least squares

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r2 = 1.0;
  std::size_t n = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 matched samples");
  const std::size_t n = x.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) { sx += x[i]; sy += y[i]; }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += r * r;
  }
  f.r2 = (syy > 0) ? 1.0 - ss_res / syy : 1.0;
  f.slope_stderr = (n > 2) ? std::sqrt(ss_res / double(n - 2) / sxx) : 0.0;
  return f;
}

// Log-log power fit of |f(r)| against r.  Samples with |f| below `floor`
// are dropped; returns no value when everything vanishes (caller decides
// how to report the exact-zero case).
struct PowerFit {
  bool exact_zero = false;  // all samples below floor
  LineFit fit;
};

inline PowerFit fit_power_law(const std::vector<double>& r, const std::vector<double>& f,
                              double floor = 1e-300) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::abs(f[i]) > floor) {
      lx.push_back(std::log(r[i]));
      ly.push_back(std::log(std::abs(f[i])));
    }
  }
  PowerFit out;
  if (lx.size() < 2) {
    out.exact_zero = true;
    return out;
  }
  out.fit = fit_line(lx, ly);
  return out;
}

inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
  return v;
}

// ---------------------------------------------------------------------------
// quadrature

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t intervals = 128) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / double(intervals);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i)
    s += f(a + h * double(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

namespace detail {
inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

inline QuadResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                   double tol = 1e-10, int max_depth = 40) {
  if (a == b) return {0.0, 0.0};
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double v =
      detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
  // error estimate from one more global halving
  const double v2 = simpson(f, a, b, 512);
  return {v, std::abs(v - v2)};
}

// ---------------------------------------------------------------------------
// C^inf transition bump
//
// step(s) climbs from 0 at s<=0 to 1 at s>=1 with all derivatives vanishing
// at both ends; built from f(s) = exp(-1/s).

struct SmoothStep {
  // value and first two derivatives of exp(-1/s) (0 for s <= 0)
  static void f012(double s, double& f, double& f1, double& f2) {
    if (s <= 1e-12) { f = f1 = f2 = 0.0; return; }
    f = std::exp(-1.0 / s);
    f1 = f / (s * s);
    f2 = f * (1.0 / (s * s * s * s) - 2.0 / (s * s * s));
  }

  static double value(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    double f, f1, f2, g, g1, g2;
    f012(s, f, f1, f2);
    f012(1.0 - s, g, g1, g2);
    return f / (f + g);
  }

  // value, d/ds, d2/ds2
  static void eval(double s, double& v, double& d1, double& d2) {
    if (s <= 0.0) { v = 0; d1 = 0; d2 = 0; return; }
    if (s >= 1.0) { v = 1; d1 = 0; d2 = 0; return; }
    double f, f1, f2, g, g1, g2;
    f012(s, f, f1, f2);
    f012(1.0 - s, g, g1, g2);
    const double gs = -g1;        // d/ds f(1-s)
    const double gss = g2;        // d2/ds2 f(1-s)
    const double den = f + g;
    const double num = f1 * g - f * gs;
    v = f / den;
    d1 = num / (den * den);
    const double num_p = f2 * g - f * gss;  // f1*gs terms cancel
    d2 = num_p / (den * den) - 2.0 * num * (f1 + gs) / (den * den * den);
  }
};

// ---------------------------------------------------------------------------
// flat key = value configuration text ('#' starts a comment)

inline std::map<std::string, std::string> parse_kv_text(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = val;
  }
  return kv;
}

inline std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

// ---------------------------------------------------------------------------
// misc

inline double kahan_sum(const std::vector<double>& v) {
  double s = 0.0, c = 0.0;
  for (double x : v) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline bool nearly_equal(double a, double b, double rel, double abs_tol = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_tol;
}

}  // namespace slwave
