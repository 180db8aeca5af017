// sweep.hpp
//
// Configuration-driven orchestration: lifespan measurements across an
// epsilon grid with per-run refinement error bars, scaling-exponent fits,
// and CSV / JSON / SVG emission.  Runs are embarrassingly parallel with
// deterministic, slot-ordered results; completed records persist as hashed
// JSON files so an interrupted sweep resumes where it stopped.

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "slwave/charsolver.hpp"
#include "slwave/common.hpp"
#include "slwave/initial_data.hpp"
#include "slwave/metrics.hpp"

namespace slwave {

// --- config -------------------------------------------------------------------

enum class HMode { Absolute, Scaled };  // Scaled: h = value * eps^-N per run

struct SweepConfig {
  std::map<std::string, std::string> raw;

  std::string metric_id = "schwarzschild";
  double M = 1.0;
  double a = 0.0;

  std::string family = "schwarzschild-outgoing";  // or "surrogate"
  double p = 2.0;
  int n = 3;
  double eps0 = 0.5;
  double theta0 = 0.1;
  double theta1 = 0.5;
  double mu = 0.0;
  double transition = 0.1;

  std::vector<double> eps_list;
  std::vector<double> h_list;  // descending
  HMode h_mode = HMode::Absolute;
  double threshold_factor = 1e6;  // threshold = factor * sup |W(0)|
  double t_max_factor = 8.0;      // t_max = factor * eps^-N (factor * 1 for surrogate)
  Nonlinearity nonlin = Nonlinearity::PositiveBranch;

  std::string out_dir = "out";
  int workers = 1;
  std::vector<std::string> formats = {"csv", "json"};
  bool timing = true;  // wall-time column; switch off for bit-identical outputs
};

inline SweepConfig sweep_config_from_kv(const std::map<std::string, std::string>& kv) {
  SweepConfig c;
  c.raw = kv;
  auto str = [&](const char* k, const std::string& dflt) {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
  };
  auto num = [&](const char* k, double dflt) {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : std::stod(it->second);
  };
  c.metric_id = str("metric", c.metric_id);
  c.M = num("M", c.M);
  c.a = num("a", c.a);
  c.family = str("family", c.family);
  c.p = num("p", c.p);
  c.n = int(num("n", c.n));
  c.eps0 = num("eps0", c.eps0);
  c.theta0 = num("theta0", c.theta0);
  c.theta1 = num("theta1", c.theta1);
  c.mu = num("mu", c.mu);
  c.transition = num("transition", c.transition);
  if (kv.count("eps_list")) c.eps_list = parse_number_list(kv.at("eps_list"));
  if (kv.count("h_list")) c.h_list = parse_number_list(kv.at("h_list"));
  const std::string hm = str("h_mode", "absolute");
  if (hm == "absolute") c.h_mode = HMode::Absolute;
  else if (hm == "scaled") c.h_mode = HMode::Scaled;
  else throw ConfigError("config: h_mode must be 'absolute' or 'scaled'");
  c.threshold_factor = num("threshold_factor", c.threshold_factor);
  c.t_max_factor = num("t_max_factor", c.t_max_factor);
  if (kv.count("nonlinearity")) {
    auto nl = nonlinearity_from_name(kv.at("nonlinearity"));
    if (!nl) throw ConfigError("config: unknown nonlinearity '" + kv.at("nonlinearity") + "'");
    c.nonlin = *nl;
  }
  c.out_dir = str("out_dir", c.out_dir);
  c.workers = int(num("workers", c.workers));
  if (kv.count("formats")) {
    c.formats.clear();
    std::istringstream is(kv.at("formats"));
    std::string item;
    while (std::getline(is, item, ','))
      if (!item.empty()) c.formats.push_back(item);
  }
  c.timing = str("timing", "on") != "off";
  return c;
}

inline void validate_sweep_config(const SweepConfig& c) {
  if (c.eps_list.size() < 3)
    throw ConfigError("config: eps_list needs >= 3 entries for exponent fitting");
  for (std::size_t i = 1; i < c.eps_list.size(); ++i)
    if (!(c.eps_list[i] < c.eps_list[i - 1]))
      throw ConfigError("config: eps_list must be strictly decreasing");
  if (c.family != "surrogate") {
    for (double e : c.eps_list)
      if (!(e < c.eps0))
        throw ConfigError("config: eps = " + std::to_string(e) +
                          " >= eps0 violates the data-family constraint eps < eps0");
  }
  if (c.h_list.size() < 2) throw ConfigError("config: h_list needs >= 2 entries");
  for (std::size_t i = 1; i < c.h_list.size(); ++i)
    if (!(c.h_list[i] < c.h_list[i - 1]))
      throw ConfigError("config: h_list must be strictly decreasing");
  if (c.workers < 1) throw ConfigError("config: workers >= 1");
}

// --- records -------------------------------------------------------------------

struct SweepRecord {
  double eps = 0.0;
  double T_star = 0.0;
  double error_bar = 0.0;
  double h = 0.0;  // finest grid used
  bool blew_up = false;
  double seconds = 0.0;
  double first_t = 0.0, first_rstar = 0.0;
};

struct FitResult {
  double slope = 0.0, stderr_slope = 0.0, intercept = 0.0;
  std::size_t points = 0;
};

struct SweepTable {
  std::vector<SweepRecord> records;  // ordered by descending eps
  std::optional<FitResult> fit;
};

// content hash of the physics-relevant config subset plus (eps, h)
inline std::uint64_t record_key(const SweepConfig& c, double eps, double h_fine) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "metric=%s;M=%.17g;a=%.17g;family=%s;p=%.17g;n=%d;eps0=%.17g;th0=%.17g;"
                "th1=%.17g;mu=%.17g;tr=%.17g;thr=%.17g;tmax=%.17g;nl=%s;eps=%.17g;h=%.17g",
                c.metric_id.c_str(), c.M, c.a, c.family.c_str(), c.p, c.n, c.eps0, c.theta0,
                c.theta1, c.mu, c.transition, c.threshold_factor, c.t_max_factor,
                nonlinearity_name(c.nonlin), eps, h_fine);
  return fnv1a64(buf);
}

// --- single runs -----------------------------------------------------------------

// Flat-top surrogate: data W = eps, zero velocity, frozen power right side
// W -> W^p; each interior column follows the comparison ODE.
inline ReducedProblem make_surrogate_problem(double eps, double p, double t_max) {
  ReducedProblem prb;
  prb.M = 0.0;
  prb.p = p;
  prb.nonlin = Nonlinearity::PositiveBranch;
  const double half = 2.0 * t_max + 2.0;
  prb.u_min = -half;
  prb.u_max = half;
  prb.v_max = half + 2.0 * t_max;
  prb.t_max = t_max;
  prb.w0 = [eps](double) { return eps; };
  prb.w1 = [](double) { return 0.0; };
  prb.w0_d2 = [](double) { return 0.0; };
  // frozen right side: (d_t^2 - d_rs^2) W = W^p, the comparison ODE along
  // spatially flat columns
  prb.rhs_override = [p](double, double W) { return W > 0.0 ? std::pow(W, p) : 0.0; };
  return prb;
}

struct PreparedRun {
  ReducedProblem problem;
  std::vector<double> h_seq;  // descending, the two finest grids of the config
  double threshold = 0.0;
  double eps = 0.0;
};

inline PreparedRun prepare_run(const SweepConfig& c, double eps) {
  PreparedRun run;
  run.eps = eps;
  double scale = 1.0;
  if (c.family == "surrogate") {
    // the separatrix time underestimates the zero-velocity blow-up by an
    // order-one factor; half the configured headroom keeps the box modest
    const double t_guess = 0.5 * c.t_max_factor * separatrix_blowup_time(1.0, c.p, eps);
    run.problem = make_surrogate_problem(eps, c.p, t_guess);
    run.threshold = c.threshold_factor * eps;
  } else {
    auto fam = family_from_name(c.family);
    if (!fam) throw ConfigError("config: unknown family '" + c.family + "'");
    if (c.metric_id != "schwarzschild" && c.metric_id != "minkowski")
      throw ConfigError("config: lattice runs support schwarzschild/minkowski backgrounds");
    const double M = (c.metric_id == "minkowski") ? 0.0 : c.M;
    const DataProfile profile = make_profile(*fam, c.p, c.n, eps, c.eps0, c.theta0, c.theta1,
                                             c.mu, std::numeric_limits<double>::quiet_NaN(),
                                             c.transition);
    scale = std::pow(eps, -profile.N);
    run.problem = make_outgoing_problem(M, profile, c.t_max_factor * scale, c.nonlin);
    double sup0 = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const double r = profile.supp_lo + (profile.supp_hi - profile.supp_lo) * (i + 0.5) / 2000.0;
      sup0 = std::max(sup0, r * evaluate_data_jet(profile, r).u0);
    }
    run.threshold = c.threshold_factor * sup0;
  }
  const std::size_t nh = c.h_list.size();
  for (std::size_t i = (nh >= 2 ? nh - 2 : 0); i < nh; ++i)
    run.h_seq.push_back(c.h_mode == HMode::Scaled ? c.h_list[i] * scale : c.h_list[i]);
  return run;
}

// --- sweep runner ------------------------------------------------------------------

namespace detail {
inline nlohmann::json record_to_json(const SweepRecord& r) {
  return nlohmann::json{{"eps", r.eps},       {"T_star", r.T_star},
                        {"error_bar", r.error_bar}, {"h", r.h},
                        {"blew_up", r.blew_up},     {"seconds", r.seconds},
                        {"first_t", r.first_t},     {"first_rstar", r.first_rstar}};
}

inline SweepRecord record_from_json(const nlohmann::json& j) {
  SweepRecord r;
  r.eps = j.at("eps").get<double>();
  r.T_star = j.at("T_star").get<double>();
  r.error_bar = j.at("error_bar").get<double>();
  r.h = j.at("h").get<double>();
  r.blew_up = j.at("blew_up").get<bool>();
  r.seconds = j.value("seconds", 0.0);
  r.first_t = j.value("first_t", 0.0);
  r.first_rstar = j.value("first_rstar", 0.0);
  return r;
}
}  // namespace detail

// One task per eps; the two finest grids run inside the task (the error bar
// needs both).  Completed records are written to <out>/records/<hash>.json
// and skipped on resume.
inline SweepTable run_sweep(const SweepConfig& cfg,
                            std::ostream* log = nullptr) {
  validate_sweep_config(cfg);
  namespace fs = std::filesystem;
  const fs::path rec_dir = fs::path(cfg.out_dir) / "records";
  fs::create_directories(rec_dir);

  SweepTable table;
  table.records.resize(cfg.eps_list.size());
  std::vector<char> done(cfg.eps_list.size(), 0);

  // resume from persisted records
  for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
    const PreparedRun probe = prepare_run(cfg, cfg.eps_list[i]);
    const std::uint64_t key = record_key(cfg, cfg.eps_list[i], probe.h_seq.back());
    char name[32];
    std::snprintf(name, sizeof name, "%016llx.json", static_cast<unsigned long long>(key));
    const fs::path p = rec_dir / name;
    if (fs::exists(p)) {
      std::ifstream in(p);
      nlohmann::json j;
      in >> j;
      table.records[i] = detail::record_from_json(j);
      done[i] = 1;
      if (log) *log << "resume: eps=" << cfg.eps_list[i] << " loaded\n";
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.eps_list.size()) return;
      if (done[i]) continue;
      const double eps = cfg.eps_list[i];
      const auto t0 = std::chrono::steady_clock::now();
      SweepRecord rec;
      rec.eps = eps;
      try {
        const PreparedRun run = prepare_run(cfg, eps);
        const LifespanEstimate est = detect_blowup(run.problem, run.h_seq, run.threshold);
        rec.T_star = est.T_star;
        rec.error_bar = est.error_bar;
        rec.h = run.h_seq.back();
        rec.blew_up = est.blew_up;
        rec.first_t = est.first_t;
        rec.first_rstar = est.first_rstar;
      } catch (const std::exception& e) {
        // per-run failures are recorded, never abort sibling runs
        rec.blew_up = false;
        rec.T_star = std::numeric_limits<double>::quiet_NaN();
        std::lock_guard<std::mutex> lk(io_mutex);
        if (log) *log << "run eps=" << eps << " failed: " << e.what() << "\n";
      }
      const auto t1 = std::chrono::steady_clock::now();
      rec.seconds = cfg.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
      table.records[i] = rec;

      const std::uint64_t key = record_key(cfg, eps, rec.h);
      char name[32];
      std::snprintf(name, sizeof name, "%016llx.json", static_cast<unsigned long long>(key));
      const fs::path p = rec_dir / name;
      const fs::path tmp = rec_dir / (std::string(name) + ".tmp");
      {
        std::ofstream out(tmp);
        out << detail::record_to_json(rec).dump(2) << "\n";
      }
      fs::rename(tmp, p);
      std::lock_guard<std::mutex> lk(io_mutex);
      if (log)
        *log << "eps=" << eps << " T*=" << rec.T_star << " +- " << rec.error_bar
             << (rec.blew_up ? "" : " (no blow-up)") << "\n";
    }
  };

  std::vector<std::thread> pool;
  const int k = std::max(1, cfg.workers);
  pool.reserve(k);
  for (int w = 0; w < k; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return table;
}

// --- fitting --------------------------------------------------------------------

inline FitResult fit_exponent(const SweepTable& table) {
  std::vector<double> x, y;
  for (const auto& r : table.records)
    if (r.blew_up && std::isfinite(r.T_star) && r.T_star > 0.0) {
      x.push_back(std::log(r.eps));
      y.push_back(std::log(r.T_star));
    }
  if (x.size() < 3)
    throw std::runtime_error("fit_exponent: need >= 3 blow-up records");
  const LineFit f = fit_line(x, y);
  return {f.slope, f.slope_stderr, f.intercept, f.n};
}

// --- emission -------------------------------------------------------------------

inline std::string table_to_csv(const SweepTable& t) {
  std::ostringstream os;
  os << "eps,T_star,error_bar,h,blew_up,seconds\n";
  char line[256];
  for (const auto& r : t.records) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%d,%.3f\n", r.eps, r.T_star,
                  r.error_bar, r.h, r.blew_up ? 1 : 0, r.seconds);
    os << line;
  }
  return os.str();
}

inline SweepTable table_from_csv(std::istream& in) {
  SweepTable t;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SweepRecord r;
    int blew = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%d,%lf", &r.eps, &r.T_star, &r.error_bar,
                    &r.h, &blew, &r.seconds) >= 5) {
      r.blew_up = blew != 0;
      t.records.push_back(r);
    }
  }
  return t;
}

inline nlohmann::json table_to_json(const SweepTable& t, double reference_slope) {
  nlohmann::json j;
  j["records"] = nlohmann::json::array();
  for (const auto& r : t.records) j["records"].push_back(detail::record_to_json(r));
  if (t.fit) {
    j["fit"] = {{"slope", t.fit->slope},
                {"stderr", t.fit->stderr_slope},
                {"intercept", t.fit->intercept},
                {"points", t.fit->points},
                {"reference_slope", reference_slope}};
  }
  return j;
}

// Hand-rolled log-log scatter with the fitted line and the reference-slope
// line; exactly one "fit" and one "ref" line element.
inline std::string table_to_svg(const SweepTable& t, double reference_slope) {
  std::vector<double> xs, ys;
  for (const auto& r : t.records)
    if (r.blew_up && r.T_star > 0.0) {
      xs.push_back(std::log10(r.eps));
      ys.push_back(std::log10(r.T_star));
    }
  std::ostringstream os;
  const int Wpx = 640, Hpx = 480, Mpx = 60;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Wpx << "\" height=\"" << Hpx
     << "\" viewBox=\"0 0 " << Wpx << " " << Hpx << "\">\n";
  if (xs.size() >= 2) {
    double xlo = xs[0], xhi = xs[0], ylo = ys[0], yhi = ys[0];
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xlo = std::min(xlo, xs[i]); xhi = std::max(xhi, xs[i]);
      ylo = std::min(ylo, ys[i]); yhi = std::max(yhi, ys[i]);
    }
    const double padx = 0.1 * (xhi - xlo + 1e-12), pady = 0.1 * (yhi - ylo + 1e-12);
    xlo -= padx; xhi += padx; ylo -= pady; yhi += pady;
    auto X = [&](double x) { return Mpx + (x - xlo) / (xhi - xlo) * (Wpx - 2 * Mpx); };
    auto Y = [&](double y) { return Hpx - Mpx - (y - ylo) / (yhi - ylo) * (Hpx - 2 * Mpx); };
    os << "<rect x=\"" << Mpx << "\" y=\"" << Mpx << "\" width=\"" << Wpx - 2 * Mpx
       << "\" height=\"" << Hpx - 2 * Mpx << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << Wpx / 2 << "\" y=\"" << Hpx - 15
       << "\" text-anchor=\"middle\">log10 eps</text>\n";
    os << "<text x=\"15\" y=\"" << Hpx / 2 << "\" transform=\"rotate(-90 15 " << Hpx / 2
       << ")\" text-anchor=\"middle\">log10 T*</text>\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
      os << "<circle cx=\"" << X(xs[i]) << "\" cy=\"" << Y(ys[i])
         << "\" r=\"4\" fill=\"steelblue\"/>\n";
    const LineFit f = fit_line(xs, ys);
    os << "<line class=\"fit\" x1=\"" << X(xlo) << "\" y1=\"" << Y(f.slope * xlo + f.intercept)
       << "\" x2=\"" << X(xhi) << "\" y2=\"" << Y(f.slope * xhi + f.intercept)
       << "\" stroke=\"crimson\" stroke-width=\"2\"/>\n";
    // reference line through the data centroid
    double cx = 0, cy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) { cx += xs[i]; cy += ys[i]; }
    cx /= xs.size(); cy /= ys.size();
    auto refy = [&](double x) { return cy + reference_slope * (x - cx); };
    os << "<line class=\"ref\" x1=\"" << X(xlo) << "\" y1=\"" << Y(refy(xlo)) << "\" x2=\""
       << X(xhi) << "\" y2=\"" << Y(refy(xhi))
       << "\" stroke=\"gray\" stroke-dasharray=\"6,4\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << Wpx - Mpx << "\" y=\"" << Mpx - 10 << "\" text-anchor=\"end\">fit "
       << f.slope << " / ref " << reference_slope << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// Writes the requested formats; an empty list is a no-op success.
inline std::vector<std::string> emit(const SweepTable& t, double reference_slope,
                                     const std::vector<std::string>& formats,
                                     const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  if (formats.empty()) return written;
  if (t.records.empty()) throw std::invalid_argument("emit: empty table");
  for (const auto& fmt : formats)
    if (fmt != "csv" && fmt != "json" && fmt != "svg")
      throw ConfigError("emit: unknown format '" + fmt + "'");
  fs::create_directories(out_dir);
  for (const auto& fmt : formats) {
    const fs::path p = fs::path(out_dir) / ("sweep." + fmt);
    std::ofstream out(p);
    if (!out) throw std::runtime_error("emit: cannot open " + p.string());
    if (fmt == "csv") out << table_to_csv(t);
    else if (fmt == "json") out << table_to_json(t, reference_slope).dump(2) << "\n";
    else out << table_to_svg(t, reference_slope);
    written.push_back(p.string());
  }
  return written;
}

}  // namespace slwave
