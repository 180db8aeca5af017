// slwave command line tool
//
// Subcommands: simulate (single lifespan run), sweep (parameter grid),
// fit (scaling exponent from a sweep table), certify (certificate suite),
// nullframe (chart and coefficient dumps), check-metric (structural and
// decay audits).  Exit codes: 0 success, 2 configuration error, 3 audit
// failure, 4 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "slwave/certifier.hpp"
#include "slwave/charsolver.hpp"
#include "slwave/metrics.hpp"
#include "slwave/nullframe.hpp"
#include "slwave/sweep.hpp"

using namespace slwave;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> load_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_kv_text(in);
}

int cmd_simulate(const std::string& config_path, const std::string& profile_path,
                 const std::string& out_dir, const std::string& dump) {
  auto kv = load_kv(config_path);
  if (!profile_path.empty()) {
    auto pkv = load_kv(profile_path);
    for (auto& [k, v] : pkv) kv[k] = v;
  }
  SweepConfig cfg = sweep_config_from_kv(kv);
  if (cfg.eps_list.empty() && kv.count("eps")) cfg.eps_list = {std::stod(kv.at("eps"))};
  if (cfg.eps_list.empty()) throw ConfigError("simulate: eps_list needs at least one entry");
  if (cfg.h_list.size() < 2) throw ConfigError("simulate: h_list needs two entries");

  const double eps = cfg.eps_list.front();
  const PreparedRun run = prepare_run(cfg, eps);
  const LifespanEstimate est = detect_blowup(run.problem, run.h_seq, run.threshold);

  fs::create_directories(out_dir);
  {
    std::ofstream js(fs::path(out_dir) / "lifespan.json");
    nlohmann::json j{{"eps", eps},
                     {"blew_up", est.blew_up},
                     {"T_star", est.T_star},
                     {"error_bar", est.error_bar},
                     {"threshold", est.threshold},
                     {"first_t", est.first_t},
                     {"first_rstar", est.first_rstar},
                     {"warning", est.warning}};
    js << j.dump(2) << "\n";
  }
  if (!dump.empty()) {
    const NullGridField f = evolve(run.problem, run.h_seq.back(), est.threshold);
    std::istringstream fmts(dump);
    std::string fmt;
    while (std::getline(fmts, fmt, ',')) {
      if (fmt == "csv") {
        std::ofstream os(fs::path(out_dir) / "field.csv");
        f.export_csv(os);
      } else if (fmt == "bin") {
        std::ofstream os(fs::path(out_dir) / "field.bin", std::ios::binary);
        f.export_binary(os);
      } else {
        throw ConfigError("simulate: unknown dump format '" + fmt + "'");
      }
    }
  }
  std::cout << "eps = " << eps << (est.blew_up ? "  blew up, T* = " : "  no blow-up by ")
            << est.T_star << " +- " << est.error_bar << "\n";
  if (!est.warning.empty()) std::cout << "warning: " << est.warning << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, std::string out_dir, int workers,
              const std::string& formats) {
  auto kv = load_kv(config_path);
  SweepConfig cfg = sweep_config_from_kv(kv);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (workers > 0) cfg.workers = workers;
  if (!formats.empty()) {
    cfg.formats.clear();
    std::istringstream is(formats);
    std::string item;
    while (std::getline(is, item, ','))
      if (!item.empty()) cfg.formats.push_back(item);
  }
  SweepTable table = run_sweep(cfg, &std::cout);
  double ref_slope = 0.0;
  try {
    table.fit = fit_exponent(table);
    ref_slope = -lifespan_exponent(cfg.n, cfg.p).value;
    std::cout << "fitted slope " << table.fit->slope << " +- " << table.fit->stderr_slope
              << " (reference " << ref_slope << ")\n";
  } catch (const std::exception& e) {
    std::cout << "fit skipped: " << e.what() << "\n";
  }
  for (const auto& f : emit(table, ref_slope, cfg.formats, cfg.out_dir))
    std::cout << "wrote " << f << "\n";
  return 0;
}

int cmd_fit(const std::string& table_path, int n, double p) {
  std::ifstream in(table_path);
  if (!in) throw ConfigError("fit: cannot open " + table_path);
  SweepTable table = table_from_csv(in);
  const FitResult f = fit_exponent(table);
  std::cout << "slope     " << f.slope << "\n"
            << "stderr    " << f.stderr_slope << "\n"
            << "intercept " << f.intercept << "\n";
  const double ref = -lifespan_exponent(n, p).value;
  std::cout << "reference " << ref << " (deviation " << f.slope - ref << ")\n";
  return 0;
}

int cmd_certify(const std::string& out_dir) {
  bool all_ok = true;
  auto row = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << "\n";
    all_ok = all_ok && ok;
  };

  for (double p : {1.5, 2.0, 2.2, 2.4}) {
    const CertSequence s = dm_sequence(p, 50);
    char buf[160];
    std::snprintf(buf, sizeof buf, "mismatch %.2e, tail ratio %.3f vs %.3f",
                  s.max_rel_mismatch, s.tail_ratio_max, 1.1 / p);
    row("d_m recursion/product cross-check, p = " + std::to_string(p),
        s.max_rel_mismatch < 1e-10 && s.tail_ratio_max <= 1.1 / p, buf);

    BoundState st{std::log(0.5), 1.0, 0.0};
    bool dom = true;
    for (int m = 0; m <= 50; ++m) {
      dom = dom && (st.lnC + s.ln_dm_prod[m] >= -1e-10);
      st = iterate_bound(st, p);
    }
    row("C(m) >= 1/d_m for m <= 50, p = " + std::to_string(p), dom, "");
  }

  bool ode_ok = true;
  double worst = 0.0;
  for (double c : {0.1, 1.0, 10.0})
    for (double p : {1.5, 2.0, 3.0}) {
      const double W0p = std::sqrt(2.0 * c / (p + 1.0));
      const double T = separatrix_blowup_time(c, p, 1.0);
      const OdeBlowupResult r = blowup_ode_solve(c, p, 1.0, W0p, 10.0 * T);
      const double dev = std::abs(r.T_blow - T) / T;
      worst = std::max(worst, dev);
      ode_ok = ode_ok && r.blew_up && dev < 0.01;
    }
  char buf[96];
  std::snprintf(buf, sizeof buf, "worst deviation %.3f%%", 100.0 * worst);
  row("comparison ODE vs separatrix closed form (9 cases)", ode_ok, buf);

  bool exp_ok = true;
  exp_ok = exp_ok && std::abs(strauss_exponent(3) - (1.0 + std::sqrt(2.0))) < 1e-14;
  exp_ok = exp_ok && std::abs(strauss_exponent(4) - 2.0) < 1e-14;
  const LifespanExponent e32 = lifespan_exponent(3, 2.0);
  exp_ok = exp_ok && std::abs(e32.value - 2.0) < 1e-13 &&
           std::abs(e32.inv_sobolev_gap - e32.general_n) < 1e-13;
  row("critical and lifespan exponent identities", exp_ok, "");

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    nlohmann::json all = nlohmann::json::array();
    for (double p : {1.5, 2.0, 2.2, 2.4}) all.push_back(cert_sequence_to_json(dm_sequence(p, 50)));
    std::ofstream os(fs::path(out_dir) / "certificates.json");
    os << all.dump(2) << "\n";
    std::cout << "wrote " << (fs::path(out_dir) / "certificates.json").string() << "\n";
  }

  if (!all_ok) throw AuditFailure("certification table has failures");
  return 0;
}

int cmd_nullframe(const std::string& config_path, const std::string& out_dir) {
  auto kv = load_kv(config_path);
  const MetricSpec metric = metric_from_config(kv);
  auto num = [&](const char* k, double dflt) {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : std::stod(it->second);
  };
  const double t_max = num("t_max", 2.0);
  const double r_lo = num("r_lo", 10.0);
  const double r_hi = num("r_hi", 60.0);
  const double h = num("h", 0.1);

  const NullChart ch = build_null_chart(metric, t_max, r_lo, r_hi, h);
  std::cout << "chart " << ch.nt << " x " << ch.nr << ", max transport residual "
            << ch.max_transport_residual << "\n";

  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "chart.bin", std::ios::binary);
    export_chart_binary(os, ch);
  }
  std::vector<std::pair<double, double>> pts;
  for (double r = r_lo + 0.2 * (r_hi - r_lo); r <= r_lo + 0.8 * (r_hi - r_lo);
       r += 0.1 * (r_hi - r_lo))
    pts.emplace_back(0.5 * t_max, r);
  {
    std::ofstream os(fs::path(out_dir) / "coefficients.csv");
    export_coefficients_csv(os, metric, ch, int(num("n", 3.0)), pts);
  }
  std::cout << "wrote " << (fs::path(out_dir) / "chart.bin").string() << " and "
            << (fs::path(out_dir) / "coefficients.csv").string() << "\n";
  return 0;
}

int cmd_check_metric(const std::string& config_path) {
  auto kv = load_kv(config_path);
  const MetricSpec metric = metric_from_config(kv);
  auto num = [&](const char* k, double dflt) {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : std::stod(it->second);
  };
  const double fd = num("fd_step", 1e-4);
  const double r_lo = std::max(metric.exterior_rmin() * 1.5 + 0.5, num("r_lo", 3.0));
  const double r_hi = num("r_hi", 50.0);

  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> uu(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Point4 p;
    p.t = 5.0 * uu(rng);
    p.r = r_lo + (r_hi - r_lo) * uu(rng);
    p.theta = 0.3 + (kPi - 0.6) * uu(rng);
    p.phi = 2.0 * kPi * uu(rng);
    worst = std::max(worst, std::abs(structural_residual(metric, p, fd)));
  }
  std::cout << "structural residual, 100 random exterior points: max " << worst << "\n";
  const bool structural_ok = worst < num("structural_tol", 1e-6);

  const auto samples =
      log_spaced(std::max(metric.R * 1.5, r_lo), num("decay_r_hi", 5000.0), 40);
  const DecayReport rep = af_decay_audit(metric, metric.R, samples);
  for (const auto& c : rep.components) {
    std::cout << "  " << c.name << ": "
              << (c.exact ? std::string("exact") : "slope " + std::to_string(c.slope))
              << (c.pass ? "  ok" : "  FAIL") << "\n";
  }
  std::cout << (structural_ok && rep.pass ? "metric checks passed\n"
                                          : "metric checks FAILED\n");
  if (!structural_ok || !rep.pass) throw AuditFailure("metric audit failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semilinear wave blow-up laboratory"};
  app.require_subcommand(1);

  std::string config, profile, out = "out", dump, table, formats;
  int workers = 0, n = 3;
  double p = 2.0;

  auto* sim = app.add_subcommand("simulate", "single lifespan run");
  sim->add_option("--config", config)->required();
  sim->add_option("--profile", profile);
  sim->add_option("--out", out);
  sim->add_option("--dump", dump, "field dumps: csv,bin");

  auto* sw = app.add_subcommand("sweep", "run an epsilon sweep");
  sw->add_option("--config", config)->required();
  sw->add_option("--out", out);
  sw->add_option("--workers", workers);
  sw->add_option("--format", formats, "csv,json,svg");

  auto* fit = app.add_subcommand("fit", "fit the lifespan scaling exponent");
  fit->add_option("--table", table)->required();
  fit->add_option("--n", n);
  fit->add_option("--p", p);

  auto* cert = app.add_subcommand("certify", "print the certificate pass/fail table");
  cert->add_option("--out", out, "also write certificates.json");

  auto* nf = app.add_subcommand("nullframe", "chart and coefficient dumps");
  nf->add_option("--config", config)->required();
  nf->add_option("--out", out);

  auto* cm = app.add_subcommand("check-metric", "structural and decay audits");
  cm->add_option("--config", config)->required();

  try {
    app.parse(argc, argv);
    if (app.got_subcommand("simulate")) return cmd_simulate(config, profile, out, dump);
    if (app.got_subcommand("sweep")) return cmd_sweep(config, out, workers, formats);
    if (app.got_subcommand("fit")) return cmd_fit(table, n, p);
    if (app.got_subcommand("certify")) return cmd_certify(cert->count("--out") ? out : "");
    if (app.got_subcommand("nullframe")) return cmd_nullframe(config, out);
    if (app.got_subcommand("check-metric")) return cmd_check_metric(config);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const AuditFailure& e) {
    std::cerr << "audit failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
