// Command-line front end: simulate, certify, slope, designs.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stbc/stbc.hpp"

namespace {

using namespace stbc;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(s);
  while (std::getline(is, cell, sep))
    if (!cell.empty()) out.push_back(cell);
  return out;
}

double parse_number(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw Error(ErrorCode::Parse, "bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Parse, "bad number '" + s + "'");
  }
}

// "start:step:stop" (inclusive), a comma list, or a single value.
std::vector<double> parse_snr_grid(const std::string& s) {
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw Error(ErrorCode::Parse, "snr grid must be start:step:stop");
    const double a = parse_number(parts[0]), step = parse_number(parts[1]), b = parse_number(parts[2]);
    if (!(step > 0.0) || b < a) throw Error(ErrorCode::Parse, "snr grid needs step > 0 and stop >= start");
    std::vector<double> out;
    const long n = std::lround(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  std::vector<double> out;
  for (const auto& p : split(s, ',')) out.push_back(parse_number(p));
  return out;
}

Design load_design(const std::string& code, const std::string& file) {
  if (!file.empty()) return load_design_file(file);
  return build_design(code);
}

void print_report(const ExperimentReport& rep, std::ostream& os) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %8s %10s %10s %12s %12s %14s %14s\n", "decoder", "snr_db", "trials",
                "cw_err", "cer", "ber", "zf_solves", "sphere_nodes");
  os << buf;
  for (std::size_t k = 0; k < rep.decoders.size(); ++k)
    for (const auto& row : rep.points) {
      const PointStats& s = row[k];
      std::snprintf(buf, sizeof buf, "%-16s %8.2f %10llu %10llu %12.4e %12.4e %14.1f %14.1f\n",
                    to_string(rep.decoders[k]).c_str(), s.snr_db, static_cast<unsigned long long>(s.trials),
                    static_cast<unsigned long long>(s.cw_errors), s.cer(), s.ber(), s.mean_zf_solves(),
                    s.mean_sphere_nodes());
      os << buf;
      if (s.singular_events)
        os << "  (" << s.singular_events << " realizations with no full-rank subset)\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional zero-forcing decoders for linear-dispersion space-time block codes"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo error rates for a set of decoders");
  std::string code = "golden", design_file, mod = "qam4", decoders = "aczf_sic,sphere_ml", snr = "0:5:20", out;
  int nr = 2, workers = 1;
  std::uint64_t max_trials = 10000, target = 200, seed = 1, batch = 64;
  bool noiseless = false;
  double max_candidates = 1e6;
  sim->add_option("--code", code, "built-in code id")->capture_default_str();
  sim->add_option("--design-file", design_file, "design text file (overrides --code)");
  sim->add_option("--mod", mod, "modulation, e.g. qam4, qam16, hex4")->capture_default_str();
  sim->add_option("--nr", nr, "receive antennas")->capture_default_str();
  sim->add_option("--decoders", decoders, "comma list of zf,aczf,aczf_sic,sphere_aczf_sic,ml,sphere_ml")
      ->capture_default_str();
  sim->add_option("--snr-db", snr, "start:step:stop or comma list")->capture_default_str();
  sim->add_option("--max-trials", max_trials, "trials per SNR point")->capture_default_str();
  sim->add_option("--target-errors", target, "stop a point once every decoder has this many codeword errors")
      ->capture_default_str();
  sim->add_option("--seed", seed)->capture_default_str();
  sim->add_option("--out", out, "CSV output path (stdout when omitted)");
  sim->add_option("--workers", workers)->capture_default_str();
  sim->add_option("--batch", batch, "trials per committed batch")->capture_default_str();
  sim->add_option("--max-candidates", max_candidates, "per-decode limit for exhaustive decoders")
      ->capture_default_str();
  sim->add_flag("--noiseless", noiseless, "transmit without noise");

  // certify
  auto* cert = app.add_subcommand("certify", "randomized full-diversity check of a design's subset family");
  std::string cert_code, cert_file, cert_out;
  std::uint64_t cert_trials = 10000, cert_seed = 1;
  auto* code_opt = cert->add_option("--code", cert_code, "built-in code id");
  auto* file_opt = cert->add_option("--design-file", cert_file, "design text file");
  code_opt->excludes(file_opt);
  cert->add_option("--trials", cert_trials)->capture_default_str();
  cert->add_option("--seed", cert_seed)->capture_default_str();
  cert->add_option("--out", cert_out, "also write the certificate to this file");

  // slope
  auto* slope = app.add_subcommand("slope", "fit the diversity slope of one decoder from a CSV");
  std::string slope_csv, slope_decoder = "aczf_sic";
  double cer_lo = 1e-3, cer_hi = 1e-1;
  std::uint64_t min_errors = 200;
  slope->add_option("--csv", slope_csv, "CSV written by simulate")->required();
  slope->add_option("--decoder", slope_decoder)->capture_default_str();
  slope->add_option("--cer-lo", cer_lo)->capture_default_str();
  slope->add_option("--cer-hi", cer_hi)->capture_default_str();
  slope->add_option("--min-errors", min_errors)->capture_default_str();

  // designs
  auto* des = app.add_subcommand("designs", "list built-in designs or export one as a text file");
  std::string export_code, export_out;
  des->add_option("--export", export_code, "code id to export");
  des->add_option("--out", export_out, "export path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      ExperimentConfig cfg;
      cfg.code_id = code;
      if (!design_file.empty()) cfg.design = load_design_file(design_file);
      cfg.modulation = mod;
      cfg.nr = nr;
      for (const auto& d : split(decoders, ',')) cfg.decoders.push_back(parse_decoder(d));
      cfg.snr_db = parse_snr_grid(snr);
      cfg.max_trials = max_trials;
      cfg.target_errors = target;
      cfg.seed = seed;
      cfg.workers = workers;
      cfg.batch = batch;
      cfg.noiseless = noiseless;
      cfg.max_candidates = max_candidates;
      const ExperimentReport rep = run_experiment(cfg);
      if (out.empty()) {
        std::cout << to_csv(rep);
      } else {
        emit_csv(rep, out);
        print_report(rep, std::cout);
      }
      return 0;
    }
    if (*cert) {
      if (cert_code.empty() && cert_file.empty()) throw Error(ErrorCode::InvalidConfig, "give --code or --design-file");
      const Design d = load_design(cert_code, cert_file);
      const ValidationReport v = validate_design(d);
      for (const auto& c : v.checks)
        if (!c.ok) std::cerr << "warning: design check '" << c.name << "' failed: " << c.detail << '\n';
      RngStream rng(cert_seed, 0);
      const Certificate c = certify_theorem2(d, cert_trials, rng);
      std::cout << certificate_text(c);
      if (!cert_out.empty()) emit_certificate(c, cert_out);
      return c.verdict == Verdict::Refuted ? 2 : 0;
    }
    if (*slope) {
      std::ifstream in(slope_csv);
      if (!in) throw Error(ErrorCode::Io, "cannot open '" + slope_csv + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      std::vector<double> x, y;
      for (const auto& r : parse_csv(ss.str())) {
        if (r.decoder != slope_decoder) continue;
        if (r.cer >= cer_lo && r.cer <= cer_hi && r.cw_errors >= min_errors) {
          x.push_back(r.snr_db);
          y.push_back(r.cer);
        }
      }
      if (x.size() < 2) throw Error(ErrorCode::InsufficientData, "fewer than two SNR points inside the CER window");
      const double s = fit_slope(x, y);
      std::printf("decoder %s points %zu slope %.6g diversity %.6g\n", slope_decoder.c_str(), x.size(), s, -s);
      return 0;
    }
    if (*des) {
      if (!export_code.empty()) {
        const Design d = build_design(export_code);
        if (export_out.empty()) {
          write_design(d, std::cout);
        } else {
          std::ofstream f(export_out);
          if (!f) throw Error(ErrorCode::Io, "cannot open '" + export_out + "' for writing");
          write_design(d, f);
        }
        return 0;
      }
      std::printf("%-14s %3s %3s %3s %3s %6s %5s %6s %8s %9s %s\n", "code", "Nt", "T", "K", "L", "lambda", "rate",
                  "alph", "lower", "achieved", "checks");
      for (const auto& id : builtin_code_ids()) {
        const Design d = build_design(id);
        const ComplexityBounds b = complexity_bounds(d);
        std::printf("%-14s %3d %3d %3d %3d %6d %5.2f %6s %8d %9d %s\n", id.c_str(), d.nt, d.t, d.k, d.subset_count(),
                    d.lambda(), d.rate(), to_string(d.kind).c_str(), b.lower_exponent, b.achieved_exponent,
                    validate_design(d).passed() ? "ok" : "FAILED");
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
