#pragma once

// Paired Monte Carlo error-rate experiments, diversity-slope fitting and
// CSV / certificate output.
//
// Every trial owns an RNG stream keyed by (seed, snr index, trial index);
// all configured decoders see the same (s, H, n). Trials run in fixed-size
// batches and the early-stop rule is evaluated only after a whole batch is
// committed, so results do not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "stbc/certify.hpp"
#include "stbc/channel.hpp"
#include "stbc/constellation.hpp"
#include "stbc/decoders.hpp"
#include "stbc/design.hpp"
#include "stbc/error.hpp"
#include "stbc/rng.hpp"

namespace stbc {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct ExperimentConfig {
  std::string code_id = "golden";
  std::optional<Design> design;  // overrides code_id when set
  std::string modulation = "qam4";
  int nr = 2;
  std::vector<DecoderKind> decoders;
  std::vector<double> snr_db;
  std::uint64_t max_trials = 1000;
  std::uint64_t target_errors = 200;
  std::uint64_t seed = 1;
  int workers = 1;
  std::uint64_t batch = 64;
  bool noiseless = false;
  double max_candidates = 1e6;  // per-decode limit for exhaustive decoders
};

struct PointStats {
  double snr_db = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t cw_errors = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t zf_solves = 0;      // sums over trials
  std::uint64_t sphere_nodes = 0;
  std::uint64_t candidates = 0;
  std::uint64_t singular_events = 0;
  std::uint64_t bits_per_trial = 0;
  double wall_seconds = 0.0;

  double cer() const { return trials ? static_cast<double>(cw_errors) / trials : 0.0; }
  double ber() const { return trials ? static_cast<double>(bit_errors) / (static_cast<double>(trials) * bits_per_trial) : 0.0; }
  double mean_zf_solves() const { return trials ? static_cast<double>(zf_solves) / trials : 0.0; }
  double mean_sphere_nodes() const { return trials ? static_cast<double>(sphere_nodes) / trials : 0.0; }
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval at 95%.
inline Interval wilson_interval(std::uint64_t errors, std::uint64_t trials) {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = errors / n;
  const double den = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / den;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / den;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct ExperimentReport {
  std::string code;
  int m = 0;
  int nr = 0;
  std::vector<DecoderKind> decoders;
  std::vector<double> snr_db;
  std::vector<std::vector<PointStats>> points;  // [snr][decoder]
  // discord[snr][a][b]: trials where decoder a erred and decoder b did not
  std::vector<std::vector<std::vector<std::uint64_t>>> discord;

  int decoder_index(DecoderKind k) const {
    for (std::size_t i = 0; i < decoders.size(); ++i)
      if (decoders[i] == k) return static_cast<int>(i);
    throw Error(ErrorCode::InvalidConfig, "decoder " + to_string(k) + " not in report");
  }
};

struct PairedDifference {
  double diff = 0.0;   // CER_a - CER_b
  double sigma = 0.0;  // standard error of the paired difference
  std::uint64_t a_only = 0;
  std::uint64_t b_only = 0;
  std::uint64_t trials = 0;
};

inline PairedDifference paired_difference(const ExperimentReport& rep, std::size_t snr_idx, DecoderKind a,
                                          DecoderKind b) {
  const int ia = rep.decoder_index(a), ib = rep.decoder_index(b);
  PairedDifference p;
  p.trials = rep.points.at(snr_idx)[ia].trials;
  p.a_only = rep.discord[snr_idx][ia][ib];
  p.b_only = rep.discord[snr_idx][ib][ia];
  if (p.trials == 0) return p;
  const double n = static_cast<double>(p.trials);
  p.diff = (static_cast<double>(p.a_only) - static_cast<double>(p.b_only)) / n;
  const double var = (p.a_only + p.b_only) / n - p.diff * p.diff;
  p.sigma = std::sqrt(std::max(var, 0.0) / n);
  return p;
}

namespace detail {

struct TrialOutcome {
  std::vector<char> wrong;
  std::vector<std::uint32_t> bit_errors;
  std::vector<DecodeCounters> counters;
  std::vector<char> singular;
};

inline TrialOutcome run_trial(const ExperimentConfig& cfg, const Design& d, const Constellation& c,
                              std::size_t snr_idx, std::uint64_t trial) {
  RngStream rng(cfg.seed, stream_id({static_cast<std::uint64_t>(snr_idx), trial}));
  std::vector<int> truth(d.k);
  CVector s(d.k);
  std::vector<int> bits(c.bits_per_symbol);
  for (int i = 0; i < d.k; ++i) {
    for (auto& b : bits) b = rng.bit();
    truth[i] = map_bits(bits, c);
    s[i] = c.points[truth[i]];
  }
  const ChannelInstance ci = equivalent_channel(d, sample_channel(d.nt, cfg.nr, rng));
  const double snr = db_to_linear(cfg.snr_db[snr_idx]);
  const CVector y = transmit(s, ci, snr, cfg.noiseless ? nullptr : &rng);

  const std::size_t nd = cfg.decoders.size();
  TrialOutcome out{std::vector<char>(nd, 0), std::vector<std::uint32_t>(nd, 0), std::vector<DecodeCounters>(nd),
                   std::vector<char>(nd, 0)};
  for (std::size_t k = 0; k < nd; ++k) {
    try {
      const DecodeResult r = run_decoder(cfg.decoders[k], d, c, ci, y, snr);
      out.counters[k] = r.counters;
      for (int i = 0; i < d.k; ++i) {
        if (r.indices[i] == truth[i]) continue;
        out.wrong[k] = 1;
        const auto a = demap_symbol(truth[i], c), b = demap_symbol(r.indices[i], c);
        for (std::size_t q = 0; q < a.size(); ++q) out.bit_errors[k] += a[q] != b[q];
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllSubsetsSingular && e.code() != ErrorCode::RankDeficient) throw;
      // No decision possible for this realization: every bit counts as wrong.
      out.singular[k] = 1;
      out.wrong[k] = 1;
      out.bit_errors[k] = static_cast<std::uint32_t>(d.k * c.bits_per_symbol);
    }
  }
  return out;
}

}  // namespace detail

inline Design resolve_design(const ExperimentConfig& cfg) {
  return cfg.design ? *cfg.design : build_design(cfg.code_id);
}

inline void validate_config(const ExperimentConfig& cfg, const Design& d, const Constellation& c) {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (cfg.nr < 1) bad("nr must be >= 1");
  if (cfg.max_trials < 1) bad("max trials must be >= 1");
  if (cfg.target_errors < 1) bad("target errors must be >= 1");
  if (cfg.batch < 1) bad("batch size must be >= 1");
  if (cfg.workers < 1) bad("workers must be >= 1");
  if (cfg.snr_db.empty()) bad("snr grid is empty");
  for (std::size_t i = 1; i < cfg.snr_db.size(); ++i)
    if (!(cfg.snr_db[i] > cfg.snr_db[i - 1])) bad("snr grid must be strictly increasing");
  const int rows = d.t * cfg.nr;
  for (auto k : cfg.decoders) {
    const double cand = exhaustive_candidates(k, d, c);
    if (cand > cfg.max_candidates) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s would score %.0f candidates per decode (limit %.0f)", to_string(k).c_str(),
                    cand, cfg.max_candidates);
      throw Error(ErrorCode::GuardViolation, buf);
    }
    if ((k == DecoderKind::SphereAczfSic || k == DecoderKind::SphereMl) && !c.is_qam())
      throw Error(ErrorCode::NotQam, to_string(k) + " needs a square QAM constellation");
    if ((k == DecoderKind::SphereAczfSic || k == DecoderKind::SphereMl || k == DecoderKind::Zf) && rows < d.k)
      throw Error(ErrorCode::Underdetermined, to_string(k) + " needs Nr*T >= K");
  }
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const Design d = resolve_design(cfg);
  const Constellation c = parse_modulation(cfg.modulation);
  validate_config(cfg, d, c);

  ExperimentReport rep;
  rep.code = d.name;
  rep.m = c.m;
  rep.nr = cfg.nr;
  rep.decoders = cfg.decoders;
  rep.snr_db = cfg.snr_db;
  const std::size_t nd = cfg.decoders.size();

  for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
    std::vector<PointStats> stats(nd);
    for (auto& s : stats) {
      s.snr_db = cfg.snr_db[si];
      s.bits_per_trial = static_cast<std::uint64_t>(d.k) * c.bits_per_symbol;
    }
    std::vector<std::vector<std::uint64_t>> discord(nd, std::vector<std::uint64_t>(nd, 0));
    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t done = 0;
    while (done < cfg.max_trials && nd > 0) {
      const std::uint64_t count = std::min(cfg.batch, cfg.max_trials - done);
      std::vector<detail::TrialOutcome> out(count);
      std::atomic<std::uint64_t> next{0};
      std::vector<std::exception_ptr> errors(cfg.workers);
      auto work = [&](int w) {
        try {
          for (std::uint64_t j; (j = next.fetch_add(1)) < count;) out[j] = detail::run_trial(cfg, d, c, si, done + j);
        } catch (...) {
          errors[w] = std::current_exception();
          next = count;
        }
      };
      if (cfg.workers == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
      }
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
      for (const auto& o : out) {
        for (std::size_t k = 0; k < nd; ++k) {
          auto& s = stats[k];
          ++s.trials;
          s.cw_errors += o.wrong[k];
          s.bit_errors += o.bit_errors[k];
          s.zf_solves += o.counters[k].zf_solves;
          s.sphere_nodes += o.counters[k].sphere_nodes;
          s.candidates += o.counters[k].candidates_enumerated;
          s.singular_events += o.singular[k];
          for (std::size_t b = 0; b < nd; ++b) discord[k][b] += o.wrong[k] && !o.wrong[b];
        }
      }
      done += count;
      std::uint64_t least = stats[0].cw_errors;
      for (const auto& s : stats) least = std::min(least, s.cw_errors);
      if (least >= cfg.target_errors) break;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (auto& s : stats) s.wall_seconds = secs;
    rep.points.push_back(std::move(stats));
    rep.discord.push_back(std::move(discord));
  }
  return rep;
}

/// Least-squares slope of log10(CER) against snr_db / 10.
inline double fit_slope(std::span<const double> snr_db, std::span<const double> cer) {
  if (snr_db.size() != cer.size()) throw Error(ErrorCode::LengthMismatch, "slope inputs differ in length");
  if (snr_db.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two points for a slope");
  const double n = static_cast<double>(snr_db.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < snr_db.size(); ++i) {
    if (!(cer[i] > 0.0)) throw Error(ErrorCode::InsufficientData, "CER must be positive");
    const double x = snr_db[i] / 10.0, y = std::log10(cer[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw Error(ErrorCode::InsufficientData, "SNR points coincide");
  return (n * sxy - sx * sy) / den;
}

/// Slope over the points whose CER lies in [cer_lo, cer_hi] and that have at
/// least `min_errors` codeword errors.
inline double diversity_slope(const ExperimentReport& rep, DecoderKind k, double cer_lo, double cer_hi,
                              std::uint64_t min_errors) {
  const int di = rep.decoder_index(k);
  std::vector<double> x, y;
  for (const auto& row : rep.points) {
    const PointStats& s = row[di];
    const double p = s.cer();
    if (p >= cer_lo && p <= cer_hi && s.cw_errors >= min_errors) {
      x.push_back(s.snr_db);
      y.push_back(p);
    }
  }
  if (x.size() < 2)
    throw Error(ErrorCode::InsufficientData, "fewer than two SNR points inside the CER window");
  return fit_slope(x, y);
}

// ---------------------------------------------------------------------------
// CSV

inline const char* kCsvHeader =
    "code,decoder,nr,M,snr_db,trials,cw_errors,bit_errors,cer,ber,cer_lo,cer_hi,mean_zf_solves,mean_sphere_nodes";

struct CsvRow {
  std::string code;
  std::string decoder;
  int nr = 0;
  int m = 0;
  double snr_db = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t cw_errors = 0;
  std::uint64_t bit_errors = 0;
  double cer = 0.0;
  double ber = 0.0;
  double cer_lo = 0.0;
  double cer_hi = 0.0;
  double mean_zf_solves = 0.0;
  double mean_sphere_nodes = 0.0;

  bool operator==(const CsvRow&) const = default;
};

inline std::vector<CsvRow> csv_rows(const ExperimentReport& rep) {
  std::vector<CsvRow> rows;
  for (std::size_t k = 0; k < rep.decoders.size(); ++k)
    for (const auto& row : rep.points) {
      const PointStats& s = row[k];
      const Interval ci = wilson_interval(s.cw_errors, s.trials);
      rows.push_back({rep.code, to_string(rep.decoders[k]), rep.nr, rep.m, s.snr_db, s.trials, s.cw_errors,
                      s.bit_errors, s.cer(), s.ber(), ci.lo, ci.hi, s.mean_zf_solves(), s.mean_sphere_nodes()});
    }
  return rows;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : csv_rows(rep)) {
    os << r.code << ',' << r.decoder << ',' << r.nr << ',' << r.m << ',' << format_double(r.snr_db) << ',' << r.trials
       << ',' << r.cw_errors << ',' << r.bit_errors << ',' << format_double(r.cer) << ',' << format_double(r.ber)
       << ',' << format_double(r.cer_lo) << ',' << format_double(r.cer_hi) << ',' << format_double(r.mean_zf_solves)
       << ',' << format_double(r.mean_sphere_nodes) << '\n';
  }
  return os.str();
}

inline std::vector<CsvRow> parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw Error(ErrorCode::Parse, "missing or unexpected CSV header");
  std::vector<CsvRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 14) throw Error(ErrorCode::Parse, "CSV row has " + std::to_string(f.size()) + " fields");
    try {
      rows.push_back({f[0], f[1], std::stoi(f[2]), std::stoi(f[3]), std::stod(f[4]), std::stoull(f[5]),
                      std::stoull(f[6]), std::stoull(f[7]), std::stod(f[8]), std::stod(f[9]), std::stod(f[10]),
                      std::stod(f[11]), std::stod(f[12]), std::stod(f[13])});
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Parse, "bad number in CSV row: " + line);
    }
  }
  return rows;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

inline void emit_csv(const ExperimentReport& rep, const std::string& path) { write_text_file(path, to_csv(rep)); }

// ---------------------------------------------------------------------------
// Certificates

inline std::string certificate_line(const Certificate& c) {
  return c.design + ' ' + std::to_string(c.trials) + ' ' + format_double(c.min_sigma) + ' ' +
         format_double(c.threshold) + ' ' + to_string(c.verdict);
}

inline std::string certificate_text(const Certificate& c) {
  std::ostringstream os;
  os << "design:        " << c.design << '\n'
     << "random trials: " << c.trials << '\n'
     << "min ratio (random / probes / search): " << format_double(c.random_min) << " / " << format_double(c.probe_min)
     << " / " << format_double(c.search_min) << '\n'
     << "threshold:     " << format_double(c.threshold) << '\n'
     << "verdict:       " << to_string(c.verdict) << (c.verdict == Verdict::Certified ? " (statistical)" : "") << '\n';
  if (c.verdict != Verdict::Certified) {
    os << "witness:\n";
    for (std::size_t l = 0; l < c.witness.size(); ++l) {
      os << "  u" << l + 1 << " =";
      for (const auto& x : c.witness[l]) os << ' ' << format_double(x.real()) << ',' << format_double(x.imag());
      os << '\n';
    }
  }
  os << certificate_line(c) << '\n';
  return os.str();
}

inline void emit_certificate(const Certificate& c, const std::string& path) {
  write_text_file(path, certificate_text(c));
}

}  // namespace stbc
