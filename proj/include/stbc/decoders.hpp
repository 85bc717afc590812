#pragma once

// ZF, conditional ZF (ACZF), ACZF with ZF-SIC, exhaustive ML and the two
// real sphere decoders (ACZF-SIC with clamped SIC layers, and plain ML).
//
// Exhaustive enumeration order: conditioned symbols are taken in increasing
// index order and the first of them varies fastest; each symbol runs over
// constellation indices 0..M-1. The first strictly better candidate wins.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stbc/channel.hpp"
#include "stbc/constellation.hpp"
#include "stbc/design.hpp"
#include "stbc/error.hpp"
#include "stbc/matrix.hpp"

namespace stbc {

struct DecodeCounters {
  std::uint64_t zf_solves = 0;
  std::uint64_t candidates_enumerated = 0;
  std::uint64_t sphere_nodes = 0;
};

struct DecodeResult {
  CVector s_hat;
  std::vector<int> indices;  // constellation index per symbol
  double metric = 0.0;       // ||y - sqrt(snr) G s_hat||^2
  int subset = -1;           // selected subset, -1 when none applies
  DecodeCounters counters;
};

inline double decision_metric(const CMatrix& g, std::span<const cd> y, double snr, std::span<const cd> s) {
  const CVector gs = g * s;
  const double a = std::sqrt(snr);
  double m = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) m += std::norm(y[i] - a * gs[i]);
  return m;
}

/// argmax of det(G_I^H G_I) over subsets passing the rank tolerance; ties go
/// to the smallest index.
inline int select_subset(const ChannelInstance& ci) {
  int best = -1;
  double bd = -1.0;
  for (std::size_t l = 0; l < ci.subset_dets.size(); ++l) {
    if (!ci.subset_full_rank[l]) continue;
    if (ci.subset_dets[l] > bd) {
      bd = ci.subset_dets[l];
      best = static_cast<int>(l);
    }
  }
  if (best < 0) throw Error(ErrorCode::AllSubsetsSingular, "no subset channel has full column rank");
  return best;
}

namespace detail {

inline DecodeResult finish(const Constellation& c, const CMatrix& g, std::span<const cd> y, double snr,
                           std::vector<int> indices) {
  DecodeResult r;
  r.indices = std::move(indices);
  r.s_hat.resize(r.indices.size());
  for (std::size_t i = 0; i < r.indices.size(); ++i) r.s_hat[i] = c.points[r.indices[i]];
  r.metric = decision_metric(g, y, snr, r.s_hat);
  return r;
}

inline std::vector<int> zf_first_order(int k, std::span<const int> zf_cols) {
  std::vector<int> order(zf_cols.begin(), zf_cols.end());
  for (int i = 0; i < k; ++i)
    if (std::find(zf_cols.begin(), zf_cols.end(), i) == zf_cols.end()) order.push_back(i);
  return order;
}

enum class InnerSolve { None, Zf, Sic };

// Enumerates every value of the symbols outside `zf_cols` and resolves the
// symbols in `zf_cols` by ZF or ZF-SIC. Columns are permuted to [zf | rest]
// and triangularized once. Along the enumeration tree the unconstrained ZF
// solution v of the top block and the residual rows below it are updated
// incrementally, one column per level.
class ConditionedSearch {
 public:
  ConditionedSearch(const Constellation& c, const CMatrix& g, std::span<const cd> y, double snr,
                    std::span<const int> zf_cols, InnerSolve mode)
      : c_(c), mode_(mode), k_(static_cast<int>(g.cols())), lam_(static_cast<int>(zf_cols.size())) {
    order_ = zf_first_order(k_, zf_cols);
    CMatrix g0 = g.select_cols(order_);
    g0 *= std::sqrt(snr);
    const HouseholderQr qr(g0);
    const CMatrix r = qr.r();
    p_ = static_cast<int>(r.rows());
    if (p_ < lam_) throw Error(ErrorCode::RankDeficient, "subset larger than the observation");
    nb_ = p_ - lam_;
    const CVector yq = qr.apply_adjoint(y);

    // Top block: R_II, its inverse applied to the coupling columns, and the
    // row-normalized copy used by SIC.
    rtop_.assign(lam_ * lam_, cd{});
    rbar_.assign(lam_ * lam_, cd{});
    diag2_.assign(lam_, 0.0);
    for (int i = 0; i < lam_; ++i) {
      diag2_[i] = std::norm(r(i, i));
      for (int j = i; j < lam_; ++j) {
        rtop_[i * lam_ + j] = r(i, j);
        rbar_[i * lam_ + j] = r(i, j) / r(i, i);
      }
    }
    auto solve_top = [&](CVector b) {
      for (int i = lam_ - 1; i >= 0; --i) {
        for (int j = i + 1; j < lam_; ++j) b[i] -= rtop_[i * lam_ + j] * b[j];
        b[i] /= rtop_[i * lam_ + i];
      }
      return b;
    };

    const std::size_t levels = static_cast<std::size_t>(k_) + 1;
    v_.assign(levels * lam_, cd{});
    e_.assign(levels * nb_, cd{});
    {
      const CVector v0 = solve_top(CVector(yq.begin(), yq.begin() + lam_));
      std::copy(v0.begin(), v0.end(), v_.begin() + k_ * lam_);
      std::copy(yq.begin() + lam_, yq.begin() + p_, e_.begin() + k_ * nb_);
    }
    wv_.assign(static_cast<std::size_t>(k_) * c.m * lam_, cd{});
    we_.assign(static_cast<std::size_t>(k_) * c.m * nb_, cd{});
    for (int pos = lam_; pos < k_; ++pos) {
      CVector col(lam_);
      for (int i = 0; i < lam_; ++i) col[i] = r(i, pos);
      const CVector w = solve_top(col);
      for (int a = 0; a < c.m; ++a) {
        const std::size_t slot = static_cast<std::size_t>(pos) * c.m + a;
        for (int i = 0; i < lam_; ++i) wv_[slot * lam_ + i] = w[i] * c.points[a];
        for (int row = lam_; row <= std::min(pos, p_ - 1); ++row)
          we_[slot * nb_ + (row - lam_)] = r(row, pos) * c.points[a];
      }
    }
    partial_.assign(levels, 0.0);
    idx_.assign(k_, 0);
    best_idx_.assign(k_, 0);
    u_.assign(lam_, cd{});
    delta_.assign(lam_, cd{});
    ui_.assign(lam_, 0);
    if (c.is_qam()) {
      inv_step_ = 1.0 / c.scale;
      shift_ = c.grid_offset() - 0.5;
    }
  }

  std::vector<int> run() {
    if (lam_ == k_) {
      leaf(&v_[k_ * lam_], partial_[k_]);
    } else {
      descend(k_ - 1);
    }
    std::vector<int> out(k_);
    for (int pos = 0; pos < k_; ++pos) out[order_[pos]] = best_idx_[pos];
    return out;
  }

  std::uint64_t leaves() const noexcept { return leaves_; }

 private:
  // ceil(w) clamped to the grid, i.e. nearest level with halves rounded down.
  int level(double x) const {
    const double w = x * inv_step_ + shift_;
    if (!(w > 0.0)) return 0;
    if (w >= c_.sqrt_m - 1) return c_.sqrt_m - 1;
    int l = static_cast<int>(w);
    if (w > l) ++l;
    return l;
  }

  int slice(cd z) const {
    if (c_.is_qam()) return level(z.real()) * c_.sqrt_m + level(z.imag());
    return slice_nearest(z, c_).index;
  }

  void descend(int pos) {
    const cd* v_above = &v_[(pos + 1) * lam_];
    const cd* e_above = &e_[(pos + 1) * nb_];
    cd* v_here = &v_[pos * lam_];
    cd* e_here = &e_[pos * nb_];
    const int rows = std::min(pos, p_ - 1) - lam_ + 1;  // residual rows touched by this column
    const bool own_row = pos < p_;
    for (int a = 0; a < c_.m; ++a) {
      const std::size_t slot = static_cast<std::size_t>(pos) * c_.m + a;
      const cd* wv = &wv_[slot * lam_];
      const cd* we = &we_[slot * nb_];
      for (int i = 0; i < lam_; ++i) v_here[i] = v_above[i] - wv[i];
      for (int row = 0; row < rows; ++row) e_here[row] = e_above[row] - we[row];
      const double part = partial_[pos + 1] + (own_row ? std::norm(e_here[pos - lam_]) : 0.0);
      idx_[pos] = a;
      if (pos == lam_) {
        leaf(v_here, part);
      } else {
        partial_[pos] = part;
        descend(pos - 1);
      }
    }
  }

  // Scores one conditioned tuple. The remaining rows are skipped once the
  // metric can no longer beat the incumbent; this never changes the result.
  void leaf(const cd* v, double metric) {
    ++leaves_;
    const int lam = lam_;
    const cd* pts = c_.points.data();
    int* ui = ui_.data();
    cd* delta = delta_.data();
    if (mode_ == InnerSolve::Zf) {
      const cd* rt = rtop_.data();
      for (int j = lam - 1; j >= 0 && metric < best_; --j) {
        ui[j] = slice(v[j]);
        delta[j] = v[j] - pts[ui[j]];
        double sr = 0.0, si = 0.0;
        for (int t = j; t < lam; ++t) {
          const cd x = rt[j * lam + t], y = delta[t];
          sr += x.real() * y.real() - x.imag() * y.imag();
          si += x.real() * y.imag() + x.imag() * y.real();
        }
        metric += sr * sr + si * si;
      }
    } else if (mode_ == InnerSolve::Sic) {
      const cd* rb = rbar_.data();
      for (int j = lam - 1; j >= 0 && metric < best_; --j) {
        double zr = v[j].real(), zi = v[j].imag();
        for (int t = j + 1; t < lam; ++t) {
          const cd x = rb[j * lam + t], y = delta[t];
          zr += x.real() * y.real() - x.imag() * y.imag();
          zi += x.real() * y.imag() + x.imag() * y.real();
        }
        ui[j] = slice(cd(zr, zi));
        const cd u = pts[ui[j]];
        delta[j] = v[j] - u;
        const double er = zr - u.real(), ei = zi - u.imag();
        metric += diag2_[j] * (er * er + ei * ei);
      }
    }
    if (metric < best_) {
      best_ = metric;
      for (int j = 0; j < lam; ++j) best_idx_[j] = ui[j];
      for (int pos = lam; pos < k_; ++pos) best_idx_[pos] = idx_[pos];
    }
  }

  const Constellation& c_;
  InnerSolve mode_;
  int k_;
  int lam_;
  int p_ = 0;
  int nb_ = 0;  // residual rows below the top block
  std::vector<int> order_;
  std::vector<cd> rtop_;
  std::vector<cd> rbar_;
  std::vector<double> diag2_;
  std::vector<cd> v_;
  std::vector<cd> e_;
  std::vector<cd> wv_;
  std::vector<cd> we_;
  std::vector<double> partial_;
  std::vector<int> idx_;
  std::vector<int> best_idx_;
  CVector u_;
  CVector delta_;
  std::vector<int> ui_;
  double inv_step_ = 1.0;
  double shift_ = 0.0;
  double best_ = std::numeric_limits<double>::infinity();
  std::uint64_t leaves_ = 0;
};

inline DecodeResult conditioned_decode(const Constellation& c, const CMatrix& g, std::span<const cd> y, double snr,
                                       std::span<const int> zf_cols, InnerSolve mode) {
  if (y.size() != g.rows()) throw Error(ErrorCode::DimensionMismatch, "received vector length");
  ConditionedSearch search(c, g, y, snr, zf_cols, mode);
  DecodeResult r = finish(c, g, y, snr, search.run());
  r.counters.candidates_enumerated = search.leaves();
  if (mode != InnerSolve::None) r.counters.zf_solves = search.leaves();
  return r;
}

}  // namespace detail

/// Plain zero-forcing: slice (1/sqrt(snr)) G^+ y per symbol.
inline DecodeResult zf_decode(std::span<const cd> y, const CMatrix& g, const Constellation& c, double snr) {
  if (y.size() != g.rows()) throw Error(ErrorCode::DimensionMismatch, "received vector length");
  const CVector v = pinv_left(g) * y;
  const double inv = 1.0 / std::sqrt(snr);
  std::vector<int> idx(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) idx[j] = slice_nearest(v[j] * inv, c).index;
  DecodeResult r = detail::finish(c, g, y, snr, std::move(idx));
  r.counters.zf_solves = 1;
  r.counters.candidates_enumerated = 1;
  return r;
}

inline DecodeResult aczf_decode(const Design& d, const Constellation& c, const ChannelInstance& ci,
                                std::span<const cd> y, double snr) {
  const int m = select_subset(ci);
  DecodeResult r = detail::conditioned_decode(c, ci.g, y, snr, d.subsets[m], detail::InnerSolve::Zf);
  r.subset = m;
  return r;
}

inline DecodeResult aczf_sic_decode(const Design& d, const Constellation& c, const ChannelInstance& ci,
                                    std::span<const cd> y, double snr) {
  const int m = select_subset(ci);
  DecodeResult r = detail::conditioned_decode(c, ci.g, y, snr, d.subsets[m], detail::InnerSolve::Sic);
  r.subset = m;
  return r;
}

inline DecodeResult ml_exhaustive_decode(const Design&, const Constellation& c, const ChannelInstance& ci,
                                         std::span<const cd> y, double snr) {
  return detail::conditioned_decode(c, ci.g, y, snr, {}, detail::InnerSolve::None);
}

// ---------------------------------------------------------------------------
// Real lattice form

/// y = G x + noise over integer x in {0..sqrtM-1}^{2K}. Real coordinates are
/// interleaved (Re, Im) per symbol, symbols ordered [zero-forced | rest].
struct RealLatticeSystem {
  int rows = 0;
  int cols = 0;
  std::vector<double> y;
  std::vector<double> g;     // rows x cols, row-major
  std::vector<int> order;    // complex position j holds symbol order[j]
  int lambda = 0;
  double step = 1.0;         // constellation coordinate = step * (x - offset)
  double offset = 0.0;
  int levels = 0;

  double at(int r, int c) const { return g[static_cast<std::size_t>(r) * cols + c]; }

  double metric(std::span<const int> x) const {
    double m = 0.0;
    for (int r = 0; r < rows; ++r) {
      double s = y[r];
      for (int c = 0; c < cols; ++c) s -= at(r, c) * x[c];
      m += s * s;
    }
    return m;
  }

  std::vector<int> integer_point(std::span<const int> symbol_indices) const {
    std::vector<int> x(cols);
    for (std::size_t j = 0; j < order.size(); ++j) {
      const int idx = symbol_indices[order[j]];
      x[2 * j] = idx / levels;
      x[2 * j + 1] = idx % levels;
    }
    return x;
  }

  std::vector<int> symbol_indices(std::span<const int> x) const {
    std::vector<int> idx(order.size());
    for (std::size_t j = 0; j < order.size(); ++j) idx[order[j]] = x[2 * j] * levels + x[2 * j + 1];
    return idx;
  }
};

inline RealLatticeSystem real_lattice_form(const Constellation& c, const CMatrix& g, std::span<const cd> y,
                                           double snr, std::span<const int> zf_cols) {
  if (!c.is_qam()) throw Error(ErrorCode::NotQam, "real lattice form needs square QAM");
  if (y.size() != g.rows()) throw Error(ErrorCode::DimensionMismatch, "received vector length");
  const int n = static_cast<int>(g.rows());
  const int k = static_cast<int>(g.cols());
  RealLatticeSystem s;
  s.rows = 2 * n;
  s.cols = 2 * k;
  s.order = detail::zf_first_order(k, zf_cols);
  s.lambda = static_cast<int>(zf_cols.size());
  s.step = c.scale;
  s.offset = c.grid_offset();
  s.levels = c.sqrt_m;
  s.g.assign(static_cast<std::size_t>(s.rows) * s.cols, 0.0);
  s.y.assign(s.rows, 0.0);
  const double a = std::sqrt(snr);
  for (int i = 0; i < n; ++i) {
    s.y[2 * i] = y[i].real();
    s.y[2 * i + 1] = y[i].imag();
    for (int j = 0; j < k; ++j) {
      const cd v = a * g(i, s.order[j]);
      double* r0 = &s.g[static_cast<std::size_t>(2 * i) * s.cols + 2 * j];
      double* r1 = r0 + s.cols;
      r0[0] = v.real();
      r0[1] = -v.imag();
      r1[0] = v.imag();
      r1[1] = v.real();
    }
  }
  // Shift so that integer x reproduces the noiseless observation, then scale.
  for (int r = 0; r < s.rows; ++r) {
    double sum = 0.0;
    for (int cc = 0; cc < s.cols; ++cc) sum += s.at(r, cc);
    s.y[r] += s.step * s.offset * sum;
  }
  for (auto& v : s.g) v *= s.step;
  return s;
}

inline RealLatticeSystem real_lattice_form(const Design& d, const Constellation& c, const ChannelInstance& ci,
                                           std::span<const cd> y, double snr, int m) {
  if (m < 0) return real_lattice_form(c, ci.g, y, snr, {});
  return real_lattice_form(c, ci.g, y, snr, d.subsets.at(m));
}

struct SphereOutcome {
  std::vector<int> x;
  DecodeCounters counters;
};

/// Schnorr-Euchner search over layers 2K..1; layers at or below 2*lambda
/// are resolved by clamped rounding instead of being enumerated.
inline SphereOutcome sphere_search(const RealLatticeSystem& sys) {
  if (sys.rows < sys.cols) throw Error(ErrorCode::Underdetermined, "sphere search needs 2NrT >= 2K");
  const int n = sys.cols;
  const int sic = 2 * sys.lambda;
  const int top = n - 1;
  const int hi_level = sys.levels - 1;

  CMatrix gm(sys.rows, n);
  for (int r = 0; r < sys.rows; ++r)
    for (int c = 0; c < n; ++c) gm(r, c) = sys.at(r, c);
  const HouseholderQr qr(gm);
  const CMatrix rc = qr.r();
  CVector yc(sys.y.begin(), sys.y.end());
  const CVector yqc = qr.apply_adjoint(yc);
  std::vector<double> r(static_cast<std::size_t>(n) * n), yq(n);
  for (int i = 0; i < n; ++i) {
    yq[i] = yqc[i].real();
    for (int j = 0; j < n; ++j) r[i * n + j] = rc(i, j).real();
  }
  auto R = [&](int i, int j) { return r[i * n + j]; };

  std::vector<double> t(n, 0.0), xi(n, 0.0), z(n, 0.0);
  std::vector<int> x(n, 0), lo(n, 0), hi(n, 0), best(n, 0);
  double d = std::numeric_limits<double>::infinity();
  DecodeCounters cnt;

  // Next zig-zag value at layer i within the alphabet; false when exhausted.
  auto next_value = [&](int i) {
    const bool lo_ok = lo[i] >= 0;
    const bool hi_ok = hi[i] <= hi_level;
    if (!lo_ok && !hi_ok) return false;
    if (lo_ok && (!hi_ok || z[i] - lo[i] <= hi[i] - z[i])) {
      x[i] = lo[i]--;
    } else {
      x[i] = hi[i]++;
    }
    return true;
  };

  enum class Step { Two, Three, Four, Five, Six };
  Step step = Step::Two;
  int i = top;
  double dist = 0.0;
  for (;;) {
    switch (step) {
      case Step::Two: {
        z[i] = (yq[i] - xi[i]) / R(i, i);
        const int near = static_cast<int>(detail::round_half_down(z[i]));
        if (i < sic) {
          x[i] = std::clamp(near, 0, hi_level);
          step = Step::Three;
        } else {
          lo[i] = std::min(near, hi_level);
          hi[i] = std::max(near + 1, 0);
          step = next_value(i) ? Step::Three : Step::Four;
        }
        break;
      }
      case Step::Three: {
        const double res = yq[i] - xi[i] - R(i, i) * x[i];
        dist = t[i] + res * res;
        if (dist > d) {
          step = Step::Four;
          break;
        }
        ++cnt.sphere_nodes;
        if (i > 0) {
          if (i == sic) ++cnt.zf_solves;
          double s = 0.0;
          for (int j = i; j < n; ++j) s += R(i - 1, j) * x[j];
          xi[i - 1] = s;
          t[i - 1] = dist;
          --i;
          step = Step::Two;
        } else {
          step = Step::Five;
        }
        break;
      }
      case Step::Four:
        if (i == top) return {best, cnt};
        i = i < sic ? sic : i + 1;
        if (i > top) return {best, cnt};
        step = Step::Six;
        break;
      case Step::Five:
        ++cnt.candidates_enumerated;
        d = dist;
        best = x;
        i = sic;
        if (i > top) return {best, cnt};
        step = Step::Six;
        break;
      case Step::Six:
        step = next_value(i) ? Step::Three : Step::Four;
        break;
    }
  }
}

inline DecodeResult sphere_aczf_sic(const Design& d, const Constellation& c, const ChannelInstance& ci,
                                    std::span<const cd> y, double snr) {
  if (!c.is_qam()) throw Error(ErrorCode::NotQam, "sphere decoding needs square QAM");
  const int m = select_subset(ci);
  const RealLatticeSystem sys = real_lattice_form(d, c, ci, y, snr, m);
  const SphereOutcome out = sphere_search(sys);
  DecodeResult r = detail::finish(c, ci.g, y, snr, sys.symbol_indices(out.x));
  r.counters = out.counters;
  r.subset = m;
  return r;
}

inline DecodeResult sphere_ml(const Design& d, const Constellation& c, const ChannelInstance& ci,
                              std::span<const cd> y, double snr) {
  if (!c.is_qam()) throw Error(ErrorCode::NotQam, "sphere decoding needs square QAM");
  const RealLatticeSystem sys = real_lattice_form(d, c, ci, y, snr, -1);
  const SphereOutcome out = sphere_search(sys);
  DecodeResult r = detail::finish(c, ci.g, y, snr, sys.symbol_indices(out.x));
  r.counters = out.counters;
  return r;
}

// ---------------------------------------------------------------------------

enum class DecoderKind { Zf, Aczf, AczfSic, SphereAczfSic, Ml, SphereMl };

inline const std::vector<DecoderKind>& all_decoders() {
  static const std::vector<DecoderKind> v{DecoderKind::Zf, DecoderKind::Aczf,  DecoderKind::AczfSic,
                                          DecoderKind::SphereAczfSic, DecoderKind::Ml, DecoderKind::SphereMl};
  return v;
}

inline std::string to_string(DecoderKind k) {
  switch (k) {
    case DecoderKind::Zf: return "zf";
    case DecoderKind::Aczf: return "aczf";
    case DecoderKind::AczfSic: return "aczf_sic";
    case DecoderKind::SphereAczfSic: return "sphere_aczf_sic";
    case DecoderKind::Ml: return "ml";
    case DecoderKind::SphereMl: return "sphere_ml";
  }
  return "?";
}

inline DecoderKind parse_decoder(const std::string& s) {
  for (auto k : all_decoders())
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::Parse, "unknown decoder '" + s + "'");
}

/// Candidate tuples an exhaustive decoder scores per decode; 0 for the
/// sphere decoders and plain ZF.
inline double exhaustive_candidates(DecoderKind k, const Design& d, const Constellation& c) {
  switch (k) {
    case DecoderKind::Aczf:
    case DecoderKind::AczfSic: return std::pow(static_cast<double>(c.m), d.k - d.lambda());
    case DecoderKind::Ml: return std::pow(static_cast<double>(c.m), d.k);
    default: return 0.0;
  }
}

inline DecodeResult run_decoder(DecoderKind k, const Design& d, const Constellation& c, const ChannelInstance& ci,
                                std::span<const cd> y, double snr) {
  switch (k) {
    case DecoderKind::Zf: return zf_decode(y, ci.g, c, snr);
    case DecoderKind::Aczf: return aczf_decode(d, c, ci, y, snr);
    case DecoderKind::AczfSic: return aczf_sic_decode(d, c, ci, y, snr);
    case DecoderKind::SphereAczfSic: return sphere_aczf_sic(d, c, ci, y, snr);
    case DecoderKind::Ml: return ml_exhaustive_decode(d, c, ci, y, snr);
    case DecoderKind::SphereMl: return sphere_ml(d, c, ci, y, snr);
  }
  throw Error(ErrorCode::InvalidConfig, "unhandled decoder");
}

}  // namespace stbc
