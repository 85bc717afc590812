#pragma once

// Numerical checks of the full-diversity criteria and the complexity
// exponents of a design with a given subset family.
//
// The stacked matrix X~(u_1..u_L) has block l equal to the codeword formed
// from u_l placed on the symbols of I_l (zeros elsewhere). The criterion is
// that X~ has full column rank for every choice of nonzero u_l.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stbc/channel.hpp"
#include "stbc/design.hpp"
#include "stbc/error.hpp"
#include "stbc/matrix.hpp"
#include "stbc/rng.hpp"

namespace stbc {

inline constexpr double kCertifyThreshold = kRankTolerance;
/// Minima between the threshold and this margin are reported as inconclusive.
inline constexpr double kInconclusiveMargin = 1e-6;

inline CMatrix subset_codeword(const Design& d, int l, std::span<const cd> u) {
  const auto& idx = d.subsets.at(l);
  if (u.size() != idx.size()) throw Error(ErrorCode::LengthMismatch, "subset vector length must equal lambda");
  CVector s(d.k);
  for (std::size_t j = 0; j < idx.size(); ++j) s[idx[j]] = u[j];
  return encode(d, s);
}

inline CMatrix stack_matrix(const Design& d, std::span<const CVector> u) {
  if (static_cast<int>(u.size()) != d.subset_count())
    throw Error(ErrorCode::LengthMismatch, "need one vector per subset");
  std::vector<CMatrix> blocks;
  blocks.reserve(u.size());
  for (int l = 0; l < d.subset_count(); ++l) blocks.push_back(subset_codeword(d, l, u[l]));
  return vstack(blocks);
}

enum class Verdict { Certified, Refuted, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "certified";
    case Verdict::Refuted: return "refuted";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct Certificate {
  std::string design;
  std::uint64_t trials = 0;
  double min_sigma = std::numeric_limits<double>::infinity();  // min of sigma_min / sigma_max
  double threshold = kCertifyThreshold;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<CVector> witness;  // u_1..u_L at the observed minimum
  double random_min = std::numeric_limits<double>::infinity();
  double probe_min = std::numeric_limits<double>::infinity();
  double search_min = std::numeric_limits<double>::infinity();
};

struct CertifyOptions {
  int restarts = 24;    // random starts for the alternating search
  int iterations = 300; // per start
};

namespace detail {

inline double stack_ratio(const Design& d, std::span<const CVector> u) { return singular_ratio(stack_matrix(d, u)); }

inline CVector normalized(CVector v) {
  const double n = std::sqrt(squared_norm(v));
  for (auto& x : v) x /= n;
  return v;
}

inline CVector random_unit(int n, RngStream& rng) {
  for (;;) {
    CVector v(n);
    for (auto& x : v) x = rng.complex_normal();
    if (std::sqrt(squared_norm(v)) >= 1e-6) return normalized(std::move(v));
  }
}

// Unit u minimizing ||X_l(u) h|| for fixed h. The map is only real-linear
// when the design conjugates rows, so it is solved over R^{2 lambda}.
inline CVector best_subset_vector(const Design& d, int l, std::span<const cd> h) {
  const int lam = d.lambda();
  CMatrix b(2 * d.t, 2 * lam);
  for (int j = 0; j < lam; ++j)
    for (int part = 0; part < 2; ++part) {
      CVector u(lam);
      u[j] = part == 0 ? cd{1.0} : cd{0.0, 1.0};
      const CVector col = subset_codeword(d, l, u) * h;
      for (int r = 0; r < d.t; ++r) {
        b(2 * r, 2 * j + part) = col[r].real();
        b(2 * r + 1, 2 * j + part) = col[r].imag();
      }
    }
  const Svd s = svd_jacobi(b);
  CVector u(lam);
  for (int j = 0; j < lam; ++j) u[j] = cd(s.v(2 * j, 2 * lam - 1).real(), s.v(2 * j + 1, 2 * lam - 1).real());
  return normalized(std::move(u));
}

inline CVector smallest_right_vector(const CMatrix& m) {
  const Svd s = svd_jacobi(m);
  return s.v.col(s.v.cols() - 1);
}

inline std::vector<std::vector<CVector>> probe_set(const Design& d, RngStream& rng) {
  const int lam = d.lambda();
  const int nl = d.subset_count();
  std::vector<CVector> basis;
  for (int j = 0; j < lam; ++j) {
    CVector e(lam);
    e[j] = 1.0;
    basis.push_back(e);
  }
  std::vector<CVector> seeds = basis;
  seeds.push_back(normalized(CVector(lam, cd{1.0})));
  for (int a = 0; a < lam; ++a)
    for (int b = a + 1; b < lam; ++b) {
      CVector v(lam);
      v[a] = 1.0;
      v[b] = -1.0;
      seeds.push_back(normalized(v));
      v[b] = cd{0.0, 1.0};
      seeds.push_back(normalized(v));
    }
  for (int r = 0; r < 2; ++r) seeds.push_back(random_unit(lam, rng));

  std::vector<std::vector<CVector>> out;
  // Standard-basis combinations, capped to keep the probe count small.
  const double combos = std::pow(static_cast<double>(lam), nl);
  if (combos <= 4096) {
    std::vector<int> digit(nl, 0);
    for (;;) {
      std::vector<CVector> u;
      for (int l = 0; l < nl; ++l) u.push_back(basis[digit[l]]);
      out.push_back(std::move(u));
      int p = 0;
      while (p < nl && ++digit[p] == lam) digit[p++] = 0;
      if (p == nl) break;
    }
  }
  for (const auto& v : seeds) {
    out.emplace_back(nl, v);  // equal vectors in every block
    for (int a = 0; a < nl; ++a)
      for (int b = a + 1; b < nl; ++b) {
        std::vector<CVector> u(nl, v);
        for (auto& x : u[b]) x = std::conj(x);  // conjugate pair
        out.push_back(std::move(u));
      }
    // One block pinned to a seed, the others random.
    for (int a = 0; a < nl; ++a) {
      std::vector<CVector> u;
      for (int l = 0; l < nl; ++l) u.push_back(l == a ? v : random_unit(lam, rng));
      out.push_back(std::move(u));
    }
  }
  return out;
}

}  // namespace detail

inline Certificate certify_theorem2(const Design& d, std::uint64_t trials, RngStream& rng, CertifyOptions opt = {}) {
  if (trials < 1) throw Error(ErrorCode::InvalidConfig, "trials must be >= 1");
  if (d.subsets.empty() || d.lambda() < 1) throw Error(ErrorCode::InvalidConfig, "design has no subsets");
  Certificate cert;
  cert.design = d.name;
  cert.trials = trials;
  const int lam = d.lambda();
  const int nl = d.subset_count();

  auto consider = [&](const std::vector<CVector>& u, double ratio, double& stage_min) {
    stage_min = std::min(stage_min, ratio);
    if (ratio < cert.min_sigma) {
      cert.min_sigma = ratio;
      cert.witness = u;
    }
  };

  for (std::uint64_t t = 0; t < trials; ++t) {
    std::vector<CVector> u;
    for (int l = 0; l < nl; ++l) {
      CVector v(lam);
      do {
        for (auto& x : v) x = rng.complex_normal();
      } while (std::sqrt(squared_norm(v)) < 1e-6);
      u.push_back(std::move(v));
    }
    consider(u, detail::stack_ratio(d, u), cert.random_min);
  }

  const auto probes = detail::probe_set(d, rng);
  for (const auto& u : probes) consider(u, detail::stack_ratio(d, u), cert.probe_min);

  // Alternating minimization of ||X~(u) h|| over unit h and unit u_l.
  std::vector<std::vector<CVector>> starts = probes;
  for (int r = 0; r < opt.restarts; ++r) {
    std::vector<CVector> u;
    for (int l = 0; l < nl; ++l) u.push_back(detail::random_unit(lam, rng));
    starts.push_back(std::move(u));
  }
  for (auto u : starts) {
    for (auto& v : u) v = detail::normalized(v);
    for (int it = 0; it < opt.iterations; ++it) {
      const CMatrix x = stack_matrix(d, u);
      const double ratio = singular_ratio(x);
      consider(u, ratio, cert.search_min);
      if (ratio < 1e-13) break;
      const CVector h = detail::smallest_right_vector(x);
      for (int l = 0; l < nl; ++l) u[l] = detail::best_subset_vector(d, l, h);
    }
    consider(u, detail::stack_ratio(d, u), cert.search_min);
  }

  if (cert.min_sigma <= cert.threshold) {
    cert.verdict = Verdict::Refuted;
  } else if (cert.min_sigma <= kInconclusiveMargin) {
    cert.verdict = Verdict::Inconclusive;
  } else {
    cert.verdict = Verdict::Certified;
  }
  return cert;
}

struct Theorem1Check {
  bool ok = false;
  int m = -1;                     // subset with the largest Gram determinant among full-rank ones
  std::vector<bool> full_rank;
  std::vector<double> dets;
};

inline Theorem1Check check_theorem1_instance(const Design& d, const CMatrix& h) {
  if (h.is_zero()) throw Error(ErrorCode::ZeroChannel, "channel matrix is zero");
  const ChannelInstance ci = equivalent_channel(d, h);
  Theorem1Check out;
  out.full_rank = ci.subset_full_rank;
  out.dets = ci.subset_dets;
  double best = -1.0;
  for (std::size_t l = 0; l < ci.subset_dets.size(); ++l)
    if (ci.subset_full_rank[l] && ci.subset_dets[l] > best) {
      best = ci.subset_dets[l];
      out.m = static_cast<int>(l);
    }
  out.ok = out.m >= 0;
  return out;
}

struct ComplexityBounds {
  int lower_exponent = 0;
  int achieved_exponent = 0;
  bool optimal() const noexcept { return lower_exponent == achieved_exponent; }
};

inline ComplexityBounds complexity_bounds(const Design& d) {
  const int extra = d.kind == ConstellationKind::SquareQam ? 0 : 1;
  return {d.k - d.t + extra, d.k - d.lambda() + extra};
}

/// Empirical minimum over unit-norm channels of max_l det(G_I^H G_I).
inline double gram_floor(const Design& d, int nr, int samples, RngStream& rng) {
  double floor = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    CMatrix h = sample_channel(d.nt, nr, rng);
    h *= 1.0 / h.frobenius_norm();
    const ChannelInstance ci = equivalent_channel(d, h);
    floor = std::min(floor, *std::max_element(ci.subset_dets.begin(), ci.subset_dets.end()));
  }
  return floor;
}

}  // namespace stbc
