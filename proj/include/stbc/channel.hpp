#pragma once

// Quasi-static Rayleigh channel, equivalent channel G and received-vector
// synthesis y = sqrt(snr) G s + n.
//
// For designs with conjugated rows, the entries of vec(Y) that come from
// those rows are conjugated before use. G is built to match, so the same
// linear model in s holds for every design.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "stbc/design.hpp"
#include "stbc/error.hpp"
#include "stbc/matrix.hpp"
#include "stbc/rng.hpp"

namespace stbc {

inline CMatrix sample_channel(int nt, int nr, RngStream& rng) {
  CMatrix h(nt, nr);
  for (int r = 0; r < nt; ++r)
    for (int c = 0; c < nr; ++c) h(r, c) = rng.complex_normal();
  return h;
}

struct ChannelInstance {
  CMatrix h;                            // Nt x Nr
  CMatrix g;                            // Nr*T x K
  std::vector<CMatrix> subset_channels; // G_{I_l}, columns in increasing index order
  std::vector<double> subset_dets;      // det(G_I^H G_I)
  std::vector<bool> subset_full_rank;   // passes the rank tolerance

  int nr() const noexcept { return static_cast<int>(h.cols()); }
};

/// vec(Y) with the entries of conjugated rows conjugated.
inline CVector received_vector(const Design& d, const CMatrix& y_matrix) {
  CVector y = vec(y_matrix);
  const std::size_t t = y_matrix.rows();
  for (std::size_t i = 0; i < y.size(); ++i)
    if (d.is_conj_row(static_cast<int>(i % t))) y[i] = std::conj(y[i]);
  return y;
}

inline ChannelInstance equivalent_channel(const Design& d, const CMatrix& h) {
  if (static_cast<int>(h.rows()) != d.nt || h.cols() < 1)
    throw Error(ErrorCode::DimensionMismatch, "channel must be Nt x Nr with Nt=" + std::to_string(d.nt));
  ChannelInstance ci;
  ci.h = h;
  const std::size_t n = static_cast<std::size_t>(d.t) * h.cols();
  ci.g = CMatrix(n, d.k);
  for (int i = 0; i < d.k; ++i) ci.g.set_col(i, received_vector(d, d.weights[i] * h));
  for (const auto& s : d.subsets) {
    CMatrix gi = ci.g.select_cols(s);
    ci.subset_dets.push_back(gram_det(gi));
    ci.subset_full_rank.push_back(has_full_column_rank(gi));
    ci.subset_channels.push_back(std::move(gi));
  }
  return ci;
}

/// y = sqrt(snr) G s + n; `rng` absent gives the noiseless observation.
inline CVector transmit(std::span<const cd> s, const ChannelInstance& ci, double snr, RngStream* rng) {
  if (s.size() != ci.g.cols()) throw Error(ErrorCode::LengthMismatch, "transmit: symbol count");
  CVector y = ci.g * s;
  const double a = std::sqrt(snr);
  for (auto& v : y) v *= a;
  if (rng)
    for (auto& v : y) v += rng->complex_normal();
  return y;
}

}  // namespace stbc
