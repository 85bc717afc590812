#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "stbc/error.hpp"
#include "stbc/matrix.hpp"

namespace stbc {

enum class ConstellationKind { SquareQam, Hex };

inline std::string to_string(ConstellationKind k) { return k == ConstellationKind::SquareQam ? "qam" : "hex"; }

/// Finite unit-average-energy signal set.
///
/// SquareQAM points are scale * ((i_re - c) + j (i_im - c)) with
/// c = (sqrtM - 1) / 2 and index = i_re * sqrtM + i_im, so index order is
/// lexicographic in (real, imag) grid position.
struct Constellation {
  ConstellationKind kind = ConstellationKind::SquareQam;
  int m = 0;
  std::vector<cd> points;
  int bits_per_symbol = 0;
  double scale = 1.0;  // QAM grid step; 1 for HEX
  int sqrt_m = 0;      // QAM only

  bool is_qam() const noexcept { return kind == ConstellationKind::SquareQam; }
  double grid_offset() const noexcept { return 0.5 * (sqrt_m - 1); }
};

namespace detail {

inline int log2_exact(int m) {
  int b = 0;
  while ((1 << b) < m) ++b;
  return (1 << b) == m ? b : -1;
}

// Round half toward the smaller value.
inline double round_half_down(double w) { return std::ceil(w - 0.5); }

inline int gray_encode(int i) { return i ^ (i >> 1); }
inline int gray_decode(int g) {
  int i = 0;
  for (; g; g >>= 1) i ^= g;
  return i;
}

}  // namespace detail

inline Constellation make_constellation(ConstellationKind kind, int m) {
  Constellation c;
  c.kind = kind;
  c.m = m;
  const int bits = detail::log2_exact(m);
  if (m < 2 || bits < 0) throw Error(ErrorCode::UnsupportedSize, "constellation size must be a power of two >= 2");
  c.bits_per_symbol = bits;
  if (kind == ConstellationKind::SquareQam) {
    if (bits % 2 != 0) throw Error(ErrorCode::UnsupportedSize, "square QAM needs an even power of two");
    c.sqrt_m = 1 << (bits / 2);
    c.scale = std::sqrt(6.0 / (m - 1));
    const double off = c.grid_offset();
    c.points.reserve(m);
    for (int ire = 0; ire < c.sqrt_m; ++ire)
      for (int iim = 0; iim < c.sqrt_m; ++iim) c.points.emplace_back(c.scale * (ire - off), c.scale * (iim - off));
    return c;
  }
  if (m != 4 && m != 8 && m != 16) throw Error(ErrorCode::UnsupportedSize, "HEX supports M in {4, 8, 16}");
  // Lowest-energy Eisenstein integers a + b w, ties broken by angle in [0, 2pi).
  struct Cand {
    int norm;
    double angle;
    cd z;
  };
  const cd w = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  std::vector<Cand> cands;
  for (int a = -4; a <= 4; ++a)
    for (int b = -4; b <= 4; ++b) {
      const cd z = static_cast<double>(a) + static_cast<double>(b) * w;
      double ang = std::atan2(z.imag(), z.real());
      if (ang < -1e-12) ang += 2.0 * std::numbers::pi;
      if (std::abs(ang) < 1e-12) ang = 0.0;
      cands.push_back({a * a - a * b + b * b, ang, z});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.norm != y.norm) return x.norm < y.norm;
    return x.angle < y.angle;
  });
  cd centroid{};
  for (int i = 0; i < m; ++i) centroid += cands[i].z;
  centroid /= static_cast<double>(m);
  double energy = 0.0;
  for (int i = 0; i < m; ++i) energy += std::norm(cands[i].z - centroid);
  energy /= m;
  const double s = 1.0 / std::sqrt(energy);
  for (int i = 0; i < m; ++i) c.points.push_back((cands[i].z - centroid) * s);
  c.scale = 1.0;
  return c;
}

/// Nearest point of the unnormalized PAM grid {-(sqrtM-1)/2, ..., (sqrtM-1)/2},
/// clipped at the edges; exact midpoints go to the smaller value.
inline double slice_qam_coordinate(double v, int sqrt_m) {
  const double off = 0.5 * (sqrt_m - 1);
  double idx = detail::round_half_down(v + off);
  idx = std::clamp(idx, 0.0, static_cast<double>(sqrt_m - 1));
  return idx - off;
}

/// Grid index in [0, sqrtM) for a normalized coordinate.
inline int slice_qam_level(double v, const Constellation& c) {
  const double idx = detail::round_half_down(v / c.scale + c.grid_offset());
  return static_cast<int>(std::clamp(idx, 0.0, static_cast<double>(c.sqrt_m - 1)));
}

struct SliceResult {
  cd point;
  int index = 0;
};

/// Exhaustive nearest-point search; ties go to the lowest index.
inline SliceResult slice_nearest(cd v, const Constellation& c) {
  int best = 0;
  double bd = std::norm(v - c.points[0]);
  for (int i = 1; i < c.m; ++i) {
    const double d = std::norm(v - c.points[i]);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return {c.points[best], best};
}

/// Constant-time slicing for square QAM, exhaustive scan otherwise.
inline int slice_index(cd v, const Constellation& c) {
  if (c.is_qam()) return slice_qam_level(v.real(), c) * c.sqrt_m + slice_qam_level(v.imag(), c);
  return slice_nearest(v, c).index;
}

/// Bits (MSB first) to symbol index. QAM uses a per-axis Gray code (real
/// axis bits first); HEX uses natural binary.
inline int map_bits(std::span<const int> bits, const Constellation& c) {
  if (static_cast<int>(bits.size()) != c.bits_per_symbol)
    throw Error(ErrorCode::LengthMismatch, "map_bits: expected " + std::to_string(c.bits_per_symbol) + " bits");
  auto value = [&](std::size_t from, std::size_t count) {
    int x = 0;
    for (std::size_t i = from; i < from + count; ++i) x = (x << 1) | (bits[i] & 1);
    return x;
  };
  if (!c.is_qam()) return value(0, bits.size());
  const std::size_t half = bits.size() / 2;
  return detail::gray_decode(value(0, half)) * c.sqrt_m + detail::gray_decode(value(half, half));
}

inline std::vector<int> demap_symbol(int index, const Constellation& c) {
  if (index < 0 || index >= c.m) throw Error(ErrorCode::LengthMismatch, "demap_symbol: index out of range");
  std::vector<int> bits(c.bits_per_symbol);
  auto put = [&](int x, std::size_t from, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) bits[from + count - 1 - i] = (x >> i) & 1;
  };
  if (!c.is_qam()) {
    put(index, 0, bits.size());
  } else {
    const std::size_t half = bits.size() / 2;
    put(detail::gray_encode(index / c.sqrt_m), 0, half);
    put(detail::gray_encode(index % c.sqrt_m), half, half);
  }
  return bits;
}

/// Parse "qam4", "qam16", "hex4", ...
inline Constellation parse_modulation(const std::string& s) {
  auto tail = [&](std::size_t n) {
    try {
      std::size_t used = 0;
      const int m = std::stoi(s.substr(n), &used);
      if (used != s.size() - n) throw Error(ErrorCode::Parse, "bad modulation '" + s + "'");
      return m;
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Parse, "bad modulation '" + s + "'");
    }
  };
  if (s.rfind("qam", 0) == 0) return make_constellation(ConstellationKind::SquareQam, tail(3));
  if (s.rfind("hex", 0) == 0) return make_constellation(ConstellationKind::Hex, tail(3));
  throw Error(ErrorCode::Parse, "unknown modulation '" + s + "'");
}

inline std::string modulation_name(const Constellation& c) { return to_string(c.kind) + std::to_string(c.m); }

}  // namespace stbc
