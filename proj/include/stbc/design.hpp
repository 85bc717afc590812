#pragma once

// Linear-dispersion designs S = sum_i s_i A_i with an attached family of
// equal-size symbol subsets used by the conditional zero-forcing decoders.
//
// Rows listed in `conj_rows` carry conjugated symbols (Alamouti-style
// blocks): in those rows the codeword is sum_i conj(s_i) A_i.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stbc/constellation.hpp"
#include "stbc/error.hpp"
#include "stbc/matrix.hpp"
#include "stbc/rng.hpp"

namespace stbc {

struct Design {
  std::string name;
  int nt = 0;
  int t = 0;
  int k = 0;
  std::vector<CMatrix> weights;           // K matrices, T x Nt
  std::vector<std::vector<int>> subsets;  // 0-based, ascending
  ConstellationKind kind = ConstellationKind::SquareQam;
  std::vector<int> conj_rows;             // 0-based, ascending
  double energy_scale = 1.0;              // global factor applied to the raw weights

  int subset_count() const noexcept { return static_cast<int>(subsets.size()); }
  int lambda() const noexcept { return subsets.empty() ? 0 : static_cast<int>(subsets.front().size()); }
  double rate() const noexcept { return static_cast<double>(k) / t; }

  bool is_conj_row(int row) const { return std::binary_search(conj_rows.begin(), conj_rows.end(), row); }

  /// Indices not in subset l, ascending.
  std::vector<int> complement(int l) const {
    std::vector<int> out;
    const auto& s = subsets.at(l);
    for (int i = 0; i < k; ++i)
      if (!std::binary_search(s.begin(), s.end(), i)) out.push_back(i);
    return out;
  }
};

/// The Alamouti block [[a, b], [-b*, a*]].
struct AlamoutiBlock {
  cd a;
  cd b;

  CMatrix matrix() const { return CMatrix{{a, b}, {-std::conj(b), std::conj(a)}}; }
};

inline CMatrix encode(const Design& d, std::span<const cd> s) {
  if (static_cast<int>(s.size()) != d.k)
    throw Error(ErrorCode::LengthMismatch, "encode: expected " + std::to_string(d.k) + " symbols");
  CMatrix x(d.t, d.nt);
  for (int row = 0; row < d.t; ++row) {
    const bool cj = d.is_conj_row(row);
    for (int i = 0; i < d.k; ++i) {
      const cd si = cj ? std::conj(s[i]) : s[i];
      if (si == cd{}) continue;
      for (int c = 0; c < d.nt; ++c) x(row, c) += si * d.weights[i](row, c);
    }
  }
  return x;
}

inline double weight_energy(const Design& d) {
  double e = 0.0;
  for (const auto& w : d.weights) e += w.squared_norm();
  return e;
}

/// Rescale all weights by one real factor so that sum ||A_i||^2 = T.
inline void normalize_energy(Design& d) {
  const double e = weight_energy(d);
  if (e <= 0.0) throw Error(ErrorCode::InvalidConfig, "design has zero energy");
  const double f = std::sqrt(d.t / e);
  for (auto& w : d.weights) w *= f;
  d.energy_scale *= f;
}

inline Design make_design(std::string name, int nt, int t, std::vector<CMatrix> weights,
                          std::vector<std::vector<int>> subsets, ConstellationKind kind,
                          std::vector<int> conj_rows = {}, bool normalize = true) {
  Design d;
  d.name = std::move(name);
  d.nt = nt;
  d.t = t;
  d.k = static_cast<int>(weights.size());
  d.weights = std::move(weights);
  d.subsets = std::move(subsets);
  d.kind = kind;
  d.conj_rows = std::move(conj_rows);
  std::sort(d.conj_rows.begin(), d.conj_rows.end());
  if (normalize) normalize_energy(d);
  return d;
}

/// Build a design from an encoding function that may conjugate whole rows.
/// Each row must be either complex-linear or conjugate-linear in s.
inline Design design_from_function(std::string name, int nt, int t, int k,
                                   const std::function<CMatrix(std::span<const cd>)>& f,
                                   std::vector<std::vector<int>> subsets, ConstellationKind kind,
                                   bool normalize = true) {
  std::vector<CMatrix> weights;
  std::vector<int> row_kind(t, 0);  // 0 unknown, 1 linear, 2 conjugate
  const cd j{0.0, 1.0};
  for (int i = 0; i < k; ++i) {
    CVector e(k);
    e[i] = 1.0;
    const CMatrix w = f(e);
    e[i] = j;
    const CMatrix wj = f(e);
    for (int r = 0; r < t; ++r) {
      for (int c = 0; c < nt; ++c) {
        if (w(r, c) == cd{}) continue;
        const bool lin = std::abs(wj(r, c) - j * w(r, c)) <= 1e-12 * std::abs(w(r, c));
        const bool cnj = std::abs(wj(r, c) + j * w(r, c)) <= 1e-12 * std::abs(w(r, c));
        const int kind_here = lin ? 1 : (cnj ? 2 : -1);
        if (kind_here < 0 || (row_kind[r] != 0 && row_kind[r] != kind_here))
          throw Error(ErrorCode::InvalidConfig, "design row " + std::to_string(r) + " mixes linear and conjugate terms");
        row_kind[r] = kind_here;
      }
    }
    weights.push_back(w);
  }
  std::vector<int> conj_rows;
  for (int r = 0; r < t; ++r)
    if (row_kind[r] == 2) conj_rows.push_back(r);
  return make_design(std::move(name), nt, t, std::move(weights), std::move(subsets), kind, std::move(conj_rows),
                     normalize);
}

namespace codes {

inline std::vector<std::vector<int>> consecutive_subsets(int groups, int size) {
  std::vector<std::vector<int>> out(groups);
  for (int l = 0; l < groups; ++l)
    for (int i = 0; i < size; ++i) out[l].push_back(l * size + i);
  return out;
}

/// A_{n(l-1)+k} = U^{k-1} D_l with D_l = diag(column l of `gen`).
inline std::vector<CMatrix> cyclic_weights(const CMatrix& u, const CMatrix& gen) {
  const std::size_t n = u.rows();
  std::vector<CMatrix> out;
  for (std::size_t l = 0; l < n; ++l) {
    const CVector col = gen.col(l);
    const CMatrix dl = CMatrix::diagonal(col);
    CMatrix p = CMatrix::identity(n);
    for (std::size_t k = 0; k < n; ++k) {
      out.push_back(p * dl);
      p = u * p;
    }
  }
  return out;
}

inline CMatrix shift_matrix(std::size_t n, cd corner, cd sub = 1.0) {
  CMatrix u(n, n);
  u(0, n - 1) = corner;
  for (std::size_t i = 1; i < n; ++i) u(i, i - 1) = sub;
  return u;
}

// Orthonormal basis of an ideal of Z[2cos(2pi/7)] under its trace form;
// row i is the i-th power of the Galois generator 2cos(2pi/7) -> 2cos(4pi/7).
inline CMatrix rotation3() {
  return CMatrix{{-0.59100904850610358, 0.32798527760568202, 0.73697622909957861},
                 {-0.73697622909957783, -0.59100904850610314, -0.32798527760568152},
                 {0.32798527760568191, -0.73697622909957783, 0.59100904850610392}};
}

// Same construction over Z[2cos(2pi/15)], generator 2cos(2pi/15) -> 2cos(4pi/15).
inline CMatrix rotation4() {
  return CMatrix{{0.4051188016374952, 0.65549599053109397, -0.54215477877414231, -0.33507008044559999},
                 {-0.80579903690769028, 0.49801119291088375, -0.16845787006103211, 0.27257055943116337},
                 {-0.33507008044560022, -0.5421547787741422, -0.65549599053109342, -0.40511880163749492},
                 {0.27257055943116293, -0.16845787006103152, -0.49801119291088253, 0.80579903690769183}};
}

struct GoldenParams {
  double tau = (1.0 + std::sqrt(5.0)) / 2.0;
  double mu = -1.0 / ((1.0 + std::sqrt(5.0)) / 2.0);
  cd alpha() const { return {1.0, mu}; }
  cd alpha_bar() const { return {1.0, tau}; }
};

/// Golden weights; `t3`, `m3` multiply A3/A4 (tau and mu in the true code).
inline std::vector<CMatrix> golden_weights(double t3, double m3) {
  const GoldenParams p;
  const cd a = p.alpha(), ab = p.alpha_bar(), j{0.0, 1.0};
  return {CMatrix{{a, 0.0}, {0.0, ab}}, CMatrix{{0.0, j * ab}, {a, 0.0}}, CMatrix{{a * t3, 0.0}, {0.0, ab * m3}},
          CMatrix{{0.0, j * ab * m3}, {a * t3, 0.0}}};
}

inline Design golden() {
  const GoldenParams p;
  return make_design("golden", 2, 2, golden_weights(p.tau, p.mu), consecutive_subsets(2, 2),
                     ConstellationKind::SquareQam);
}

inline Design perfect3() {
  const cd gamma = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  return make_design("perfect3", 3, 3, cyclic_weights(shift_matrix(3, gamma), rotation3()), consecutive_subsets(3, 3),
                     ConstellationKind::Hex);
}

inline Design perfect4() {
  return make_design("perfect4", 4, 4, cyclic_weights(shift_matrix(4, cd{0.0, 1.0}), rotation4()),
                     consecutive_subsets(4, 4), ConstellationKind::SquareQam);
}

inline Design tast3() {
  const cd gamma = std::polar(1.0, std::numbers::pi / 15.0);
  return make_design("tast3", 3, 3, cyclic_weights(shift_matrix(3, gamma, gamma), rotation3()),
                     consecutive_subsets(3, 3), ConstellationKind::SquareQam);
}

struct SrinathRajanParams {
  double theta = 0.5 * std::atan(2.0);
  double c = std::cos(0.5 * std::atan(2.0));
  double s = std::sin(0.5 * std::atan(2.0));
  cd gamma = std::polar(1.0, std::numbers::pi / 4.0);
};

/// Unnormalized Srinath-Rajan codeword built from Alamouti blocks.
inline CMatrix srinath_rajan_codeword(std::span<const cd> x) {
  const SrinathRajanParams p;
  const cd j{0.0, 1.0};
  auto alam = [](cd a, cd b) { return AlamoutiBlock{a, b}.matrix(); };
  const CMatrix tl = p.c * alam(x[0], x[1]) + p.s * alam(j * x[4], j * x[5]);
  const CMatrix tr = p.gamma * p.s * alam(j * x[2], j * x[3]) + p.gamma * p.c * alam(x[6], x[7]);
  const CMatrix bl = p.gamma * p.c * alam(x[2], x[3]) + p.gamma * p.s * alam(j * x[6], j * x[7]);
  const CMatrix br = p.s * alam(j * x[0], j * x[1]) + p.c * alam(x[4], x[5]);
  CMatrix out(4, 4);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      out(r, c) = tl(r, c);
      out(r, c + 2) = tr(r, c);
      out(r + 2, c) = bl(r, c);
      out(r + 2, c + 2) = br(r, c);
    }
  return out;
}

inline Design srinath_rajan() {
  return design_from_function("srinath_rajan", 4, 4, 8, srinath_rajan_codeword, consecutive_subsets(2, 4),
                              ConstellationKind::SquareQam);
}

}  // namespace codes

inline const std::vector<std::string>& builtin_code_ids() {
  static const std::vector<std::string> ids{"golden", "perfect3", "perfect4", "tast3", "srinath_rajan"};
  return ids;
}

inline Design build_design(const std::string& code_id) {
  if (code_id == "golden") return codes::golden();
  if (code_id == "perfect3") return codes::perfect3();
  if (code_id == "perfect4") return codes::perfect4();
  if (code_id == "tast3") return codes::tast3();
  if (code_id == "srinath_rajan") return codes::srinath_rajan();
  throw Error(ErrorCode::UnknownCode, "unknown code '" + code_id + "'");
}

struct DesignCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<DesignCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const DesignCheck& c) { return c.ok; });
  }
  const DesignCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline ValidationReport validate_design(const Design& d) {
  ValidationReport rep;
  auto add = [&](std::string name, bool ok, std::string detail = {}) {
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  bool dims_ok = d.k >= 1 && d.nt >= 1 && d.t >= 1 && static_cast<int>(d.weights.size()) == d.k;
  for (const auto& w : d.weights)
    dims_ok = dims_ok && static_cast<int>(w.rows()) == d.t && static_cast<int>(w.cols()) == d.nt;
  add("dimensions", dims_ok, dims_ok ? "" : "weight count or shape does not match (K, T, Nt)");
  if (!dims_ok) return rep;

  bool subsets_ok = !d.subsets.empty();
  std::string why;
  const int lam = d.lambda();
  for (const auto& s : d.subsets) {
    if (static_cast<int>(s.size()) != lam) {
      subsets_ok = false;
      why = "subset sizes differ";
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] < 0 || s[i] >= d.k) {
        subsets_ok = false;
        why = "subset index out of range";
      }
      if (i > 0 && s[i] <= s[i - 1]) {
        subsets_ok = false;
        why = "subset indices must be strictly increasing";
      }
    }
  }
  if (lam < 1) {
    subsets_ok = false;
    why = "empty subsets";
  }
  add("subsets", subsets_ok, why);
  add("lambda_le_T", lam <= d.t, "lambda=" + std::to_string(lam) + " T=" + std::to_string(d.t));

  const double e = weight_energy(d);
  const bool energy_ok = std::abs(e - d.t) <= 1e-9 * d.t;
  char buf[96];
  std::snprintf(buf, sizeof buf, "sum ||A_i||^2 = %.12g, T = %d", e, d.t);
  add("energy", energy_ok, buf);

  // Independence over the reals of the 2K matrices S(e_i), S(j e_i).
  const int len = 2 * d.t * d.nt;
  CMatrix basis(len, 2 * d.k);
  for (int i = 0; i < d.k; ++i) {
    for (int part = 0; part < 2; ++part) {
      CVector s(d.k);
      s[i] = part == 0 ? cd{1.0} : cd{0.0, 1.0};
      const CMatrix x = encode(d, s);
      int r = 0;
      for (int a = 0; a < d.t; ++a)
        for (int b = 0; b < d.nt; ++b) {
          basis(r++, 2 * i + part) = x(a, b).real();
          basis(r++, 2 * i + part) = x(a, b).imag();
        }
    }
  }
  const std::size_t rank = numerical_rank(basis);
  add("independence", static_cast<int>(rank) == 2 * d.k,
      "real rank " + std::to_string(rank) + " of " + std::to_string(2 * d.k));
  return rep;
}

/// Minimum numerical rank of X - X' over distinct codeword pairs. All pairs
/// are examined when their number is <= `cap`, otherwise `cap` random pairs.
inline int min_codeword_rank(const Design& d, const Constellation& c, std::uint64_t cap, RngStream& rng) {
  const double codewords = std::pow(static_cast<double>(c.m), d.k);
  const double pairs = codewords * (codewords - 1.0) / 2.0;
  int best = d.nt;
  auto eval = [&](const std::vector<int>& a, const std::vector<int>& b) {
    CVector diff(d.k);
    for (int i = 0; i < d.k; ++i) diff[i] = c.points[a[i]] - c.points[b[i]];
    best = std::min(best, static_cast<int>(numerical_rank(encode(d, diff))));
  };
  auto digits = [&](std::uint64_t idx) {
    std::vector<int> out(d.k);
    for (int i = 0; i < d.k; ++i) {
      out[i] = static_cast<int>(idx % c.m);
      idx /= c.m;
    }
    return out;
  };
  if (pairs <= static_cast<double>(cap)) {
    const auto n = static_cast<std::uint64_t>(codewords);
    std::vector<std::vector<int>> all;
    all.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) all.push_back(digits(i));
    for (std::uint64_t i = 0; i < n; ++i)
      for (std::uint64_t k = i + 1; k < n; ++k) eval(all[i], all[k]);
    return best;
  }
  for (std::uint64_t p = 0; p < cap; ++p) {
    std::vector<int> a(d.k), b(d.k);
    do {
      for (int i = 0; i < d.k; ++i) {
        a[i] = static_cast<int>(rng.uniform_index(c.m));
        b[i] = static_cast<int>(rng.uniform_index(c.m));
      }
    } while (a == b);
    eval(a, b);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Plain-text design format:
//   Nt T K L lambda kind
//   K blocks of T lines, each with Nt "re,im" pairs
//   L lines of lambda 1-based indices
//   optional "conj r1 r2 ..." (1-based rows holding conjugated symbols)
// Blank lines and '#' comments are ignored.

inline void write_design(const Design& d, std::ostream& os) {
  os << d.nt << ' ' << d.t << ' ' << d.k << ' ' << d.subset_count() << ' ' << d.lambda() << ' ' << to_string(d.kind)
     << '\n';
  char buf[64];
  for (const auto& w : d.weights) {
    for (int r = 0; r < d.t; ++r) {
      for (int c = 0; c < d.nt; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", w(r, c).real(), w(r, c).imag());
        os << (c ? " " : "") << buf;
      }
      os << '\n';
    }
  }
  for (const auto& s : d.subsets) {
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " " : "") << s[i] + 1;
    os << '\n';
  }
  if (!d.conj_rows.empty()) {
    os << "conj";
    for (int r : d.conj_rows) os << ' ' << r + 1;
    os << '\n';
  }
}

inline Design read_design(std::istream& is, std::string name = "user") {
  std::vector<std::string> lines;
  for (std::string line; std::getline(is, line);) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(line);
  }
  std::size_t at = 0;
  auto next = [&]() -> std::istringstream {
    if (at >= lines.size()) throw Error(ErrorCode::Parse, "design file ended early");
    return std::istringstream(lines[at++]);
  };
  Design d;
  d.name = std::move(name);
  int l = 0, lam = 0;
  std::string kind;
  {
    auto hs = next();
    if (!(hs >> d.nt >> d.t >> d.k >> l >> lam >> kind)) throw Error(ErrorCode::Parse, "bad header line");
    if (d.nt < 1 || d.t < 1 || d.k < 1 || l < 1 || lam < 1) throw Error(ErrorCode::Parse, "header values must be >= 1");
  }
  if (kind == "qam") d.kind = ConstellationKind::SquareQam;
  else if (kind == "hex") d.kind = ConstellationKind::Hex;
  else throw Error(ErrorCode::Parse, "unknown constellation kind '" + kind + "'");
  for (int i = 0; i < d.k; ++i) {
    CMatrix w(d.t, d.nt);
    for (int r = 0; r < d.t; ++r) {
      auto rs = next();
      for (int c = 0; c < d.nt; ++c) {
        std::string tok;
        if (!(rs >> tok)) throw Error(ErrorCode::Parse, "weight row too short (line " + std::to_string(at) + ")");
        const auto comma = tok.find(',');
        if (comma == std::string::npos) throw Error(ErrorCode::Parse, "expected re,im pair, got '" + tok + "'");
        try {
          w(r, c) = cd(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
        } catch (const std::logic_error&) {
          throw Error(ErrorCode::Parse, "bad number in '" + tok + "'");
        }
        if (!std::isfinite(w(r, c).real()) || !std::isfinite(w(r, c).imag()))
          throw Error(ErrorCode::NonFinite, "non-finite weight entry");
      }
    }
    d.weights.push_back(std::move(w));
  }
  for (int s = 0; s < l; ++s) {
    auto ss = next();
    std::vector<int> subset;
    int idx = 0;
    while (ss >> idx) subset.push_back(idx - 1);
    if (static_cast<int>(subset.size()) != lam)
      throw Error(ErrorCode::Parse, "subset line " + std::to_string(s + 1) + " does not have lambda entries");
    d.subsets.push_back(std::move(subset));
  }
  if (at < lines.size()) {
    auto cs = next();
    std::string tag;
    cs >> tag;
    if (tag != "conj") throw Error(ErrorCode::Parse, "unexpected trailing line");
    int r = 0;
    while (cs >> r) {
      if (r < 1 || r > d.t) throw Error(ErrorCode::Parse, "conj row out of range");
      d.conj_rows.push_back(r - 1);
    }
    std::sort(d.conj_rows.begin(), d.conj_rows.end());
  }
  if (at != lines.size()) throw Error(ErrorCode::Parse, "trailing content after design");
  return d;
}

inline Design load_design_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open design file '" + path + "'");
  std::string stem = path;
  if (auto s = stem.find_last_of('/'); s != std::string::npos) stem = stem.substr(s + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
  return read_design(in, stem);
}

}  // namespace stbc
