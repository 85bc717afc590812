#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "stbc/certify.hpp"
#include "stbc/design.hpp"
#include "support/defects.hpp"

using namespace stbc;

namespace {

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  EXPECT_EQ(a.rows(), b.rows());
  EXPECT_EQ(a.cols(), b.cols());
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

CMatrix power(const CMatrix& u, int p) {
  CMatrix out = CMatrix::identity(u.rows());
  for (int i = 0; i < p; ++i) out = u * out;
  return out;
}

CVector random_symbols(int k, RngStream& rng) {
  CVector s(k);
  for (auto& x : s) x = rng.complex_normal();
  return s;
}

const cd J{0.0, 1.0};

}  // namespace

TEST(BuildDesign, Dimensions) {
  struct Row {
    const char* id;
    int nt, t, k, l, lam;
    ConstellationKind kind;
  };
  const Row rows[] = {{"golden", 2, 2, 4, 2, 2, ConstellationKind::SquareQam},
                      {"perfect3", 3, 3, 9, 3, 3, ConstellationKind::Hex},
                      {"perfect4", 4, 4, 16, 4, 4, ConstellationKind::SquareQam},
                      {"tast3", 3, 3, 9, 3, 3, ConstellationKind::SquareQam},
                      {"srinath_rajan", 4, 4, 8, 2, 4, ConstellationKind::SquareQam}};
  for (const auto& r : rows) {
    const Design d = build_design(r.id);
    EXPECT_EQ(d.nt, r.nt) << r.id;
    EXPECT_EQ(d.t, r.t) << r.id;
    EXPECT_EQ(d.k, r.k) << r.id;
    EXPECT_EQ(d.subset_count(), r.l) << r.id;
    EXPECT_EQ(d.lambda(), r.lam) << r.id;
    EXPECT_EQ(d.kind, r.kind) << r.id;
    for (int l = 0; l < r.l; ++l)
      for (int j = 0; j < r.lam; ++j) EXPECT_EQ(d.subsets[l][j], l * r.lam + j);
  }
  EXPECT_EQ(build_design("srinath_rajan").rate(), 2.0);
}

TEST(BuildDesign, UnknownCode) {
  try {
    build_design("silver");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownCode);
  }
}

TEST(Golden, WeightMatricesBeforeRescale) {
  const Design d = build_design("golden");
  const double tau = (1 + std::sqrt(5.0)) / 2, mu = -1 / tau;
  const cd a{1.0, mu}, ab{1.0, tau};
  EXPECT_NEAR(d.energy_scale, 1.0 / std::sqrt(10.0), 1e-15);
  const CMatrix expect[] = {CMatrix{{a, 0.0}, {0.0, ab}}, CMatrix{{0.0, J * ab}, {a, 0.0}},
                            CMatrix{{a * tau, 0.0}, {0.0, ab * mu}}, CMatrix{{0.0, J * ab * mu}, {a * tau, 0.0}}};
  for (int i = 0; i < 4; ++i) EXPECT_LT(max_abs_diff(d.weights[i] * cd{1.0 / d.energy_scale}, expect[i]), 1e-14);
}

TEST(Golden, EncodeMatchesDisplayedForm) {
  const Design d = build_design("golden");
  const double tau = (1 + std::sqrt(5.0)) / 2, mu = -1 / tau;
  const cd a{1.0, mu}, ab{1.0, tau};
  RngStream rng(31, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const CVector s = random_symbols(4, rng);
    const CMatrix lhs = CMatrix{{s[0], J * s[1]}, {s[1], s[0]}} * CMatrix{{a, 0.0}, {0.0, ab}} +
                        CMatrix{{s[2], J * s[3]}, {s[3], s[2]}} * CMatrix{{a * tau, 0.0}, {0.0, ab * mu}};
    EXPECT_LT(max_abs_diff(encode(d, s), lhs * cd{d.energy_scale}), 1e-13);
  }
}

TEST(Perfect, ShiftMatrixPowers) {
  const cd g3 = std::polar(1.0, 2 * std::numbers::pi / 3);
  const CMatrix u3 = codes::shift_matrix(3, g3);
  EXPECT_LT(max_abs_diff(power(u3, 3), CMatrix::identity(3) * g3), 1e-15);
  const CMatrix u4 = codes::shift_matrix(4, J);
  EXPECT_LT(max_abs_diff(power(u4, 4), CMatrix::identity(4) * J), 1e-15);
  const cd gt = std::polar(1.0, std::numbers::pi / 15);
  const CMatrix ut = codes::shift_matrix(3, gt, gt);
  EXPECT_LT(max_abs_diff(power(ut, 3), CMatrix::identity(3) * (gt * gt * gt)), 1e-15);
}

TEST(Perfect, CyclicWeightStructure) {
  for (const char* id : {"perfect3", "perfect4", "tast3"}) {
    const Design d = build_design(id);
    const int n = d.nt;
    // A_{n l + k} = U^k A_{n l}, and every A_{n l} is diagonal.
    for (int l = 0; l < n; ++l) {
      const CMatrix& dl = d.weights[n * l];
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
          if (r != c) { EXPECT_EQ(dl(r, c), cd{}) << id; }
    }
    const cd corner = d.weights[1](0, n - 1) / d.weights[0](n - 1, n - 1);
    const cd sub = d.weights[1](1, 0) / d.weights[0](0, 0);
    const CMatrix u = codes::shift_matrix(n, corner, sub);
    for (int l = 0; l < n; ++l)
      for (int k = 1; k < n; ++k)
        EXPECT_LT(max_abs_diff(d.weights[n * l + k], u * d.weights[n * l + k - 1]), 1e-13) << id;
  }
}

TEST(Perfect, RotationsAreOrthogonal) {
  for (const CMatrix& m : {codes::rotation3(), codes::rotation4()}) {
    EXPECT_LT(max_abs_diff(m.transpose() * m, CMatrix::identity(m.rows())), 1e-13);
    for (auto x : m.data()) EXPECT_EQ(x.imag(), 0.0);
  }
}

TEST(SrinathRajan, TopLeftBlockOfFirstBasisCodeword) {
  const Design d = build_design("srinath_rajan");
  const codes::SrinathRajanParams p;
  CVector s(8);
  s[0] = 1.0;
  const CMatrix x = encode(d, s);
  const CMatrix expect = AlamoutiBlock{1.0, 0.0}.matrix() * cd{p.c * d.energy_scale};
  CMatrix tl(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) tl(r, c) = x(r, c);
  EXPECT_LT(max_abs_diff(tl, expect), 1e-15);
  EXPECT_NEAR(d.energy_scale, 0.5, 1e-15);
}

TEST(SrinathRajan, EncodeMatchesDisplayedDesign) {
  const Design d = build_design("srinath_rajan");
  RngStream rng(32, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const CVector s = random_symbols(8, rng);
    EXPECT_LT(max_abs_diff(encode(d, s), codes::srinath_rajan_codeword(s) * cd{d.energy_scale}), 1e-13);
  }
  EXPECT_EQ(d.conj_rows, (std::vector<int>{1, 3}));
}

TEST(SrinathRajan, AlamoutiSubBlocksAreScaledUnitary) {
  const Design d = build_design("srinath_rajan");
  RngStream rng(33, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const CMatrix x = encode(d, random_symbols(8, rng));
    for (int br = 0; br < 2; ++br)
      for (int bc = 0; bc < 2; ++bc) {
        CMatrix b(2, 2);
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) b(r, c) = x(2 * br + r, 2 * bc + c);
        const CMatrix g = b.adjoint() * b;
        EXPECT_LT(std::abs(g(0, 1)), 1e-12);
        EXPECT_NEAR(g(0, 0).real(), g(1, 1).real(), 1e-12);
      }
  }
}

TEST(Alamouti, NormIdentity) {
  RngStream rng(34, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const AlamoutiBlock a{rng.complex_normal(), rng.complex_normal()};
    const CVector u{rng.complex_normal(), rng.complex_normal()};
    EXPECT_NEAR(squared_norm(a.matrix() * u), (std::norm(a.a) + std::norm(a.b)) * squared_norm(u), 1e-12);
  }
}

TEST(Encode, BasisZeroAndLinearity) {
  RngStream rng(35, 0);
  for (const auto& id : builtin_code_ids()) {
    const Design d = build_design(id);
    EXPECT_TRUE(encode(d, CVector(d.k)).is_zero());
    const bool complex_linear = d.conj_rows.empty();
    for (int i = 0; i < d.k; ++i) {
      CVector e(d.k);
      e[i] = 1.0;
      EXPECT_LT(max_abs_diff(encode(d, e), d.weights[i]), 1e-15) << id;
    }
    const CVector s = random_symbols(d.k, rng), t = random_symbols(d.k, rng);
    CVector st(d.k);
    for (int i = 0; i < d.k; ++i) st[i] = s[i] + t[i];
    EXPECT_LT(max_abs_diff(encode(d, st), encode(d, s) + encode(d, t)), 1e-13) << id;
    const double r = 1.7;
    CVector rs(d.k);
    for (int i = 0; i < d.k; ++i) rs[i] = r * s[i];
    EXPECT_LT(max_abs_diff(encode(d, rs), encode(d, s) * cd{r}), 1e-13) << id;
    if (complex_linear) {
      const cd c{0.3, -2.1};
      CVector cs(d.k);
      for (int i = 0; i < d.k; ++i) cs[i] = c * s[i];
      EXPECT_LT(max_abs_diff(encode(d, cs), encode(d, s) * c), 1e-13) << id;
    }
  }
}

TEST(Encode, LengthMismatch) {
  const Design d = build_design("golden");
  try {
    encode(d, CVector(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(ValidateDesign, BuiltinsPass) {
  for (const auto& id : builtin_code_ids()) {
    const ValidationReport r = validate_design(build_design(id));
    for (const auto& c : r.checks) EXPECT_TRUE(c.ok) << id << ' ' << c.name << ' ' << c.detail;
    EXPECT_NEAR(weight_energy(build_design(id)), build_design(id).t, 1e-12);
  }
}

TEST(ValidateDesign, DuplicatedWeightFailsIndependence) {
  const ValidationReport r = validate_design(defects::duplicated_weight());
  ASSERT_NE(r.find("independence"), nullptr);
  EXPECT_FALSE(r.find("independence")->ok);
  EXPECT_TRUE(r.find("energy")->ok);
  EXPECT_FALSE(r.passed());
}

TEST(ValidateDesign, EnergyDefect) {
  Design d = build_design("golden");
  d.weights[0] *= cd{2.0};
  const ValidationReport r = validate_design(d);
  EXPECT_FALSE(r.find("energy")->ok);
  EXPECT_TRUE(r.find("independence")->ok);
}

TEST(ValidateDesign, SubsetAndLambdaDefects) {
  Design d = build_design("golden");
  d.subsets = {{0, 1, 2}, {1, 2, 3}};
  EXPECT_FALSE(validate_design(d).find("lambda_le_T")->ok);
  d.subsets = {{0, 1}, {2}};
  EXPECT_FALSE(validate_design(d).find("subsets")->ok);
  d.subsets = {{0, 4}, {2, 3}};
  EXPECT_FALSE(validate_design(d).find("subsets")->ok);
}

TEST(MinCodewordRank, GoldenExhaustive) {
  const Design d = build_design("golden");
  const Constellation c = make_constellation(ConstellationKind::SquareQam, 4);
  RngStream rng(36, 0);
  EXPECT_EQ(min_codeword_rank(d, c, 40000, rng), 2);
}

TEST(MinCodewordRank, SrinathRajanSampled) {
  const Design d = build_design("srinath_rajan");
  const Constellation c = make_constellation(ConstellationKind::SquareQam, 4);
  RngStream rng(37, 0);
  EXPECT_EQ(min_codeword_rank(d, c, 100000, rng), 4);
}

TEST(MinCodewordRank, DefectDropsRank) {
  // With A1 = A2 the vectors (a, b, ..) and (b, a, ..) give the same codeword.
  const Design d = defects::duplicated_weight();
  const Constellation c = make_constellation(ConstellationKind::SquareQam, 4);
  RngStream rng(38, 0);
  EXPECT_EQ(min_codeword_rank(d, c, 40000, rng), 0);
}

TEST(SubsetComplexity, MatchesTable) {
  const std::pair<const char*, int> expect[] = {
      {"golden", 2}, {"perfect3", 7}, {"tast3", 6}, {"perfect4", 12}, {"srinath_rajan", 4}};
  for (auto [id, e] : expect) {
    const Design d = build_design(id);
    EXPECT_EQ(d.k - d.lambda() + (d.kind == ConstellationKind::Hex ? 1 : 0), e) << id;
  }
}

TEST(DesignText, RoundTripAllBuiltins) {
  RngStream rng(39, 0);
  for (const auto& id : builtin_code_ids()) {
    const Design d = build_design(id);
    std::stringstream ss;
    write_design(d, ss);
    const Design e = read_design(ss, id);
    EXPECT_EQ(e.nt, d.nt);
    EXPECT_EQ(e.t, d.t);
    EXPECT_EQ(e.k, d.k);
    EXPECT_EQ(e.subsets, d.subsets);
    EXPECT_EQ(e.kind, d.kind);
    EXPECT_EQ(e.conj_rows, d.conj_rows);
    for (int i = 0; i < d.k; ++i) EXPECT_EQ(max_abs_diff(e.weights[i], d.weights[i]), 0.0) << id;
    const CVector s = random_symbols(d.k, rng);
    EXPECT_EQ(max_abs_diff(encode(e, s), encode(d, s)), 0.0);
  }
}

TEST(DesignText, ParsesHandWrittenFile) {
  std::istringstream in(
      "# Alamouti as a two-symbol design\n"
      "2 2 2 1 2 qam\n"
      "0.70710678118654757,0 0,0\n"
      "0,0 0.70710678118654757,0\n"
      "0,0 0.70710678118654757,0\n"
      "-0.70710678118654757,0 0,0\n"
      "1 2\n"
      "conj 2\n");
  const Design d = read_design(in, "alamouti");
  EXPECT_EQ(d.k, 2);
  EXPECT_EQ(d.conj_rows, (std::vector<int>{1}));
  EXPECT_EQ(d.subsets, (std::vector<std::vector<int>>{{0, 1}}));
  const CVector s{cd{1, 2}, cd{3, -1}};
  const CMatrix x = encode(d, s);
  const CMatrix expect = AlamoutiBlock{s[0], s[1]}.matrix() * cd{std::sqrt(0.5)};
  EXPECT_LT(max_abs_diff(x, expect), 1e-15);
  EXPECT_TRUE(validate_design(d).passed());
}

TEST(DesignText, ParseErrors) {
  const char* bad[] = {"",
                       "2 2 1 1 1 psk\n1,0 0,0\n0,0 1,0\n1\n",
                       "2 2 1 1 1 qam\n1,0 0,0\n",
                       "2 2 1 1 1 qam\n1,0 0,0\n0,0 1 0\n1\n",
                       "2 2 1 1 1 qam\n1,0 0,0\n0,0 1,0\n1 1\n",
                       "2 2 1 1 1 qam\n1,0 0,0\n0,0 1,0\n1\nconj 3\n",
                       "2 2 1 1 1 qam\n1,0 0,0\n0,0 x,0\n1\n",
                       "2 2 1 1 1 qam\n1,0 0,0\n0,0 1,0\n1\nextra\n"};
  for (const char* text : bad) {
    std::istringstream in(text);
    try {
      read_design(in);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parse) << text;
    }
  }
}

TEST(DesignText, MissingFile) {
  try {
    load_design_file("/nonexistent/dir/design.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}
