#include <gtest/gtest.h>

#include <cmath>

#include "stbc/channel.hpp"
#include "stbc/design.hpp"

using namespace stbc;

namespace {

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

CVector random_symbols(int k, RngStream& rng) {
  CVector s(k);
  for (auto& x : s) x = rng.complex_normal();
  return s;
}

}  // namespace

TEST(SampleChannel, MomentsOverAMillionEntries) {
  RngStream rng(41, 0);
  cd mean{};
  double power = 0.0, re2 = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n / 4; ++i) {
    const CMatrix h = sample_channel(2, 2, rng);
    for (auto x : h.data()) {
      mean += x;
      power += std::norm(x);
      re2 += x.real() * x.real();
    }
  }
  EXPECT_LT(std::abs(mean / double(n)), 0.01);
  EXPECT_NEAR(power / n, 1.0, 0.01);
  EXPECT_NEAR(re2 / n, 0.5, 0.01);
}

TEST(SampleChannel, ReplayIsIdentical) {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  const CMatrix ha = sample_channel(4, 2, a), hb = sample_channel(4, 2, b), hc = sample_channel(4, 2, c);
  EXPECT_EQ(max_abs_diff(ha, hb), 0.0);
  EXPECT_GT(max_abs_diff(ha, hc), 0.0);
}

TEST(EquivalentChannel, GoldenMatchesDisplayedMatrix) {
  const Design d = build_design("golden");
  const double tau = (1 + std::sqrt(5.0)) / 2, mu = -1 / tau;
  const cd a{1.0, mu}, ab{1.0, tau}, j{0.0, 1.0};
  RngStream rng(43, 0);
  const CMatrix h = sample_channel(2, 2, rng);
  const cd h1 = h(0, 0), h2 = h(0, 1), h3 = h(1, 0), h4 = h(1, 1);
  const CMatrix expect{{a * h1, j * ab * h3, a * tau * h1, j * ab * mu * h3},
                       {ab * h3, a * h1, ab * mu * h3, a * tau * h1},
                       {a * h2, j * ab * h4, a * tau * h2, j * ab * mu * h4},
                       {ab * h4, a * h2, ab * mu * h4, a * tau * h2}};
  const ChannelInstance ci = equivalent_channel(d, h);
  EXPECT_LT(max_abs_diff(ci.g, expect * cd{d.energy_scale}), 1e-14);
}

TEST(EquivalentChannel, FirstBasisColumn) {
  for (const auto& id : builtin_code_ids()) {
    const Design d = build_design(id);
    CMatrix h(d.nt, 1);
    h(0, 0) = 1.0;
    const ChannelInstance ci = equivalent_channel(d, h);
    ASSERT_EQ(ci.g.rows(), static_cast<std::size_t>(d.t));
    for (int i = 0; i < d.k; ++i)
      for (int r = 0; r < d.t; ++r) {
        const cd w = d.weights[i](r, 0);
        EXPECT_EQ(ci.g(r, i), d.is_conj_row(r) ? std::conj(w) : w) << id;
      }
  }
}

TEST(EquivalentChannel, SubsetBlocksAndDets) {
  RngStream rng(44, 0);
  for (const auto& id : builtin_code_ids()) {
    const Design d = build_design(id);
    const ChannelInstance ci = equivalent_channel(d, sample_channel(d.nt, 2, rng));
    ASSERT_EQ(ci.subset_channels.size(), d.subsets.size());
    for (int l = 0; l < d.subset_count(); ++l) {
      for (int j = 0; j < d.lambda(); ++j)
        for (std::size_t r = 0; r < ci.g.rows(); ++r)
          EXPECT_EQ(ci.subset_channels[l](r, j), ci.g(r, d.subsets[l][j]));
      EXPECT_GE(ci.subset_dets[l], 0.0);
      EXPECT_NEAR(ci.subset_dets[l], gram_det(ci.subset_channels[l]), 1e-12 * ci.subset_dets[l]);
    }
  }
}

TEST(EquivalentChannel, LinearInH) {
  RngStream rng(45, 0);
  for (const auto& id : builtin_code_ids()) {
    const Design d = build_design(id);
    const CMatrix h1 = sample_channel(d.nt, 2, rng), h2 = sample_channel(d.nt, 2, rng);
    const CMatrix g = equivalent_channel(d, h1 + h2).g;
    EXPECT_LT(max_abs_diff(g, equivalent_channel(d, h1).g + equivalent_channel(d, h2).g), 1e-13) << id;
  }
}

TEST(EquivalentChannel, DimensionMismatch) {
  try {
    equivalent_channel(build_design("golden"), CMatrix(3, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(EquivalentChannel, DeterminantHomogeneity) {
  RngStream rng(46, 0);
  const cd c{1.3, -0.4};
  for (const auto& id : builtin_code_ids()) {
    const Design d = build_design(id);
    const CMatrix h = sample_channel(d.nt, 2, rng);
    const ChannelInstance a = equivalent_channel(d, h), b = equivalent_channel(d, h * c);
    const double f = std::pow(std::norm(c), d.lambda());
    for (int l = 0; l < d.subset_count(); ++l)
      EXPECT_NEAR(b.subset_dets[l], f * a.subset_dets[l], 1e-9 * f * a.subset_dets[l]) << id;
  }
}

TEST(Transmit, NoiselessAndPureNoise) {
  const Design d = build_design("golden");
  RngStream rng(47, 0);
  const ChannelInstance ci = equivalent_channel(d, sample_channel(2, 2, rng));
  const CVector s = random_symbols(4, rng);
  const CVector y = transmit(s, ci, 9.0, nullptr);
  const CVector gs = ci.g * s;
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_LT(std::abs(y[i] - 3.0 * gs[i]), 1e-14);

  RngStream n1(48, 1), n2(48, 1);
  const CVector pure = transmit(s, ci, 0.0, &n1);
  for (std::size_t i = 0; i < pure.size(); ++i) EXPECT_EQ(pure[i], n2.complex_normal());
}

TEST(Transmit, MatrixFormAgrees) {
  RngStream rng(49, 0);
  const double snr = 7.5;
  for (const auto& id : builtin_code_ids()) {
    const Design d = build_design(id);
    for (int nr : {1, 2, 3}) {
      const CMatrix h = sample_channel(d.nt, nr, rng);
      const ChannelInstance ci = equivalent_channel(d, h);
      const CVector s = random_symbols(d.k, rng);
      const CVector y = transmit(s, ci, snr, nullptr);
      const CVector ym = received_vector(d, encode(d, s) * h * cd{std::sqrt(snr)});
      ASSERT_EQ(y.size(), ym.size());
      for (std::size_t i = 0; i < y.size(); ++i) EXPECT_LT(std::abs(y[i] - ym[i]), 1e-12) << id;
    }
  }
}

TEST(Transmit, ReceivedSnrCalibration) {
  const Constellation c = make_constellation(ConstellationKind::SquareQam, 4);
  RngStream rng(50, 0);
  for (const auto& id : builtin_code_ids()) {
    const Design d = build_design(id);
    const int nr = 2, trials = 20000;
    const double snr = 5.0;
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) {
      CVector s(d.k);
      for (auto& x : s) x = c.points[rng.uniform_index(4)];
      const CMatrix h = sample_channel(d.nt, nr, rng);
      acc += (encode(d, s) * h * cd{std::sqrt(snr)}).squared_norm();
    }
    EXPECT_NEAR(acc / trials / (d.t * nr), snr, 0.05 * snr) << id;
  }
}

TEST(Transmit, LengthMismatch) {
  const Design d = build_design("golden");
  RngStream rng(51, 0);
  const ChannelInstance ci = equivalent_channel(d, sample_channel(2, 2, rng));
  EXPECT_THROW(transmit(CVector(3), ci, 1.0, nullptr), Error);
}
