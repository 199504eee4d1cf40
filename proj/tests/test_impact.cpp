#include <gtest/gtest.h>

#include <cmath>

#include "newsvm/impact.hpp"
#include "newsvm/studies.hpp"
#include "support.hpp"

using namespace newsvm;

namespace {

// Two sources, lag 1: rows are [news0, news1, close_{t-1}].
Dataset probe_dataset(std::size_t rows = 6) {
  Dataset d;
  d.layout = {2, 1, 1, true};
  d.expanded = true;
  for (std::size_t i = 0; i < rows; ++i) {
    FeatureVector f;
    f.date = Date{2020, 3, 1 + static_cast<int>(i)};
    f.x = {0.0, 0.0, 10.0};
    f.label_price = 10.0;
    d.rows.push_back(f);
  }
  return d;
}

ScalingParams identity_scaler(std::size_t width) {
  ScalingParams s;
  s.mean.assign(width, 0.0);
  s.std.assign(width, 1.0);
  return s;
}

// Linear SVR f(x) = bias + sum_j slope_j x_j with an identity scaler.
SvmModel linear_model(double bias, const std::vector<double>& slopes) {
  SvmModel m;
  m.mode = SvmMode::Svr;
  m.params.kernel = {KernelKind::Polynomial, 1.0, 0.0, 1};
  m.bias = bias;
  for (std::size_t j = 0; j < slopes.size(); ++j) {
    std::vector<double> e(slopes.size(), 0.0);
    e[j] = 1.0;
    m.support_vectors.push_back(e);
    m.dual_coefs.push_back(slopes[j]);
  }
  m.set_dimension(slopes.size());
  m.scaler = identity_scaler(slopes.size());
  return m;
}

ImpactMatrix matrix_of(const Matrix& m) {
  ImpactMatrix im;
  im.m = m;
  for (std::size_t i = 0; i < m.size(); ++i) im.stock_ids.push_back("S" + std::to_string(i)), im.included.push_back(i);
  return im;
}

}  // namespace

TEST(ImpactMatrix, RelativePriceMove) {
  const auto d = probe_dataset();
  const auto model = linear_model(10.0, {0.01, 0.0, 0.0});
  const std::vector<StockProbe> probes{{"A", &model, &d}};
  const auto im = impact_matrix(probes, 100.0);
  ASSERT_EQ(im.m.size(), 1u);
  EXPECT_DOUBLE_EQ(im.base[0], 10.0);
  EXPECT_DOUBLE_EQ(im.perturbed[0][0], 11.0);
  EXPECT_NEAR(im.m[0][0], 0.1, 1e-15);
  EXPECT_EQ(im.m[0][1], 0.0);
}

TEST(ImpactMatrix, ZeroDeltaGivesZeros) {
  const auto d = probe_dataset();
  const auto model = linear_model(7.0, {0.3, -0.2, 0.5});
  const std::vector<StockProbe> probes{{"A", &model, &d}, {"B", &model, &d}};
  const auto im = impact_matrix(probes, 0.0);
  for (const auto& row : im.m)
    for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(ImpactMatrix, ConstantModelGivesZeros) {
  const auto d = probe_dataset();
  auto model = linear_model(3.0, {});
  model.set_dimension(3);
  model.scaler = identity_scaler(3);
  const std::vector<StockProbe> probes{{"A", &model, &d}};
  const auto im = impact_matrix(probes);
  for (double v : im.m.at(0)) EXPECT_EQ(v, 0.0);
}

TEST(ImpactMatrix, ShortOrZeroBaseStocksExcluded) {
  const auto short_data = probe_dataset(4), full = probe_dataset();
  const auto good = linear_model(10.0, {0.01, 0.02, 0.0});
  const auto zero = linear_model(0.0, {0.01, 0.02, 0.0});
  const std::vector<StockProbe> probes{{"short", &good, &short_data}, {"zero", &zero, &full}, {"ok", &good, &full}};
  const auto im = impact_matrix(probes);
  ASSERT_EQ(im.stock_ids, std::vector<std::string>{"ok"});
  EXPECT_EQ(im.included, std::vector<std::size_t>{2});
  EXPECT_EQ(im.warnings.size(), 2u);
}

TEST(ImpactMatrix, ProbeUsesFifthRow) {
  auto d = probe_dataset();
  d.rows[kProbeRow].x[2] = 20.0;  // base price follows the probe row only
  const auto model = linear_model(0.0, {0.0, 0.0, 1.0});
  const std::vector<StockProbe> probes{{"A", &model, &d}};
  EXPECT_DOUBLE_EQ(impact_matrix(probes).base[0], 20.0);
}

TEST(SourceWeights, SingleUnitVolumeStockCopiesRow) {
  const auto w = source_weights(matrix_of({{0.3, -0.1, 0.2}}), std::vector<double>{1.0});
  EXPECT_EQ(w.z, (std::vector<double>{0.3, -0.1, 0.2}));
  EXPECT_EQ(w.ranking, (std::vector<std::size_t>{0, 2, 1}));
  EXPECT_DOUBLE_EQ(w.normalized[0], 100.0);
  EXPECT_DOUBLE_EQ(w.normalized[1], 0.0);
}

TEST(SourceWeights, HandExampleWithTie) {
  const auto w = source_weights(matrix_of({{0.1, 0.2}, {0.3, 0.1}}), std::vector<double>{2.0, 1.0});
  EXPECT_NEAR(w.z[0], 0.5, 1e-15);
  EXPECT_NEAR(w.z[1], 0.5, 1e-15);
  EXPECT_EQ(w.ranking, (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(w.degenerate);
}

TEST(SourceWeights, RejectsBadVolumes) {
  EXPECT_THROW(source_weights(matrix_of({{0.1}}), std::vector<double>{0.0}), ValidationError);
  EXPECT_THROW(source_weights(matrix_of({{0.1}}), std::vector<double>{1.0, 2.0}), ValidationError);
}

TEST(SourceWeights, DoublingVolumesKeepsRanking) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix m(4, std::vector<double>(6));
    std::vector<double> v(4);
    for (std::size_t i = 0; i < 4; ++i) {
      for (auto& x : m[i]) x = rng.normal();
      v[i] = rng.uniform(1, 1e6);
    }
    const auto a = source_weights(matrix_of(m), v);
    for (auto& x : v) x *= 2.0;
    const auto b = source_weights(matrix_of(m), v);
    EXPECT_EQ(a.ranking, b.ranking);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(b.z[j], 2.0 * a.z[j], 1e-9 * std::abs(a.z[j]) + 1e-12);
  }
}

TEST(Spearman, AverageRanksAndCorrelation) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 40}), 1.0, 1e-15);
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}), -1.0, 1e-15);
  // Monotone transform leaves the rank correlation unchanged.
  const std::vector<double> a{0.3, -1.2, 5.0, 2.2, 0.0};
  std::vector<double> b;
  for (double x : a) b.push_back(std::exp(x));
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-15);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
}

TEST(ImpactModel, ExcludesProbeRowAndStoresScaler) {
  const auto out = generate(testing_support::planted_config(3, 60));
  const auto data = testing_support::planted_data(out, FeatureLayout{0, 3, 1, true}).expanded;
  SvmParams p;
  p.kernel.kind = KernelKind::Sigmoid;
  p.kernel.gamma = 0.01;
  const auto model = fit_impact_model(data, p);
  ASSERT_TRUE(model.scaler.has_value());
  std::vector<FeatureVector> rest;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (i != kProbeRow) rest.push_back(data.rows[i]);
  EXPECT_EQ(*model.scaler, fit_scaler(rest));
}

TEST(ImpactRun, PlantedOrderRecovered) {
  const auto out = generate(testing_support::planted_config(17, 300, 3));
  const auto in = testing_support::inputs_from(out);
  RunConfig cfg;
  cfg.c = 1.0;
  cfg.g = 0.01;
  const auto run = run_impact(cfg, in);
  ASSERT_EQ(run.matrix.included.size(), 3u);
  std::vector<double> mag;
  for (double z : run.weights.z) mag.push_back(std::abs(z));
  std::vector<double> planted(out.truth.coefficients.begin(), out.truth.coefficients.end());
  for (auto& x : planted) x = std::abs(x);
  EXPECT_GE(spearman(planted, mag), 0.7);
}
