#include <gtest/gtest.h>

#include "newsvm/studies.hpp"
#include "support.hpp"

using namespace newsvm;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') out.push_back(cur), cur.clear();
    else cur += c;
  }
  return out;
}

// Synthetic corpus written to disk and a run configuration pointing at it.
struct Fixture {
  testing_support::TempDir dir{"studies"};
  RunConfig cfg;

  explicit Fixture(double no_news = 0.0, std::size_t days = 120, std::size_t stocks = 1) {
    auto sc = testing_support::planted_config(31, days, stocks);
    sc.no_news_probability = no_news;
    write_synth(sc, generate(sc), dir.path().string());
    cfg.news_path = dir.file("news.jsonl");
    cfg.sources_path = dir.file("sources.txt");
    cfg.sentiment_path = dir.file("sentiment.tsv");
    cfg.stopwords_path = dir.file("stopwords.txt");
    for (std::size_t k = 1; k <= stocks; ++k) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "stocks/SYN%03zu.csv", k);
      cfg.stock_paths.push_back(dir.file(buf));
    }
    cfg.layout.lag = 5;
  }
};

}  // namespace

TEST(Inputs, MissingLexiconNamesInputAndStage) {
  Fixture f;
  f.cfg.sentiment_path = f.dir.file("absent.tsv");
  try {
    load_inputs(f.cfg);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "load-lexicons");
    EXPECT_NE(std::string(e.what()).find("sentiment lexicon"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("absent.tsv"), std::string::npos);
  }
  f.cfg.sentiment_path = f.dir.file("sentiment.tsv");
  f.cfg.stock_paths.clear();
  try {
    load_inputs(f.cfg);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "load-stocks");
  }
}

TEST(Inputs, SourcesDefaultToCorpusOrder) {
  Fixture f;
  const auto with_file = load_inputs(f.cfg);
  f.cfg.sources_path.clear();
  const auto inferred = load_inputs(f.cfg);
  EXPECT_EQ(with_file.sources, inferred.sources);
  EXPECT_EQ(with_file.sources.size(), 20u);
}

TEST(Pipeline, DeterministicAndModeSpecificMetrics) {
  Fixture f;
  const auto in = load_inputs(f.cfg);
  for (SvmMode mode : {SvmMode::Svc, SvmMode::Svr}) {
    f.cfg.mode = mode;
    const auto a = run_pipeline(f.cfg, in), b = run_pipeline(f.cfg, in);
    const auto csv = format_metrics_csv(a.stock_id, mode, a.holdout);
    EXPECT_EQ(csv, format_metrics_csv(b.stock_id, mode, b.holdout));
    const auto lines = lines_of(csv);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], kMetricsSchema);
    if (mode == SvmMode::Svc) {
      EXPECT_EQ(lines[1], "stock_id,mode,train_rows,test_rows,acc,converged");
      EXPECT_FALSE(a.holdout.metrics.mse.has_value());
    } else {
      EXPECT_EQ(lines[1], "stock_id,mode,train_rows,test_rows,mse,scc,converged");
      EXPECT_FALSE(a.holdout.metrics.acc.has_value());
    }
    EXPECT_EQ(a.holdout.train_rows + a.holdout.test_rows, a.data.size());
  }
}

TEST(Holdout, ScalerFittedOnTrainingRowsOnly) {
  Fixture f;
  const auto in = load_inputs(f.cfg);
  const auto data = dataset_for(in.stocks[0], in, layout_for(f.cfg, in), false);
  const auto r = holdout(data, SvmMode::Svc, params_for(f.cfg, SvmMode::Svc, data.layout.width()), 3);
  const auto [train_set, test_set] = split_random(data, 0.8, 3);
  EXPECT_EQ(*r.model.scaler, fit_scaler(train_set.rows));
  EXPECT_EQ(r.test_dates.size(), test_set.size());
}

TEST(LagStudy, LagOneRunsAndReportIsStable) {
  Fixture f;
  const auto in = load_inputs(f.cfg);
  const auto cells = run_lag_study(f.cfg, in, {1, 3});
  ASSERT_EQ(cells.size(), 8u);
  for (const auto& c : cells) {
    EXPECT_TRUE(c.error.empty()) << c.error;
    EXPECT_EQ(c.rows, 120u - c.lag - 1);
  }
  const auto csv = format_lag_csv(cells);
  EXPECT_EQ(csv, format_lag_csv(run_lag_study(f.cfg, in, {1, 3})));
  const auto lines = lines_of(csv);
  EXPECT_EQ(lines[0], kLagSchema);
  EXPECT_EQ(lines[1], "lag,news,mode,rows,acc,mse,scc,converged,error");
  EXPECT_EQ(lines.size(), 10u);
}

TEST(LagStudy, FailingCellRecordedNotThrown) {
  Fixture f(0.0, 40);
  const auto in = load_inputs(f.cfg);
  const auto cells = run_lag_study(f.cfg, in, {21});
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& c : cells) EXPECT_FALSE(c.error.empty());
}

TEST(ExpansionStudy, DegenerateWithoutNoNewsDays) {
  Fixture f;
  const auto cells = run_expansion_study(f.cfg, load_inputs(f.cfg));
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& c : cells) EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(cells[0].rows, cells[2].rows);
}

TEST(ExpansionStudy, ExpandedViewIsLargerWithNoNewsDays) {
  Fixture f(0.3);
  const auto cells = run_expansion_study(f.cfg, load_inputs(f.cfg));
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_FALSE(cells[0].degenerate);
  EXPECT_FALSE(cells[0].expanded);
  EXPECT_TRUE(cells[2].expanded);
  EXPECT_GT(cells[2].rows, cells[0].rows);
  const auto lines = lines_of(format_expansion_csv(cells));
  EXPECT_EQ(lines[0], kExpansionSchema);
  EXPECT_EQ(lines[1], "stock_id,input,mode,rows,acc,mse,scc,converged,degenerate,error");
}

TEST(ImpactReports, SchemaAndHeaders) {
  Fixture f(0.0, 120, 2);
  f.cfg.c = 1.0;
  f.cfg.g = 0.01;
  const auto in = load_inputs(f.cfg);
  const auto run = run_impact(f.cfg, in);
  const auto w = lines_of(format_weights_csv(run.weights, in.sources));
  EXPECT_EQ(w[0], kImpactSchema);
  EXPECT_EQ(w[1], "source_id,z_raw,z_normalized,rank");
  EXPECT_EQ(w.size(), 2 + in.sources.size());
  const auto m = lines_of(format_matrix_csv(run.matrix, in.sources));
  EXPECT_EQ(m[0], kImpactSchema);
  EXPECT_EQ(m[1].rfind("stock_id,p0,src01,", 0), 0u);
  EXPECT_EQ(m.size(), 4u);
}

TEST(Params, DefaultsFollowFeatureWidth) {
  RunConfig cfg;
  const auto p = params_for(cfg, SvmMode::Svr, 30);
  EXPECT_EQ(p.C, 1.0);
  EXPECT_DOUBLE_EQ(p.kernel.gamma, 1.0 / 30.0);
  EXPECT_EQ(p.kernel.kind, KernelKind::Sigmoid);
  EXPECT_EQ(params_for(cfg, SvmMode::Svc, 30).kernel.kind, KernelKind::Polynomial);
}
