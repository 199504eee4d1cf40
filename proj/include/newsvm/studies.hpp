#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "newsvm/common.hpp"
#include "newsvm/features.hpp"
#include "newsvm/impact.hpp"
#include "newsvm/market_data.hpp"
#include "newsvm/param_search.hpp"
#include "newsvm/svm.hpp"
#include "newsvm/textpipe.hpp"

namespace newsvm {

// An error tagged with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

struct RunConfig {
  std::string news_path;
  std::string sources_path;  // optional; default = sorted source ids seen in the corpus
  std::string sentiment_path;
  std::string stopwords_path;
  std::vector<std::string> stock_paths;
  FeatureLayout layout;
  SvmMode mode = SvmMode::Svc;
  bool expand = false;
  std::optional<double> c;
  std::optional<double> g;
  double epsilon = 0.1;
  std::optional<KernelKind> kernel;
  int degree = 3;
  double coef0 = 0.0;
  std::uint64_t seed = 42;
  double train_fraction = 0.8;
};

// Parameters for one model: c defaults to 1, g to 1 / (number of features).
inline SvmParams params_for(const RunConfig& cfg, SvmMode mode, std::size_t width) {
  SvmParams p;
  p.C = cfg.c.value_or(1.0);
  p.epsilon = cfg.epsilon;
  p.kernel.kind = cfg.kernel.value_or(default_kernel(mode));
  p.kernel.gamma = cfg.g.value_or(1.0 / static_cast<double>(width));
  p.kernel.degree = cfg.degree;
  p.kernel.coef0 = cfg.coef0;
  return p;
}

struct Inputs {
  std::vector<std::string> sources;
  SignalMap signals;
  std::vector<StockSeries> stocks;
};

inline Inputs load_inputs(const RunConfig& cfg) {
  Inputs in;
  auto require = [](const std::string& path, const char* what) {
    if (path.empty()) throw ValidationError(std::string("missing input: ") + what);
    if (!std::filesystem::exists(path)) throw ValidationError(std::string("missing input ") + what + " '" + path + "'");
  };
  const auto sent = run_stage("load-lexicons", [&] {
    require(cfg.sentiment_path, "sentiment lexicon");
    return load_sentiment_tsv(cfg.sentiment_path);
  });
  const auto stop = run_stage("load-lexicons", [&] {
    require(cfg.stopwords_path, "stop-word lexicon");
    return load_stopwords(cfg.stopwords_path);
  });
  const auto docs = run_stage("load-news", [&] {
    require(cfg.news_path, "news corpus");
    return load_news_jsonl(cfg.news_path);
  });
  in.sources = run_stage("load-news", [&] {
    if (cfg.sources_path.empty()) return sources_in(docs);
    std::vector<std::string> ids;
    for (const auto& line : read_lines(cfg.sources_path))
      if (auto t = trim(line); !t.empty()) ids.emplace_back(t);
    return ids;
  });
  in.signals = run_stage("text-mining", [&] {
    const Segmenter seg(sent, stop);
    return build_daily_signals(docs, in.sources, seg);
  });
  in.stocks = run_stage("load-stocks", [&] {
    if (cfg.stock_paths.empty()) throw ValidationError("missing input: stock CSV");
    std::vector<StockSeries> out;
    for (const auto& p : cfg.stock_paths) {
      require(p, "stock CSV");
      out.push_back(load_stock_series(p));
    }
    return out;
  });
  return in;
}

inline FeatureLayout layout_for(const RunConfig& cfg, const Inputs& in) {
  FeatureLayout l = cfg.layout;
  l.num_sources = in.sources.size();
  return l;
}

inline Dataset dataset_for(const StockSeries& s, const Inputs& in, const FeatureLayout& layout, bool expand) {
  return run_stage("featurize", [&] {
    auto a = assemble(s, in.signals, layout);
    return expand ? std::move(a.expanded) : std::move(a.standard);
  });
}

struct HoldoutResult {
  Metrics metrics;
  bool converged = false;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  SvmModel model;             // carries the training scaler
  std::vector<double> predictions;  // scaled units for SVR, +-1 for SVC
  std::vector<double> truths;
  std::vector<Date> test_dates;
};

// One seeded train/test split: scaler fitted on train, model trained, test metrics.
inline HoldoutResult holdout(const Dataset& data, SvmMode mode, const SvmParams& params, std::uint64_t seed,
                             double train_fraction = 0.8) {
  auto [train_set, test_set] = split_random(data, train_fraction, seed);
  const auto scaler = fit_scaler(train_set.rows);
  const auto train_rows = apply_scaler(scaler, train_set.rows);
  const auto test_rows = apply_scaler(scaler, test_set.rows);
  HoldoutResult r;
  r.model = train(mode, train_rows, params);
  r.model.scaler = scaler;
  r.converged = r.model.converged;
  r.train_rows = train_rows.size();
  r.test_rows = test_rows.size();
  for (const auto& row : test_rows) {
    r.predictions.push_back(r.model.predict(row.x));
    r.truths.push_back(mode == SvmMode::Svc ? static_cast<double>(row.label_class) : row.label_price);
    r.test_dates.push_back(row.date);
  }
  r.metrics = evaluate(r.predictions, r.truths, mode);
  return r;
}

// ---- time-lag study --------------------------------------------------------

struct StudyCell {
  std::size_t lag = 0;
  bool with_news = true;
  SvmMode mode = SvmMode::Svc;
  std::size_t rows = 0;
  Metrics metrics;
  bool converged = false;
  std::string error;  // non-empty when the cell failed
};

// For every lag, with-news vs stock-only inputs, both modes: one seeded holdout each.
inline std::vector<StudyCell> run_lag_study(const RunConfig& cfg, const Inputs& in,
                                            const std::vector<std::size_t>& lags = {1,  2,  3,  4,  5,  6,  7,
                                                                                    8,  9,  10, 11, 12, 13, 14,
                                                                                    15, 16, 17, 18, 19, 20}) {
  std::vector<StudyCell> out;
  const auto& stock = in.stocks.at(0);
  for (std::size_t lag : lags)
    for (bool with_news : {true, false})
      for (SvmMode mode : {SvmMode::Svc, SvmMode::Svr}) {
        StudyCell cell;
        cell.lag = lag, cell.with_news = with_news, cell.mode = mode;
        try {
          FeatureLayout layout = layout_for(cfg, in);
          layout.lag = lag;
          layout.with_news = with_news;
          const auto data = dataset_for(stock, in, layout, cfg.expand);
          cell.rows = data.size();
          const auto r = holdout(data, mode, params_for(cfg, mode, layout.width()), cfg.seed, cfg.train_fraction);
          cell.metrics = r.metrics;
          cell.converged = r.converged;
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        out.push_back(std::move(cell));
      }
  return out;
}

inline constexpr std::string_view kLagSchema = "# schema: newsvm.lag_study/1";

namespace detail {
inline std::string csv_escape(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
  return s;
}
inline std::string metric_fields(const Metrics& m) {
  auto f = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  return f(m.acc) + ',' + f(m.mse) + ',' + f(m.scc);
}
}  // namespace detail

inline std::string format_lag_csv(const std::vector<StudyCell>& cells) {
  std::string out(kLagSchema);
  out += "\nlag,news,mode,rows,acc,mse,scc,converged,error\n";
  for (const auto& c : cells)
    out += std::to_string(c.lag) + ',' + (c.with_news ? "with-news" : "stock-only") + ',' + to_string(c.mode) + ',' +
           std::to_string(c.rows) + ',' + detail::metric_fields(c.metrics) + ',' + (c.converged ? "1" : "0") + ',' +
           detail::csv_escape(c.error) + '\n';
  return out;
}

// ---- input-expansion study -------------------------------------------------

struct ExpansionCell {
  std::string stock_id;
  bool expanded = false;
  SvmMode mode = SvmMode::Svc;
  std::size_t rows = 0;
  Metrics metrics;
  bool converged = false;
  bool degenerate = false;  // the stock has no no-news days, so both views coincide
  std::string error;
};

inline std::vector<ExpansionCell> run_expansion_study(const RunConfig& cfg, const Inputs& in) {
  std::vector<ExpansionCell> out;
  const FeatureLayout layout = layout_for(cfg, in);
  for (const auto& stock : in.stocks) {
    const auto a = run_stage("featurize", [&] { return assemble(stock, in.signals, layout); });
    const bool degenerate = a.expanded.size() == a.standard.size();
    for (bool expanded : {false, true})
      for (SvmMode mode : {SvmMode::Svc, SvmMode::Svr}) {
        const Dataset& data = expanded ? a.expanded : a.standard;
        ExpansionCell cell;
        cell.stock_id = stock.stock_id, cell.expanded = expanded, cell.mode = mode, cell.rows = data.size();
        cell.degenerate = degenerate;
        try {
          const auto r = holdout(data, mode, params_for(cfg, mode, layout.width()), cfg.seed, cfg.train_fraction);
          cell.metrics = r.metrics;
          cell.converged = r.converged;
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        out.push_back(std::move(cell));
      }
  }
  return out;
}

inline constexpr std::string_view kExpansionSchema = "# schema: newsvm.expansion_study/1";

inline std::string format_expansion_csv(const std::vector<ExpansionCell>& cells) {
  std::string out(kExpansionSchema);
  out += "\nstock_id,input,mode,rows,acc,mse,scc,converged,degenerate,error\n";
  for (const auto& c : cells)
    out += c.stock_id + ',' + (c.expanded ? "expanded" : "standard") + ',' + to_string(c.mode) + ',' +
           std::to_string(c.rows) + ',' + detail::metric_fields(c.metrics) + ',' + (c.converged ? "1" : "0") + ',' +
           (c.degenerate ? "1" : "0") + ',' + detail::csv_escape(c.error) + '\n';
  return out;
}

// ---- end-to-end pipeline ---------------------------------------------------

inline constexpr std::string_view kMetricsSchema = "# schema: newsvm.metrics/1";

// svc reports ACC only; svr reports MSE and SCC.
inline std::string format_metrics_csv(const std::string& stock_id, SvmMode mode, const HoldoutResult& r) {
  std::string out(kMetricsSchema);
  if (mode == SvmMode::Svc) {
    out += "\nstock_id,mode,train_rows,test_rows,acc,converged\n";
    out += stock_id + ",svc," + std::to_string(r.train_rows) + ',' + std::to_string(r.test_rows) + ',' +
           format_double(*r.metrics.acc) + ',' + (r.converged ? "1" : "0") + '\n';
  } else {
    out += "\nstock_id,mode,train_rows,test_rows,mse,scc,converged\n";
    out += stock_id + ",svr," + std::to_string(r.train_rows) + ',' + std::to_string(r.test_rows) + ',' +
           format_double(*r.metrics.mse) + ',' + format_double(*r.metrics.scc) + ',' + (r.converged ? "1" : "0") +
           '\n';
  }
  return out;
}

struct PipelineResult {
  std::string stock_id;
  Dataset data;
  HoldoutResult holdout;
};

// Files -> text mining -> features -> split/scale -> train -> evaluate, for the first stock.
inline PipelineResult run_pipeline(const RunConfig& cfg, const Inputs& in) {
  const auto& stock = in.stocks.at(0);
  PipelineResult p{stock.stock_id, dataset_for(stock, in, layout_for(cfg, in), cfg.expand), {}};
  p.holdout = run_stage("train", [&] {
    return holdout(p.data, cfg.mode, params_for(cfg, cfg.mode, p.data.layout.width()), cfg.seed,
                   cfg.train_fraction);
  });
  return p;
}

// ---- impact across stocks --------------------------------------------------

struct ImpactRun {
  std::vector<SvmModel> models;
  std::vector<Dataset> datasets;
  ImpactMatrix matrix;
  SourceWeights weights;
};

inline ImpactRun run_impact(const RunConfig& cfg, const Inputs& in, double delta = kDefaultImpactDelta) {
  ImpactRun run;
  const FeatureLayout layout = layout_for(cfg, in);
  for (const auto& stock : in.stocks) {
    run.datasets.push_back(run_stage("featurize", [&] { return assemble(stock, in.signals, layout).expanded; }));
    run.models.push_back(run_stage("train", [&] {
      return fit_impact_model(run.datasets.back(), params_for(cfg, SvmMode::Svr, layout.width()));
    }));
  }
  std::vector<StockProbe> probes;
  for (std::size_t i = 0; i < in.stocks.size(); ++i)
    probes.push_back({in.stocks[i].stock_id, &run.models[i], &run.datasets[i]});
  run.matrix = run_stage("impact", [&] { return impact_matrix(probes, delta); });
  std::vector<double> volumes;
  for (std::size_t i : run.matrix.included) volumes.push_back(in.stocks[i].total_volume());
  run.weights = run_stage("impact", [&] { return source_weights(run.matrix, volumes); });
  return run;
}

}  // namespace newsvm
