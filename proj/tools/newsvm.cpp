#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "newsvm/newsvm.hpp"
#include "newsvm/plots.hpp"

namespace fs = std::filesystem;
using namespace newsvm;

namespace {

struct Options {
  RunConfig run;
  std::string out = "out";
  std::string mode = "svc";
  std::optional<std::string> kernel;
  bool plots = false;
  std::size_t threads = default_threads();
};

std::string out_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  return (fs::path(o.out) / name).string();
}

void add_inputs(CLI::App* sub, Options& o) {
  sub->add_option("--news", o.run.news_path, "news corpus (JSON lines)");
  sub->add_option("--sources", o.run.sources_path, "source ids, one per line");
  sub->add_option("--sentiment", o.run.sentiment_path, "sentiment lexicon TSV");
  sub->add_option("--stopwords", o.run.stopwords_path, "stop-word list");
  sub->add_option("--stock", o.run.stock_paths, "stock CSV (repeatable)");
}

void add_grid(CLI::App* sub, Grid& grid) {
  sub->add_option("--c-min", grid.c.lo);
  sub->add_option("--c-max", grid.c.hi);
  sub->add_option("--c-step", grid.c.step);
  sub->add_option("--g-min", grid.g.lo);
  sub->add_option("--g-max", grid.g.hi);
  sub->add_option("--g-step", grid.g.step);
}

SearchOptions search_options(const Options& o) {
  SearchOptions s;
  s.base = params_for(o.run, o.run.mode, 1);
  s.train_fraction = o.run.train_fraction;
  s.threads = o.threads;
  return s;
}

void cmd_synth(const Options& o, SynthConfig cfg, std::optional<double> snr, std::optional<double> noise) {
  cfg.seed = o.run.seed;
  if (cfg.source_coefficients.empty()) cfg.source_coefficients = planted_coefficients(cfg.num_sources);
  if (noise) cfg.noise_std = *noise;
  else if (snr) cfg.noise_std = noise_for_snr(cfg.source_coefficients, *snr);
  const auto out = run_stage("synth", [&] { return generate(cfg); });
  run_stage("write", [&] { write_synth(cfg, out, o.out); });
  std::cout << "wrote " << out.news.size() << " documents and " << out.stocks.size() << " stocks to " << o.out
            << '\n';
}

void cmd_build_dict(const Options& o, const std::string& oracle_path, const std::string& scores_path, double target,
                    std::size_t rounds, std::size_t candidates) {
  std::vector<std::string> sample;
  run_stage("load-news", [&] {
    if (o.run.news_path.empty()) throw ValidationError("missing input: news corpus");
    for (const auto& d : load_news_jsonl(o.run.news_path)) sample.push_back(d.text);
  });
  const auto [sent, stop] = run_stage("load-lexicons", [&] {
    return std::pair{o.run.sentiment_path.empty() ? SentimentLexicon{} : load_sentiment_tsv(o.run.sentiment_path),
                     o.run.stopwords_path.empty() ? StopwordLexicon{} : load_stopwords(o.run.stopwords_path)};
  });
  LexiconIterationResult last;
  std::size_t done = 0;
  bool converged = false;
  if (!oracle_path.empty()) {
    const auto oracle = run_stage("load-oracle", [&] { return load_score_sheet(oracle_path); });
    const auto loop = run_stage("text-mining",
                                [&] { return run_lexicon_loop(sample, sent, stop, oracle, target, rounds, candidates); });
    last = loop.last, done = loop.rounds, converged = loop.converged;
  } else {
    const auto scores = run_stage("load-oracle", [&] {
      return scores_path.empty() ? ScoreSheet{} : load_score_sheet(scores_path);
    });
    last = run_stage("text-mining", [&] { return lexicon_iteration(sample, sent, stop, scores, candidates); });
    done = 1, converged = last.coverage_fraction >= target;
  }
  write_text(out_path(o, "sentiment.tsv"), format_sentiment_tsv(last.sentiment));
  write_text(out_path(o, "stopwords.txt"), format_stopwords(last.stop));
  std::string cand = "term\tcount\n";
  for (const auto& c : last.candidates) cand += c.term + '\t' + std::to_string(c.count) + '\n';
  write_text(out_path(o, "candidates.tsv"), cand);
  std::cout << "rounds " << done << ", coverage " << format_double(last.coverage_fraction)
            << (converged ? " (target met)" : " (target not met)") << '\n';
}

void cmd_featurize(const Options& o) {
  const auto in = load_inputs(o.run);
  const auto layout = layout_for(o.run, in);
  for (const auto& s : in.stocks) {
    const auto data = dataset_for(s, in, layout, o.run.expand);
    write_text(out_path(o, "dataset_" + s.stock_id + ".csv"), format_dataset_csv(data));
    std::cout << s.stock_id << ": " << data.size() << " rows, " << layout.width() << " features\n";
  }
}

void cmd_train(const Options& o) {
  const auto in = load_inputs(o.run);
  const auto p = run_pipeline(o.run, in);
  save_model(p.holdout.model, out_path(o, "model.txt"));
  const auto metrics = format_metrics_csv(p.stock_id, o.run.mode, p.holdout);
  write_text(out_path(o, "metrics.csv"), metrics);
  std::string pred = "date,prediction,truth\n";
  for (std::size_t i = 0; i < p.holdout.predictions.size(); ++i)
    pred += p.holdout.test_dates[i].str() + ',' + format_double(p.holdout.predictions[i]) + ',' +
            format_double(p.holdout.truths[i]) + '\n';
  write_text(out_path(o, "predictions.csv"), pred);
  if (o.plots) {
    plots::Series a{"predicted", {}, p.holdout.predictions}, b{"actual", {}, p.holdout.truths};
    for (std::size_t i = 0; i < a.y.size(); ++i) a.x.push_back(static_cast<double>(i)), b.x.push_back(i);
    write_text(out_path(o, "predictions.svg"),
               plots::line_chart("Held-out predictions", "test row", "value", {a, b}));
  }
  std::cout << metrics.substr(metrics.find('\n') + 1);
}

void cmd_predict(const Options& o, const std::string& model_path, const std::string& dataset_path) {
  const auto model = run_stage("load-model", [&] { return load_model(model_path); });
  if (!model.scaler) throw StageError("load-model", "model has no stored scaler");
  const Dataset data = [&] {
    if (!dataset_path.empty())
      return run_stage("load-dataset", [&] {
        FeatureLayout l = o.run.layout;
        l.num_sources = model.dimension() > o.run.layout.lag ? model.dimension() - o.run.layout.lag : 1;
        return load_dataset_csv(dataset_path, l, o.run.expand);
      });
    const auto in = load_inputs(o.run);
    return dataset_for(in.stocks.at(0), in, layout_for(o.run, in), o.run.expand);
  }();
  std::string out = "date,prediction,truth\n";
  std::vector<double> preds, truths;
  run_stage("predict", [&] {
    for (const auto& r : data.rows) {
      const auto x = model.scaler->apply(r.x);
      const double p = model.mode == SvmMode::Svc ? model.predict(x) : model.predict_price(r.x);
      const double t = model.mode == SvmMode::Svc ? r.label_class : r.label_price;
      preds.push_back(p), truths.push_back(t);
      out += r.date.str() + ',' + format_double(p) + ',' + format_double(t) + '\n';
    }
  });
  write_text(out_path(o, "predictions.csv"), out);
  if (!preds.empty()) {
    const auto m = evaluate(preds, truths, model.mode);
    if (m.acc) std::cout << "acc " << format_double(*m.acc) << '\n';
    if (m.mse) std::cout << "mse " << format_double(*m.mse) << " scc " << format_double(*m.scc) << '\n';
  }
}

Dataset search_dataset(const Options& o) {
  const auto in = load_inputs(o.run);
  return dataset_for(in.stocks.at(0), in, layout_for(o.run, in), o.run.expand);
}

void cmd_grid_search(const Options& o, const Grid& grid, std::size_t splits) {
  const auto data = search_dataset(o);
  const auto r = run_stage("search", [&] {
    return traverse_search(data, grid, o.run.mode, o.run.seed, splits, search_options(o));
  });
  write_text(out_path(o, "search_table.csv"), format_search_csv(r));
  if (!r.best) throw StageError("search", "no converged cell");
  write_text(out_path(o, "search_best.csv"), format_best_csv(r.best_cell()));
  const auto fv = factor_variance(r);
  std::cout << "best c " << format_double(r.best_cell().c) << " g " << format_double(r.best_cell().g)
            << "; variance across g " << format_double(fv.across_g) << ", across c " << format_double(fv.across_c)
            << '\n';
  if (o.plots) {
    std::vector<double> cs, gs;
    for (std::size_t i = 0; i < grid.c.count(); ++i) cs.push_back(grid.c.value(i));
    for (std::size_t j = 0; j < grid.g.count(); ++j) gs.push_back(grid.g.value(j));
    std::vector<std::vector<double>> v(cs.size(), std::vector<double>(gs.size()));
    for (const auto& cell : r.table) v[cell.c_index][cell.g_index] = primary_metric(cell.metrics, r.mode);
    write_text(out_path(o, "search_heatmap.svg"),
               plots::heatmap(o.run.mode == SvmMode::Svc ? "ACC over (c, g)" : "MSE over (c, g)", "c", "g", cs, gs, v));
  }
}

void cmd_approx_search(const Options& o, const Grid& grid, std::size_t groups) {
  const auto data = search_dataset(o);
  const auto r = run_stage("search", [&] {
    return approximate_search(data, grid, o.run.mode, o.run.seed, groups, search_options(o));
  });
  write_text(out_path(o, "local_optima.csv"), format_local_optima_csv(r));
  std::cout << "aggregate c " << format_double(r.c) << " g " << format_double(r.g) << " from "
            << r.local_optima.size() << " groups\n";
  if (o.plots) {
    std::vector<double> cs, gs;
    for (std::size_t i = 0; i < grid.c.count(); ++i) cs.push_back(grid.c.value(i));
    for (std::size_t j = 0; j < grid.g.count(); ++j) gs.push_back(grid.g.value(j));
    std::vector<std::vector<double>> v(cs.size(), std::vector<double>(gs.size()));
    for (const auto& cell : r.local_optima) v[cell.c_index][cell.g_index] += 1;
    write_text(out_path(o, "local_optima.svg"), plots::heatmap("Local optima per cell", "c", "g", cs, gs, v));
  }
}

void cmd_lag_study(const Options& o) {
  const auto in = load_inputs(o.run);
  const auto cells = run_stage("lag-study", [&] { return run_lag_study(o.run, in); });
  write_text(out_path(o, "lag_study.csv"), format_lag_csv(cells));
  std::size_t failed = 0;
  for (const auto& c : cells) failed += !c.error.empty();
  std::cout << cells.size() << " cells, " << failed << " failed\n";
  if (o.plots) {
    for (SvmMode mode : {SvmMode::Svc, SvmMode::Svr}) {
      std::vector<plots::Series> series;
      for (bool news : {true, false}) {
        plots::Series s{news ? "with news" : "stock only", {}, {}};
        for (const auto& c : cells)
          if (c.mode == mode && c.with_news == news && c.error.empty()) {
            s.x.push_back(static_cast<double>(c.lag));
            s.y.push_back(mode == SvmMode::Svc ? *c.metrics.acc : *c.metrics.mse);
          }
        series.push_back(std::move(s));
      }
      const bool svc = mode == SvmMode::Svc;
      write_text(out_path(o, svc ? "lag_acc.svg" : "lag_mse.svg"),
                 plots::line_chart(svc ? "ACC vs time lag" : "MSE vs time lag", "lag", svc ? "ACC" : "MSE", series));
    }
  }
}

void cmd_expansion_study(const Options& o) {
  const auto in = load_inputs(o.run);
  const auto cells = run_stage("expansion-study", [&] { return run_expansion_study(o.run, in); });
  write_text(out_path(o, "expansion_study.csv"), format_expansion_csv(cells));
  std::cout << cells.size() << " cells\n";
  if (o.plots) {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& c : cells)
      if (c.error.empty() && c.mode == SvmMode::Svc) {
        labels.push_back(c.stock_id + (c.expanded ? " exp" : " std"));
        values.push_back(*c.metrics.acc);
      }
    write_text(out_path(o, "expansion_acc.svg"), plots::bar_chart("ACC, expanded vs standard", labels, values));
  }
}

void cmd_impact(const Options& o, double delta) {
  const auto in = load_inputs(o.run);
  const auto run = run_impact(o.run, in, delta);
  write_text(out_path(o, "impact_weights.csv"), format_weights_csv(run.weights, in.sources));
  write_text(out_path(o, "impact_matrix.csv"), format_matrix_csv(run.matrix, in.sources));
  for (const auto& w : run.matrix.warnings) std::cerr << "warning: " << w << '\n';
  if (run.weights.degenerate) std::cerr << "warning: all source weights are equal\n";
  std::cout << "top sources:";
  for (std::size_t k = 0; k < std::min<std::size_t>(5, run.weights.ranking.size()); ++k)
    std::cout << ' ' << in.sources[run.weights.ranking[k]];
  std::cout << '\n';
  if (o.plots)
    write_text(out_path(o, "impact_weights.svg"),
               plots::bar_chart("Normalized source impact", in.sources, run.weights.normalized));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"News-driven SVM stock prediction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--seed", o.run.seed, "random seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--mode", o.mode, "svc or svr")->check(CLI::IsMember({"svc", "svr"}));
  app.add_option("--lag", o.run.layout.lag, "stock data nodes (1..20)");
  app.add_flag("--expand,!--no-expand", o.run.expand, "keep no-news days with zero news nodes");
  app.add_option("--c", o.run.c, "penalty parameter");
  app.add_option("--g", o.run.g, "kernel gamma");
  app.add_option("--epsilon", o.run.epsilon, "SVR tube width");
  app.add_option("--kernel", o.kernel, "polynomial or sigmoid")->check(CLI::IsMember({"polynomial", "sigmoid"}));
  app.add_option("--degree", o.run.degree, "polynomial degree");
  app.add_option("--coef0", o.run.coef0, "kernel offset");
  app.add_option("--news-window", o.run.layout.news_window, "days of news summed per node");
  app.add_option("--train-fraction", o.run.train_fraction, "share of rows used for training");
  app.add_option("--threads", o.threads, "worker threads for searches");
  app.add_flag("--plots", o.plots, "write SVG figures");

  SynthConfig synth;
  std::optional<double> snr, noise;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic corpus with planted source weights");
  s_synth->add_option("--days", synth.num_days);
  s_synth->add_option("--num-sources", synth.num_sources);
  s_synth->add_option("--stocks", synth.num_stocks);
  s_synth->add_option("--snr", snr, "signal-to-noise ratio of returns");
  s_synth->add_option("--noise", noise, "return noise standard deviation");
  s_synth->add_option("--no-news-prob", synth.no_news_probability);

  std::string oracle, scores;
  double target = 0.9;
  std::size_t rounds = 50, candidates = 500;
  auto* s_dict = app.add_subcommand("build-dict", "grow the lexicons from a scoring oracle");
  add_inputs(s_dict, o);
  s_dict->add_option("--oracle", oracle, "score sheet consulted every round");
  s_dict->add_option("--scores", scores, "score sheet applied once");
  s_dict->add_option("--target", target);
  s_dict->add_option("--max-rounds", rounds);
  s_dict->add_option("--candidates", candidates);

  auto* s_feat = app.add_subcommand("featurize", "write featurized datasets");
  add_inputs(s_feat, o);
  auto* s_train = app.add_subcommand("train", "train on a seeded split and save the model");
  add_inputs(s_train, o);

  std::string model_path, dataset_path;
  auto* s_pred = app.add_subcommand("predict", "apply a saved model");
  add_inputs(s_pred, o);
  s_pred->add_option("--model", model_path)->required();
  s_pred->add_option("--dataset", dataset_path, "featurized CSV; raw inputs are used otherwise");

  Grid grid;
  std::size_t splits = 10, groups = 50;
  auto* s_grid = app.add_subcommand("grid-search", "traverse the (c, g) grid");
  add_inputs(s_grid, o);
  add_grid(s_grid, grid);
  s_grid->add_option("--splits", splits);
  auto* s_approx = app.add_subcommand("approx-search", "aggregate per-split local optima");
  add_inputs(s_approx, o);
  add_grid(s_approx, grid);
  s_approx->add_option("--groups", groups);

  auto* s_lag = app.add_subcommand("lag-study", "metrics against time lag");
  add_inputs(s_lag, o);
  auto* s_exp = app.add_subcommand("expansion-study", "expanded against standard inputs");
  add_inputs(s_exp, o);

  double delta = kDefaultImpactDelta;
  auto* s_impact = app.add_subcommand("impact", "rank news sources by impact factor");
  add_inputs(s_impact, o);
  s_impact->add_option("--delta", delta);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto* sub = app.get_subcommands().front();
  try {
    o.run.mode = parse_mode(o.mode);
    if (o.kernel) o.run.kernel = parse_kernel_kind(*o.kernel);
    run_stage("config", [&] {
      o.run.layout.validate();
      if (!(o.run.train_fraction > 0 && o.run.train_fraction < 1))
        throw ValidationError("train fraction must lie in (0, 1)");
    });
    if (sub == s_synth) cmd_synth(o, synth, snr.value_or(10.0), noise);
    else if (sub == s_dict) cmd_build_dict(o, oracle, scores, target, rounds, candidates);
    else if (sub == s_feat) cmd_featurize(o);
    else if (sub == s_train) cmd_train(o);
    else if (sub == s_pred) cmd_predict(o, model_path, dataset_path);
    else if (sub == s_grid) cmd_grid_search(o, grid, splits);
    else if (sub == s_approx) cmd_approx_search(o, grid, groups);
    else if (sub == s_lag) cmd_lag_study(o);
    else if (sub == s_exp) cmd_expansion_study(o);
    else if (sub == s_impact) cmd_impact(o, delta);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << sub->get_name() << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
