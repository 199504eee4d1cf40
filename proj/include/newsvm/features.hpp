#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "newsvm/common.hpp"
#include "newsvm/market_data.hpp"
#include "newsvm/textpipe.hpp"

namespace newsvm {

// X news nodes followed by Y lagged adjusted closes.
struct FeatureLayout {
  std::size_t num_sources = 20;  // X
  std::size_t lag = 10;          // Y
  std::size_t news_window = 1;   // news nodes sum signals of days t-1 .. t-news_window
  bool with_news = true;         // false drops the X news nodes (stock-only input)

  std::size_t news_width() const { return with_news ? num_sources : 0; }
  std::size_t width() const { return news_width() + lag; }

  void validate() const {
    if (num_sources < 1) throw ValidationError("layout: need at least one news source");
    if (lag < 1 || lag > 20) throw ValidationError("layout: lag must lie in [1, 20], got " + std::to_string(lag));
    if (news_window < 1) throw ValidationError("layout: news window must be >= 1");
  }

  bool operator==(const FeatureLayout&) const = default;
};

struct FeatureVector {
  Date date;                 // prediction day t
  std::vector<double> x;
  int label_class = -1;
  double label_price = 0.0;  // adj_close[t]
  bool has_news = false;

  bool operator==(const FeatureVector&) const = default;
};

struct Dataset {
  FeatureLayout layout;
  std::vector<FeatureVector> rows;
  bool expanded = false;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  bool operator==(const Dataset&) const = default;
};

struct AssembledData {
  Dataset expanded;  // no-news days kept with zero news nodes
  Dataset standard;  // no-news days dropped
};

// One row per day t >= Y + 1: news nodes from day t-1's signal, lags adj_close[t-1 .. t-Y].
inline AssembledData assemble(const StockSeries& series, const SignalMap& signals, const FeatureLayout& layout) {
  layout.validate();
  const std::size_t n = series.size();
  const std::size_t lag = layout.lag;
  if (n < lag + 1)
    throw ValidationError("insufficient history for " + series.stock_id + ": " + std::to_string(n) +
                          " bars, lag " + std::to_string(lag) + " needs at least " + std::to_string(lag + 1));
  for (const auto& [date, sig] : signals)
    if (sig.values.size() != layout.num_sources)
      throw ValidationError("signal for " + date.str() + " has " + std::to_string(sig.values.size()) +
                            " sources, layout expects " + std::to_string(layout.num_sources));

  AssembledData out{{layout, {}, true}, {layout, {}, false}};
  for (std::size_t t = lag + 1; t < n; ++t) {
    FeatureVector row;
    row.date = series.bars[t].date;
    row.x.assign(layout.width(), 0.0);
    for (std::size_t k = 1; k <= layout.news_window && k <= t; ++k) {
      auto it = signals.find(series.bars[t - k].date);
      if (it == signals.end() || !it->second.has_news()) continue;
      row.has_news = true;
      if (layout.with_news)
        for (std::size_t j = 0; j < layout.num_sources; ++j) row.x[j] += it->second.values[j];
    }
    for (std::size_t k = 1; k <= lag; ++k) row.x[layout.news_width() + k - 1] = series.bars[t - k].adj_close;
    row.label_class = tendency_label(series, t);
    row.label_price = series.bars[t].adj_close;
    if (row.has_news) out.standard.rows.push_back(row);
    out.expanded.rows.push_back(std::move(row));
  }
  return out;
}

// ---- z-score scaling -------------------------------------------------------

// Per-feature (mean, population std) plus the regression target's own pair.
// A zero std marks a constant training column; such features scale to 0.
struct ScalingParams {
  std::vector<double> mean;
  std::vector<double> std;
  double target_mean = 0.0;
  double target_std = 1.0;

  std::size_t width() const { return mean.size(); }

  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != mean.size())
      throw ValidationError("scaler expects " + std::to_string(mean.size()) + " features, got " +
                            std::to_string(x.size()));
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = std[j] > 0 ? (x[j] - mean[j]) / std[j] : 0.0;
    return z;
  }
  double scale_target(double y) const { return target_std > 0 ? (y - target_mean) / target_std : 0.0; }
  double unscale_target(double z) const { return target_mean + z * target_std; }

  bool operator==(const ScalingParams&) const = default;
};

namespace detail {
inline std::pair<double, double> mean_and_population_std(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}
}  // namespace detail

// Fitted on training rows only. Constant columns are reported through `warnings`.
inline ScalingParams fit_scaler(std::span<const FeatureVector> rows, std::vector<std::string>* warnings = nullptr) {
  if (rows.size() < 2) throw ValidationError("fit_scaler needs at least 2 training rows");
  const std::size_t width = rows.front().x.size();
  ScalingParams p;
  p.mean.resize(width);
  p.std.resize(width);
  std::vector<double> column(rows.size());
  for (std::size_t j = 0; j < width; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].x.size() != width) throw ValidationError("fit_scaler: ragged rows");
      column[i] = rows[i].x[j];
    }
    auto [m, s] = detail::mean_and_population_std(column);
    p.mean[j] = m;
    // Rounding leaves a few ulps of spread in a constant column.
    if (s <= 1e-12 * std::max(1.0, std::abs(m))) {
      s = 0.0;
      if (warnings) warnings->push_back("feature f" + std::to_string(j + 1) + " is constant; scaled to 0");
    }
    p.std[j] = s;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i].label_price;
  auto [tm, ts] = detail::mean_and_population_std(column);
  p.target_mean = tm;
  p.target_std = ts <= 1e-12 * std::max(1.0, std::abs(tm)) ? 0.0 : ts;
  return p;
}

// Scales features and the price target; labels and metadata pass through.
inline std::vector<FeatureVector> apply_scaler(const ScalingParams& p, std::span<const FeatureVector> rows) {
  std::vector<FeatureVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    FeatureVector s = r;
    s.x = p.apply(r.x);
    s.label_price = p.scale_target(r.label_price);
    out.push_back(std::move(s));
  }
  return out;
}

// ---- random train/test split -----------------------------------------------

// Test side gets floor(n * (1 - fraction)) rows, at least one; both sides come back in date order.
inline std::pair<Dataset, Dataset> split_random(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train fraction must lie in (0, 1)");
  if (data.empty()) throw ValidationError("cannot split an empty dataset");
  const std::size_t n = data.size();
  std::size_t n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - train_fraction) + 1e-9));
  n_test = std::max<std::size_t>(n_test, 1);
  if (n_test >= n) throw ValidationError("split of " + std::to_string(n) + " rows leaves an empty training side");

  std::vector<FeatureVector> sorted = data.rows;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const FeatureVector& a, const FeatureVector& b) { return a.date < b.date; });
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> in_test(n, false);
  for (std::size_t k = 0; k < n_test; ++k) in_test[order[k]] = true;

  std::pair<Dataset, Dataset> out{{data.layout, {}, data.expanded}, {data.layout, {}, data.expanded}};
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? out.second : out.first).rows.push_back(sorted[i]);
  return out;
}

// ---- featurized CSV --------------------------------------------------------

inline std::string format_dataset_csv(const Dataset& d) {
  std::string out = "date,has_news";
  for (std::size_t j = 1; j <= d.layout.width(); ++j) out += ",f" + std::to_string(j);
  out += ",label_class,label_price\n";
  for (const auto& r : d.rows) {
    out += r.date.str();
    out += r.has_news ? ",1" : ",0";
    for (double v : r.x) out += ',' + format_double(v);
    out += ',' + std::to_string(r.label_class) + ',' + format_double(r.label_price) + '\n';
  }
  return out;
}

// The CSV carries only the total width, so the news/lag split and view flag come from the caller.
inline Dataset parse_dataset_csv(const std::vector<std::string>& lines, FeatureLayout layout, bool expanded,
                                 const std::string& where = "<memory>") {
  if (lines.empty()) throw ParseError(where, 1, "empty dataset file");
  const auto header = split(lines[0], ',');
  if (header.size() < 5 || header[0] != "date" || header[1] != "has_news" || header[header.size() - 2] != "label_class" ||
      header.back() != "label_price")
    throw ParseError(where, 1, "bad dataset header");
  const std::size_t width = header.size() - 4;
  if (width <= layout.news_width()) throw ParseError(where, 1, "feature count too small for layout");
  layout.lag = width - layout.news_width();
  Dataset d{layout, {}, expanded};
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cols = split(trim(lines[i]), ',');
    if (cols.size() != header.size()) throw ParseError(where, i + 1, "column count mismatch");
    try {
      FeatureVector r;
      r.date = Date::parse(cols[0]);
      r.has_news = parse_int(cols[1]) != 0;
      for (std::size_t j = 0; j < width; ++j) r.x.push_back(parse_double(cols[2 + j]));
      r.label_class = static_cast<int>(parse_int(cols[2 + width]));
      r.label_price = parse_double(cols[3 + width]);
      d.rows.push_back(std::move(r));
    } catch (const ValidationError& e) {
      throw ParseError(where, i + 1, e.what());
    }
  }
  return d;
}

inline Dataset load_dataset_csv(const std::string& path, FeatureLayout layout, bool expanded) {
  return parse_dataset_csv(read_lines(path), layout, expanded, path);
}

}  // namespace newsvm
