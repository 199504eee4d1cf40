#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsvm/common.hpp"
#include "newsvm/market_data.hpp"
#include "newsvm/textpipe.hpp"

namespace newsvm {

// Seeded generator whose news sentiment drives next-day log-returns with known weights.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t num_days = 500;
  std::size_t num_sources = 20;
  std::size_t num_stocks = 1;
  std::vector<double> source_coefficients;  // w_j; empty selects planted_coefficients(num_sources)
  double noise_std = 0.0;
  double no_news_probability = 0.0;
  std::size_t words_per_level = 2;  // sentiment terms per score level (levels +-0.5 .. +-5)
  std::size_t num_stopwords = 15;
  std::size_t num_fillers = 40;     // meaningless words; the oracle files them as stop words
  std::size_t terms_per_document = 20;
  Date start{2008, 1, 2};

  void validate() const {
    if (num_days < 40) throw ValidationError("synth: num_days must be >= 40");
    if (num_sources < 1) throw ValidationError("synth: need at least one source");
    if (num_stocks < 1) throw ValidationError("synth: need at least one stock");
    if (!source_coefficients.empty() && source_coefficients.size() != num_sources)
      throw ValidationError("synth: one coefficient per source required");
    for (double w : source_coefficients)
      if (!std::isfinite(w)) throw ValidationError("synth: coefficients must be finite");
    if (!(noise_std >= 0)) throw ValidationError("synth: noise_std must be >= 0");
    if (!(no_news_probability >= 0 && no_news_probability < 1))
      throw ValidationError("synth: no_news_probability must lie in [0, 1)");
    if (words_per_level < 1 || terms_per_document < 1) throw ValidationError("synth: empty vocabulary");
  }
};

// Log-spaced positive weights spanning one order of magnitude, [lo, 10 lo].
inline std::vector<double> planted_coefficients(std::size_t sources, double lo = 2e-4) {
  std::vector<double> w(sources, lo);
  for (std::size_t j = 0; j < sources && sources > 1; ++j)
    w[j] = lo * std::pow(10.0, static_cast<double>(j) / static_cast<double>(sources - 1));
  return w;
}

// Noise std giving the requested signal-to-noise ratio (std of sum_j w_j s_j over noise std),
// with s uniform on [-5, 5] on every day.
inline double noise_for_snr(const std::vector<double>& w, double snr) {
  double var = 0.0;
  for (double x : w) var += x * x * (100.0 / 12.0);
  return std::sqrt(var) / snr;
}

struct SynthTruth {
  std::vector<double> coefficients;
  std::vector<std::string> sources;
  std::vector<Date> dates;
  Matrix sentiment;            // [day][source]; 0 on no-news days
  std::vector<bool> has_news;  // per day
};

struct SynthOutput {
  std::vector<NewsDocument> news;
  std::vector<StockSeries> stocks;
  SentimentLexicon sentiment;
  StopwordLexicon stopwords;   // function words only
  ScoreSheet oracle;           // sentiment scores plus stop verdicts for stop words and fillers
  SynthTruth truth;
};

namespace detail {

inline bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline int days_in_month(int y, int m) {
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

// 0 = Monday .. 6 = Sunday.
inline int weekday(const Date& d) {
  int y = d.year, m = d.month;
  if (m < 3) y -= 1, m += 12;
  const int k = y % 100, j = y / 100;
  const int h = (d.day + 13 * (m + 1) / 5 + k + k / 4 + j / 4 + 5 * j) % 7;  // 0 = Saturday
  return (h + 5) % 7;
}

inline Date next_day(Date d) {
  if (++d.day > days_in_month(d.year, d.month)) {
    d.day = 1;
    if (++d.month > 12) d.month = 1, ++d.year;
  }
  return d;
}

inline Date next_weekday(Date d) {
  do d = next_day(d);
  while (weekday(d) >= 5);
  return d;
}

inline std::string random_word(Rng& rng, std::set<std::string>& used) {
  while (true) {
    std::string w(6, 'a');
    for (auto& ch : w) ch = static_cast<char>('a' + rng.below(26));
    if (used.insert(w).second) return w;
  }
}

}  // namespace detail

inline SynthOutput generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthOutput out;
  auto& truth = out.truth;
  truth.coefficients = cfg.source_coefficients.empty() ? planted_coefficients(cfg.num_sources)
                                                       : cfg.source_coefficients;
  for (std::size_t j = 0; j < cfg.num_sources; ++j) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "src%02zu", j + 1);
    truth.sources.emplace_back(buf);
  }

  // Vocabulary: six-letter words, so no term is a prefix of another.
  Rng vocab_rng(derive_seed(cfg.seed, 0));
  std::set<std::string> used;
  std::vector<double> levels;
  for (int k = -10; k <= 10; ++k)
    if (k != 0) levels.push_back(0.5 * k);
  std::vector<std::vector<std::string>> words_at(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l)
    for (std::size_t k = 0; k < cfg.words_per_level; ++k) {
      words_at[l].push_back(detail::random_word(vocab_rng, used));
      out.sentiment.set(words_at[l].back(), levels[l]);
      out.oracle[words_at[l].back()] = {levels[l], false};
    }
  std::vector<std::string> stops, fillers;
  for (std::size_t k = 0; k < cfg.num_stopwords; ++k) {
    stops.push_back(detail::random_word(vocab_rng, used));
    out.stopwords.insert(stops.back());
    out.oracle[stops.back()] = {0.0, true};
  }
  for (std::size_t k = 0; k < cfg.num_fillers; ++k) {
    fillers.push_back(detail::random_word(vocab_rng, used));
    out.oracle[fillers.back()] = {0.0, true};
  }

  // Calendar and planted sentiment.
  Rng news_rng(derive_seed(cfg.seed, 1));
  Date d = cfg.start;
  if (detail::weekday(d) >= 5) d = detail::next_weekday(d);
  for (std::size_t t = 0; t < cfg.num_days; ++t) {
    truth.dates.push_back(d);
    d = detail::next_weekday(d);
  }
  truth.sentiment.assign(cfg.num_days, std::vector<double>(cfg.num_sources, 0.0));
  truth.has_news.assign(cfg.num_days, false);
  for (std::size_t t = 0; t < cfg.num_days; ++t) {
    if (cfg.no_news_probability > 0 && news_rng.uniform() < cfg.no_news_probability) continue;
    truth.has_news[t] = true;
    for (std::size_t j = 0; j < cfg.num_sources; ++j) {
      const double s = news_rng.uniform(-5.0, 5.0);
      truth.sentiment[t][j] = s;
      const std::size_t docs = 1 + news_rng.below(3);
      for (std::size_t k = 0; k < docs; ++k) {
        // Mix the two score levels bracketing s so the document mean lands within half a step of s.
        std::size_t hi = 0;
        while (hi + 1 < levels.size() && levels[hi] < s) ++hi;
        std::size_t lo = hi > 0 && levels[hi] > s ? hi - 1 : hi;
        const std::size_t K = cfg.terms_per_document;
        std::size_t n_hi = 0;
        if (lo != hi) n_hi = static_cast<std::size_t>(std::lround(static_cast<double>(K) * (s - levels[lo]) / (levels[hi] - levels[lo])));
        std::vector<std::string> tokens;
        for (std::size_t q = 0; q < K; ++q) {
          const auto& pool = words_at[q < n_hi ? hi : lo];
          tokens.push_back(pool[news_rng.below(pool.size())]);
        }
        const std::size_t n_stop = stops.empty() ? 0 : 3 + news_rng.below(6);
        for (std::size_t q = 0; q < n_stop; ++q) tokens.push_back(stops[news_rng.below(stops.size())]);
        const std::size_t n_fill = fillers.empty() ? 0 : 2 + news_rng.below(5);
        for (std::size_t q = 0; q < n_fill; ++q) tokens.push_back(fillers[news_rng.below(fillers.size())]);
        news_rng.shuffle(tokens);
        std::string text;
        for (const auto& tok : tokens) {
          if (!text.empty()) text += ' ';
          text += tok;
        }
        text += '.';
        out.news.push_back({truth.dates[t], truth.sources[j], std::move(text)});
      }
    }
  }

  // Prices: r_t = sum_j w_j s_{j,t-1} + noise, adj_close from 10.0.
  for (std::size_t k = 0; k < cfg.num_stocks; ++k) {
    Rng rng(derive_seed(cfg.seed, 100 + k));
    StockSeries s;
    char buf[16];
    std::snprintf(buf, sizeof buf, "SYN%03zu", k + 1);
    s.stock_id = buf;
    const double volume_scale = 1.0 + static_cast<double>(rng.below(9));
    double price = 10.0;
    for (std::size_t t = 0; t < cfg.num_days; ++t) {
      const double prev = price;
      if (t > 0) {
        double r = 0.0;
        for (std::size_t j = 0; j < cfg.num_sources; ++j) r += truth.coefficients[j] * truth.sentiment[t - 1][j];
        if (cfg.noise_std > 0) r += cfg.noise_std * rng.normal();
        price = prev * std::exp(r);
      }
      DailyBar b;
      b.date = truth.dates[t];
      b.adj_close = price;
      b.close = price;
      b.open = prev;
      b.high = std::max(b.open, b.close) * (1.0 + 0.004 * rng.uniform());
      b.low = std::min(b.open, b.close) * (1.0 - 0.004 * rng.uniform());
      b.volume = static_cast<std::uint64_t>(volume_scale * (1e6 + static_cast<double>(rng.below(4000000))));
      s.bars.push_back(b);
    }
    out.stocks.push_back(std::move(s));
  }
  return out;
}

inline std::string format_truth_json(const SynthConfig& cfg, const SynthOutput& out) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["noise_std"] = cfg.noise_std;
  j["no_news_probability"] = cfg.no_news_probability;
  j["sources"] = out.truth.sources;
  j["coefficients"] = out.truth.coefficients;
  std::vector<std::string> stocks, dates;
  std::vector<double> volumes;
  for (const auto& s : out.stocks) stocks.push_back(s.stock_id), volumes.push_back(s.total_volume());
  for (const auto& d : out.truth.dates) dates.push_back(d.str());
  j["stocks"] = stocks;
  j["total_volumes"] = volumes;
  j["dates"] = dates;
  j["has_news"] = out.truth.has_news;
  j["sentiment"] = out.truth.sentiment;
  return j.dump() + '\n';
}

inline std::string format_score_sheet(const ScoreSheet& sheet) {
  std::string out;
  for (const auto& [term, e] : sheet) out += term + '\t' + (e.stopword ? std::string("stop") : format_double(e.score)) + '\n';
  return out;
}

// Layout: news.jsonl, sources.txt, stocks/<id>.csv, sentiment.tsv, stopwords.txt, oracle.tsv, truth.json.
inline void write_synth(const SynthConfig& cfg, const SynthOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "stocks");
  write_text((fs::path(dir) / "news.jsonl").string(), format_news_jsonl(out.news));
  std::string sources;
  for (const auto& s : out.truth.sources) sources += s + '\n';
  write_text((fs::path(dir) / "sources.txt").string(), sources);
  for (const auto& s : out.stocks) save_stock_series(s, (fs::path(dir) / "stocks" / (s.stock_id + ".csv")).string());
  write_text((fs::path(dir) / "sentiment.tsv").string(), format_sentiment_tsv(out.sentiment));
  write_text((fs::path(dir) / "stopwords.txt").string(), format_stopwords(out.stopwords));
  write_text((fs::path(dir) / "oracle.tsv").string(), format_score_sheet(out.oracle));
  write_text((fs::path(dir) / "truth.json").string(), format_truth_json(cfg, out));
}

}  // namespace newsvm
