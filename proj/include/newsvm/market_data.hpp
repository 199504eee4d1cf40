#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "newsvm/common.hpp"

namespace newsvm {

struct DailyBar {
  Date date;
  double open = 0;
  double high = 0;
  double low = 0;
  double close = 0;
  double adj_close = 0;
  std::uint64_t volume = 0;

  bool operator==(const DailyBar&) const = default;
};

struct StockSeries {
  std::string stock_id;
  std::vector<DailyBar> bars;

  std::size_t size() const { return bars.size(); }

  // V_i in the volume-weighted source aggregation.
  double total_volume() const {
    return std::accumulate(bars.begin(), bars.end(), 0.0,
                           [](double acc, const DailyBar& b) { return acc + static_cast<double>(b.volume); });
  }

  bool operator==(const StockSeries&) const = default;
};

inline constexpr std::string_view kStockCsvHeader = "date,open,high,low,close,adj_close,volume";

inline void validate_bar(const DailyBar& b) {
  if (!(b.adj_close > 0)) throw ValidationError("adj_close must be positive on " + b.date.str());
  if (!(b.low <= std::min(b.open, b.close)) || !(b.high >= std::max(b.open, b.close)))
    throw ValidationError("bar range violated (low <= open,close <= high) on " + b.date.str());
}

// Sorts by date and checks every invariant; throws ValidationError on failure.
inline void normalize_series(StockSeries& s) {
  std::stable_sort(s.bars.begin(), s.bars.end(),
                   [](const DailyBar& a, const DailyBar& b) { return a.date < b.date; });
  for (std::size_t i = 0; i < s.bars.size(); ++i) {
    validate_bar(s.bars[i]);
    if (i > 0 && s.bars[i].date == s.bars[i - 1].date)
      throw ValidationError("duplicate date " + s.bars[i].date.str() + " in " + s.stock_id);
  }
}

inline StockSeries parse_stock_csv(const std::vector<std::string>& lines, std::string stock_id,
                                   const std::string& where = "<memory>") {
  if (lines.empty() || trim(lines[0]) != kStockCsvHeader)
    throw ParseError(where, 1, "expected header '" + std::string(kStockCsvHeader) + "'");
  StockSeries s;
  s.stock_id = std::move(stock_id);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 7) throw ParseError(where, i + 1, "expected 7 columns, got " + std::to_string(cols.size()));
    DailyBar b;
    try {
      b.date = Date::parse(cols[0]);
      b.open = parse_double(cols[1]);
      b.high = parse_double(cols[2]);
      b.low = parse_double(cols[3]);
      b.close = parse_double(cols[4]);
      b.adj_close = parse_double(cols[5]);
      const long long vol = parse_int(cols[6]);
      if (vol < 0) throw ValidationError("negative volume");
      b.volume = static_cast<std::uint64_t>(vol);
    } catch (const ValidationError& e) {
      throw ParseError(where, i + 1, e.what());
    }
    s.bars.push_back(b);
  }
  normalize_series(s);
  return s;
}

// Reads the stock CSV contract; the stock id is the file stem.
inline StockSeries load_stock_series(const std::string& path) {
  return parse_stock_csv(read_lines(path), std::filesystem::path(path).stem().string(), path);
}

inline std::string format_stock_csv(const StockSeries& s) {
  std::string out(kStockCsvHeader);
  out += '\n';
  for (const auto& b : s.bars) {
    out += b.date.str();
    for (double v : {b.open, b.high, b.low, b.close, b.adj_close}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += std::to_string(b.volume);
    out += '\n';
  }
  return out;
}

inline void save_stock_series(const StockSeries& s, const std::string& path) {
  write_text(path, format_stock_csv(s));
}

// +1 when day t closes strictly above day t-1, otherwise -1 (flat days are "not up").
inline int tendency_label(const StockSeries& s, std::size_t t) {
  if (t < 1 || t >= s.size())
    throw IndexError("tendency_label: t=" + std::to_string(t) + " outside [1, " + std::to_string(s.size()) + ")");
  return s.bars[t].adj_close > s.bars[t - 1].adj_close ? +1 : -1;
}

}  // namespace newsvm
