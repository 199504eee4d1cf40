#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "newsvm/common.hpp"
#include "newsvm/features.hpp"
#include "newsvm/svm.hpp"

namespace newsvm {

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Axis {
  double lo = 0;
  double hi = 0;
  double step = 1;

  void validate(const char* name) const {
    if (!(lo <= hi)) throw ValidationError(std::string(name) + " range needs lower <= upper");
    if (!(step > 0)) throw ValidationError(std::string(name) + " step must be > 0");
  }
  std::size_t count() const { return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1; }
  // lo + k * step, rounded to 12 decimals so 0.01 + 2 * 0.01 prints as 0.03.
  double value(std::size_t k) const {
    return std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12;
  }
};

// (c, g) search domain; defaults c in [1, 25] step 1 and g in [0.01, 0.30] step 0.01.
struct Grid {
  Axis c{1.0, 25.0, 1.0};
  Axis g{0.01, 0.30, 0.01};

  void validate() const {
    c.validate("c");
    g.validate("g");
    if (!(c.lo > 0) || !(g.lo > 0)) throw ValidationError("grid values must be positive");
  }
  std::size_t cells() const { return c.count() * g.count(); }
  // Cell order: c outer, g inner.
  std::size_t index(std::size_t ci, std::size_t gi) const { return ci * g.count() + gi; }
};

struct CellResult {
  double c = 0;
  double g = 0;
  std::size_t c_index = 0;
  std::size_t g_index = 0;
  Metrics metrics;         // averaged over splits
  bool converged = true;   // false if any split failed to converge
};

struct SearchResult {
  SvmMode mode = SvmMode::Svc;
  std::vector<CellResult> table;
  std::optional<std::size_t> best;  // index into table
  std::size_t splits_used = 0;
  std::uint64_t seed = 0;

  const CellResult& best_cell() const {
    if (!best) throw ValidationError("search produced no converged cell");
    return table[*best];
  }
};

struct SearchOptions {
  SvmParams base;  // kernel kind/degree/coef0, epsilon, tolerance; C and gamma come from the grid
  double train_fraction = 0.8;
  std::size_t threads = default_threads();
};

// Metric used to rank cells: ACC for SVC, MSE for SVR.
inline double primary_metric(const Metrics& m, SvmMode mode) {
  return mode == SvmMode::Svc ? m.acc.value_or(0.0) : m.mse.value_or(std::numeric_limits<double>::infinity());
}

// Argmax ACC / argmin MSE over converged cells; ties go to smaller g, then smaller c.
inline std::optional<std::size_t> select_best(const std::vector<CellResult>& table, SvmMode mode) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& cell = table[k];
    if (!cell.converged) continue;
    if (!best) {
      best = k;
      continue;
    }
    const auto& cur = table[*best];
    const double a = primary_metric(cell.metrics, mode), b = primary_metric(cur.metrics, mode);
    const bool better = mode == SvmMode::Svc ? a > b : a < b;
    const bool tie = a == b;
    if (better || (tie && (cell.g < cur.g || (cell.g == cur.g && cell.c < cur.c)))) best = k;
  }
  return best;
}

namespace detail {

struct PreparedSplit {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> test;
  SquareTable dots;
};

inline PreparedSplit prepare_split(const Dataset& data, double fraction, std::uint64_t seed) {
  auto [train, test] = split_random(data, fraction, seed);
  const auto scaler = fit_scaler(train.rows);
  PreparedSplit p{apply_scaler(scaler, train.rows), apply_scaler(scaler, test.rows), {}};
  p.dots = gram_dots(features_of(p.train));
  return p;
}

struct SplitScore {
  Metrics metrics;
  bool converged = false;
};

inline SplitScore score_on_split(const PreparedSplit& s, SvmMode mode, const SvmParams& params) {
  const auto model = train(mode, s.train, params, &s.dots);
  std::vector<double> pred, truth;
  for (const auto& r : s.test) {
    pred.push_back(model.predict(r.x));
    truth.push_back(mode == SvmMode::Svc ? static_cast<double>(r.label_class) : r.label_price);
  }
  return {evaluate(pred, truth, mode), model.converged};
}

inline std::optional<double> mean_of(const std::vector<Metrics>& ms, std::optional<double> Metrics::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : ms)
    if (m.*field) sum += *(m.*field), ++n;
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline std::vector<CellResult> traverse_on_splits(const std::vector<PreparedSplit>& splits, const Grid& grid,
                                                  SvmMode mode, const SearchOptions& opts) {
  std::vector<CellResult> table(grid.cells());
  parallel_for(table.size(), opts.threads, [&](std::size_t k) {
    const std::size_t ci = k / grid.g.count(), gi = k % grid.g.count();
    CellResult cell;
    cell.c = grid.c.value(ci);
    cell.g = grid.g.value(gi);
    cell.c_index = ci;
    cell.g_index = gi;
    SvmParams params = opts.base;
    params.C = cell.c;
    params.kernel.gamma = cell.g;
    std::vector<Metrics> per_split;
    for (const auto& s : splits) {
      const auto r = score_on_split(s, mode, params);
      per_split.push_back(r.metrics);
      cell.converged = cell.converged && r.converged;
    }
    cell.metrics.acc = mean_of(per_split, &Metrics::acc);
    cell.metrics.mse = mean_of(per_split, &Metrics::mse);
    cell.metrics.scc = mean_of(per_split, &Metrics::scc);
    cell.metrics.scc_degenerate =
        std::any_of(per_split.begin(), per_split.end(), [](const Metrics& m) { return m.scc_degenerate; });
    table[k] = cell;
  });
  return table;
}

// Stream offset keeping approximate-search groups apart from traverse splits of the same seed.
inline constexpr std::uint64_t kGroupStream = 1u << 20;

}  // namespace detail

// Exhaustive grid: every cell is trained on the same `splits` seeded train/test splits and the
// per-split metrics are averaged.
inline SearchResult traverse_search(const Dataset& data, const Grid& grid, SvmMode mode, std::uint64_t seed,
                                    std::size_t splits = 10, const SearchOptions& opts = {}) {
  grid.validate();
  if (splits == 0) throw ValidationError("traverse_search needs at least one split");
  std::vector<detail::PreparedSplit> prepared;
  for (std::size_t k = 0; k < splits; ++k)
    prepared.push_back(detail::prepare_split(data, opts.train_fraction, derive_seed(seed, k)));
  SearchResult r;
  r.mode = mode;
  r.seed = seed;
  r.splits_used = splits;
  r.table = detail::traverse_on_splits(prepared, grid, mode, opts);
  r.best = select_best(r.table, mode);
  return r;
}

struct ApproximateResult {
  std::vector<CellResult> local_optima;  // one per group that produced a converged cell
  double c = 0;
  double g = 0;
};

// Per-coordinate mode over grid indices; ties go to the smaller index.
inline std::size_t coordinate_mode(const std::vector<std::size_t>& idx) {
  std::map<std::size_t, std::size_t> counts;
  for (auto i : idx) ++counts[i];
  std::size_t best = 0, best_count = 0;
  for (auto [i, cnt] : counts)
    if (cnt > best_count) best = i, best_count = cnt;
  return best;
}

// Each group is one seeded split searched on its own; the local optima are aggregated coordinate-wise.
inline ApproximateResult approximate_search(const Dataset& data, const Grid& grid, SvmMode mode, std::uint64_t seed,
                                            std::size_t groups = 50, const SearchOptions& opts = {}) {
  grid.validate();
  if (groups == 0) throw ValidationError("approximate_search needs at least one group");
  ApproximateResult r;
  // Cells of one group run in parallel; groups run in order so results merge deterministically.
  for (std::size_t k = 0; k < groups; ++k) {
    std::vector<detail::PreparedSplit> one;
    one.push_back(detail::prepare_split(data, opts.train_fraction, derive_seed(seed, detail::kGroupStream + k)));
    const auto table = detail::traverse_on_splits(one, grid, mode, opts);
    if (auto best = select_best(table, mode)) r.local_optima.push_back(table[*best]);
  }
  if (r.local_optima.empty()) throw ValidationError("approximate_search: no group produced a converged cell");
  std::vector<std::size_t> cs, gs;
  for (const auto& cell : r.local_optima) {
    cs.push_back(cell.c_index);
    gs.push_back(cell.g_index);
  }
  r.c = grid.c.value(coordinate_mode(cs));
  r.g = grid.g.value(coordinate_mode(gs));
  return r;
}

// Between-group variance of the ranking metric when cells are grouped by g level vs by c level.
struct FactorVariance {
  double across_g = 0;
  double across_c = 0;
};

inline FactorVariance factor_variance(const SearchResult& r) {
  std::map<std::size_t, std::pair<double, std::size_t>> by_g, by_c;
  double total = 0;
  std::size_t n = 0;
  for (const auto& cell : r.table) {
    if (!cell.converged) continue;
    const double v = primary_metric(cell.metrics, r.mode);
    total += v;
    ++n;
    by_g[cell.g_index].first += v, ++by_g[cell.g_index].second;
    by_c[cell.c_index].first += v, ++by_c[cell.c_index].second;
  }
  if (n == 0) return {};
  const double grand = total / static_cast<double>(n);
  auto between = [&](const auto& groups) {
    double s = 0;
    for (const auto& [k, sum_count] : groups) {
      const double m = sum_count.first / static_cast<double>(sum_count.second);
      s += static_cast<double>(sum_count.second) * (m - grand) * (m - grand);
    }
    return s / static_cast<double>(n);
  };
  return {between(by_g), between(by_c)};
}

// ---- reports ---------------------------------------------------------------

inline constexpr std::string_view kSearchSchema = "# schema: newsvm.search/1";

namespace detail {
inline std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }
inline std::string cell_line(const CellResult& cell) {
  return format_double(cell.c) + ',' + format_double(cell.g) + ',' + opt_field(cell.metrics.acc) + ',' +
         opt_field(cell.metrics.mse) + ',' + opt_field(cell.metrics.scc) + ',' + (cell.converged ? "1" : "0") + '\n';
}
}  // namespace detail

// Table CSV `c,g,acc,mse,scc,converged`; empty fields are metrics the mode does not produce.
inline std::string format_search_csv(const SearchResult& r) {
  std::string out(kSearchSchema);
  out += "\nc,g,acc,mse,scc,converged\n";
  for (const auto& cell : r.table) out += detail::cell_line(cell);
  return out;
}

// The one-line best record, same columns as the table.
inline std::string format_best_csv(const CellResult& best) {
  std::string out(kSearchSchema);
  out += "\nrecord,c,g,acc,mse,scc,converged\nbest," + detail::cell_line(best);
  return out;
}

inline std::string format_local_optima_csv(const ApproximateResult& r) {
  std::string out(kSearchSchema);
  out += "\ngroup,c,g,acc,mse,scc,converged\n";
  for (std::size_t k = 0; k < r.local_optima.size(); ++k)
    out += std::to_string(k) + ',' + detail::cell_line(r.local_optima[k]);
  out += "aggregate," + format_double(r.c) + ',' + format_double(r.g) + ",,,,1\n";
  return out;
}

}  // namespace newsvm
