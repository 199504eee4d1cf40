#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "newsvm/common.hpp"
#include "newsvm/features.hpp"
#include "newsvm/svm.hpp"

namespace newsvm {

inline constexpr double kDefaultImpactDelta = 100.0;
inline constexpr std::size_t kProbeRow = 4;  // fifth row in date order

struct StockProbe {
  std::string stock_id;
  const SvmModel* model = nullptr;  // SVR trained with its own stored scaler
  const Dataset* data = nullptr;    // raw (unscaled) rows, expanded view
};

// M_ij = (p_ij - p_i0) / p_i0 for every included stock i and source j.
struct ImpactMatrix {
  std::vector<std::string> stock_ids;  // included stocks, in input order
  std::vector<double> base;            // p_i0
  Matrix perturbed;                    // p_ij
  Matrix m;                            // M_ij
  std::vector<std::size_t> included;   // input index of each included stock
  std::vector<std::string> warnings;   // excluded stocks and why
};

// Adds `delta` to each raw news node of the probe row in turn and records the relative price move.
inline ImpactMatrix impact_matrix(std::span<const StockProbe> stocks, double delta = kDefaultImpactDelta) {
  ImpactMatrix out;
  for (std::size_t s = 0; s < stocks.size(); ++s) {
    const auto& st = stocks[s];
    if (!st.model || !st.data) throw ValidationError("impact: stock " + st.stock_id + " lacks a model or dataset");
    if (st.data->size() <= kProbeRow) {
      out.warnings.push_back(st.stock_id + ": fewer than 5 rows, excluded");
      continue;
    }
    const auto& layout = st.data->layout;
    if (!layout.with_news) throw ValidationError("impact: dataset for " + st.stock_id + " has no news nodes");
    std::vector<double> row = st.data->rows[kProbeRow].x;
    const double p0 = st.model->predict_price(row);
    if (p0 == 0.0) {
      out.warnings.push_back(st.stock_id + ": base prediction is 0, excluded");
      continue;
    }
    std::vector<double> pj(layout.num_sources), mj(layout.num_sources);
    for (std::size_t j = 0; j < layout.num_sources; ++j) {
      const double saved = row[j];
      row[j] += delta;
      pj[j] = st.model->predict_price(row);
      row[j] = saved;
      mj[j] = (pj[j] - p0) / p0;
    }
    out.stock_ids.push_back(st.stock_id);
    out.base.push_back(p0);
    out.perturbed.push_back(std::move(pj));
    out.m.push_back(std::move(mj));
    out.included.push_back(s);
  }
  return out;
}

struct SourceWeights {
  std::vector<double> z;                // Z_j = sum_i M_ij V_i
  std::vector<double> volumes;          // V_i
  std::vector<double> normalized;       // min-max onto [0, 100]
  std::vector<std::size_t> ranking;     // source indices, highest Z first
  bool degenerate = false;              // all Z equal
};

inline SourceWeights source_weights(const ImpactMatrix& im, std::span<const double> volumes) {
  if (volumes.size() != im.m.size())
    throw ValidationError("source_weights: " + std::to_string(volumes.size()) + " volumes for " +
                          std::to_string(im.m.size()) + " stocks");
  for (double v : volumes)
    if (!(v > 0)) throw ValidationError("source_weights: volumes must be positive");
  const std::size_t sources = im.m.empty() ? 0 : im.m.front().size();
  SourceWeights w;
  w.volumes.assign(volumes.begin(), volumes.end());
  w.z.assign(sources, 0.0);
  for (std::size_t i = 0; i < im.m.size(); ++i)
    for (std::size_t j = 0; j < sources; ++j) w.z[j] += im.m[i][j] * volumes[i];

  w.ranking.resize(sources);
  std::iota(w.ranking.begin(), w.ranking.end(), 0);
  std::stable_sort(w.ranking.begin(), w.ranking.end(), [&](std::size_t a, std::size_t b) { return w.z[a] > w.z[b]; });

  w.normalized.assign(sources, 0.0);
  if (sources > 0) {
    const auto [lo, hi] = std::minmax_element(w.z.begin(), w.z.end());
    if (*hi == *lo) {
      w.degenerate = true;
    } else {
      for (std::size_t j = 0; j < sources; ++j) w.normalized[j] = 100.0 * (w.z[j] - *lo) / (*hi - *lo);
    }
  }
  return w;
}

// Average ranks (1-based), ties share the mean rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError("spearman needs two equal-length series");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// SVR for one stock's impact probe: trained on every expanded row except the probe row,
// with the scaler stored in the model so perturbations can be applied to raw nodes.
inline SvmModel fit_impact_model(const Dataset& expanded, const SvmParams& params) {
  if (expanded.size() <= kProbeRow) throw ValidationError("impact: need at least 5 rows");
  std::vector<FeatureVector> rows;
  for (std::size_t i = 0; i < expanded.size(); ++i)
    if (i != kProbeRow) rows.push_back(expanded.rows[i]);
  const auto scaler = fit_scaler(rows);
  auto model = train(SvmMode::Svr, apply_scaler(scaler, rows), params);
  model.scaler = scaler;
  return model;
}

// ---- reports ---------------------------------------------------------------

inline constexpr std::string_view kImpactSchema = "# schema: newsvm.impact/1";

inline std::string format_weights_csv(const SourceWeights& w, std::span<const std::string> sources) {
  std::vector<std::size_t> rank_of(w.z.size());
  for (std::size_t r = 0; r < w.ranking.size(); ++r) rank_of[w.ranking[r]] = r + 1;
  std::string out(kImpactSchema);
  out += "\nsource_id,z_raw,z_normalized,rank\n";
  for (std::size_t j = 0; j < w.z.size(); ++j)
    out += sources[j] + ',' + format_double(w.z[j]) + ',' + format_double(w.normalized[j]) + ',' +
           std::to_string(rank_of[j]) + '\n';
  return out;
}

inline std::string format_matrix_csv(const ImpactMatrix& im, std::span<const std::string> sources) {
  std::string out(kImpactSchema);
  out += "\nstock_id,p0";
  for (const auto& s : sources) out += ',' + s;
  out += '\n';
  for (std::size_t i = 0; i < im.m.size(); ++i) {
    out += im.stock_ids[i] + ',' + format_double(im.base[i]);
    for (double v : im.m[i]) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

}  // namespace newsvm
