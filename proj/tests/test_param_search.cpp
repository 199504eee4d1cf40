#include <gtest/gtest.h>

#include "newsvm/param_search.hpp"
#include "support.hpp"

using namespace newsvm;

namespace {

const AssembledData& small_data() {
  static const AssembledData data = [] {
    return testing_support::planted_data(generate(testing_support::planted_config(41, 90)));
  }();
  return data;
}

SearchOptions options(SvmMode mode, std::size_t threads = 1) {
  SearchOptions o;
  o.base.kernel.kind = default_kernel(mode);
  o.threads = threads;
  return o;
}

// Recomputes one cell from the public building blocks.
double recompute_cell(const Dataset& d, SvmMode mode, double c, double g, std::uint64_t seed, std::size_t splits) {
  double sum = 0;
  for (std::size_t s = 0; s < splits; ++s) {
    const auto [train_set, test_set] = split_random(d, 0.8, derive_seed(seed, s));
    const auto scaler = fit_scaler(train_set.rows);
    const auto tr = apply_scaler(scaler, train_set.rows), te = apply_scaler(scaler, test_set.rows);
    SvmParams p = options(mode).base;
    p.C = c;
    p.kernel.gamma = g;
    const auto model = train(mode, tr, p);
    std::vector<double> pred, truth;
    for (const auto& r : te) {
      pred.push_back(model.predict(r.x));
      truth.push_back(mode == SvmMode::Svc ? r.label_class : r.label_price);
    }
    const auto m = evaluate(pred, truth, mode);
    sum += mode == SvmMode::Svc ? *m.acc : *m.mse;
  }
  return sum / static_cast<double>(splits);
}

CellResult cell(double c, double g, double acc, bool converged = true) {
  CellResult r;
  r.c = c;
  r.g = g;
  r.metrics.acc = acc;
  r.converged = converged;
  return r;
}

}  // namespace

TEST(Axis, CountsAndValues) {
  const Axis c{1, 25, 1}, g{0.01, 0.30, 0.01};
  EXPECT_EQ(c.count(), 25u);
  EXPECT_EQ(g.count(), 30u);
  EXPECT_EQ(Grid{}.cells(), 750u);
  EXPECT_EQ(g.value(2), 0.03);
  EXPECT_EQ(g.value(29), 0.3);
  EXPECT_EQ((Axis{2, 2, 1}).count(), 1u);
  EXPECT_THROW((Grid{Axis{3, 1, 1}, Axis{}}).validate(), ValidationError);
  EXPECT_THROW((Grid{Axis{1, 2, 0}, Axis{0.1, 0.2, 0.1}}).validate(), ValidationError);
}

TEST(SelectBest, TieGoesToSmallerGammaThenSmallerCost) {
  const std::vector<CellResult> t{cell(1, 0.2, 0.7), cell(2, 0.1, 0.7), cell(1, 0.1, 0.7), cell(5, 0.3, 0.6)};
  EXPECT_EQ(select_best(t, SvmMode::Svc), 2u);
}

TEST(SelectBest, SkipsUnconvergedCells) {
  const std::vector<CellResult> t{cell(1, 0.1, 0.9, false), cell(1, 0.2, 0.5)};
  EXPECT_EQ(select_best(t, SvmMode::Svc), 1u);
  EXPECT_FALSE(select_best({cell(1, 0.1, 0.9, false)}, SvmMode::Svc).has_value());
}

TEST(Traverse, SingleCellGridMatchesDirectTraining) {
  const auto& d = small_data().expanded;
  const Grid grid{Axis{3, 3, 1}, Axis{0.05, 0.05, 0.01}};
  const auto r = traverse_search(d, grid, SvmMode::Svc, 8, 3, options(SvmMode::Svc));
  ASSERT_EQ(r.table.size(), 1u);
  ASSERT_EQ(r.best, 0u);
  EXPECT_NEAR(*r.best_cell().metrics.acc, recompute_cell(d, SvmMode::Svc, 3, 0.05, 8, 3), 1e-12);
}

TEST(Traverse, TwoByTwoMatchesRecomputation) {
  const auto& d = small_data().expanded;
  for (SvmMode mode : {SvmMode::Svc, SvmMode::Svr}) {
    const Grid grid{Axis{1, 2, 1}, Axis{0.01, 0.02, 0.01}};
    const auto r = traverse_search(d, grid, mode, 19, 2, options(mode));
    ASSERT_EQ(r.table.size(), 4u);
    for (const auto& c : r.table) {
      const double m = primary_metric(c.metrics, mode);
      EXPECT_NEAR(m, recompute_cell(d, mode, c.c, c.g, 19, 2), 1e-9 * std::max(1.0, m));
    }
    const auto best = primary_metric(r.best_cell().metrics, mode);
    for (const auto& c : r.table)
      if (c.converged) {
        if (mode == SvmMode::Svc) {
          EXPECT_GE(best, primary_metric(c.metrics, mode));
        } else {
          EXPECT_LE(best, primary_metric(c.metrics, mode));
        }
      }
  }
}

TEST(Traverse, ThreadCountDoesNotChangeReport) {
  const auto& d = small_data().expanded;
  const Grid grid{Axis{1, 4, 1}, Axis{0.02, 0.08, 0.02}};
  const auto one = traverse_search(d, grid, SvmMode::Svc, 4, 2, options(SvmMode::Svc, 1));
  const auto three = traverse_search(d, grid, SvmMode::Svc, 4, 2, options(SvmMode::Svc, 3));
  EXPECT_EQ(format_search_csv(one), format_search_csv(three));
  EXPECT_EQ(one.best, three.best);
}

TEST(Traverse, RejectsZeroSplits) {
  EXPECT_THROW(traverse_search(small_data().expanded, Grid{}, SvmMode::Svc, 1, 0), ValidationError);
}

TEST(Approximate, OneGroupEqualsThatGroupsOptimum) {
  const auto& d = small_data().expanded;
  const Grid grid{Axis{1, 3, 1}, Axis{0.02, 0.06, 0.02}};
  const auto opts = options(SvmMode::Svc);
  const auto r = approximate_search(d, grid, SvmMode::Svc, 12, 1, opts);
  ASSERT_EQ(r.local_optima.size(), 1u);
  // Recompute the single group by hand.
  double best_acc = -1, best_c = 0, best_g = 0;
  for (std::size_t ci = 0; ci < grid.c.count(); ++ci)
    for (std::size_t gi = 0; gi < grid.g.count(); ++gi) {
      const auto [train_set, test_set] = split_random(d, 0.8, derive_seed(12, (1u << 20) + 0));
      const auto scaler = fit_scaler(train_set.rows);
      SvmParams p = opts.base;
      p.C = grid.c.value(ci);
      p.kernel.gamma = grid.g.value(gi);
      const auto model = train(SvmMode::Svc, apply_scaler(scaler, train_set.rows), p);
      std::size_t hit = 0;
      const auto te = apply_scaler(scaler, test_set.rows);
      for (const auto& row : te) hit += model.predict(row.x) == row.label_class;
      const double acc = static_cast<double>(hit) / static_cast<double>(te.size());
      const bool tie_wins = acc == best_acc && (p.kernel.gamma < best_g || (p.kernel.gamma == best_g && p.C < best_c));
      if (acc > best_acc || tie_wins) best_acc = acc, best_c = p.C, best_g = p.kernel.gamma;
    }
  EXPECT_EQ(r.c, best_c);
  EXPECT_EQ(r.g, best_g);
  EXPECT_EQ(*r.local_optima[0].metrics.acc, best_acc);
}

TEST(Approximate, RejectsZeroGroups) {
  EXPECT_THROW(approximate_search(small_data().expanded, Grid{}, SvmMode::Svc, 1, 0), ValidationError);
}

TEST(CoordinateMode, MostFrequentThenSmallest) {
  EXPECT_EQ(coordinate_mode({3, 1, 3, 2}), 3u);
  EXPECT_EQ(coordinate_mode({4, 2, 4, 2}), 2u);
  EXPECT_EQ(coordinate_mode({7}), 7u);
}

TEST(FactorVariance, SeparatesAxisEffects) {
  SearchResult r;
  r.mode = SvmMode::Svc;
  for (std::size_t ci = 0; ci < 3; ++ci)
    for (std::size_t gi = 0; gi < 4; ++gi) {
      auto c = cell(1.0 + ci, 0.1 * (gi + 1), 0.5 + 0.1 * gi);  // depends on g only
      c.c_index = ci;
      c.g_index = gi;
      r.table.push_back(c);
    }
  const auto fv = factor_variance(r);
  EXPECT_NEAR(fv.across_c, 0.0, 1e-15);
  EXPECT_NEAR(fv.across_g, 0.0125, 1e-12);  // mean square of {-0.15,-0.05,0.05,0.15}
}

TEST(SearchReports, SchemaAndRowCount) {
  SearchResult r;
  r.table = {cell(1, 0.1, 0.5), cell(2, 0.1, 0.75)};
  r.best = 1;
  const auto csv = format_search_csv(r);
  EXPECT_EQ(csv.rfind(std::string(kSearchSchema), 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);  // schema, header, 2 rows
  EXPECT_NE(format_best_csv(r.best_cell()).find("0.75"), std::string::npos);
}
