#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "newsvm/common.hpp"
#include "newsvm/features.hpp"

namespace newsvm {

enum class KernelKind { Polynomial, Sigmoid };
enum class SvmMode { Svc, Svr };

inline std::string to_string(KernelKind k) { return k == KernelKind::Polynomial ? "polynomial" : "sigmoid"; }
inline std::string to_string(SvmMode m) { return m == SvmMode::Svc ? "svc" : "svr"; }

inline KernelKind parse_kernel_kind(std::string_view s) {
  if (s == "polynomial" || s == "poly") return KernelKind::Polynomial;
  if (s == "sigmoid") return KernelKind::Sigmoid;
  throw ValidationError("unknown kernel '" + std::string(s) + "' (polynomial|sigmoid)");
}

inline SvmMode parse_mode(std::string_view s) {
  if (s == "svc") return SvmMode::Svc;
  if (s == "svr") return SvmMode::Svr;
  throw ValidationError("unknown mode '" + std::string(s) + "' (svc|svr)");
}

// Classification uses the cubic polynomial kernel, regression the sigmoid kernel.
inline KernelKind default_kernel(SvmMode m) { return m == SvmMode::Svc ? KernelKind::Polynomial : KernelKind::Sigmoid; }

struct KernelSpec {
  KernelKind kind = KernelKind::Polynomial;
  double gamma = 1.0;
  double coef0 = 0.0;
  int degree = 3;

  void validate() const {
    if (!(gamma > 0) || !std::isfinite(gamma)) throw ValidationError("kernel gamma must be > 0");
    if (degree < 1) throw ValidationError("kernel degree must be >= 1");
    if (!std::isfinite(coef0)) throw ValidationError("kernel coef0 must be finite");
  }

  // Kernel value as a function of the inner product <u, v>.
  double from_dot(double dot) const {
    const double a = gamma * dot + coef0;
    if (kind == KernelKind::Sigmoid) return std::tanh(a);
    double r = 1.0;
    for (int k = 0; k < degree; ++k) r *= a;
    return r;
  }

  bool operator==(const KernelSpec&) const = default;
};

inline double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
  return s;
}

inline double kernel_eval(const KernelSpec& spec, std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw ValidationError("kernel_eval: dimension mismatch " + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()));
  return spec.from_dot(dot(u, v));
}

struct SvmParams {
  double C = 1.0;
  double epsilon = 0.1;
  KernelSpec kernel;
  double tolerance = 1e-3;
  std::size_t max_iterations = 0;  // 0 selects 10 n^2 clamped to [1e5, 1e7]

  void validate() const {
    if (!(C > 0) || !std::isfinite(C)) throw ValidationError("C must be > 0");
    if (!(epsilon > 0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be > 0");
    if (!(tolerance > 0)) throw ValidationError("tolerance must be > 0");
    kernel.validate();
  }

  bool operator==(const SvmParams&) const = default;
};

// Dense symmetric n x n table, row-major.
class SquareTable {
 public:
  SquareTable() = default;
  explicit SquareTable(std::size_t n) : n_(n), data_(n * n, 0.0) {}
  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// Pairwise inner products; reusable across every (C, gamma) cell of a search.
inline SquareTable gram_dots(const Matrix& x) {
  SquareTable t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) t(i, j) = t(j, i) = dot(x[i], x[j]);
  return t;
}

inline constexpr std::size_t kFullGramLimit = 4000;

namespace detail {

// Kernel rows: fully cached up to kFullGramLimit points, recomputed on demand beyond.
class KernelRows {
 public:
  KernelRows(const Matrix& x, const KernelSpec& spec, const SquareTable* dots) : x_(x), spec_(spec) {
    const std::size_t n = x.size();
    if (dots != nullptr || n <= kFullGramLimit) {
      full_ = SquareTable(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
          full_(i, j) = full_(j, i) = spec.from_dot(dots ? (*dots)(i, j) : dot(x[i], x[j]));
      cached_ = true;
    } else {
      diag_.resize(n);
      for (std::size_t i = 0; i < n; ++i) diag_[i] = spec.from_dot(dot(x[i], x[i]));
      scratch_[0].resize(n);
      scratch_[1].resize(n);
    }
  }

  double diag(std::size_t i) const { return cached_ ? full_(i, i) : diag_[i]; }

  // slot selects one of two scratch buffers when rows are computed on demand.
  std::span<const double> row(std::size_t i, int slot) {
    if (cached_) return full_.row(i);
    auto& buf = scratch_[slot];
    for (std::size_t j = 0; j < x_.size(); ++j) buf[j] = spec_.from_dot(dot(x_[i], x_[j]));
    return buf;
  }

 private:
  const Matrix& x_;
  KernelSpec spec_;
  bool cached_ = false;
  SquareTable full_;
  std::vector<double> diag_;
  std::vector<double> scratch_[2];
};

// min 1/2 a'Qa + p'a  s.t.  y'a = 0, 0 <= a <= C,  with Q_kl = y_k y_l K(row_k, row_l).
// Variable k maps to kernel row k % n (the SVR pair a, a* shares one row).
struct DualSolution {
  std::vector<double> alpha;
  double rho = 0.0;
  double objective = 0.0;  // value of the minimised form
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t monotonicity_violations = 0;
};

inline DualSolution solve_dual(KernelRows& k, std::size_t n, std::span<const int> y, std::span<const double> p,
                               double C, double tol, std::size_t max_iter) {
  const std::size_t l = y.size();
  DualSolution s;
  s.alpha.assign(l, 0.0);
  std::vector<double> grad(p.begin(), p.end());
  auto is_up = [&](std::size_t t) { return y[t] > 0 ? s.alpha[t] < C : s.alpha[t] > 0; };
  auto is_low = [&](std::size_t t) { return y[t] > 0 ? s.alpha[t] > 0 : s.alpha[t] < C; };

  double f = 0.0;
  while (s.iterations < max_iter) {
    // Maximal violating pair.
    std::size_t i = l, j = l;
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < l; ++t) {
      const double v = -y[t] * grad[t];
      if (is_up(t) && v > m_up) m_up = v, i = t;
      if (is_low(t) && v < m_low) m_low = v, j = t;
    }
    if (i == l || j == l || m_up - m_low < tol) {
      s.converged = true;
      break;
    }
    ++s.iterations;

    const std::size_t ri = i % n, rj = j % n;
    const auto row_i = k.row(ri, 0);
    const auto row_j = k.row(rj, 1);
    // Step a_i += y_i t, a_j -= y_j t keeps y'a fixed; f(t) = f + slope t + curv t^2 / 2.
    const double slope = y[i] * grad[i] - y[j] * grad[j];
    const double curv = k.diag(ri) + k.diag(rj) - 2.0 * row_i[rj];
    const double cap_i = y[i] > 0 ? C - s.alpha[i] : s.alpha[i];
    const double cap_j = y[j] > 0 ? s.alpha[j] : C - s.alpha[j];
    const double cap = std::min(cap_i, cap_j);
    // Non-positive curvature (indefinite sigmoid Gram) means the best feasible step is the box edge.
    double t = cap;
    if (curv > 0) t = std::min(-slope / curv, cap);

    const double step_f = slope * t + 0.5 * curv * t * t;
    if (step_f > 1e-12 * (1.0 + std::abs(f))) ++s.monotonicity_violations;
    assert(step_f <= 1e-9 * (1.0 + std::abs(f)) && "SMO step increased the objective");
    f += step_f;

    s.alpha[i] += y[i] * t;
    s.alpha[j] -= y[j] * t;
    if (t == cap_i) s.alpha[i] = y[i] > 0 ? C : 0.0;
    if (t == cap_j) s.alpha[j] = y[j] > 0 ? 0.0 : C;
    s.alpha[i] = std::clamp(s.alpha[i], 0.0, C);
    s.alpha[j] = std::clamp(s.alpha[j], 0.0, C);

    for (std::size_t q = 0; q < l; ++q) grad[q] += y[q] * t * (row_i[q % n] - row_j[q % n]);
  }

  // Offset from free variables, else the midpoint of the feasible interval.
  // Values within rounding of a bound count as on it.
  const double snap = 1e-12 * C;
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < l; ++t) {
    const double yg = y[t] * grad[t];
    if (s.alpha[t] >= C - snap) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (s.alpha[t] <= snap) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  s.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  double obj = 0.0;
  for (std::size_t t = 0; t < l; ++t) obj += s.alpha[t] * (grad[t] + p[t]);
  s.objective = 0.5 * obj;
  return s;
}

inline std::size_t default_budget(std::size_t n) {
  const double b = 10.0 * static_cast<double>(n) * static_cast<double>(n);
  return static_cast<std::size_t>(std::clamp(b, 1e5, 1e7));
}

}  // namespace detail

struct SvmModel {
  SvmMode mode = SvmMode::Svc;
  Matrix support_vectors;           // scaled feature rows
  std::vector<double> dual_coefs;   // y_i a_i (SVC) or a_i - a*_i (SVR)
  double bias = 0.0;
  SvmParams params;
  std::optional<ScalingParams> scaler;
  bool converged = true;
  std::size_t iterations = 0;
  double dual_objective = 0.0;      // maximised dual value
  std::size_t monotonicity_violations = 0;

  std::size_t dimension() const { return support_vectors.empty() ? dimension_ : support_vectors.front().size(); }
  void set_dimension(std::size_t d) { dimension_ = d; }

  // f(x) = sum_i coef_i K(sv_i, x) + b on a scaled row.
  double decision(std::span<const double> x) const {
    if (x.size() != dimension())
      throw ValidationError("model expects " + std::to_string(dimension()) + " features, got " +
                            std::to_string(x.size()));
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i)
      f += dual_coefs[i] * params.kernel.from_dot(dot(support_vectors[i], x));
    return f;
  }

  // SVC: +1/-1 with f = 0 mapped to +1. SVR: f in scaled target units.
  double predict(std::span<const double> x) const {
    const double f = decision(x);
    if (mode == SvmMode::Svc) return f >= 0 ? 1.0 : -1.0;
    return f;
  }

  // Raw (unscaled) feature row -> price, using the stored scaler.
  double predict_price(std::span<const double> raw) const {
    if (mode != SvmMode::Svr) throw ValidationError("predict_price needs an SVR model");
    if (!scaler) throw ValidationError("model has no stored scaler");
    return scaler->unscale_target(decision(scaler->apply(raw)));
  }

  bool operator==(const SvmModel&) const = default;

 private:
  std::size_t dimension_ = 0;
};

inline double predict(const SvmModel& m, std::span<const double> row) { return m.predict(row); }

namespace detail {

inline void check_rows(const Matrix& x) {
  if (x.empty()) throw ValidationError("no training rows");
  for (const auto& r : x) {
    if (r.size() != x.front().size()) throw ValidationError("ragged training rows");
    for (double v : r)
      if (!std::isfinite(v)) throw ValidationError("non-finite training feature");
  }
}

inline SvmModel collect_model(SvmMode mode, const Matrix& x, const std::vector<double>& coefs,
                              const DualSolution& sol, const SvmParams& params) {
  SvmModel m;
  m.mode = mode;
  m.params = params;
  m.bias = -sol.rho;
  m.converged = sol.converged;
  m.iterations = sol.iterations;
  m.dual_objective = -sol.objective;
  m.monotonicity_violations = sol.monotonicity_violations;
  m.set_dimension(x.front().size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (coefs[i] == 0.0) continue;
    m.support_vectors.push_back(x[i]);
    m.dual_coefs.push_back(coefs[i]);
  }
  return m;
}

}  // namespace detail

// C-SVC on scaled rows with labels in {+1, -1}. `dots` optionally supplies precomputed inner products.
inline SvmModel train_svc(const Matrix& x, std::span<const int> labels, const SvmParams& params,
                          const SquareTable* dots = nullptr) {
  params.validate();
  detail::check_rows(x);
  if (labels.size() != x.size()) throw ValidationError("label count does not match row count");
  bool pos = false, neg = false;
  for (int v : labels) {
    if (v != 1 && v != -1) throw ValidationError("SVC labels must be +1 or -1");
    (v > 0 ? pos : neg) = true;
  }
  if (!pos || !neg) throw ValidationError("SVC training needs both classes present");

  const std::size_t n = x.size();
  detail::KernelRows rows(x, params.kernel, dots);
  const std::vector<double> p(n, -1.0);
  const std::size_t budget = params.max_iterations ? params.max_iterations : detail::default_budget(n);
  const auto sol = detail::solve_dual(rows, n, labels, p, params.C, params.tolerance, budget);
  std::vector<double> coefs(n);
  for (std::size_t i = 0; i < n; ++i) coefs[i] = labels[i] * sol.alpha[i];
  return detail::collect_model(SvmMode::Svc, x, coefs, sol, params);
}

// epsilon-SVR on scaled rows with real targets.
inline SvmModel train_svr(const Matrix& x, std::span<const double> targets, const SvmParams& params,
                          const SquareTable* dots = nullptr) {
  params.validate();
  detail::check_rows(x);
  if (targets.size() != x.size()) throw ValidationError("target count does not match row count");
  if (x.size() < 2) throw ValidationError("SVR training needs at least 2 rows");

  const std::size_t n = x.size();
  detail::KernelRows rows(x, params.kernel, dots);
  std::vector<int> y(2 * n);
  std::vector<double> p(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = +1;
    p[i] = params.epsilon - targets[i];
    y[n + i] = -1;
    p[n + i] = params.epsilon + targets[i];
  }
  const std::size_t budget = params.max_iterations ? params.max_iterations : detail::default_budget(n);
  const auto sol = detail::solve_dual(rows, n, y, p, params.C, params.tolerance, budget);
  std::vector<double> coefs(n);
  for (std::size_t i = 0; i < n; ++i) coefs[i] = sol.alpha[i] - sol.alpha[n + i];
  return detail::collect_model(SvmMode::Svr, x, coefs, sol, params);
}

inline Matrix features_of(std::span<const FeatureVector> rows) {
  Matrix x;
  x.reserve(rows.size());
  for (const auto& r : rows) x.push_back(r.x);
  return x;
}

// Trains on already-scaled rows using label_class (SVC) or label_price (SVR).
inline SvmModel train(SvmMode mode, std::span<const FeatureVector> scaled, const SvmParams& params,
                      const SquareTable* dots = nullptr) {
  const Matrix x = features_of(scaled);
  if (mode == SvmMode::Svc) {
    std::vector<int> y;
    for (const auto& r : scaled) y.push_back(r.label_class);
    return train_svc(x, y, params, dots);
  }
  std::vector<double> z;
  for (const auto& r : scaled) z.push_back(r.label_price);
  return train_svr(x, z, params, dots);
}

// ---- metrics ---------------------------------------------------------------

struct Metrics {
  std::optional<double> acc;
  std::optional<double> mse;
  std::optional<double> scc;
  bool scc_degenerate = false;
};

// SVC -> ACC; SVR -> MSE and squared Pearson correlation (SCC).
inline Metrics evaluate(std::span<const double> predictions, std::span<const double> truths, SvmMode mode) {
  if (predictions.size() != truths.size() || predictions.empty())
    throw ValidationError("evaluate needs equal, non-zero lengths");
  const double n = static_cast<double>(predictions.size());
  Metrics m;
  if (mode == SvmMode::Svc) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) hit += predictions[i] == truths[i];
    m.acc = static_cast<double>(hit) / n;
    return m;
  }
  double se = 0, sp = 0, st = 0, spp = 0, stt = 0, spt = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double a = predictions[i], b = truths[i];
    se += (a - b) * (a - b);
    sp += a;
    st += b;
    spp += a * a;
    stt += b * b;
    spt += a * b;
  }
  m.mse = se / n;
  const double den = (n * spp - sp * sp) * (n * stt - st * st);
  if (!(den > 0)) {
    m.scc = 0.0;
    m.scc_degenerate = true;
  } else {
    const double num = n * spt - sp * st;
    m.scc = std::clamp(num * num / den, 0.0, 1.0);
  }
  return m;
}

// ---- model file ------------------------------------------------------------

inline constexpr std::string_view kModelMagic = "newsvm-model 1";

inline std::string format_model(const SvmModel& m) {
  std::ostringstream o;
  auto vec = [&](const std::vector<double>& v) {
    for (double x : v) o << ' ' << format_double(x);
    o << '\n';
  };
  o << kModelMagic << '\n'
    << "mode " << to_string(m.mode) << '\n'
    << "kernel " << to_string(m.params.kernel.kind) << '\n'
    << "gamma " << format_double(m.params.kernel.gamma) << '\n'
    << "coef0 " << format_double(m.params.kernel.coef0) << '\n'
    << "degree " << m.params.kernel.degree << '\n'
    << "cost " << format_double(m.params.C) << '\n'
    << "epsilon " << format_double(m.params.epsilon) << '\n'
    << "tolerance " << format_double(m.params.tolerance) << '\n'
    << "bias " << format_double(m.bias) << '\n'
    << "converged " << (m.converged ? 1 : 0) << '\n'
    << "iterations " << m.iterations << '\n'
    << "objective " << format_double(m.dual_objective) << '\n'
    << "dimension " << m.dimension() << '\n'
    << "scaler " << (m.scaler ? 1 : 0) << '\n';
  if (m.scaler) {
    o << "scaler_mean";
    vec(m.scaler->mean);
    o << "scaler_std";
    vec(m.scaler->std);
    o << "target_mean " << format_double(m.scaler->target_mean) << '\n'
      << "target_std " << format_double(m.scaler->target_std) << '\n';
  }
  o << "support_vectors " << m.support_vectors.size() << '\n';
  for (std::size_t i = 0; i < m.support_vectors.size(); ++i) {
    o << format_double(m.dual_coefs[i]);
    vec(m.support_vectors[i]);
  }
  return o.str();
}

inline SvmModel parse_model(const std::vector<std::string>& lines, const std::string& where = "<memory>") {
  std::size_t ln = 0, cur = 0;
  auto next = [&](std::string_view key) -> std::vector<std::string_view> {
    cur = ln;
    if (ln >= lines.size()) throw ParseError(where, ln + 1, "unexpected end of model file");
    auto parts = split(trim(lines[ln]), ' ');
    if (parts.empty() || parts[0] != key)
      throw ParseError(where, ln + 1, "expected '" + std::string(key) + "'");
    ++ln;
    parts.erase(parts.begin());
    return parts;
  };
  auto one = [&](std::string_view key) {
    auto v = next(key);
    if (v.size() != 1) throw ParseError(where, ln, "expected one value for '" + std::string(key) + "'");
    return v[0];
  };
  auto doubles = [&](const std::vector<std::string_view>& v) {
    std::vector<double> out;
    for (auto s : v) out.push_back(parse_double(s));
    return out;
  };

  if (lines.empty() || trim(lines[0]) != kModelMagic) throw ParseError(where, 1, "not a newsvm model file");
  ln = 1;
  SvmModel m;
  try {
    m.mode = parse_mode(one("mode"));
    m.params.kernel.kind = parse_kernel_kind(one("kernel"));
    m.params.kernel.gamma = parse_double(one("gamma"));
    m.params.kernel.coef0 = parse_double(one("coef0"));
    m.params.kernel.degree = static_cast<int>(parse_int(one("degree")));
    m.params.C = parse_double(one("cost"));
    m.params.epsilon = parse_double(one("epsilon"));
    m.params.tolerance = parse_double(one("tolerance"));
    m.bias = parse_double(one("bias"));
    m.converged = parse_int(one("converged")) != 0;
    m.iterations = static_cast<std::size_t>(parse_int(one("iterations")));
    m.dual_objective = parse_double(one("objective"));
    const auto dim = static_cast<std::size_t>(parse_int(one("dimension")));
    m.set_dimension(dim);
    if (parse_int(one("scaler")) != 0) {
      ScalingParams s;
      s.mean = doubles(next("scaler_mean"));
      s.std = doubles(next("scaler_std"));
      s.target_mean = parse_double(one("target_mean"));
      s.target_std = parse_double(one("target_std"));
      if (s.mean.size() != dim || s.std.size() != dim) throw ValidationError("scaler width does not match dimension");
      m.scaler = std::move(s);
    }
    const auto count = static_cast<std::size_t>(parse_int(one("support_vectors")));
    for (std::size_t i = 0; i < count; ++i, ++ln) {
      cur = ln;
      if (ln >= lines.size()) throw ValidationError("missing support vector lines");
      auto v = doubles(split(trim(lines[ln]), ' '));
      if (v.size() != dim + 1) throw ValidationError("support vector has wrong width");
      m.dual_coefs.push_back(v.front());
      m.support_vectors.emplace_back(v.begin() + 1, v.end());
    }
  } catch (const ValidationError& e) {
    throw ParseError(where, cur + 1, e.what());
  }
  return m;
}

inline void save_model(const SvmModel& m, const std::string& path) { write_text(path, format_model(m)); }
inline SvmModel load_model(const std::string& path) { return parse_model(read_lines(path), path); }

}  // namespace newsvm
