#include "emofs/svm.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace emofs {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Full Gram matrices above this entry count fall back to on-demand rows.
constexpr std::size_t kGramCacheEntries = std::size_t{8} << 20;

}  // namespace

void SvmConfig::validate() const {
  if (!(box_constraint > 0.0))
    throw Error("config", "box_constraint must be positive");
  if (!(kkt_tolerance > 0.0))
    throw Error("config", "kkt_tolerance must be positive");
  if (max_iterations == 0)
    throw Error("config", "max_iterations must be positive");
}

double BinarySvmModel::decision_value(std::span<const double> x) const {
  if (x.size() != w.size())
    throw Error("dimension", "input has " + std::to_string(x.size()) +
                                 " features, model expects " +
                                 std::to_string(w.size()));
  return dot(w, x) + b;
}

BinarySvmModel train_binary_smo(const Matrix& x, std::span<const int> y,
                                const SvmConfig& config) {
  config.validate();
  const std::size_t m = x.rows();
  if (y.size() != m)
    throw Error("dimension", "label count does not match instance count");
  bool has_pos = false;
  bool has_neg = false;
  for (int yi : y) {
    if (yi == 1)
      has_pos = true;
    else if (yi == -1)
      has_neg = true;
    else
      throw Error("value", "binary labels must be +1 or -1");
  }
  if (!has_pos || !has_neg)
    throw Error("value", "binary training requires both classes present");

  const double c = config.box_constraint;
  const double tol = config.kkt_tolerance;
  // Snapping keeps bound membership exact, so the up/low sets below stay
  // consistent under floating-point roundoff.
  const double snap = 1e-12 * std::max(1.0, c);

  const bool cached = m * m <= kGramCacheEntries;
  std::vector<double> gram;
  if (cached) {
    gram.resize(m * m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        const double k = dot(x.row(i), x.row(j));
        gram[i * m + j] = k;
        gram[j * m + i] = k;
      }
    }
  }
  std::vector<double> row_buf_i;
  std::vector<double> row_buf_j;
  auto kernel_row = [&](std::size_t i,
                        std::vector<double>& buf) -> const double* {
    if (cached) return gram.data() + i * m;
    buf.resize(m);
    for (std::size_t k = 0; k < m; ++k) buf[k] = dot(x.row(i), x.row(k));
    return buf.data();
  };

  std::vector<double> alpha(m, 0.0);
  // g[i] = y_i - w.x_i: the gradient used for violating-pair selection.
  std::vector<double> g(m);
  for (std::size_t i = 0; i < m; ++i) g[i] = static_cast<double>(y[i]);

  auto in_up = [&](std::size_t k) {
    return (y[k] > 0 && alpha[k] < c) || (y[k] < 0 && alpha[k] > 0.0);
  };
  auto in_low = [&](std::size_t k) {
    return (y[k] > 0 && alpha[k] > 0.0) || (y[k] < 0 && alpha[k] < c);
  };

  std::size_t iter = 0;
  bool converged = false;
  for (; iter < config.max_iterations; ++iter) {
    std::size_t i_up = m;
    std::size_t j_low = m;
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
      if (in_up(k) && g[k] > g_max) {
        g_max = g[k];
        i_up = k;
      }
      if (in_low(k) && g[k] < g_min) {
        g_min = g[k];
        j_low = k;
      }
    }
    if (i_up == m || j_low == m || g_max - g_min <= tol) {
      converged = true;
      break;
    }

    const double* ki = kernel_row(i_up, row_buf_i);
    const double* kj = kernel_row(j_low, row_buf_j);
    const double eta =
        std::max(ki[i_up] + kj[j_low] - 2.0 * ki[j_low], 1e-12);
    double t = (g_max - g_min) / eta;
    // Step caps from the box: i moves toward its up bound, j toward low.
    const double cap_i = (y[i_up] > 0) ? c - alpha[i_up] : alpha[i_up];
    const double cap_j = (y[j_low] > 0) ? alpha[j_low] : c - alpha[j_low];
    t = std::min(t, std::min(cap_i, cap_j));

    double ai = alpha[i_up] + static_cast<double>(y[i_up]) * t;
    double aj = alpha[j_low] - static_cast<double>(y[j_low]) * t;
    if (ai < snap) ai = 0.0;
    if (ai > c - snap) ai = c;
    if (aj < snap) aj = 0.0;
    if (aj > c - snap) aj = c;
    alpha[i_up] = ai;
    alpha[j_low] = aj;

    for (std::size_t k = 0; k < m; ++k) g[k] -= t * (ki[k] - kj[k]);
  }

  BinarySvmModel model;
  model.w.assign(x.cols(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (alpha[i] == 0.0) continue;
    const double coef = alpha[i] * static_cast<double>(y[i]);
    auto xi = x.row(i);
    for (std::size_t d = 0; d < x.cols(); ++d) model.w[d] += coef * xi[d];
  }

  // b sits midway between the tightest up and low bounds of the final
  // gradient; a one-sided set leaves the other bound in charge.
  double g_max = -std::numeric_limits<double>::infinity();
  double g_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) {
    if (in_up(k)) g_max = std::max(g_max, g[k]);
    if (in_low(k)) g_min = std::min(g_min, g[k]);
  }
  if (std::isinf(g_max) && std::isinf(g_min))
    model.b = 0.0;
  else if (std::isinf(g_max))
    model.b = g_min;
  else if (std::isinf(g_min))
    model.b = g_max;
  else
    model.b = 0.5 * (g_max + g_min);

  double alpha_sum = 0.0;
  for (double a : alpha) alpha_sum += a;
  const double wtw = dot(model.w, model.w);
  double hinge = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double margin =
        static_cast<double>(y[i]) * (dot(model.w, x.row(i)) + model.b);
    hinge += std::max(0.0, 1.0 - margin);
  }
  model.diagnostics.iterations = iter;
  model.diagnostics.converged = converged;
  model.diagnostics.dual_objective = alpha_sum - 0.5 * wtw;
  model.diagnostics.duality_gap =
      (0.5 * wtw + c * hinge) - model.diagnostics.dual_objective;
  model.diagnostics.alphas = std::move(alpha);
  return model;
}

double max_kkt_violation(const Matrix& x, std::span<const int> y,
                         const BinarySvmModel& model, const SvmConfig& config) {
  const std::size_t m = x.rows();
  if (y.size() != m || model.diagnostics.alphas.size() != m)
    throw Error("dimension", "model diagnostics do not match the data");
  const double c = config.box_constraint;
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double yf = static_cast<double>(y[i]) * model.decision_value(x.row(i));
    const double a = model.diagnostics.alphas[i];
    double v = 0.0;
    if (a <= 0.0)
      v = std::max(0.0, 1.0 - yf);
    else if (a >= c)
      v = std::max(0.0, yf - 1.0);
    else
      v = std::abs(yf - 1.0);
    worst = std::max(worst, v);
  }
  return worst;
}

std::size_t MulticlassSvmModel::predict_index(std::span<const double> x) const {
  if (class_set.empty()) throw Error("value", "model has no classes");
  std::vector<std::size_t> votes(class_set.size(), 0);
  std::vector<double> margin(class_set.size(), 0.0);
  for (const auto& pair : pairs) {
    const double d = pair.model.decision_value(x);
    const std::size_t winner = d >= 0.0 ? pair.class_a : pair.class_b;
    votes[winner] += 1;
    margin[winner] += std::abs(d);
  }
  std::size_t best = 0;
  for (std::size_t cls = 1; cls < class_set.size(); ++cls) {
    if (votes[cls] > votes[best] ||
        (votes[cls] == votes[best] && margin[cls] > margin[best]))
      best = cls;
  }
  return best;
}

const std::string& MulticlassSvmModel::predict(std::span<const double> x) const {
  return class_set[predict_index(x)];
}

MulticlassSvmModel train_one_vs_one(const LabeledDataset& data,
                                    std::span<const std::size_t> feature_subset,
                                    const SvmConfig& config) {
  config.validate();
  if (feature_subset.empty())
    throw Error("value", "feature subset must be non-empty");
  std::vector<bool> seen(data.num_features(), false);
  for (std::size_t f : feature_subset) {
    if (f >= data.num_features())
      throw Error("dimension",
                  "feature index " + std::to_string(f) + " out of range");
    if (seen[f])
      throw Error("value",
                  "duplicate feature index " + std::to_string(f) + " in subset");
    seen[f] = true;
  }
  const std::size_t num_classes = data.class_set.size();
  if (num_classes < 2)
    throw Error("value", "one-vs-one training requires at least 2 classes");

  const std::vector<std::size_t> labels = data.label_indices();
  const Matrix cols = select_columns(data.features, feature_subset);

  MulticlassSvmModel model;
  model.class_set = data.class_set;
  model.config = config;
  model.num_features = feature_subset.size();
  model.pairs.resize(num_classes * (num_classes - 1) / 2);
  std::vector<std::pair<std::size_t, std::size_t>> pair_ids;
  pair_ids.reserve(model.pairs.size());
  for (std::size_t a = 0; a < num_classes; ++a)
    for (std::size_t b = a + 1; b < num_classes; ++b) pair_ids.emplace_back(a, b);

  std::vector<std::exception_ptr> errors(pair_ids.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::size_t p = 0; p < pair_ids.size(); ++p) {
    try {
      const auto [a, b] = pair_ids[p];
      std::vector<std::size_t> rows;
      std::vector<int> y;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == a || labels[i] == b) {
          rows.push_back(i);
          y.push_back(labels[i] == a ? 1 : -1);
        }
      }
      const Matrix sub = select_rows(cols, rows);
      model.pairs[p] = {a, b, train_binary_smo(sub, y, config)};
    } catch (...) {
      errors[p] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return model;
}

}  // namespace emofs
