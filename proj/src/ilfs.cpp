#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "emofs/selectors.hpp"

namespace emofs {

void IlfsConfig::validate() const {
  if (token_bins < 2) throw Error("config", "token_bins must be at least 2");
  if (latent_topics != 2)
    throw Error("config", "only the two-topic latent model is supported");
  if (em_iterations == 0)
    throw Error("config", "em_iterations must be positive");
  if (!(em_tolerance > 0.0))
    throw Error("config", "em_tolerance must be positive");
  if (!(alpha_fraction > 0.0 && alpha_fraction < 1.0))
    throw Error("config", "alpha_fraction must lie in (0, 1)");
}

double spectral_radius(const Matrix& a) {
  const std::size_t n = a.rows();
  if (n == 0 || a.cols() != n)
    throw Error("dimension", "spectral_radius expects a square matrix");
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> u(n, 0.0);
  double lambda = 0.0;
  for (std::size_t it = 0; it < 500; ++it) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * v[j];
      u[i] = s;
    }
    double rayleigh = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      rayleigh += v[i] * u[i];
      norm += u[i] * u[i];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = u[i] / norm;
    if (std::abs(rayleigh - lambda) <= 1e-13 * std::max(1.0, std::abs(rayleigh)))
      return std::abs(rayleigh);
    lambda = rayleigh;
  }
  return std::abs(lambda);
}

Matrix ilfs_relevance_from(const Matrix& adjacency, double alpha) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n)
    throw Error("dimension", "adjacency must be square");
  // Gauss-Jordan inversion of (I - alpha A) with partial pivoting; the
  // augmented right half starts as I and ends as the inverse.
  Matrix aug(n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      aug(i, j) = (i == j ? 1.0 : 0.0) - alpha * adjacency(i, j);
    aug(i, n + i) = 1.0;
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(aug(r, k)) > std::abs(aug(pivot, k))) pivot = r;
    if (std::abs(aug(pivot, k)) < 1e-300)
      throw Error("value", "walk matrix is numerically singular");
    if (pivot != k)
      for (std::size_t j = 0; j < 2 * n; ++j)
        std::swap(aug(k, j), aug(pivot, j));
    const double inv_p = 1.0 / aug(k, k);
    for (std::size_t j = 0; j < 2 * n; ++j) aug(k, j) *= inv_p;
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t r = 0; r < n; ++r) {
      if (r == k) continue;
      const double factor = aug(r, k);
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < 2 * n; ++j) aug(r, j) -= factor * aug(k, j);
    }
  }
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      s(i, j) = aug(i, n + j) - (i == j ? 1.0 : 0.0);
  return s;
}

namespace {

// Nearest-rank quantile edges over a pooled value list.
std::vector<double> bin_edges(std::vector<double> values, std::size_t bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> edges(bins - 1);
  for (std::size_t b = 1; b < bins; ++b)
    edges[b - 1] = values[b * values.size() / bins];
  return edges;
}

std::size_t bin_of(double v, const std::vector<double>& edges) {
  std::size_t bin = 0;
  for (double e : edges)
    if (v > e) ++bin;
  return bin;
}

struct PlsaFit {
  std::vector<std::array<double, 2>> topic_given_feature;  // P(z|f)
  std::array<std::vector<double>, 2> token_given_topic;    // P(t|z)
  bool converged = false;
};

PlsaFit fit_plsa(const Matrix& counts, const std::vector<double>& token_weight,
                 const IlfsConfig& config) {
  const std::size_t nf = counts.rows();
  const std::size_t nt = counts.cols();
  PlsaFit fit;
  fit.topic_given_feature.assign(nf, {0.5, 0.5});
  // Topic 0 starts tilted toward relevance-indicating tokens, breaking the
  // label symmetry deterministically.
  for (int z = 0; z < 2; ++z) {
    auto& ptz = fit.token_given_topic[z];
    ptz.resize(nt);
    double total = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
      ptz[t] = z == 0 ? 1.0 + token_weight[t] : 2.0 - token_weight[t];
      total += ptz[t];
    }
    for (double& p : ptz) p /= total;
  }

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < config.em_iterations; ++it) {
    std::array<std::vector<double>, 2> new_ptz;
    new_ptz[0].assign(nt, 0.0);
    new_ptz[1].assign(nt, 0.0);
    std::vector<std::array<double, 2>> new_pzf(nf, {0.0, 0.0});
    double ll = 0.0;
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t t = 0; t < nt; ++t) {
        const double c = counts(f, t);
        if (c == 0.0) continue;
        const double j0 =
            fit.topic_given_feature[f][0] * fit.token_given_topic[0][t];
        const double j1 =
            fit.topic_given_feature[f][1] * fit.token_given_topic[1][t];
        const double mix = j0 + j1;
        const double q0 = mix > 0.0 ? j0 / mix : 0.5;
        const double q1 = 1.0 - q0;
        if (mix > 0.0) ll += c * std::log(mix);
        new_ptz[0][t] += c * q0;
        new_ptz[1][t] += c * q1;
        new_pzf[f][0] += c * q0;
        new_pzf[f][1] += c * q1;
      }
    }
    for (int z = 0; z < 2; ++z) {
      double total = 0.0;
      for (double v : new_ptz[z]) total += v;
      if (total > 0.0)
        for (double& v : new_ptz[z]) v /= total;
      fit.token_given_topic[z] = std::move(new_ptz[z]);
    }
    for (std::size_t f = 0; f < nf; ++f) {
      const double total = new_pzf[f][0] + new_pzf[f][1];
      if (total > 0.0) {
        fit.topic_given_feature[f][0] = new_pzf[f][0] / total;
        fit.topic_given_feature[f][1] = new_pzf[f][1] / total;
      }
    }
    if (std::abs(ll - prev_ll) <= config.em_tolerance * (1.0 + std::abs(ll))) {
      fit.converged = true;
      break;
    }
    prev_ll = ll;
  }
  return fit;
}

}  // namespace

IlfsGraph build_ilfs_graph(const LabeledDataset& data,
                           const IlfsConfig& config) {
  config.validate();
  const std::size_t m = data.num_instances();
  const std::size_t n = data.num_features();
  const std::size_t num_classes = data.class_set.size();
  if (n < 2) throw Error("value", "ilfs requires at least 2 features");
  if (num_classes < 2)
    throw Error("value", "ilfs requires at least 2 classes");

  const std::vector<std::size_t> labels = data.label_indices();
  std::vector<std::size_t> class_count(num_classes, 0);
  for (std::size_t l : labels) class_count[l] += 1;

  // Descriptors: per (class, feature), how far the class mean sits from the
  // overall mean and how spread the class is, both in overall-sigma units.
  Matrix separation(num_classes, n);
  Matrix dispersion(num_classes, n);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t f = 0; f < n; ++f) {
    std::vector<double> class_mean(num_classes, 0.0);
    double overall = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double v = data.features(i, f);
      class_mean[labels[i]] += v;
      overall += v;
    }
    for (std::size_t c = 0; c < num_classes; ++c)
      class_mean[c] /= static_cast<double>(class_count[c]);
    overall /= static_cast<double>(m);

    std::vector<double> class_ss(num_classes, 0.0);
    double total_ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = data.features(i, f) - class_mean[labels[i]];
      class_ss[labels[i]] += d * d;
      const double e = data.features(i, f) - overall;
      total_ss += e * e;
    }
    const double sigma = std::sqrt(total_ss / static_cast<double>(m));
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (sigma < 1e-12) {
        separation(c, f) = 0.0;
        dispersion(c, f) = 0.0;
      } else {
        separation(c, f) = std::abs(class_mean[c] - overall) / sigma;
        dispersion(c, f) =
            std::sqrt(class_ss[c] / static_cast<double>(class_count[c])) /
            sigma;
      }
    }
  }

  const std::size_t bins = config.token_bins;
  const std::vector<double> sep_edges = bin_edges(separation.data(), bins);
  const std::vector<double> disp_edges = bin_edges(dispersion.data(), bins);

  // Token table: per feature, one separation token and one dispersion token
  // per class. Vocabulary is 2*bins.
  Matrix counts(n, 2 * bins);
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      counts(f, bin_of(separation(c, f), sep_edges)) += 1.0;
      counts(f, bins + bin_of(dispersion(c, f), disp_edges)) += 1.0;
    }
  }

  IlfsGraph graph;
  graph.adjacency = Matrix(n, n);

  bool identical = true;
  for (std::size_t f = 1; f < n && identical; ++f)
    for (std::size_t t = 0; t < counts.cols(); ++t)
      if (counts(f, t) != counts(0, t)) {
        identical = false;
        break;
      }
  if (identical) {
    // Indistinguishable features carry no pairwise evidence.
    graph.alpha = 0.0;
    graph.relevance = Matrix(n, n);
    return graph;
  }

  // Token relevance weight: high separation and low dispersion indicate a
  // discriminative feature.
  std::vector<double> token_weight(2 * bins);
  for (std::size_t b = 0; b < bins; ++b) {
    token_weight[b] = static_cast<double>(b) / static_cast<double>(bins - 1);
    token_weight[bins + b] = static_cast<double>(bins - 1 - b) /
                             static_cast<double>(bins - 1);
  }

  const PlsaFit fit = fit_plsa(counts, token_weight, config);
  graph.em_converged = fit.converged;

  double indicativeness[2] = {0.0, 0.0};
  for (int z = 0; z < 2; ++z)
    for (std::size_t t = 0; t < 2 * bins; ++t)
      indicativeness[z] += fit.token_given_topic[z][t] * token_weight[t];
  const int relevant = indicativeness[1] > indicativeness[0] ? 1 : 0;

  std::vector<double> p_rel(n);
  for (std::size_t f = 0; f < n; ++f)
    p_rel[f] = fit.topic_given_feature[f][relevant];

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) graph.adjacency(i, j) = p_rel[i] * p_rel[j];

  const double rho = spectral_radius(graph.adjacency);
  if (rho < 1e-300) {
    graph.alpha = 0.0;
    graph.relevance = Matrix(n, n);
    return graph;
  }
  graph.alpha = config.alpha_fraction / rho;
  graph.relevance = ilfs_relevance_from(graph.adjacency, graph.alpha);
  return graph;
}

FeatureRanking ilfs_scores(const LabeledDataset& data,
                           const IlfsConfig& config) {
  const IlfsGraph graph = build_ilfs_graph(data, config);
  const std::size_t n = graph.relevance.rows();
  std::vector<double> scores(n, 0.0);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t f = 0; f < n; ++f) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += graph.relevance(f, j);
    scores[f] = s;
  }

  FeatureRanking ranking = scores_to_ranking(std::move(scores));
  ranking.method = "ilfs";
  if (!graph.em_converged)
    ranking.warnings.push_back(
        "latent model EM hit the iteration budget; last iterate used");
  nlohmann::json echo;
  echo["token_bins"] = config.token_bins;
  echo["latent_topics"] = config.latent_topics;
  echo["em_iterations"] = config.em_iterations;
  echo["em_tolerance"] = config.em_tolerance;
  echo["alpha_fraction"] = config.alpha_fraction;
  ranking.config_echo = echo.dump();
  return ranking;
}

}  // namespace emofs
