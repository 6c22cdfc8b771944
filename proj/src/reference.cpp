#include "emofs/reference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace emofs::reference {

Matrix apply_zscore(const NormalizationStats& stats, const Matrix& data) {
  const std::size_t n = data.cols();
  if (stats.dimension() != n)
    throw Error("dimension", "normalization stats do not match the data");
  Matrix out(data.rows(), n);
  for (std::size_t j = 0; j < n; ++j) {
    const double mean = stats.means[j];
    const double sd = stats.stds[j];
    if (sd < kDegenerateStd) {
      for (std::size_t i = 0; i < data.rows(); ++i) out(i, j) = 0.0;
    } else {
      for (std::size_t i = 0; i < data.rows(); ++i)
        out(i, j) = (data(i, j) - mean) / sd;
    }
  }
  return out;
}

FeatureRanking fisher_scores(const LabeledDataset& data) {
  const std::size_t m = data.num_instances();
  const std::size_t n = data.num_features();
  const std::size_t num_classes = data.class_set.size();
  if (num_classes < 2)
    throw Error("value", "fisher scoring requires at least 2 classes");

  const std::vector<std::size_t> labels = data.label_indices();
  std::vector<std::size_t> class_count(num_classes, 0);
  for (std::size_t l : labels) class_count[l] += 1;

  std::vector<double> scores(n, 0.0);
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

    double within = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = data.features(i, f) - class_mean[labels[i]];
      within += d * d;
    }
    double between = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double d = class_mean[c] - overall;
      between += static_cast<double>(class_count[c]) * d * d;
    }
    scores[f] = within < 1e-12 ? 0.0 : between / within;
  }

  FeatureRanking ranking = scores_to_ranking(std::move(scores));
  ranking.method = "fisher";
  ranking.config_echo = "{}";
  return ranking;
}

namespace {

struct NeighborSet {
  bool skipped = false;
  std::vector<std::size_t> hits;
  std::vector<std::vector<std::size_t>> misses;
};

}  // namespace

FeatureRanking relieff_scores(const LabeledDataset& data,
                              const ReliefFConfig& config) {
  config.validate();
  const std::size_t m = data.num_instances();
  const std::size_t n = data.num_features();
  const std::size_t num_classes = data.class_set.size();
  if (num_classes < 2)
    throw Error("value", "relieff requires at least 2 classes");

  const std::vector<std::size_t> labels = data.label_indices();
  std::vector<double> prior(num_classes, 0.0);
  for (std::size_t l : labels) prior[l] += 1.0;
  for (double& p : prior) p /= static_cast<double>(m);

  std::vector<double> inv_range(n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    double lo = data.features(0, f);
    double hi = lo;
    for (std::size_t i = 1; i < m; ++i) {
      lo = std::min(lo, data.features(i, f));
      hi = std::max(hi, data.features(i, f));
    }
    if (hi > lo) inv_range[f] = 1.0 / (hi - lo);
  }

  std::vector<std::size_t> sampled;
  std::vector<std::string> warnings;
  if (config.sample_count == 0) {
    sampled.resize(m);
    for (std::size_t i = 0; i < m; ++i) sampled[i] = i;
  } else {
    std::size_t count = config.sample_count;
    if (count > m) {
      warnings.push_back("sample_count " + std::to_string(count) +
                         " clipped to " + std::to_string(m) + " instances");
      count = m;
    }
    Rng rng(config.rng_seed);
    sampled = rng.sample_without_replacement(m, count);
  }
  const double divisor = static_cast<double>(sampled.size());

  std::vector<NeighborSet> neighbors(sampled.size());
  for (std::size_t s = 0; s < sampled.size(); ++s) {
    const std::size_t r = sampled[s];
    std::vector<std::pair<double, std::size_t>> by_class_sorted;
    NeighborSet& set = neighbors[s];
    set.misses.resize(num_classes);
    for (std::size_t group = 0; group < num_classes; ++group) {
      by_class_sorted.clear();
      for (std::size_t i = 0; i < m; ++i) {
        if (i == r || labels[i] != group) continue;
        double dist = 0.0;
        for (std::size_t f = 0; f < n; ++f)
          dist += std::abs(data.features(i, f) - data.features(r, f)) *
                  inv_range[f];
        if (dist == 0.0) continue;
        by_class_sorted.emplace_back(dist, i);
      }
      std::sort(by_class_sorted.begin(), by_class_sorted.end());
      const std::size_t take =
          std::min(config.k_neighbors, by_class_sorted.size());
      auto& out = group == labels[r] ? set.hits : set.misses[group];
      out.reserve(take);
      for (std::size_t j = 0; j < take; ++j)
        out.push_back(by_class_sorted[j].second);
    }
    set.skipped = set.hits.empty();
  }

  std::size_t skipped = 0;
  std::size_t clipped = 0;
  for (const auto& set : neighbors) {
    if (set.skipped) {
      ++skipped;
      continue;
    }
    bool clip = set.hits.size() < config.k_neighbors;
    for (std::size_t c = 0; c < set.misses.size(); ++c)
      if (!set.misses[c].empty() && set.misses[c].size() < config.k_neighbors)
        clip = true;
    if (clip) ++clipped;
  }
  if (skipped > 0)
    warnings.push_back(std::to_string(skipped) +
                       " instance(s) skipped: no same-class neighbor at "
                       "nonzero distance");
  if (clipped > 0)
    warnings.push_back("fewer than k neighbors available for " +
                       std::to_string(clipped) + " instance(s); averaged over "
                       "what exists");

  std::vector<double> scores(n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    double w = 0.0;
    for (std::size_t s = 0; s < sampled.size(); ++s) {
      const NeighborSet& set = neighbors[s];
      if (set.skipped) continue;
      const std::size_t r = sampled[s];
      const double rv = data.features(r, f);

      double hit_term = 0.0;
      for (std::size_t h : set.hits)
        hit_term += std::abs(data.features(h, f) - rv) * inv_range[f];
      hit_term /= static_cast<double>(set.hits.size());

      double miss_term = 0.0;
      for (std::size_t c = 0; c < num_classes; ++c) {
        if (c == labels[r] || set.misses[c].empty()) continue;
        double d = 0.0;
        for (std::size_t miss : set.misses[c])
          d += std::abs(data.features(miss, f) - rv) * inv_range[f];
        d /= static_cast<double>(set.misses[c].size());
        miss_term += prior[c] / (1.0 - prior[labels[r]]) * d;
      }
      w += (miss_term - hit_term) / divisor;
    }
    scores[f] = w;
  }

  FeatureRanking ranking = scores_to_ranking(std::move(scores));
  ranking.method = "relieff";
  nlohmann::json echo;
  echo["distance"] = "range-normalized-manhattan";
  echo["k_neighbors"] = config.k_neighbors;
  echo["rng_seed"] = config.rng_seed;
  if (config.sample_count == 0)
    echo["sample_count"] = "all";
  else
    echo["sample_count"] = config.sample_count;
  ranking.config_echo = echo.dump();
  ranking.warnings = std::move(warnings);
  return ranking;
}

namespace {

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

double serial_spectral_radius(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> u(n, 0.0);
  double lambda = 0.0;
  for (std::size_t it = 0; it < 500; ++it) {
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

Matrix serial_relevance_from(const Matrix& adjacency, double alpha) {
  const std::size_t n = adjacency.rows();
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

struct PlsaFit {
  std::vector<std::array<double, 2>> topic_given_feature;
  std::array<std::vector<double>, 2> token_given_topic;
  bool converged = false;
};

PlsaFit serial_fit_plsa(const Matrix& counts,
                        const std::vector<double>& token_weight,
                        const IlfsConfig& config) {
  const std::size_t nf = counts.rows();
  const std::size_t nt = counts.cols();
  PlsaFit fit;
  fit.topic_given_feature.assign(nf, {0.5, 0.5});
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

FeatureRanking ilfs_scores(const LabeledDataset& data,
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

  Matrix separation(num_classes, n);
  Matrix dispersion(num_classes, n);
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

  Matrix counts(n, 2 * bins);
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      counts(f, bin_of(separation(c, f), sep_edges)) += 1.0;
      counts(f, bins + bin_of(dispersion(c, f), disp_edges)) += 1.0;
    }
  }

  bool identical = true;
  for (std::size_t f = 1; f < n && identical; ++f)
    for (std::size_t t = 0; t < counts.cols(); ++t)
      if (counts(f, t) != counts(0, t)) {
        identical = false;
        break;
      }

  Matrix relevance(n, n);
  bool em_converged = true;
  if (!identical) {
    std::vector<double> token_weight(2 * bins);
    for (std::size_t b = 0; b < bins; ++b) {
      token_weight[b] = static_cast<double>(b) / static_cast<double>(bins - 1);
      token_weight[bins + b] = static_cast<double>(bins - 1 - b) /
                               static_cast<double>(bins - 1);
    }

    const PlsaFit fit = serial_fit_plsa(counts, token_weight, config);
    em_converged = fit.converged;

    double indicativeness[2] = {0.0, 0.0};
    for (int z = 0; z < 2; ++z)
      for (std::size_t t = 0; t < 2 * bins; ++t)
        indicativeness[z] += fit.token_given_topic[z][t] * token_weight[t];
    const int relevant = indicativeness[1] > indicativeness[0] ? 1 : 0;

    Matrix adjacency(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j)
          adjacency(i, j) = fit.topic_given_feature[i][relevant] *
                            fit.topic_given_feature[j][relevant];

    const double rho = serial_spectral_radius(adjacency);
    if (rho >= 1e-300)
      relevance = serial_relevance_from(adjacency, config.alpha_fraction / rho);
  }

  std::vector<double> scores(n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += relevance(f, j);
    scores[f] = s;
  }

  FeatureRanking ranking = scores_to_ranking(std::move(scores));
  ranking.method = "ilfs";
  if (!em_converged)
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

ClusterAssignment som_cluster_features(const LabeledDataset& data,
                                       std::size_t n_units,
                                       const AfsConfig& config) {
  if (n_units == 0) throw Error("value", "cluster count must be at least 1");
  if (config.som_iterations == 0)
    throw Error("config", "som_iterations must be positive");
  const std::size_t n = data.num_features();
  const std::size_t m = data.num_instances();
  if (n == 0) throw Error("value", "dataset has no features");

  ClusterAssignment out;
  if (n_units > n) {
    out.warnings.push_back("cluster count " + std::to_string(n_units) +
                           " clipped to " + std::to_string(n) + " features");
    n_units = n;
  }
  out.n_units = n_units;

  const Matrix z =
      reference::apply_zscore(fit_zscore(data.features), data.features);
  Matrix points(n, m);
  for (std::size_t f = 0; f < n; ++f)
    for (std::size_t i = 0; i < m; ++i) points(f, i) = z(i, f);

  std::size_t height = 1;
  std::size_t width = n_units;
  for (std::size_t h = static_cast<std::size_t>(
           std::sqrt(static_cast<double>(n_units)));
       h >= 1; --h) {
    if (n_units % h == 0) {
      height = h;
      width = n_units / h;
      break;
    }
  }
  std::vector<double> gx(n_units);
  std::vector<double> gy(n_units);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t u = r * width + c;
      gx[u] = static_cast<double>(c) + 0.5 * static_cast<double>(r % 2);
      gy[u] = static_cast<double>(r) * std::sqrt(3.0) / 2.0;
    }
  }
  auto grid_dist2 = [&](std::size_t a, std::size_t b) {
    const double dx = gx[a] - gx[b];
    const double dy = gy[a] - gy[b];
    return dx * dx + dy * dy;
  };
  auto kernel = [](double dist2, double sigma) {
    if (dist2 >= sigma * sigma - 1e-9) return 0.0;
    return std::exp(-dist2 / (2.0 * sigma * sigma));
  };

  const double sigma0 = std::max(1.0, std::sqrt(grid_dist2(0, n_units - 1)) / 2.0);
  const std::size_t total = config.som_iterations;
  const std::size_t plateau_start = total * 3 / 4;

  Rng rng(mix_seed(config.rng_seed, n_units));
  const std::vector<std::size_t> init = rng.sample_without_replacement(n, n_units);
  Matrix codebook(n_units, m);
  for (std::size_t u = 0; u < n_units; ++u)
    std::copy(points.row(init[u]).begin(), points.row(init[u]).end(),
              codebook.row(u).begin());

  std::vector<std::size_t> assignment(n, 0);
  std::vector<double> best_dist2(n, 0.0);
  auto assign = [&]() {
    for (std::size_t f = 0; f < n; ++f) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u < n_units; ++u) {
        double d = 0.0;
        auto p = points.row(f);
        auto c = codebook.row(u);
        for (std::size_t i = 0; i < m; ++i) {
          const double diff = p[i] - c[i];
          d += diff * diff;
        }
        if (d < bd) {
          bd = d;
          best = u;
        }
      }
      assignment[f] = best;
      best_dist2[f] = bd;
    }
    double qe = 0.0;
    for (std::size_t f = 0; f < n; ++f) qe += best_dist2[f];
    out.quantization_errors.push_back(qe / static_cast<double>(n));
  };

  Matrix unit_sum(n_units, m);
  std::vector<double> unit_count(n_units);
  for (std::size_t t = 0; t < total; ++t) {
    assign();

    const double sigma =
        t < plateau_start
            ? sigma0 + (1.0 - sigma0) * static_cast<double>(t) /
                  static_cast<double>(std::max<std::size_t>(plateau_start, 2) - 1)
            : 1.0;

    std::fill(unit_sum.data().begin(), unit_sum.data().end(), 0.0);
    std::fill(unit_count.begin(), unit_count.end(), 0.0);
    for (std::size_t f = 0; f < n; ++f) {
      auto dst = unit_sum.row(assignment[f]);
      auto p = points.row(f);
      for (std::size_t i = 0; i < m; ++i) dst[i] += p[i];
      unit_count[assignment[f]] += 1.0;
    }

    for (std::size_t u = 0; u < n_units; ++u) {
      std::vector<double> num(m, 0.0);
      double den = 0.0;
      for (std::size_t v = 0; v < n_units; ++v) {
        if (unit_count[v] == 0.0) continue;
        const double h = kernel(grid_dist2(u, v), sigma);
        if (h == 0.0) continue;
        auto sv = unit_sum.row(v);
        for (std::size_t i = 0; i < m; ++i) num[i] += h * sv[i];
        den += h * unit_count[v];
      }
      if (den > 0.0) {
        auto c = codebook.row(u);
        for (std::size_t i = 0; i < m; ++i) c[i] = num[i] / den;
      }
    }
  }
  assign();

  out.assignment = assignment;
  out.members.resize(n_units);
  for (std::size_t f = 0; f < n; ++f) out.members[assignment[f]].push_back(f);
  out.codebook = std::move(codebook);
  return out;
}

}  // namespace emofs::reference
