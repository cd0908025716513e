#include "scoreflow/gmm.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace scoreflow {

void GaussianMixture::validate() const {
  if (weights.empty() || weights.size() != means.size() || weights.size() != stds.size()) {
    throw ConfigError("mixture weights/means/stds must have equal nonzero length");
  }
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(wsum - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
  for (double s : stds) {
    if (!(s > 0.0)) throw ConfigError("mixture stds must be positive");
  }
}

double GaussianMixture::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] * means[i];
  return m;
}

double GaussianMixture::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    v += weights[i] * (stds[i] * stds[i] + means[i] * means[i]);
  }
  return v - m * m;
}

namespace {

// Returns log p_t and the score in one pass (log-sum-exp stabilized).
struct LogDensityScore {
  double log_p;
  double score;
};

LogDensityScore eval(const GaussianMixture& mix, double x, double t, const SdeSpec& spec) {
  const KernelMoments km = kernel_moments(spec, t);
  const std::size_t n = mix.weights.size();
  std::vector<double> log_terms(n);
  std::vector<double> dlog_terms(n);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = km.mean_coeff * mix.means[i];
    const double var = km.mean_coeff * km.mean_coeff * mix.stds[i] * mix.stds[i] + km.var;
    const double d = x - mu;
    log_terms[i] = std::log(mix.weights[i]) - 0.5 * std::log(2.0 * M_PI * var) -
                   0.5 * d * d / var;
    dlog_terms[i] = -d / var;
    max_log = std::max(max_log, log_terms[i]);
  }
  double z = 0.0;
  double dz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(log_terms[i] - max_log);
    z += e;
    dz += e * dlog_terms[i];
  }
  return {max_log + std::log(z), dz / z};
}

}  // namespace

double gmm_log_density(const GaussianMixture& mix, double x, double t, const SdeSpec& spec) {
  mix.validate();
  return eval(mix, x, t, spec).log_p;
}

double gmm_score(const GaussianMixture& mix, double x, double t, const SdeSpec& spec) {
  mix.validate();
  return eval(mix, x, t, spec).score;
}

double gmm_density(const GaussianMixture& mix, double x, double t, const SdeSpec& spec) {
  return std::exp(gmm_log_density(mix, x, t, spec));
}

}  // namespace scoreflow
