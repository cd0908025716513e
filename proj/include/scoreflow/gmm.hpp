#pragma once

#include <vector>

#include "scoreflow/sde.hpp"

namespace scoreflow {

// 1D Gaussian mixture used as an analytic score oracle for toy targets.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> stds;

  void validate() const;
  double mean() const;
  double variance() const;
};

// log p_t(x) of the mixture diffused by the kernel of `spec`: each component
// mean scales by m(t) and the variance becomes m(t)^2 sigma_i^2 + s^2(t).
double gmm_log_density(const GaussianMixture& mix, double x, double t,
                       const SdeSpec& spec);

// Exact diffused-mixture score d/dx log p_t(x).
double gmm_score(const GaussianMixture& mix, double x, double t, const SdeSpec& spec);

// Diffused density itself (for histogram targets).
double gmm_density(const GaussianMixture& mix, double x, double t, const SdeSpec& spec);

}  // namespace scoreflow
