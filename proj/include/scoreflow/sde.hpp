#pragma once

#include <span>
#include <string>
#include <vector>

#include "scoreflow/errors.hpp"

namespace scoreflow {

enum class SdeKind { Vp, SubVp, Ve };

// Training samples t uniformly on [kTFloor, 1]; the denoising target is
// singular at t = 0.
inline constexpr double kTFloor = 1e-5;

// One of the three forward diffusion formulations with its schedule.
// VP/SubVP use a linear beta(t) on [beta_min, beta_max]; VE uses a geometric
// sigma(t) on [sigma_min, sigma_max]. Diffusion time runs over [0, T], T = 1.
struct SdeSpec {
  SdeKind kind = SdeKind::Vp;
  double beta_min = 0.0;
  double beta_max = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double time_horizon = 1.0;
  int n_steps = 1000;

  void validate() const;

  static SdeSpec vp(double beta_min, double beta_max, int n_steps = 1000);
  static SdeSpec subvp(double beta_min, double beta_max, int n_steps = 1000);
  static SdeSpec ve(double sigma_min, double sigma_max, int n_steps = 1000);

  // Named presets: "<kind>-<dataset>[-reg]" with kind in {vp, subvp, ve} and
  // dataset in {transonic, turbrad, mhd}.
  static SdeSpec preset(const std::string& name);
  static std::vector<std::string> preset_names();
};

// Transition kernel N(mean_coeff * x0, var * I).
struct KernelMoments {
  double mean_coeff = 1.0;
  double var = 0.0;
};

struct DiscreteSchedule {
  std::vector<double> alphas;
  std::vector<double> alpha_bars;
};

// Linear schedule beta(t) = beta_min + t (beta_max - beta_min). VP/SubVP only.
double beta(const SdeSpec& spec, double t);
// Integral of beta over [0, t] in closed form.
double beta_integral(const SdeSpec& spec, double t);
// Geometric schedule sigma(t) = sigma_min (sigma_max/sigma_min)^t. VE only.
double sigma(const SdeSpec& spec, double t);

KernelMoments kernel_moments(const SdeSpec& spec, double t);

// x_t = m(t) x0 + s(t) noise, elementwise.
void perturb(const SdeSpec& spec, std::span<const double> x0, double t,
             std::span<const double> noise, std::span<double> out);

// Kernel score -(x_t - m(t) x0) / s^2(t). Throws NumericError below kTFloor
// where the kernel variance degenerates.
void kernel_score(const SdeSpec& spec, std::span<const double> x_t,
                  std::span<const double> x0, double t, std::span<double> out);

// Forward drift is linear in the state for all three kinds: drift = c(t) x.
// Returns (c, g) with scalar diffusion g(t).
struct DriftCoeffs {
  double drift_coeff = 0.0;
  double g = 0.0;
};
DriftCoeffs drift_coeffs(const SdeSpec& spec, double t);

// Drift vector and diffusion scalar at state x.
void drift_diffusion(const SdeSpec& spec, std::span<const double> x, double t,
                     std::span<double> drift_out, double& g_out);

// Discrete variance schedule alpha_i = 1 - beta(i/N)/N, i = 1..N. VP only.
DiscreteSchedule discrete_schedule(const SdeSpec& spec, int n);

}  // namespace scoreflow
