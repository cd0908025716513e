#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "scoreflow/field.hpp"
#include "scoreflow/rng.hpp"
#include "scoreflow/score_net.hpp"
#include "scoreflow/sde.hpp"

namespace scoreflow {

enum class SamplerMethod { EulerMaruyama, PfOde, PredictorCorrector };

struct SamplerConfig {
  SamplerMethod method = SamplerMethod::EulerMaruyama;
  int n_steps = 1000;
  int n_corr = 0;      // Langevin corrector steps per predictor step
  double snr = 0.16;   // corrector signal-to-noise ratio r
  std::uint64_t seed = 0;

  void validate() const;
};

using ScoreFn =
    std::function<void(std::span<const double> x, double t, std::span<double> out)>;

struct SampleStats {
  int corrector_skips = 0;  // correctors skipped because ||s_theta|| = 0
};

// Latent draw: N(0, I) for VP/sub-VP, N(0, s^2(1) I) for VE.
void draw_latent(const SdeSpec& spec, Rng& rng, std::span<double> out);

// Reverse-time Euler-Maruyama over a uniform grid, dt = 1/N:
//   x_i = x_{i+1} - mu_tilde dt + g sqrt(dt) z,  mu_tilde = mu - g^2 score.
std::vector<double> sample_backward_em(const ScoreFn& score, const SdeSpec& spec,
                                       int dim, const SamplerConfig& cfg, Rng& rng,
                                       SampleStats* stats = nullptr);

// Probability-flow ODE dx/dt = mu - (1/2) g^2 score, forward Euler backwards
// in t; deterministic after the latent draw.
std::vector<double> sample_pf_ode(const ScoreFn& score, const SdeSpec& spec, int dim,
                                  const SamplerConfig& cfg, Rng& rng);

// Predictor-corrector: one EM predictor step then n_corr Langevin steps with
// step size delta = 2 c (r ||z|| / ||s_theta||)^2, c = 1 - beta_i/N for VP
// and 1 otherwise; x += delta s_theta + sqrt(2 delta) z. A zero score skips
// the corrector step (delta undefined).
std::vector<double> sample_pc(const ScoreFn& score, const SdeSpec& spec, int dim,
                              const SamplerConfig& cfg, Rng& rng,
                              SampleStats* stats = nullptr);

std::vector<double> sample(const ScoreFn& score, const SdeSpec& spec, int dim,
                           const SamplerConfig& cfg, Rng& rng,
                           SampleStats* stats = nullptr);

// Independent trajectories with counter-derived RNG streams; deterministic
// output order regardless of threads.
std::vector<std::vector<double>> sample_many(const ScoreFn& score, const SdeSpec& spec,
                                             int dim, const SamplerConfig& cfg,
                                             int n_samples, int threads = 1);

// Forward Euler-Maruyama path recorder for marginal-consistency checks:
// integrates dx = mu dt + g dW from x0 and returns the states at the
// requested times (snapped to the step grid).
std::vector<std::vector<double>> forward_em_marginals(const SdeSpec& spec,
                                                      std::span<const double> x0,
                                                      std::span<const double> times,
                                                      int n_steps, Rng& rng);

// ---- Autoregressive rollout ----

using StepHook = std::function<void(int tau, Frame& prediction, const Frame& previous)>;

struct RolloutResult {
  Sequence sequence;
  bool aborted = false;
  int abort_step = -1;
  std::vector<double> step_seconds;
};

// Samples x_hat^tau ~ p(. | x_hat^{tau-1}) for tau = 1..n_steps, feeding each
// prediction back as conditioning. Hooks run on each predicted frame (e.g.
// filtering or physics correction) before it becomes the next condition.
RolloutResult rollout(const ScoreNet& net, const SdeSpec& spec, const Frame& initial,
                      int n_steps, const SamplerConfig& cfg,
                      const std::vector<StepHook>& hooks = {});

// ---- Physics residuals and correction (TurbRad system) ----

inline constexpr double kGamma = 5.0 / 3.0;

// Mass / momentum / energy residuals of the cooling-layer system on frames
// with channels {rho, u, v, P}. Fluxes (all divergence terms) are evaluated
// from the past state; time differences are forward with step dtau; the
// cooling term uses the next-state energy E = P/(gamma-1).
struct ResidualFields {
  std::vector<double> r1, r2x, r2y, r3;
};

ResidualFields turbrad_residuals(const Frame& next, const Frame& prev, double dtau,
                                 double tau_cool);

struct PhysicsCorrConfig {
  int n_gd = 20;
  double eta_u = 1e-3;
  double eta_rho = 1e-3;
  double eta_p = 1e-3;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double tau_cool = 0.06;
  double dtau = 1.0;

  void validate() const;
};

struct PhysicsCorrResult {
  Frame corrected;
  std::vector<double> lgd_history;  // accepted iterates, nonincreasing
  int eta_halvings = 0;
  bool aborted = false;
};

// L_GD = lambda1 ||R1||^2 + lambda2 ||R2||^2 + lambda3 ||R3||^2 and its
// analytic gradient with respect to the next-state fields (fluxes frozen at
// the past state make every term local in the next state).
double physics_loss(const Frame& next, const Frame& prev, const PhysicsCorrConfig& cfg);
void physics_loss_grad(const Frame& next, const Frame& prev, const PhysicsCorrConfig& cfg,
                       std::vector<double>& d_rho, std::vector<double>& d_u,
                       std::vector<double>& d_v, std::vector<double>& d_p);

// Sequential gradient-descent sweeps (u,v then rho then P) over n_gd steps;
// a step that increases L_GD is rejected and the rates are halved.
PhysicsCorrResult physics_correct(const Frame& prediction, const Frame& previous,
                                  const PhysicsCorrConfig& cfg);

}  // namespace scoreflow
