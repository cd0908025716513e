#include "scoreflow/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace scoreflow {

void SamplerConfig::validate() const {
  if (n_steps < 2) throw ConfigError("sampler n_steps must be >= 2");
  if (n_corr < 0) throw ConfigError("n_corr must be >= 0");
  if (!(snr > 0.0)) throw ConfigError("snr must be positive");
}

void draw_latent(const SdeSpec& spec, Rng& rng, std::span<double> out) {
  const double s = spec.kind == SdeKind::Ve
                       ? std::sqrt(kernel_moments(spec, 1.0).var)
                       : 1.0;
  for (double& v : out) v = s * rng.normal();
}

namespace {

bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// Shared reverse loop: EM predictor with optional Langevin correctors.
std::vector<double> reverse_loop(const ScoreFn& score, const SdeSpec& spec, int dim,
                                 const SamplerConfig& cfg, Rng& rng, int n_corr,
                                 SampleStats* stats) {
  const int n = cfg.n_steps;
  const double dt = 1.0 / n;
  std::vector<double> x(dim), s_vec(dim), z(dim);
  draw_latent(spec, rng, x);

  for (int i = n - 1; i >= 0; --i) {
    const double t_next = static_cast<double>(i + 1) / n;
    const DriftCoeffs dc = drift_coeffs(spec, t_next);
    score(x, t_next, s_vec);
    for (int k = 0; k < dim; ++k) z[k] = rng.normal();
    const double g = dc.g;
    for (int k = 0; k < dim; ++k) {
      const double mu_tilde = dc.drift_coeff * x[k] - g * g * s_vec[k];
      x[k] += -mu_tilde * dt + g * std::sqrt(dt) * z[k];
    }
    if (!all_finite(x)) {
      throw NumericError("sampler produced non-finite state", i);
    }

    const double t_i = static_cast<double>(i) / n;
    for (int j = 0; j < n_corr; ++j) {
      score(x, t_i, s_vec);
      const double s_norm = norm2(s_vec);
      for (int k = 0; k < dim; ++k) z[k] = rng.normal();
      if (s_norm == 0.0) {
        if (stats) ++stats->corrector_skips;
        continue;
      }
      const double z_norm = norm2(z);
      const double prefactor =
          spec.kind == SdeKind::Vp ? 1.0 - beta(spec, t_i) / n : 1.0;
      const double ratio = cfg.snr * z_norm / s_norm;
      const double delta = 2.0 * prefactor * ratio * ratio;
      const double step_noise = std::sqrt(2.0 * delta);
      for (int k = 0; k < dim; ++k) x[k] += delta * s_vec[k] + step_noise * z[k];
      if (!all_finite(x)) {
        throw NumericError("corrector produced non-finite state", i);
      }
    }
  }
  return x;
}

}  // namespace

std::vector<double> sample_backward_em(const ScoreFn& score, const SdeSpec& spec,
                                       int dim, const SamplerConfig& cfg, Rng& rng,
                                       SampleStats* stats) {
  cfg.validate();
  return reverse_loop(score, spec, dim, cfg, rng, 0, stats);
}

std::vector<double> sample_pc(const ScoreFn& score, const SdeSpec& spec, int dim,
                              const SamplerConfig& cfg, Rng& rng, SampleStats* stats) {
  cfg.validate();
  return reverse_loop(score, spec, dim, cfg, rng, cfg.n_corr, stats);
}

std::vector<double> sample_pf_ode(const ScoreFn& score, const SdeSpec& spec, int dim,
                                  const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  const int n = cfg.n_steps;
  const double dt = 1.0 / n;
  std::vector<double> x(dim), s_vec(dim);
  draw_latent(spec, rng, x);
  for (int i = n - 1; i >= 0; --i) {
    const double t_next = static_cast<double>(i + 1) / n;
    const DriftCoeffs dc = drift_coeffs(spec, t_next);
    score(x, t_next, s_vec);
    for (int k = 0; k < dim; ++k) {
      const double rhs = dc.drift_coeff * x[k] - 0.5 * dc.g * dc.g * s_vec[k];
      x[k] -= rhs * dt;
    }
    if (!all_finite(x)) {
      throw NumericError("PF-ODE produced non-finite state", i);
    }
  }
  return x;
}

std::vector<double> sample(const ScoreFn& score, const SdeSpec& spec, int dim,
                           const SamplerConfig& cfg, Rng& rng, SampleStats* stats) {
  switch (cfg.method) {
    case SamplerMethod::EulerMaruyama:
      return sample_backward_em(score, spec, dim, cfg, rng, stats);
    case SamplerMethod::PfOde:
      return sample_pf_ode(score, spec, dim, cfg, rng);
    case SamplerMethod::PredictorCorrector:
    default:
      return sample_pc(score, spec, dim, cfg, rng, stats);
  }
}

std::vector<std::vector<double>> sample_many(const ScoreFn& score, const SdeSpec& spec,
                                             int dim, const SamplerConfig& cfg,
                                             int n_samples, int threads) {
  cfg.validate();
  std::vector<std::vector<double>> out(n_samples);
  auto worker = [&](int begin, int end) {
    for (int k = begin; k < end; ++k) {
      Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(k));
      out[k] = sample(score, spec, dim, cfg, rng, nullptr);
    }
  };
  threads = std::max(1, std::min(threads, n_samples));
  if (threads == 1) {
    worker(0, n_samples);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_samples + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n_samples, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

std::vector<std::vector<double>> forward_em_marginals(const SdeSpec& spec,
                                                      std::span<const double> x0,
                                                      std::span<const double> times,
                                                      int n_steps, Rng& rng) {
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<std::vector<double>> snapshots;
  const double dt = 1.0 / n_steps;
  std::size_t next_time = 0;
  for (int i = 0; i < n_steps && next_time < times.size(); ++i) {
    const double t = static_cast<double>(i) / n_steps;
    const DriftCoeffs dc = drift_coeffs(spec, t);
    const double noise_scale = dc.g * std::sqrt(dt);
    for (double& v : x) v += dc.drift_coeff * v * dt + noise_scale * rng.normal();
    const double t_end = static_cast<double>(i + 1) / n_steps;
    while (next_time < times.size() && t_end + 1e-12 >= times[next_time]) {
      snapshots.push_back(x);
      ++next_time;
    }
  }
  while (next_time++ < times.size()) snapshots.push_back(x);
  return snapshots;
}

RolloutResult rollout(const ScoreNet& net, const SdeSpec& spec, const Frame& initial,
                      int n_steps, const SamplerConfig& cfg,
                      const std::vector<StepHook>& hooks) {
  cfg.validate();
  if (n_steps < 0) throw ConfigError("rollout n_steps must be >= 0");
  if (net.cond_dim != initial.width() || net.data_dim != initial.width()) {
    throw ConfigError("net conditioning width does not match the frame width");
  }
  RolloutResult result;
  result.sequence.frames.push_back(initial);
  result.sequence.frames.front().tau = 0;

  std::vector<double> cond = initial.flatten();
  NetWorkspace ws;
  for (int tau = 1; tau <= n_steps; ++tau) {
    const auto start = std::chrono::steady_clock::now();
    ScoreFn score = [&](std::span<const double> x, double t, std::span<double> out) {
      forward_ws(net, x, cond, t, ws, out);
    };
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(tau));
    Frame pred = initial;
    pred.tau = tau;
    bool ok = true;
    try {
      pred.unflatten(sample(score, spec, net.data_dim, cfg, rng));
    } catch (const NumericError&) {
      ok = false;
    }
    if (ok) {
      for (const auto& hook : hooks) {
        hook(tau, pred, result.sequence.frames.back());
      }
      ok = pred.all_finite();
    }
    result.step_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (!ok) {
      result.aborted = true;
      result.abort_step = tau;
      break;
    }
    cond = pred.flatten();
    result.sequence.frames.push_back(std::move(pred));
  }
  return result;
}

// ---- TurbRad residuals ----

namespace {

struct Stencil {
  const Grid2* g;
  int wrap_x(int i) const {
    if (g->boundary == Boundary::Periodic) return ((i % g->nx) + g->nx) % g->nx;
    return std::clamp(i, 0, g->nx - 1);
  }
  int wrap_y(int j) const {
    if (g->boundary == Boundary::Periodic) return ((j % g->ny) + g->ny) % g->ny;
    return std::clamp(j, 0, g->ny - 1);
  }
};

// d/dx and d/dy by central differences with the grid's boundary mode.
void central_derivs(const std::vector<double>& f, const Grid2& g,
                    std::vector<double>& ddx, std::vector<double>& ddy) {
  const Stencil st{&g};
  ddx.resize(f.size());
  ddy.resize(f.size());
  const double cx = 1.0 / (2.0 * g.dx);
  const double cy = 1.0 / (2.0 * g.dy);
  for (int ix = 0; ix < g.nx; ++ix) {
    const int xp = st.wrap_x(ix + 1);
    const int xm = st.wrap_x(ix - 1);
    for (int iy = 0; iy < g.ny; ++iy) {
      const int yp = st.wrap_y(iy + 1);
      const int ym = st.wrap_y(iy - 1);
      const std::size_t idx = static_cast<std::size_t>(ix) * g.ny + iy;
      ddx[idx] = cx * (f[static_cast<std::size_t>(xp) * g.ny + iy] -
                       f[static_cast<std::size_t>(xm) * g.ny + iy]);
      ddy[idx] = cy * (f[static_cast<std::size_t>(ix) * g.ny + yp] -
                       f[static_cast<std::size_t>(ix) * g.ny + ym]);
    }
  }
}

struct TurbRadChannels {
  const std::vector<double>*rho, *u, *v, *p;
};

TurbRadChannels turbrad_channels(const Frame& f) {
  return {&f.channel("rho"), &f.channel("u"), &f.channel("v"), &f.channel("P")};
}

}  // namespace

ResidualFields turbrad_residuals(const Frame& next, const Frame& prev, double dtau,
                                 double tau_cool) {
  if (!next.grid.same_shape(prev.grid)) throw ConfigError("frames must share the grid");
  if (!(dtau > 0.0) || !(tau_cool > 0.0)) {
    throw ConfigError("dtau and tau_cool must be positive");
  }
  const auto nc = turbrad_channels(next);
  const auto pc = turbrad_channels(prev);
  const Grid2& g = prev.grid;
  const std::size_t n = static_cast<std::size_t>(g.cells());

  // Past-state fluxes.
  std::vector<double> mass_fx(n), mass_fy(n);        // rho u, rho v
  std::vector<double> momx_fx(n), momx_fy(n);        // rho u^2 + P, rho u v
  std::vector<double> momy_fx(n), momy_fy(n);        // rho u v, rho v^2 + P
  std::vector<double> en_fx(n), en_fy(n);            // (E + P) u, (E + P) v
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = (*pc.rho)[i];
    const double u = (*pc.u)[i];
    const double v = (*pc.v)[i];
    const double p = (*pc.p)[i];
    const double e = p / (kGamma - 1.0);
    mass_fx[i] = rho * u;
    mass_fy[i] = rho * v;
    momx_fx[i] = rho * u * u + p;
    momx_fy[i] = rho * u * v;
    momy_fx[i] = rho * u * v;
    momy_fy[i] = rho * v * v + p;
    en_fx[i] = (e + p) * u;
    en_fy[i] = (e + p) * v;
  }

  std::vector<double> dx_a(n), dy_a(n), dx_b(n), dy_b(n);
  ResidualFields res;
  res.r1.resize(n);
  res.r2x.resize(n);
  res.r2y.resize(n);
  res.r3.resize(n);

  central_derivs(mass_fx, g, dx_a, dy_a);
  central_derivs(mass_fy, g, dx_b, dy_b);
  for (std::size_t i = 0; i < n; ++i) {
    res.r1[i] = ((*nc.rho)[i] - (*pc.rho)[i]) / dtau + dx_a[i] + dy_b[i];
  }

  central_derivs(momx_fx, g, dx_a, dy_a);
  central_derivs(momx_fy, g, dx_b, dy_b);
  for (std::size_t i = 0; i < n; ++i) {
    res.r2x[i] = ((*nc.rho)[i] * (*nc.u)[i] - (*pc.rho)[i] * (*pc.u)[i]) / dtau +
                 dx_a[i] + dy_b[i];
  }

  central_derivs(momy_fx, g, dx_a, dy_a);
  central_derivs(momy_fy, g, dx_b, dy_b);
  for (std::size_t i = 0; i < n; ++i) {
    res.r2y[i] = ((*nc.rho)[i] * (*nc.v)[i] - (*pc.rho)[i] * (*pc.v)[i]) / dtau +
                 dx_a[i] + dy_b[i];
  }

  central_derivs(en_fx, g, dx_a, dy_a);
  central_derivs(en_fy, g, dx_b, dy_b);
  for (std::size_t i = 0; i < n; ++i) {
    const double e_next = (*nc.p)[i] / (kGamma - 1.0);
    const double e_prev = (*pc.p)[i] / (kGamma - 1.0);
    res.r3[i] = (e_next - e_prev) / dtau + dx_a[i] + dy_b[i] + e_next / tau_cool;
  }
  return res;
}

void PhysicsCorrConfig::validate() const {
  if (n_gd < 0) throw ConfigError("n_gd must be >= 0");
  if (!(eta_u > 0.0) || !(eta_rho > 0.0) || !(eta_p > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0) || !(lambda3 > 0.0)) {
    throw ConfigError("residual weights must be positive");
  }
  if (!(tau_cool > 0.0) || !(dtau > 0.0)) {
    throw ConfigError("tau_cool and dtau must be positive");
  }
}

double physics_loss(const Frame& next, const Frame& prev, const PhysicsCorrConfig& cfg) {
  const ResidualFields res = turbrad_residuals(next, prev, cfg.dtau, cfg.tau_cool);
  double l1 = 0.0, l2 = 0.0, l3 = 0.0;
  for (std::size_t i = 0; i < res.r1.size(); ++i) {
    l1 += res.r1[i] * res.r1[i];
    l2 += res.r2x[i] * res.r2x[i] + res.r2y[i] * res.r2y[i];
    l3 += res.r3[i] * res.r3[i];
  }
  return cfg.lambda1 * l1 + cfg.lambda2 * l2 + cfg.lambda3 * l3;
}

void physics_loss_grad(const Frame& next, const Frame& prev, const PhysicsCorrConfig& cfg,
                       std::vector<double>& d_rho, std::vector<double>& d_u,
                       std::vector<double>& d_v, std::vector<double>& d_p) {
  const ResidualFields res = turbrad_residuals(next, prev, cfg.dtau, cfg.tau_cool);
  const auto nc = turbrad_channels(next);
  const std::size_t n = res.r1.size();
  d_rho.resize(n);
  d_u.resize(n);
  d_v.resize(n);
  d_p.resize(n);
  const double inv_dtau = 1.0 / cfg.dtau;
  // Every residual is local in the next state: fluxes are frozen at the past
  // state, so only the time-difference and cooling terms differentiate.
  const double dp_coeff = (1.0 / (kGamma - 1.0)) * (inv_dtau + 1.0 / cfg.tau_cool);
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = (*nc.rho)[i];
    const double u = (*nc.u)[i];
    const double v = (*nc.v)[i];
    d_rho[i] = 2.0 * cfg.lambda1 * res.r1[i] * inv_dtau +
               2.0 * cfg.lambda2 * (res.r2x[i] * u + res.r2y[i] * v) * inv_dtau;
    d_u[i] = 2.0 * cfg.lambda2 * res.r2x[i] * rho * inv_dtau;
    d_v[i] = 2.0 * cfg.lambda2 * res.r2y[i] * rho * inv_dtau;
    d_p[i] = 2.0 * cfg.lambda3 * res.r3[i] * dp_coeff;
  }
}

PhysicsCorrResult physics_correct(const Frame& prediction, const Frame& previous,
                                  const PhysicsCorrConfig& cfg) {
  cfg.validate();
  PhysicsCorrResult result;
  result.corrected = prediction;
  double eta_u = cfg.eta_u, eta_rho = cfg.eta_rho, eta_p = cfg.eta_p;
  double best = physics_loss(result.corrected, previous, cfg);
  result.lgd_history.push_back(best);

  std::vector<double> d_rho, d_u, d_v, d_p;
  int iter = 0;
  while (iter < cfg.n_gd) {
    Frame trial = result.corrected;
    auto& rho = trial.channel("rho");
    auto& u = trial.channel("u");
    auto& v = trial.channel("v");
    auto& p = trial.channel("P");

    // Sequential sweeps: velocity, then density, then pressure, each against
    // the current iterate.
    physics_loss_grad(trial, previous, cfg, d_rho, d_u, d_v, d_p);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] -= eta_u * d_u[i];
      v[i] -= eta_u * d_v[i];
    }
    physics_loss_grad(trial, previous, cfg, d_rho, d_u, d_v, d_p);
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] -= eta_rho * d_rho[i];
    physics_loss_grad(trial, previous, cfg, d_rho, d_u, d_v, d_p);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= eta_p * d_p[i];

    if (!trial.all_finite()) {
      result.aborted = true;
      break;
    }
    const double loss = physics_loss(trial, previous, cfg);
    if (!std::isfinite(loss)) {
      result.aborted = true;
      break;
    }
    if (loss > best) {
      eta_u *= 0.5;
      eta_rho *= 0.5;
      eta_p *= 0.5;
      ++result.eta_halvings;
      if (result.eta_halvings > 60) break;  // rates underflowed
      continue;  // reject, retry the same iteration
    }
    result.corrected = std::move(trial);
    best = loss;
    result.lgd_history.push_back(best);
    ++iter;
  }
  return result;
}

}  // namespace scoreflow
