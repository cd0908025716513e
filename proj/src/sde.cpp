#include "scoreflow/sde.hpp"

#include <cmath>
#include <map>

namespace scoreflow {

void SdeSpec::validate() const {
  if (kind == SdeKind::Vp || kind == SdeKind::SubVp) {
    if (!(beta_min >= 0.0) || !(beta_min < beta_max)) {
      throw ConfigError("VP/sub-VP require 0 <= beta_min < beta_max");
    }
  } else {
    if (!(sigma_min > 0.0) || !(sigma_min < sigma_max)) {
      throw ConfigError("VE requires 0 < sigma_min < sigma_max");
    }
  }
  if (n_steps < 2) throw ConfigError("n_steps must be >= 2");
  if (time_horizon != 1.0) throw ConfigError("time horizon is fixed to 1");
}

SdeSpec SdeSpec::vp(double bmin, double bmax, int n) {
  SdeSpec s;
  s.kind = SdeKind::Vp;
  s.beta_min = bmin;
  s.beta_max = bmax;
  s.n_steps = n;
  s.validate();
  return s;
}

SdeSpec SdeSpec::subvp(double bmin, double bmax, int n) {
  SdeSpec s = vp(bmin, bmax, n);
  s.kind = SdeKind::SubVp;
  return s;
}

SdeSpec SdeSpec::ve(double smin, double smax, int n) {
  SdeSpec s;
  s.kind = SdeKind::Ve;
  s.sigma_min = smin;
  s.sigma_max = smax;
  s.n_steps = n;
  s.validate();
  return s;
}

namespace {

struct PresetRow {
  SdeKind kind;
  double a;  // beta_min or sigma_min
  double b;  // beta_max or sigma_max
};

// Tuned schedule optima per dataset, regularized and not.
const std::map<std::string, PresetRow>& preset_table() {
  static const std::map<std::string, PresetRow> table = {
      {"vp-transonic", {SdeKind::Vp, 0.01, 5.0}},
      {"subvp-transonic", {SdeKind::SubVp, 0.35, 30.0}},
      {"ve-transonic", {SdeKind::Ve, 0.04, 8.0}},
      {"vp-transonic-reg", {SdeKind::Vp, 0.39, 5.6}},
      {"subvp-transonic-reg", {SdeKind::SubVp, 0.4, 28.0}},
      {"ve-transonic-reg", {SdeKind::Ve, 0.05, 8.0}},
      {"vp-turbrad", {SdeKind::Vp, 0.1, 25.0}},
      {"subvp-turbrad", {SdeKind::SubVp, 0.4, 30.0}},
      {"ve-turbrad", {SdeKind::Ve, 0.15, 4.0}},
      {"vp-turbrad-reg", {SdeKind::Vp, 0.1, 27.0}},
      {"subvp-turbrad-reg", {SdeKind::SubVp, 0.25, 30.0}},
      {"ve-turbrad-reg", {SdeKind::Ve, 0.05, 5.0}},
      {"vp-mhd", {SdeKind::Vp, 0.1, 30.0}},
      {"subvp-mhd", {SdeKind::SubVp, 0.25, 30.0}},
      {"ve-mhd", {SdeKind::Ve, 0.1, 6.0}},
      {"vp-mhd-reg", {SdeKind::Vp, 0.15, 7.0}},
      {"subvp-mhd-reg", {SdeKind::SubVp, 0.1, 12.0}},
      {"ve-mhd-reg", {SdeKind::Ve, 0.01, 4.0}},
  };
  return table;
}

void require_beta_kind(const SdeSpec& spec) {
  if (spec.kind == SdeKind::Ve) {
    throw ConfigError("beta schedule is undefined for the VE SDE");
  }
}

void require_shape(std::size_t a, std::size_t b) {
  if (a != b) throw ConfigError("shape mismatch between state vectors");
}

}  // namespace

SdeSpec SdeSpec::preset(const std::string& name) {
  const auto& table = preset_table();
  auto it = table.find(name);
  if (it == table.end()) {
    throw ConfigError("unknown SDE preset '" + name + "'", "sde.preset");
  }
  const PresetRow& row = it->second;
  switch (row.kind) {
    case SdeKind::Vp:
      return vp(row.a, row.b);
    case SdeKind::SubVp:
      return subvp(row.a, row.b);
    case SdeKind::Ve:
    default:
      return ve(row.a, row.b);
  }
}

std::vector<std::string> SdeSpec::preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : preset_table()) names.push_back(k);
  return names;
}

double beta(const SdeSpec& spec, double t) {
  require_beta_kind(spec);
  return spec.beta_min + t * (spec.beta_max - spec.beta_min);
}

double beta_integral(const SdeSpec& spec, double t) {
  require_beta_kind(spec);
  return spec.beta_min * t + 0.5 * (spec.beta_max - spec.beta_min) * t * t;
}

double sigma(const SdeSpec& spec, double t) {
  if (spec.kind != SdeKind::Ve) {
    throw ConfigError("sigma schedule is defined for the VE SDE only");
  }
  return spec.sigma_min * std::pow(spec.sigma_max / spec.sigma_min, t);
}

KernelMoments kernel_moments(const SdeSpec& spec, double t) {
  KernelMoments km;
  switch (spec.kind) {
    case SdeKind::Vp: {
      const double ib = beta_integral(spec, t);
      km.mean_coeff = std::exp(-0.5 * ib);
      km.var = 1.0 - std::exp(-ib);
      break;
    }
    case SdeKind::SubVp: {
      const double ib = beta_integral(spec, t);
      km.mean_coeff = std::exp(-0.5 * ib);
      const double v = 1.0 - std::exp(-ib);
      km.var = v * v;
      break;
    }
    case SdeKind::Ve: {
      km.mean_coeff = 1.0;
      const double st = sigma(spec, t);
      km.var = st * st - spec.sigma_min * spec.sigma_min;
      break;
    }
  }
  return km;
}

void perturb(const SdeSpec& spec, std::span<const double> x0, double t,
             std::span<const double> noise, std::span<double> out) {
  require_shape(x0.size(), noise.size());
  require_shape(x0.size(), out.size());
  const KernelMoments km = kernel_moments(spec, t);
  const double s = std::sqrt(km.var);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    out[i] = km.mean_coeff * x0[i] + s * noise[i];
  }
}

void kernel_score(const SdeSpec& spec, std::span<const double> x_t,
                  std::span<const double> x0, double t, std::span<double> out) {
  require_shape(x_t.size(), x0.size());
  require_shape(x_t.size(), out.size());
  if (t < kTFloor) {
    throw NumericError("kernel score is singular below t = 1e-5");
  }
  const KernelMoments km = kernel_moments(spec, t);
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    out[i] = -(x_t[i] - km.mean_coeff * x0[i]) / km.var;
  }
}

DriftCoeffs drift_coeffs(const SdeSpec& spec, double t) {
  DriftCoeffs dc;
  switch (spec.kind) {
    case SdeKind::Vp: {
      const double b = beta(spec, t);
      dc.drift_coeff = -0.5 * b;
      dc.g = std::sqrt(b);
      break;
    }
    case SdeKind::SubVp: {
      const double b = beta(spec, t);
      dc.drift_coeff = -0.5 * b;
      dc.g = std::sqrt(b * (1.0 - std::exp(-2.0 * beta_integral(spec, t))));
      break;
    }
    case SdeKind::Ve: {
      dc.drift_coeff = 0.0;
      // g^2 = d sigma^2/dt of the geometric schedule, in closed form.
      dc.g = sigma(spec, t) * std::sqrt(2.0 * std::log(spec.sigma_max / spec.sigma_min));
      break;
    }
  }
  return dc;
}

void drift_diffusion(const SdeSpec& spec, std::span<const double> x, double t,
                     std::span<double> drift_out, double& g_out) {
  require_shape(x.size(), drift_out.size());
  const DriftCoeffs dc = drift_coeffs(spec, t);
  for (std::size_t i = 0; i < x.size(); ++i) drift_out[i] = dc.drift_coeff * x[i];
  g_out = dc.g;
}

DiscreteSchedule discrete_schedule(const SdeSpec& spec, int n) {
  if (spec.kind != SdeKind::Vp) {
    throw ConfigError("discrete schedule is defined for the VP SDE only");
  }
  if (n < 1) throw ConfigError("discrete schedule needs n >= 1");
  DiscreteSchedule ds;
  ds.alphas.resize(n);
  ds.alpha_bars.resize(n);
  double prod = 1.0;
  for (int i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double alpha = 1.0 - beta(spec, t) / n;
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw NumericError("discrete schedule alpha out of (0,1); increase n", i);
    }
    prod *= alpha;
    ds.alphas[i - 1] = alpha;
    ds.alpha_bars[i - 1] = prod;
  }
  return ds;
}

}  // namespace scoreflow
