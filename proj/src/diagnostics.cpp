#include "scoreflow/diagnostics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numeric>

namespace scoreflow {

double SpectrumResult::total_energy() const {
  return std::accumulate(time_avg.begin(), time_avg.end(), 0.0);
}

namespace {

int signed_freq(int i, int n) { return i <= n / 2 ? i : i - n; }

int shell_of(int fx, int fy) {
  return static_cast<int>(std::floor(std::hypot(fx, fy) + 0.5));
}

int shell_count_for(const Grid2& g) {
  const int fx_max = g.nx / 2;
  const int fy_max = g.ny / 2;
  return shell_of(fx_max, fy_max);
}

std::vector<double> spectrum_one_frame(const Frame& frame,
                                       const std::vector<std::string>& vel) {
  const Grid2& g = frame.grid;
  if (g.boundary != Boundary::Periodic) {
    throw ConfigError("energy spectrum requires a periodic grid");
  }
  if (vel.empty()) throw ConfigError("no velocity channels for the spectrum");
  const std::size_t n = static_cast<std::size_t>(g.cells());
  const int n_shells = shell_count_for(g);
  std::vector<double> shells(n_shells, 0.0);

  std::vector<std::complex<double>> in(n), out(n);
  const double norm = static_cast<double>(g.nx) * g.ny;
  for (const auto& name : vel) {
    const auto& data = frame.channel(name);
    const double mean = std::accumulate(data.begin(), data.end(), 0.0) / norm;
    for (std::size_t i = 0; i < n; ++i) in[i] = data[i] - mean;
    fftw_plan plan = fftw_plan_dft_2d(g.nx, g.ny, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()),
                                      FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (int i = 0; i < g.nx; ++i) {
      const int fx = signed_freq(i, g.nx);
      for (int j = 0; j < g.ny; ++j) {
        const int fy = signed_freq(j, g.ny);
        const int k = shell_of(fx, fy);
        if (k < 1) continue;  // DC carries no fluctuation energy
        const std::size_t idx = static_cast<std::size_t>(i) * g.ny + j;
        shells[k - 1] += 0.5 * std::norm(out[idx]) / (norm * norm);
      }
    }
  }
  return shells;
}

}  // namespace

SpectrumResult energy_spectrum_frame(const Frame& frame,
                                     const std::vector<std::string>& velocity_channels) {
  SpectrumResult result;
  result.per_frame.push_back(spectrum_one_frame(frame, velocity_channels));
  result.time_avg = result.per_frame.front();
  result.shells.resize(result.time_avg.size());
  std::iota(result.shells.begin(), result.shells.end(), 1.0);
  return result;
}

SpectrumResult energy_spectrum(const Sequence& seq) {
  if (seq.frames.empty()) throw ConfigError("empty sequence");
  const auto vel = seq.velocity_channels();
  SpectrumResult result;
  for (const auto& frame : seq.frames) {
    result.per_frame.push_back(spectrum_one_frame(frame, vel));
  }
  const std::size_t n_shells = result.per_frame.front().size();
  result.time_avg.assign(n_shells, 0.0);
  for (const auto& frame_spec : result.per_frame) {
    for (std::size_t k = 0; k < n_shells; ++k) result.time_avg[k] += frame_spec[k];
  }
  for (double& v : result.time_avg) v /= static_cast<double>(result.per_frame.size());
  result.shells.resize(n_shells);
  std::iota(result.shells.begin(), result.shells.end(), 1.0);
  return result;
}

double log_mse(const SpectrumResult& gt, const SpectrumResult& pred, double eps) {
  if (gt.shells != pred.shells) throw ConfigError("spectra have mismatched shells");
  const std::size_t k = gt.time_avg.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double d = std::log(gt.time_avg[i] + eps) - std::log(pred.time_avg[i] + eps);
    acc += d * d;
  }
  return acc / static_cast<double>(k);
}

double fit_loglog_slope(const SpectrumResult& spec, int k_min, int k_max) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < spec.shells.size(); ++i) {
    const int k = static_cast<int>(spec.shells[i]);
    if (k < k_min || k > k_max || spec.time_avg[i] <= 0.0) continue;
    const double x = std::log(static_cast<double>(k));
    const double y = std::log(spec.time_avg[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw ConfigError("not enough shells for a slope fit");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

void require_same_shape(const Frame& a, const Frame& b) {
  if (!a.grid.same_shape(b.grid) || a.channels.size() != b.channels.size()) {
    throw ConfigError("frames must share grid shape and channel count");
  }
}

}  // namespace

double mse(const Frame& pred, const Frame& gt) {
  require_same_shape(pred, gt);
  double total = 0.0;
  for (std::size_t c = 0; c < pred.channels.size(); ++c) {
    const auto& p = pred.channels[c].data;
    const auto& t = gt.channels[c].data;
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = p[i] - t[i];
      acc += d * d;
    }
    total += acc / static_cast<double>(p.size());
  }
  return total / static_cast<double>(pred.channels.size());
}

PccResult pcc(const Frame& pred, const Frame& gt) {
  require_same_shape(pred, gt);
  PccResult result;
  double total = 0.0;
  std::size_t valid = 0;
  for (std::size_t c = 0; c < pred.channels.size(); ++c) {
    const auto& p = pred.channels[c].data;
    const auto& t = gt.channels[c].data;
    const double n = static_cast<double>(p.size());
    const double mp = std::accumulate(p.begin(), p.end(), 0.0) / n;
    const double mt = std::accumulate(t.begin(), t.end(), 0.0) / n;
    double spp = 0.0, stt = 0.0, spt = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double dp = p[i] - mp;
      const double dt = t[i] - mt;
      spp += dp * dp;
      stt += dt * dt;
      spt += dp * dt;
    }
    if (spp <= 0.0 || stt <= 0.0) {
      result.degenerate = true;
      continue;
    }
    total += spt / std::sqrt(spp * stt);
    ++valid;
  }
  result.value = valid == 0 ? 0.0 : total / static_cast<double>(valid);
  return result;
}

double kl_hist_values(std::span<const double> gt, std::span<const double> pred, int bins) {
  if (bins < 2) throw ConfigError("KL needs at least 2 bins");
  if (gt.empty() || pred.empty()) throw ConfigError("empty inputs for KL");
  double lo = gt[0], hi = gt[0];
  for (double v : gt) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : pred) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) hi = lo + 1.0;  // all values identical: one occupied bin

  const double smoothing = 1e-10;
  std::vector<double> hg(bins, smoothing), hp(bins, smoothing);
  auto bin_of = [&](double v) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    return std::clamp(b, 0, bins - 1);
  };
  for (double v : gt) hg[bin_of(v)] += 1.0;
  for (double v : pred) hp[bin_of(v)] += 1.0;
  const double zg = std::accumulate(hg.begin(), hg.end(), 0.0);
  const double zp = std::accumulate(hp.begin(), hp.end(), 0.0);
  double kl = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double pg = hg[b] / zg;
    const double pp = hp[b] / zp;
    kl += pg * std::log(pg / pp);
  }
  return kl;
}

double kl_hist(const Frame& pred, const Frame& gt, int bins) {
  require_same_shape(pred, gt);
  double total = 0.0;
  for (std::size_t c = 0; c < pred.channels.size(); ++c) {
    total += kl_hist_values(gt.channels[c].data, pred.channels[c].data, bins);
  }
  return total / static_cast<double>(pred.channels.size());
}

MetricsReport sequence_metrics(const Sequence& pred, const Sequence& gt) {
  if (pred.frames.empty() || pred.frames.size() != gt.frames.size()) {
    throw ConfigError("sequences must have the same nonzero frame count");
  }
  MetricsReport report;
  for (std::size_t i = 0; i < pred.frames.size(); ++i) {
    report.mse_per_tau.push_back(mse(pred.frames[i], gt.frames[i]));
    const PccResult pr = pcc(pred.frames[i], gt.frames[i]);
    report.pcc_per_tau.push_back(pr.value);
    report.pcc_degenerate = report.pcc_degenerate || pr.degenerate;
    report.kl_per_tau.push_back(kl_hist(pred.frames[i], gt.frames[i]));
  }
  const double n = static_cast<double>(pred.frames.size());
  report.mse_avg = std::accumulate(report.mse_per_tau.begin(), report.mse_per_tau.end(), 0.0) / n;
  report.pcc_avg = std::accumulate(report.pcc_per_tau.begin(), report.pcc_per_tau.end(), 0.0) / n;
  report.kl_avg = std::accumulate(report.kl_per_tau.begin(), report.kl_per_tau.end(), 0.0) / n;
  return report;
}

namespace {

struct VelocityGradients {
  std::vector<double> ux, uy, vx, vy;
};

VelocityGradients velocity_gradients(const Frame& frame) {
  const Grid2& g = frame.grid;
  const auto& u = frame.channel("u");
  const auto& v = frame.channel("v");
  VelocityGradients out;
  const std::size_t n = u.size();
  out.ux.resize(n);
  out.uy.resize(n);
  out.vx.resize(n);
  out.vy.resize(n);
  auto wrap_x = [&](int i) {
    return g.boundary == Boundary::Periodic ? ((i % g.nx) + g.nx) % g.nx
                                            : std::clamp(i, 0, g.nx - 1);
  };
  auto wrap_y = [&](int j) {
    return g.boundary == Boundary::Periodic ? ((j % g.ny) + g.ny) % g.ny
                                            : std::clamp(j, 0, g.ny - 1);
  };
  const double cx = 1.0 / (2.0 * g.dx);
  const double cy = 1.0 / (2.0 * g.dy);
  for (int ix = 0; ix < g.nx; ++ix) {
    const std::size_t xp = static_cast<std::size_t>(wrap_x(ix + 1)) * g.ny;
    const std::size_t xm = static_cast<std::size_t>(wrap_x(ix - 1)) * g.ny;
    const std::size_t x0 = static_cast<std::size_t>(ix) * g.ny;
    for (int iy = 0; iy < g.ny; ++iy) {
      const int yp = wrap_y(iy + 1);
      const int ym = wrap_y(iy - 1);
      out.ux[x0 + iy] = cx * (u[xp + iy] - u[xm + iy]);
      out.vx[x0 + iy] = cx * (v[xp + iy] - v[xm + iy]);
      out.uy[x0 + iy] = cy * (u[x0 + yp] - u[x0 + ym]);
      out.vy[x0 + iy] = cy * (v[x0 + yp] - v[x0 + ym]);
    }
  }
  return out;
}

}  // namespace

std::vector<double> vorticity(const Frame& frame) {
  const VelocityGradients g = velocity_gradients(frame);
  std::vector<double> w(g.ux.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = g.vx[i] - g.uy[i];
  return w;
}

std::vector<double> q_criterion(const Frame& frame) {
  const VelocityGradients g = velocity_gradients(frame);
  std::vector<double> q(g.ux.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double omega = g.vx[i] - g.uy[i];
    const double shear = g.uy[i] + g.vx[i];
    // Omega:Omega = omega^2/2; D:D = ux^2 + vy^2 + shear^2/2.
    const double dd = g.ux[i] * g.ux[i] + g.vy[i] * g.vy[i] + 0.5 * shear * shear;
    q[i] = 0.5 * (0.5 * omega * omega - dd);
  }
  return q;
}

std::vector<double> velocity_magnitude_series(const Sequence& seq) {
  std::vector<double> out;
  const auto vel = seq.velocity_channels();
  if (vel.size() < 1) throw ConfigError("no velocity channels in sequence");
  for (const auto& frame : seq.frames) {
    double acc = 0.0;
    const std::size_t n = frame.channels.front().data.size();
    for (std::size_t i = 0; i < n; ++i) {
      double sq = 0.0;
      for (const auto& name : vel) {
        const double v = frame.channel(name)[i];
        sq += v * v;
      }
      acc += std::sqrt(sq);
    }
    out.push_back(acc / static_cast<double>(n));
  }
  return out;
}

void write_spectrum_csv(const SpectrumResult& spec, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError(IoError::Code::Os, "cannot open '" + path + "' for writing");
  os << "kappa,energy\n";
  os.precision(17);
  for (std::size_t i = 0; i < spec.shells.size(); ++i) {
    os << spec.shells[i] << "," << spec.time_avg[i] << "\n";
  }
}

void write_metrics_report(const MetricsReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError(IoError::Code::Os, "cannot open '" + path + "' for writing");
  os.precision(17);
  os << "mse_avg=" << report.mse_avg << "\n";
  os << "pcc_avg=" << report.pcc_avg << "\n";
  os << "kl_avg=" << report.kl_avg << "\n";
  os << "pcc_degenerate=" << (report.pcc_degenerate ? "true" : "false") << "\n";
  for (std::size_t i = 0; i < report.mse_per_tau.size(); ++i) {
    os << "mse_tau_" << i << "=" << report.mse_per_tau[i] << "\n";
    os << "pcc_tau_" << i << "=" << report.pcc_per_tau[i] << "\n";
    os << "kl_tau_" << i << "=" << report.kl_per_tau[i] << "\n";
  }
}

}  // namespace scoreflow
