#include "scoreflow/generators.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <numeric>

#include "scoreflow/rng.hpp"

namespace scoreflow {

std::vector<double> make_gaussian_mixture_dataset(const std::vector<double>& weights,
                                                  const std::vector<double>& means,
                                                  const std::vector<double>& stds,
                                                  int n_samples, std::uint64_t seed) {
  if (weights.empty() || weights.size() != means.size() || weights.size() != stds.size()) {
    throw ConfigError("mixture weights/means/stds must have equal nonzero length");
  }
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(wsum - 1.0) > 1e-9) {
    throw ConfigError("mixture weights must sum to 1");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("mixture weights must be nonnegative");
  }
  for (double s : stds) {
    if (!(s > 0.0)) throw ConfigError("mixture stds must be positive");
  }
  if (n_samples < 1) throw ConfigError("n_samples must be positive");

  Rng rng(seed);
  std::vector<double> samples(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double u = rng.uniform();
    std::size_t comp = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      acc += weights[k];
      if (u < acc) {
        comp = k;
        break;
      }
      comp = k;
    }
    samples[i] = means[comp] + stds[comp] * rng.normal();
  }
  return samples;
}

namespace {

// Periodic bilinear resample of `src` shifted by (sx, sy) cells.
std::vector<double> shift_periodic(const std::vector<double>& src, int nx, int ny,
                                   double sx, double sy) {
  std::vector<double> out(src.size());
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  const double ax = sx - fx;
  const double ay = sy - fy;
  const int ix0 = static_cast<int>(fx);
  const int iy0 = static_cast<int>(fy);
  auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
  for (int ix = 0; ix < nx; ++ix) {
    // value(ix) = field advected by s: sample source at ix - s
    const int jx0 = wrap(ix - ix0 - 1, nx);
    const int jx1 = wrap(ix - ix0, nx);
    for (int iy = 0; iy < ny; ++iy) {
      const int jy0 = wrap(iy - iy0 - 1, ny);
      const int jy1 = wrap(iy - iy0, ny);
      const double v00 = src[static_cast<std::size_t>(jx0) * ny + jy0];
      const double v01 = src[static_cast<std::size_t>(jx0) * ny + jy1];
      const double v10 = src[static_cast<std::size_t>(jx1) * ny + jy0];
      const double v11 = src[static_cast<std::size_t>(jx1) * ny + jy1];
      out[static_cast<std::size_t>(ix) * ny + iy] =
          ax * (ay * v00 + (1.0 - ay) * v01) + (1.0 - ax) * (ay * v10 + (1.0 - ay) * v11);
    }
  }
  return out;
}

// Smooth periodic bump centered at (cx, cy) in cell units.
double periodic_bump(double x, double y, double cx, double cy, int nx, int ny,
                     double width) {
  const double px = std::sin(M_PI * (x - cx) / nx);
  const double py = std::sin(M_PI * (y - cy) / ny);
  const double d2 = px * px * nx * nx + py * py * ny * ny;
  return std::exp(-d2 / (2.0 * M_PI * M_PI * width * width));
}

}  // namespace

Sequence make_advected_blob_sequence(const Grid2& grid, double cx, double cy,
                                     int n_steps, std::uint64_t seed, double noise_amp) {
  grid.validate();
  if (grid.boundary != Boundary::Periodic) {
    throw ConfigError("advected blob sequence requires a periodic grid");
  }
  if (n_steps < 1) throw ConfigError("n_steps must be positive");

  Rng rng(seed);
  Sequence seq;
  seq.metadata["velocity_channels"] = "u,v";
  seq.metadata["cx"] = std::to_string(cx);
  seq.metadata["cy"] = std::to_string(cy);

  Frame frame = make_frame(grid, {"u", "v"}, 0);
  for (int ix = 0; ix < grid.nx; ++ix) {
    for (int iy = 0; iy < grid.ny; ++iy) {
      frame.at(0, ix, iy) =
          periodic_bump(ix, iy, 0.3 * grid.nx, 0.4 * grid.ny, grid.nx, grid.ny, 2.5);
      frame.at(1, ix, iy) =
          0.6 * periodic_bump(ix, iy, 0.7 * grid.nx, 0.6 * grid.ny, grid.nx, grid.ny, 3.0);
    }
  }
  seq.frames.push_back(frame);

  // Shift per step is in cells: (cx dt / dx, cy dt / dy) with dt = 1.
  const double sx = cx / grid.dx;
  const double sy = cy / grid.dy;
  for (int step = 1; step <= n_steps; ++step) {
    Frame next = seq.frames.back();
    next.tau = step;
    for (auto& chan : next.channels) {
      chan.data = shift_periodic(chan.data, grid.nx, grid.ny, sx, sy);
      if (noise_amp > 0.0) {
        for (double& v : chan.data) v += noise_amp * rng.normal();
      }
    }
    seq.frames.push_back(std::move(next));
  }
  return seq;
}

Frame make_spectral_field(const Grid2& grid, double slope, int k_min, int k_max,
                          std::uint64_t seed) {
  grid.validate();
  if (grid.boundary != Boundary::Periodic) {
    throw ConfigError("spectral field requires a periodic grid");
  }
  const int nyquist = std::min(grid.nx, grid.ny) / 2;
  if (k_min < 1 || k_min >= k_max || k_max > nyquist) {
    throw ConfigError("shell range must satisfy 1 <= k_min < k_max <= Nyquist shell");
  }

  const int nx = grid.nx;
  const int ny = grid.ny;
  auto signed_freq = [](int i, int n) { return i <= n / 2 ? i : i - n; };

  // Count populated modes per shell; Nyquist-column modes are skipped because
  // the central-difference operator cannot see them.
  std::vector<int> shell_count(k_max + 1, 0);
  auto shell_of = [&](int fx, int fy) {
    return static_cast<int>(std::floor(std::hypot(fx, fy) + 0.5));
  };
  auto populated = [&](int fx, int fy) {
    if (std::abs(fx) * 2 == nx || std::abs(fy) * 2 == ny) return false;
    const int k = shell_of(fx, fy);
    return k >= k_min && k <= k_max;
  };
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const int fx = signed_freq(i, nx);
      const int fy = signed_freq(j, ny);
      if (populated(fx, fy)) ++shell_count[shell_of(fx, fy)];
    }
  }

  std::vector<std::complex<double>> uc(static_cast<std::size_t>(nx) * ny, 0.0);
  std::vector<std::complex<double>> vc(static_cast<std::size_t>(nx) * ny, 0.0);
  Rng rng(seed);
  const double cells = static_cast<double>(nx) * ny;

  for (int i = 0; i < nx; ++i) {
    const int fx = signed_freq(i, nx);
    for (int j = 0; j < ny; ++j) {
      const int fy = signed_freq(j, ny);
      // Populate each conjugate pair once from its canonical half.
      const bool canonical = (fy > 0) || (fy == 0 && fx > 0);
      if (!canonical || !populated(fx, fy)) continue;
      const int k = shell_of(fx, fy);
      // Shell spectrum E(k) = k^slope exactly: each mode carries an equal
      // share of 2 (nx ny)^2 k^slope / N_k (the 1/2 and 1/(nx ny)^2 of the
      // spectrum definition cancel against this).
      const double amp2 = 2.0 * cells * cells * std::pow(static_cast<double>(k), slope) /
                          shell_count[k];
      const double amp = std::sqrt(amp2);
      const double phase = 2.0 * M_PI * rng.uniform();
      // Polarization orthogonal to the central-difference divergence symbol.
      const double sx_sym = std::sin(2.0 * M_PI * fx / nx) / grid.dx;
      const double sy_sym = std::sin(2.0 * M_PI * fy / ny) / grid.dy;
      const double norm = std::hypot(sx_sym, sy_sym);
      double px = 0.0, py = 0.0;
      if (norm > 0.0) {
        px = -sy_sym / norm;
        py = sx_sym / norm;
      } else {
        px = 1.0;  // unreachable for populated modes below Nyquist
      }
      const std::complex<double> c = amp * std::polar(1.0, phase);
      const std::size_t idx = static_cast<std::size_t>(i) * ny + j;
      uc[idx] = px * c;
      vc[idx] = py * c;
      // Hermitian mirror.
      const int mi = (nx - i) % nx;
      const int mj = (ny - j) % ny;
      const std::size_t midx = static_cast<std::size_t>(mi) * ny + mj;
      uc[midx] = std::conj(uc[idx]);
      vc[midx] = std::conj(vc[idx]);
    }
  }

  // Inverse transform with the 1/(nx ny) normalization applied here, so the
  // analysis convention (forward unnormalized) recovers the assigned powers.
  Frame frame = make_frame(grid, {"u", "v"}, 0);
  std::vector<std::complex<double>> work(uc.size());
  for (int comp = 0; comp < 2; ++comp) {
    auto& spec_data = comp == 0 ? uc : vc;
    fftw_plan plan = fftw_plan_dft_2d(
        nx, ny, reinterpret_cast<fftw_complex*>(spec_data.data()),
        reinterpret_cast<fftw_complex*>(work.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    auto& out = frame.channels[comp].data;
    for (std::size_t n = 0; n < work.size(); ++n) out[n] = work[n].real() / cells;
  }
  return frame;
}

}  // namespace scoreflow
