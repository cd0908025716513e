#include "scoreflow/pm_filter.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace scoreflow {

void PmConfig::validate() const {
  if (!(gamma > 0.0) || !(eta > 0.0) || !(epsilon > 0.0) || n_iters < 1) {
    throw ConfigError("pm filter requires gamma, eta, epsilon > 0 and n_iters >= 1");
  }
  if (eta > 0.25) {
    std::cerr << "[pm_filter] warning: eta=" << eta
              << " exceeds the explicit-diffusion stability bound 0.25\n";
  }
}

namespace {

struct Wrap {
  const Grid2* g;
  int x(int i) const {
    return g->boundary == Boundary::Periodic ? ((i % g->nx) + g->nx) % g->nx
                                             : std::clamp(i, 0, g->nx - 1);
  }
  int y(int j) const {
    return g->boundary == Boundary::Periodic ? ((j % g->ny) + g->ny) % g->ny
                                             : std::clamp(j, 0, g->ny - 1);
  }
};

}  // namespace

void pm_filter_channel(std::vector<double>& data, const Grid2& grid, const PmConfig& cfg) {
  const Wrap w{&grid};
  const int nx = grid.nx;
  const int ny = grid.ny;
  const std::size_t n = data.size();
  std::vector<double> jx(n), jy(n), div(n);

  for (int iter = 0; iter < cfg.n_iters; ++iter) {
    for (int ix = 0; ix < nx; ++ix) {
      const std::size_t xp = static_cast<std::size_t>(w.x(ix + 1)) * ny;
      const std::size_t xm = static_cast<std::size_t>(w.x(ix - 1)) * ny;
      const std::size_t x0 = static_cast<std::size_t>(ix) * ny;
      for (int iy = 0; iy < ny; ++iy) {
        const int yp = w.y(iy + 1);
        const int ym = w.y(iy - 1);
        const double gx = 0.5 * (data[xp + iy] - data[xm + iy]);
        const double gy = 0.5 * (data[x0 + yp] - data[x0 + ym]);
        const double grad_norm = std::sqrt(gx * gx + gy * gy + cfg.epsilon);
        const double ratio = grad_norm / cfg.gamma;
        const double d = 1.0 / (1.0 + ratio * ratio);
        jx[x0 + iy] = d * gx;
        jy[x0 + iy] = d * gy;
      }
    }
    for (int ix = 0; ix < nx; ++ix) {
      const std::size_t xp = static_cast<std::size_t>(w.x(ix + 1)) * ny;
      const std::size_t xm = static_cast<std::size_t>(w.x(ix - 1)) * ny;
      const std::size_t x0 = static_cast<std::size_t>(ix) * ny;
      for (int iy = 0; iy < ny; ++iy) {
        const int yp = w.y(iy + 1);
        const int ym = w.y(iy - 1);
        div[x0 + iy] = 0.5 * (jx[xp + iy] - jx[xm + iy]) + 0.5 * (jy[x0 + yp] - jy[x0 + ym]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) data[i] += cfg.eta * div[i];
  }
}

Frame pm_filter(const Frame& frame, const std::vector<std::string>& channels,
                const PmConfig& cfg) {
  cfg.validate();
  Frame out = frame;
  for (const auto& name : channels) {
    pm_filter_channel(out.channel(name), out.grid, cfg);
  }
  return out;
}

double edge_retention(const std::vector<double>& original,
                      const std::vector<double>& filtered, const Grid2& grid) {
  const Wrap w{&grid};
  auto max_grad = [&](const std::vector<double>& f) {
    double m = 0.0;
    for (int ix = 0; ix < grid.nx; ++ix) {
      const std::size_t xp = static_cast<std::size_t>(w.x(ix + 1)) * grid.ny;
      const std::size_t xm = static_cast<std::size_t>(w.x(ix - 1)) * grid.ny;
      const std::size_t x0 = static_cast<std::size_t>(ix) * grid.ny;
      for (int iy = 0; iy < grid.ny; ++iy) {
        const int yp = w.y(iy + 1);
        const int ym = w.y(iy - 1);
        const double gx = 0.5 * (f[xp + iy] - f[xm + iy]);
        const double gy = 0.5 * (f[x0 + yp] - f[x0 + ym]);
        m = std::max(m, std::sqrt(gx * gx + gy * gy));
      }
    }
    return m;
  };
  const double before = max_grad(original);
  if (before == 0.0) throw ConfigError("edge retention needs a nonconstant original");
  return max_grad(filtered) / before;
}

}  // namespace scoreflow
