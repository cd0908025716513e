#include "scoreflow/ftle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <thread>

namespace scoreflow {

FlowField FlowField::analytic(VelocityFn fn) {
  FlowField f;
  f.fn_ = std::move(fn);
  return f;
}

FlowField FlowField::uniform(double cx, double cy) {
  return analytic([cx, cy](double, double, double) { return std::array<double, 2>{cx, cy}; });
}

FlowField FlowField::rotation(double omega) {
  return analytic([omega](double x, double y, double) {
    return std::array<double, 2>{-omega * y, omega * x};
  });
}

FlowField FlowField::saddle(double a) {
  return analytic([a](double x, double y, double) {
    return std::array<double, 2>{a * x, -a * y};
  });
}

FlowField FlowField::double_gyre(double amplitude, double eps, double omega) {
  return analytic([amplitude, eps, omega](double x, double y, double tau) {
    const double at = eps * std::sin(omega * tau);
    const double bt = 1.0 - 2.0 * eps * std::sin(omega * tau);
    const double f = at * x * x + bt * x;
    const double dfdx = 2.0 * at * x + bt;
    const double u = -M_PI * amplitude * std::sin(M_PI * f) * std::cos(M_PI * y);
    const double v = M_PI * amplitude * std::cos(M_PI * f) * std::sin(M_PI * y) * dfdx;
    return std::array<double, 2>{u, v};
  });
}

FlowField FlowField::builtin(const std::string& name) {
  if (name == "uniform") return uniform(1.0, 0.5);
  if (name == "rotation") return rotation(1.0);
  if (name == "saddle") return saddle(0.5);
  if (name == "double-gyre") return double_gyre(0.1, 0.25, 2.0 * M_PI / 10.0);
  throw ConfigError("unknown builtin flow '" + name + "'", "flow");
}

FlowField FlowField::from_sequence(const Sequence& seq) {
  seq.validate();
  const auto vel = seq.velocity_channels();
  if (vel.size() != 2) throw ConfigError("sequence flow needs 2 velocity channels");
  // Copy what the interpolator needs; flows outlive the caller's Sequence.
  struct Data {
    Grid2 grid;
    std::vector<std::int64_t> taus;
    std::vector<std::vector<double>> u, v;
  };
  auto data = std::make_shared<Data>();
  data->grid = seq.frames.front().grid;
  for (const auto& f : seq.frames) {
    data->taus.push_back(f.tau);
    data->u.push_back(f.channel(vel[0]));
    data->v.push_back(f.channel(vel[1]));
  }

  auto sample_frame = [data](const std::vector<double>& field, double x, double y) {
    const Grid2& g = data->grid;
    double fx = x / g.dx;
    double fy = y / g.dy;
    if (g.boundary == Boundary::Periodic) {
      fx = fx - std::floor(fx / g.nx) * g.nx;
      fy = fy - std::floor(fy / g.ny) * g.ny;
    } else {
      fx = std::clamp(fx, 0.0, static_cast<double>(g.nx - 1));
      fy = std::clamp(fy, 0.0, static_cast<double>(g.ny - 1));
    }
    const int ix = std::min(static_cast<int>(fx), g.nx - 1);
    const int iy = std::min(static_cast<int>(fy), g.ny - 1);
    const double ax = fx - ix;
    const double ay = fy - iy;
    auto wrap_x = [&](int i) {
      return g.boundary == Boundary::Periodic ? i % g.nx : std::min(i, g.nx - 1);
    };
    auto wrap_y = [&](int j) {
      return g.boundary == Boundary::Periodic ? j % g.ny : std::min(j, g.ny - 1);
    };
    const int ix1 = wrap_x(ix + 1);
    const int iy1 = wrap_y(iy + 1);
    const double v00 = field[static_cast<std::size_t>(ix) * g.ny + iy];
    const double v01 = field[static_cast<std::size_t>(ix) * g.ny + iy1];
    const double v10 = field[static_cast<std::size_t>(ix1) * g.ny + iy];
    const double v11 = field[static_cast<std::size_t>(ix1) * g.ny + iy1];
    return (1.0 - ax) * ((1.0 - ay) * v00 + ay * v01) + ax * ((1.0 - ay) * v10 + ay * v11);
  };

  return analytic([data, sample_frame](double x, double y, double tau) {
    const auto& taus = data->taus;
    // Linear interpolation in tau, clamped to the covered range.
    std::size_t hi = 0;
    while (hi + 1 < taus.size() && static_cast<double>(taus[hi + 1]) < tau) ++hi;
    std::size_t lo = hi;
    if (hi + 1 < taus.size()) hi = hi + 1;
    double w = 0.0;
    if (hi != lo) {
      w = (tau - static_cast<double>(taus[lo])) /
          (static_cast<double>(taus[hi]) - static_cast<double>(taus[lo]));
      w = std::clamp(w, 0.0, 1.0);
    }
    const double u = (1.0 - w) * sample_frame(data->u[lo], x, y) +
                     w * sample_frame(data->u[hi], x, y);
    const double v = (1.0 - w) * sample_frame(data->v[lo], x, y) +
                     w * sample_frame(data->v[hi], x, y);
    return std::array<double, 2>{u, v};
  });
}

std::array<double, 2> FlowField::velocity(double x, double y, double tau) const {
  return fn_(x, y, tau);
}

std::vector<std::array<double, 2>> advect(const FlowField& flow,
                                          const std::vector<std::array<double, 2>>& seeds,
                                          double tau0, double dtau, int steps) {
  if (steps < 1) throw ConfigError("advection needs steps >= 1");
  std::vector<std::array<double, 2>> pos = seeds;
  const double h = dtau / steps;
  for (std::size_t s = 0; s < pos.size(); ++s) {
    double x = pos[s][0];
    double y = pos[s][1];
    double t = tau0;
    for (int i = 0; i < steps; ++i) {
      const auto k1 = flow.velocity(x, y, t);
      const auto k2 = flow.velocity(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1], t + 0.5 * h);
      const auto k3 = flow.velocity(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1], t + 0.5 * h);
      const auto k4 = flow.velocity(x + h * k3[0], y + h * k3[1], t + h);
      x += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
      y += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
      t += h;
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw NumericError("particle advection diverged at seed " + std::to_string(s),
                         static_cast<long>(s));
    }
    pos[s] = {x, y};
  }
  return pos;
}

std::vector<std::array<double, 2>> SeedGrid::points() const {
  std::vector<std::array<double, 2>> pts;
  pts.reserve(static_cast<std::size_t>(nx) * ny);
  for (int i = 0; i < nx; ++i) {
    const double x = nx == 1 ? x0 : x0 + (x1 - x0) * i / (nx - 1);
    for (int j = 0; j < ny; ++j) {
      const double y = ny == 1 ? y0 : y0 + (y1 - y0) * j / (ny - 1);
      pts.push_back({x, y});
    }
  }
  return pts;
}

FtleField ftle_field(const FlowField& flow, const SeedGrid& grid, double tau0,
                     double dtau, double h_fd, int steps, int threads) {
  if (!(h_fd > 0.0)) throw ConfigError("h_fd must be positive");
  if (dtau == 0.0) throw ConfigError("dtau must be nonzero");
  FtleField field;
  field.grid = grid;
  field.tau0 = tau0;
  field.dtau = dtau;
  const std::size_t n = static_cast<std::size_t>(grid.nx) * grid.ny;
  field.chi.assign(n, 0.0);
  field.valid.assign(n, 1);

  const auto centers = grid.points();
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const double x = centers[p][0];
      const double y = centers[p][1];
      // Auxiliary stencil: 4 neighbors at +-h_fd.
      std::vector<std::array<double, 2>> stencil = {
          {x + h_fd, y}, {x - h_fd, y}, {x, y + h_fd}, {x, y - h_fd}};
      const auto adv = advect(flow, stencil, tau0, dtau, steps);
      const double f11 = (adv[0][0] - adv[1][0]) / (2.0 * h_fd);
      const double f21 = (adv[0][1] - adv[1][1]) / (2.0 * h_fd);
      const double f12 = (adv[2][0] - adv[3][0]) / (2.0 * h_fd);
      const double f22 = (adv[2][1] - adv[3][1]) / (2.0 * h_fd);
      // Cauchy-Green C = F^T F, closed-form largest eigenvalue of the
      // symmetric 2x2 matrix.
      const double c11 = f11 * f11 + f21 * f21;
      const double c12 = f11 * f12 + f21 * f22;
      const double c22 = f12 * f12 + f22 * f22;
      const double mean = 0.5 * (c11 + c22);
      const double disc = std::sqrt(0.25 * (c11 - c22) * (c11 - c22) + c12 * c12);
      const double lambda_max = mean + disc;
      if (!std::isfinite(lambda_max) || lambda_max <= 0.0) {
        field.valid[p] = 0;
        field.chi[p] = 0.0;
        continue;
      }
      field.chi[p] = std::log(lambda_max) / (2.0 * std::abs(dtau));
    }
  };

  threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (threads == 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return field;
}

std::vector<double> FtleField::lyapunov_time() const {
  std::vector<double> out(chi.size());
  for (std::size_t i = 0; i < chi.size(); ++i) {
    out[i] = chi[i] > 0.0 ? 1.0 / chi[i] : std::numeric_limits<double>::infinity();
  }
  return out;
}

GlobalLyapunov global_lyapunov_time(const FtleField& field) {
  GlobalLyapunov g;
  for (std::size_t i = 0; i < field.chi.size(); ++i) {
    if (field.valid[i] && field.chi[i] > g.max_chi) g.max_chi = field.chi[i];
  }
  if (g.max_chi > 0.0) {
    g.chaotic = true;
    g.tau_l = 1.0 / g.max_chi;
  } else {
    g.tau_l = std::numeric_limits<double>::infinity();
  }
  return g;
}

void write_ftle_csv(const FtleField& field, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError(IoError::Code::Os, "cannot open '" + path + "' for writing");
  os << "x,y,chi,lyapunov_time\n";
  os.precision(17);
  const auto pts = field.grid.points();
  const auto tl = field.lyapunov_time();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    os << pts[i][0] << "," << pts[i][1] << "," << field.chi[i] << "," << tl[i] << "\n";
  }
}

}  // namespace scoreflow
