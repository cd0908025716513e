#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "scoreflow/field.hpp"

namespace scoreflow {

// Velocity field for particle advection: either an analytic function of
// (x, y, tau) or a Sequence with bilinear space / linear time interpolation.
// Lookups wrap (periodic) or clamp (replicate); integrated positions stay
// unbounded so position differences remain meaningful.
class FlowField {
 public:
  using VelocityFn = std::function<std::array<double, 2>(double x, double y, double tau)>;

  static FlowField analytic(VelocityFn fn);
  static FlowField from_sequence(const Sequence& seq);

  // Builtin analytic flows: "uniform" (1, 0.5), "rotation" (unit angular
  // velocity), "saddle" (a = 0.5), "double-gyre" (A=0.1, eps=0.25,
  // omega=2*pi/10 on [0,2]x[0,1]).
  static FlowField builtin(const std::string& name);

  static FlowField uniform(double cx, double cy);
  static FlowField rotation(double omega);
  static FlowField saddle(double a);
  static FlowField double_gyre(double amplitude, double eps, double omega);

  std::array<double, 2> velocity(double x, double y, double tau) const;

 private:
  FlowField() = default;
  VelocityFn fn_;
};

// Classical RK4 particle advection from tau0 over dtau (either sign) in
// `steps` substeps. Throws NumericError naming the seed index when a
// particle turns non-finite.
std::vector<std::array<double, 2>> advect(const FlowField& flow,
                                          const std::vector<std::array<double, 2>>& seeds,
                                          double tau0, double dtau, int steps);

struct SeedGrid {
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
  int nx = 32, ny = 32;

  std::vector<std::array<double, 2>> points() const;
};

// Finite-time Lyapunov exponents chi = log(lambda_max(F^T F)) / (2 |dtau|)
// with F from central differences of 4 auxiliary seeds at +-h_fd per point.
struct FtleField {
  SeedGrid grid;
  double tau0 = 0.0;
  double dtau = 0.0;
  std::vector<double> chi;       // grid.nx * grid.ny, x-major
  std::vector<char> valid;       // 0 where C degenerated

  // Per-point Lyapunov time 1/chi; +inf where chi <= 0.
  std::vector<double> lyapunov_time() const;
};

FtleField ftle_field(const FlowField& flow, const SeedGrid& grid, double tau0,
                     double dtau, double h_fd, int steps, int threads = 1);

struct GlobalLyapunov {
  double tau_l = 0.0;
  double max_chi = 0.0;
  bool chaotic = false;  // false: no positive stretching anywhere
};

GlobalLyapunov global_lyapunov_time(const FtleField& field);

void write_ftle_csv(const FtleField& field, const std::string& path);

}  // namespace scoreflow
