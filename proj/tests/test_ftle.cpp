#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "scoreflow/ftle.hpp"
#include "scoreflow/generators.hpp"

using namespace scoreflow;

TEST_CASE("advection") {
  SUBCASE("zero velocity leaves positions unchanged") {
    const FlowField flow = FlowField::uniform(0.0, 0.0);
    const std::vector<std::array<double, 2>> seeds = {{0.3, 0.7}, {-1.0, 2.0}};
    const auto out = advect(flow, seeds, 0.0, 5.0, 20);
    CHECK(out[0][0] == 0.3);
    CHECK(out[0][1] == 0.7);
    CHECK(out[1][0] == -1.0);
  }

  SUBCASE("uniform velocity is exact for RK4") {
    const FlowField flow = FlowField::uniform(1.5, -0.5);
    const auto out = advect(flow, {{0.0, 0.0}}, 0.0, 2.0, 7);
    CHECK(out[0][0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(out[0][1] == doctest::Approx(-1.0).epsilon(1e-14));
  }

  SUBCASE("rotation closes the circle after 2 pi") {
    const FlowField flow = FlowField::rotation(1.0);
    const auto out = advect(flow, {{1.0, 0.0}}, 0.0, 2.0 * M_PI, 100);
    CHECK(std::abs(out[0][0] - 1.0) < 1e-6);
    CHECK(std::abs(out[0][1]) < 1e-6);
  }

  SUBCASE("backward advection works with negative dtau") {
    const FlowField flow = FlowField::uniform(2.0, 0.0);
    const auto out = advect(flow, {{0.0, 0.0}}, 1.0, -1.0, 10);
    CHECK(out[0][0] == doctest::Approx(-2.0).epsilon(1e-14));
  }
}

TEST_CASE("ftle fields on analytic flows") {
  SeedGrid grid;
  grid.x0 = -1.0;
  grid.x1 = 1.0;
  grid.y0 = -1.0;
  grid.y1 = 1.0;
  grid.nx = 9;
  grid.ny = 9;

  SUBCASE("rigid motions have chi <= 1e-4") {
    for (const FlowField& flow :
         {FlowField::uniform(1.0, 0.5), FlowField::rotation(0.8)}) {
      const FtleField f = ftle_field(flow, grid, 0.0, 2.0, 1e-4, 100);
      for (double chi : f.chi) CHECK(std::abs(chi) <= 1e-4);
    }
  }

  SUBCASE("saddle flow recovers chi = a within 2% for three (a, dtau) pairs") {
    for (const auto& [a, dtau] : std::vector<std::pair<double, double>>{
             {0.25, 4.0}, {0.5, 2.0}, {1.0, 1.0}}) {
      const FtleField f = ftle_field(FlowField::saddle(a), grid, 0.0, dtau, 1e-5, 200);
      for (double chi : f.chi) CHECK(chi == doctest::Approx(a).epsilon(0.02));
    }
  }

  SUBCASE("chi is invariant under dtau -> -dtau for the linear saddle") {
    const FtleField fwd = ftle_field(FlowField::saddle(0.5), grid, 0.0, 2.0, 1e-5, 200);
    const FtleField bwd = ftle_field(FlowField::saddle(0.5), grid, 0.0, -2.0, 1e-5, 200);
    for (std::size_t i = 0; i < fwd.chi.size(); ++i) {
      CHECK(fwd.chi[i] == doctest::Approx(bwd.chi[i]).epsilon(1e-6));
    }
  }

  SUBCASE("lyapunov time identity tau_L * chi = 1 where chi > 0") {
    const FtleField f = ftle_field(FlowField::saddle(0.5), grid, 0.0, 2.0, 1e-5, 200);
    const auto tl = f.lyapunov_time();
    for (std::size_t i = 0; i < f.chi.size(); ++i) {
      if (f.chi[i] > 0.0) CHECK(tl[i] * f.chi[i] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("global lyapunov time") {
  SeedGrid grid;
  grid.x0 = -1.0;
  grid.x1 = 1.0;
  grid.y0 = -1.0;
  grid.y1 = 1.0;
  grid.nx = 8;
  grid.ny = 8;

  SUBCASE("saddle a = 0.5 gives tau_L = 2 within 2%") {
    const FtleField f = ftle_field(FlowField::saddle(0.5), grid, 0.0, 2.0, 1e-5, 200);
    const GlobalLyapunov g = global_lyapunov_time(f);
    CHECK(g.chaotic);
    CHECK(g.tau_l == doctest::Approx(2.0).epsilon(0.02));
  }

  SUBCASE("uniform flow reports no chaotic stretching") {
    const FtleField f = ftle_field(FlowField::uniform(1.0, 0.0), grid, 0.0, 2.0, 1e-4, 50);
    const GlobalLyapunov g = global_lyapunov_time(f);
    CHECK_FALSE(g.chaotic);
    CHECK(std::isinf(g.tau_l));
  }
}

TEST_CASE("double gyre ridge location is resolution-stable") {
  const FlowField flow = FlowField::builtin("double-gyre");
  auto run = [&](int nx, int ny) {
    SeedGrid grid;
    grid.x0 = 0.0;
    grid.x1 = 2.0;
    grid.y0 = 0.0;
    grid.y1 = 1.0;
    grid.nx = nx;
    grid.ny = ny;
    const FtleField f = ftle_field(flow, grid, 0.0, 15.0, 1e-4, 150, 2);
    const auto pts = grid.points();
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.chi.size(); ++i) {
      if (f.chi[i] > f.chi[best]) best = i;
    }
    return pts[best];
  };
  const auto coarse = run(33, 17);
  const auto fine = run(65, 33);
  const double cell_x = 2.0 / 32.0;
  const double cell_y = 1.0 / 16.0;
  CHECK(std::abs(coarse[0] - fine[0]) < cell_x);
  CHECK(std::abs(coarse[1] - fine[1]) < cell_y);
}

TEST_CASE("sequence-driven flows interpolate in space and time") {
  Grid2 g{16, 16, 1.0, 1.0, Boundary::Periodic};
  Sequence seq;
  seq.metadata["velocity_channels"] = "u,v";
  // Uniform velocity growing linearly in tau: u = 1 + tau, v = 0.5.
  for (int tau = 0; tau < 3; ++tau) {
    Frame f = make_frame(g, {"u", "v"}, tau);
    std::fill(f.channels[0].data.begin(), f.channels[0].data.end(), 1.0 + tau);
    std::fill(f.channels[1].data.begin(), f.channels[1].data.end(), 0.5);
    seq.frames.push_back(f);
  }
  const FlowField flow = FlowField::from_sequence(seq);
  const auto v0 = flow.velocity(3.2, 4.7, 0.0);
  CHECK(v0[0] == doctest::Approx(1.0));
  CHECK(v0[1] == doctest::Approx(0.5));
  const auto vh = flow.velocity(3.2, 4.7, 0.5);
  CHECK(vh[0] == doctest::Approx(1.5));
  // RK4 on u = 1 + tau from tau=0 to 2: displacement = 2 + 2 = 4 (polynomial
  // in t, exact for RK4).
  const auto out = advect(flow, {{2.0, 2.0}}, 0.0, 2.0, 50);
  CHECK(out[0][0] == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(out[0][1] == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("builtin flow lookup") {
  CHECK_NOTHROW(FlowField::builtin("uniform"));
  CHECK_NOTHROW(FlowField::builtin("rotation"));
  CHECK_NOTHROW(FlowField::builtin("saddle"));
  CHECK_NOTHROW(FlowField::builtin("double-gyre"));
  CHECK_THROWS_AS(FlowField::builtin("vortex-street"), ConfigError);
}
