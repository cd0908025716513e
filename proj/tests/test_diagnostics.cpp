#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "scoreflow/diagnostics.hpp"
#include "scoreflow/field.hpp"
#include "scoreflow/rng.hpp"

using namespace scoreflow;

namespace {

Frame velocity_frame(const Grid2& g, std::int64_t tau = 0) {
  return make_frame(g, {"u", "v"}, tau);
}

Frame random_velocity_frame(const Grid2& g, std::uint64_t seed) {
  Frame f = velocity_frame(g);
  Rng rng(seed);
  for (auto& c : f.channels) {
    for (auto& v : c.data) v = rng.normal();
  }
  return f;
}

double spatial_mean_sq_fluct(const Frame& f) {
  double acc = 0.0;
  for (const auto& c : f.channels) {
    const double mean =
        std::accumulate(c.data.begin(), c.data.end(), 0.0) / c.data.size();
    for (double v : c.data) acc += (v - mean) * (v - mean);
  }
  return acc / f.grid.cells();
}

}  // namespace

TEST_CASE("energy spectrum") {
  Grid2 g{64, 64, 1.0, 1.0, Boundary::Periodic};

  SUBCASE("single mode puts all energy in its shell, total = A^2/4") {
    const double amp = 0.8;
    const int k0 = 5;
    Frame f = velocity_frame(g);
    for (int ix = 0; ix < g.nx; ++ix) {
      for (int iy = 0; iy < g.ny; ++iy) {
        f.at(0, ix, iy) = amp * std::sin(2.0 * M_PI * k0 * ix / g.nx);
      }
    }
    const SpectrumResult spec = energy_spectrum_frame(f, {"u", "v"});
    for (std::size_t i = 0; i < spec.shells.size(); ++i) {
      if (static_cast<int>(spec.shells[i]) == k0) {
        CHECK(spec.time_avg[i] == doctest::Approx(amp * amp / 4.0).epsilon(1e-10));
      } else {
        CHECK(std::abs(spec.time_avg[i]) < 1e-12);
      }
    }
    CHECK(spec.total_energy() == doctest::Approx(amp * amp / 4.0).epsilon(1e-10));
  }

  SUBCASE("zero field gives all-zero shells") {
    const Frame f = velocity_frame(g);
    const SpectrumResult spec = energy_spectrum_frame(f, {"u", "v"});
    for (double e : spec.time_avg) CHECK(e == 0.0);
  }

  SUBCASE("Parseval: shell sum equals half the mean squared fluctuation") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      const Frame f = random_velocity_frame(g, seed);
      const SpectrumResult spec = energy_spectrum_frame(f, {"u", "v"});
      const double direct = 0.5 * spatial_mean_sq_fluct(f);
      CHECK(spec.total_energy() == doctest::Approx(direct).epsilon(0.01));
    }
  }

  SUBCASE("rectangular grids are supported") {
    Grid2 r{48, 24, 1.0, 1.0, Boundary::Periodic};
    const Frame f = random_velocity_frame(r, 4);
    const SpectrumResult spec = energy_spectrum_frame(f, {"u", "v"});
    const double direct = 0.5 * spatial_mean_sq_fluct(f);
    CHECK(spec.total_energy() == doctest::Approx(direct).epsilon(0.01));
  }

  SUBCASE("non-periodic grids refused") {
    Grid2 r{16, 16, 1.0, 1.0, Boundary::Replicate};
    const Frame f = random_velocity_frame(r, 5);
    CHECK_THROWS_AS(energy_spectrum_frame(f, {"u", "v"}), ConfigError);
  }

  SUBCASE("time average over a sequence") {
    Sequence seq;
    seq.metadata["velocity_channels"] = "u,v";
    Frame a = random_velocity_frame(g, 6);
    a.tau = 0;
    Frame b = random_velocity_frame(g, 7);
    b.tau = 1;
    seq.frames = {a, b};
    const SpectrumResult spec = energy_spectrum(seq);
    const SpectrumResult sa = energy_spectrum_frame(a, {"u", "v"});
    const SpectrumResult sb = energy_spectrum_frame(b, {"u", "v"});
    for (std::size_t i = 0; i < spec.time_avg.size(); ++i) {
      CHECK(spec.time_avg[i] ==
            doctest::Approx(0.5 * (sa.time_avg[i] + sb.time_avg[i])).epsilon(1e-12));
    }
  }
}

TEST_CASE("log-mse") {
  Grid2 g{32, 32, 1.0, 1.0, Boundary::Periodic};
  const Frame f = random_velocity_frame(g, 8);
  const SpectrumResult spec = energy_spectrum_frame(f, {"u", "v"});

  SUBCASE("identical spectra give zero, symmetric in arguments") {
    CHECK(log_mse(spec, spec) == 0.0);
    const Frame f2 = random_velocity_frame(g, 9);
    const SpectrumResult spec2 = energy_spectrum_frame(f2, {"u", "v"});
    CHECK(log_mse(spec, spec2) == doctest::Approx(log_mse(spec2, spec)).epsilon(1e-14));
  }

  SUBCASE("one natural-log unit of offset gives ~1") {
    SpectrumResult scaled = spec;
    for (double& v : scaled.time_avg) v *= M_E;
    CHECK(log_mse(spec, scaled) == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("common positive factor cancels exactly at eps = 0") {
    SpectrumResult a = spec, b = spec;
    for (double& v : b.time_avg) v *= 1.7;
    const double base = log_mse(spec, b, 0.0);
    for (double& v : a.time_avg) v *= 123.0;
    SpectrumResult b2 = b;
    for (double& v : b2.time_avg) v *= 123.0;
    CHECK(log_mse(a, b2, 0.0) == doctest::Approx(base).epsilon(1e-12));
  }

  SUBCASE("shell mismatch rejected") {
    SpectrumResult other = spec;
    other.shells.pop_back();
    other.time_avg.pop_back();
    CHECK_THROWS_AS(log_mse(spec, other), ConfigError);
  }
}

TEST_CASE("mse, pcc, kl") {
  Grid2 g{16, 16, 1.0, 1.0, Boundary::Periodic};
  const Frame gt = random_velocity_frame(g, 10);

  SUBCASE("identical frames: mse 0, pcc 1, kl 0") {
    CHECK(mse(gt, gt) == 0.0);
    const PccResult r = pcc(gt, gt);
    CHECK_FALSE(r.degenerate);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(kl_hist(gt, gt) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("negated zero-mean field: pcc -1") {
    Frame zm = gt;
    for (auto& c : zm.channels) {
      const double mean = std::accumulate(c.data.begin(), c.data.end(), 0.0) / c.data.size();
      for (auto& v : c.data) v -= mean;
    }
    Frame neg = zm;
    for (auto& c : neg.channels) {
      for (auto& v : c.data) v = -v;
    }
    CHECK(pcc(neg, zm).value == doctest::Approx(-1.0).epsilon(1e-12));
  }

  SUBCASE("hand-computed 4-bin KL") {
    // gt bins (.4,.3,.2,.1) against a uniform prediction; direct evaluation
    // of sum p log(p/q) gives 0.10644014.
    std::vector<double> gt_vals, pred_vals;
    const double centers[4] = {0.1, 0.35, 0.6, 0.9};
    const int counts[4] = {40, 30, 20, 10};
    for (int b = 0; b < 4; ++b) {
      for (int k = 0; k < counts[b]; ++k) gt_vals.push_back(centers[b]);
      for (int k = 0; k < 25; ++k) pred_vals.push_back(centers[b]);
    }
    CHECK(kl_hist_values(gt_vals, pred_vals, 4) ==
          doctest::Approx(0.10644013528622318).epsilon(1e-6));
  }

  SUBCASE("constant field reports degenerate, not NaN") {
    Frame flat = gt;
    for (auto& c : flat.channels) std::fill(c.data.begin(), c.data.end(), 2.5);
    const PccResult r = pcc(flat, gt);
    CHECK(r.degenerate);
    CHECK(std::isfinite(r.value));
  }

  SUBCASE("pcc invariant under a common positive affine map; 1 iff affine related") {
    const Frame other = random_velocity_frame(g, 11);
    const double base = pcc(other, gt).value;
    Frame a = other, b = gt;
    for (auto& c : a.channels) {
      for (auto& v : c.data) v = 3.0 * v + 2.0;
    }
    for (auto& c : b.channels) {
      for (auto& v : c.data) v = 3.0 * v + 2.0;
    }
    CHECK(pcc(a, b).value == doctest::Approx(base).epsilon(1e-12));

    Frame affine = gt;
    for (auto& c : affine.channels) {
      for (auto& v : c.data) v = 0.7 * v - 4.0;
    }
    CHECK(pcc(affine, gt).value == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("kl nonnegative, zero only for identical histograms") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> a(256), b(256);
      for (auto& v : a) v = rng.normal();
      for (auto& v : b) v = rng.normal() * 1.3 + 0.2;
      const double kl = kl_hist_values(a, b, 32);
      CHECK(kl >= 0.0);
      CHECK(kl_hist_values(a, a, 32) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("vorticity and q-criterion on analytic fields") {
  // Linear velocity fields: interior central differences are exact, so use
  // a replicate grid and check interior nodes only.
  Grid2 g{16, 16, 0.5, 0.5, Boundary::Replicate};
  const double omega_rate = 1.3;

  SUBCASE("solid-body rotation: w = 2 Omega, Q = Omega^2") {
    Frame f = velocity_frame(g);
    for (int ix = 0; ix < g.nx; ++ix) {
      for (int iy = 0; iy < g.ny; ++iy) {
        const double x = ix * g.dx, y = iy * g.dy;
        f.at(0, ix, iy) = -omega_rate * y;
        f.at(1, ix, iy) = omega_rate * x;
      }
    }
    const auto w = vorticity(f);
    const auto q = q_criterion(f);
    for (int ix = 1; ix < g.nx - 1; ++ix) {
      for (int iy = 1; iy < g.ny - 1; ++iy) {
        const std::size_t idx = static_cast<std::size_t>(ix) * g.ny + iy;
        CHECK(std::abs(w[idx] - 2.0 * omega_rate) < 1e-12);
        CHECK(std::abs(q[idx] - omega_rate * omega_rate) < 1e-12);
      }
    }
  }

  SUBCASE("pure strain: w = 0, Q = -a^2") {
    const double a = 0.8;
    Frame f = velocity_frame(g);
    for (int ix = 0; ix < g.nx; ++ix) {
      for (int iy = 0; iy < g.ny; ++iy) {
        f.at(0, ix, iy) = a * ix * g.dx;
        f.at(1, ix, iy) = -a * iy * g.dy;
      }
    }
    const auto w = vorticity(f);
    const auto q = q_criterion(f);
    for (int ix = 1; ix < g.nx - 1; ++ix) {
      for (int iy = 1; iy < g.ny - 1; ++iy) {
        const std::size_t idx = static_cast<std::size_t>(ix) * g.ny + iy;
        CHECK(std::abs(w[idx]) < 1e-12);
        CHECK(std::abs(q[idx] + a * a) < 1e-12);
      }
    }
  }

  SUBCASE("uniform flow: w = 0, Q = 0") {
    Frame f = velocity_frame(g);
    for (auto& c : f.channels) std::fill(c.data.begin(), c.data.end(), 2.0);
    for (double v : vorticity(f)) CHECK(v == 0.0);
    for (double v : q_criterion(f)) CHECK(v == 0.0);
  }
}

TEST_CASE("velocity magnitude series") {
  Grid2 g{8, 8, 1.0, 1.0, Boundary::Periodic};
  Sequence seq;
  seq.metadata["velocity_channels"] = "u,v";

  SUBCASE("uniform (3,4) field gives 5 at every tau") {
    for (int tau = 0; tau < 3; ++tau) {
      Frame f = velocity_frame(g, tau);
      std::fill(f.channels[0].data.begin(), f.channels[0].data.end(), 3.0);
      std::fill(f.channels[1].data.begin(), f.channels[1].data.end(), 4.0);
      seq.frames.push_back(f);
    }
    for (double v : velocity_magnitude_series(seq)) CHECK(v == doctest::Approx(5.0));
  }

  SUBCASE("zero field gives zero; scaling is positively homogeneous") {
    Frame f = random_velocity_frame(g, 13);
    f.tau = 0;
    Frame f2 = f;
    f2.tau = 1;
    for (auto& c : f2.channels) {
      for (auto& v : c.data) v *= 2.5;
    }
    seq.frames = {f, f2};
    const auto series = velocity_magnitude_series(seq);
    CHECK(series[1] == doctest::Approx(2.5 * series[0]).epsilon(1e-12));

    Frame zero = velocity_frame(g, 0);
    Frame zero2 = velocity_frame(g, 1);
    Sequence zseq;
    zseq.metadata["velocity_channels"] = "u,v";
    zseq.frames = {zero, zero2};
    CHECK(velocity_magnitude_series(zseq)[0] == 0.0);
  }
}

TEST_CASE("sequence metrics report") {
  Grid2 g{8, 8, 1.0, 1.0, Boundary::Periodic};
  Sequence gt, pred;
  for (int tau = 0; tau < 3; ++tau) {
    Frame f = random_velocity_frame(g, 20 + tau);
    f.tau = tau;
    gt.frames.push_back(f);
    pred.frames.push_back(f);
  }
  const MetricsReport r = sequence_metrics(pred, gt);
  CHECK(r.mse_avg == 0.0);
  CHECK(r.pcc_avg == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.kl_avg == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(r.mse_per_tau.size() == 3);
}
