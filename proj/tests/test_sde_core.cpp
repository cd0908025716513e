#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "scoreflow/rng.hpp"
#include "scoreflow/sde.hpp"

using namespace scoreflow;

namespace {

// Simpson quadrature of beta over [0, t]; independent check of the
// closed-form integral.
double beta_quadrature(const SdeSpec& spec, double t, int panels = 20000) {
  double acc = 0.0;
  const double h = t / panels;
  for (int i = 0; i < panels; ++i) {
    const double a = i * h;
    acc += h / 6.0 * (beta(spec, a) + 4.0 * beta(spec, a + 0.5 * h) + beta(spec, a + h));
  }
  return acc;
}

}  // namespace

TEST_CASE("beta schedule values") {
  const SdeSpec vp = SdeSpec::vp(0.01, 5.0);
  CHECK(beta(vp, 0.0) == doctest::Approx(0.01));
  CHECK(beta(vp, 1.0) == doctest::Approx(5.0));
  CHECK(beta(vp, 0.5) == doctest::Approx(2.505));
  const SdeSpec ve = SdeSpec::ve(0.04, 8.0);
  CHECK_THROWS_AS(beta(ve, 0.5), ConfigError);
}

TEST_CASE("sigma schedule values") {
  const SdeSpec ve = SdeSpec::ve(0.04, 8.0);
  CHECK(sigma(ve, 0.0) == doctest::Approx(0.04));
  CHECK(sigma(ve, 1.0) == doctest::Approx(8.0));
  CHECK(sigma(ve, 0.5) == doctest::Approx(std::sqrt(0.04 * 8.0)));
  CHECK_THROWS_AS(sigma(SdeSpec::vp(0.01, 5.0), 0.5), ConfigError);
}

TEST_CASE("kernel moments") {
  SUBCASE("no diffusion at t = 0") {
    for (const SdeSpec& spec :
         {SdeSpec::vp(0.01, 5.0), SdeSpec::subvp(0.35, 30.0), SdeSpec::ve(0.04, 8.0)}) {
      const KernelMoments km = kernel_moments(spec, 0.0);
      CHECK(km.mean_coeff == doctest::Approx(1.0));
      CHECK(km.var == doctest::Approx(0.0).epsilon(1e-15));
    }
  }
  SUBCASE("VP t=1 closed form vs quadrature") {
    const SdeSpec vp = SdeSpec::vp(0.01, 5.0);
    const double ib = beta_integral(vp, 1.0);
    CHECK(ib == doctest::Approx(2.505));
    CHECK(ib == doctest::Approx(beta_quadrature(vp, 1.0)).epsilon(1e-10));
    const KernelMoments km = kernel_moments(vp, 1.0);
    CHECK(km.mean_coeff == doctest::Approx(0.28578942944988966));
    CHECK(km.var == doctest::Approx(0.9183244020147066));
  }
  SUBCASE("sub-VP variance is the square of the VP variance") {
    const SdeSpec vp = SdeSpec::vp(0.01, 5.0);
    const SdeSpec sub = SdeSpec::subvp(0.01, 5.0);
    const KernelMoments km = kernel_moments(sub, 1.0);
    CHECK(km.var == doctest::Approx(0.9183244020147066 * 0.9183244020147066));
    for (int i = 0; i <= 50; ++i) {
      const double t = static_cast<double>(i) / 50;
      const double v = kernel_moments(vp, t).var;
      CHECK(kernel_moments(sub, t).var == doctest::Approx(v * v).epsilon(1e-12));
    }
  }
  SUBCASE("monotonicity of m and s^2") {
    for (const SdeSpec& spec :
         {SdeSpec::vp(0.01, 5.0), SdeSpec::subvp(0.35, 30.0), SdeSpec::ve(0.04, 8.0)}) {
      double prev_m = 2.0, prev_v = -1.0;
      for (int i = 0; i <= 100; ++i) {
        const KernelMoments km = kernel_moments(spec, static_cast<double>(i) / 100);
        CHECK(km.mean_coeff <= prev_m + 1e-15);
        CHECK(km.var >= prev_v - 1e-15);
        if (spec.kind == SdeKind::Ve) CHECK(km.mean_coeff == 1.0);
        prev_m = km.mean_coeff;
        prev_v = km.var;
      }
    }
  }
}

TEST_CASE("perturb") {
  const SdeSpec ve = SdeSpec::ve(0.04, 8.0);
  const std::vector<double> x0 = {1.0, -2.0, 0.5};
  std::vector<double> noise(3, 0.0), out(3);

  SUBCASE("t=0 is the identity") {
    noise = {0.3, -0.7, 1.1};
    perturb(ve, x0, 0.0, noise, out);
    for (int i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(x0[i]));
  }
  SUBCASE("zero noise gives m(t) x0") {
    const SdeSpec vp = SdeSpec::vp(0.01, 5.0);
    perturb(vp, x0, 1.0, noise, out);
    for (int i = 0; i < 3; ++i) {
      CHECK(out[i] == doctest::Approx(0.28578942944988966 * x0[i]));
    }
  }
  SUBCASE("VE per-element std at t=1 (Monte Carlo)") {
    Rng rng(17);
    const double expected = std::sqrt(8.0 * 8.0 - 0.04 * 0.04);
    double acc = 0.0;
    const int n = 100000;
    std::vector<double> x1 = {0.7};
    std::vector<double> n1(1), o1(1);
    for (int k = 0; k < n; ++k) {
      n1[0] = rng.normal();
      perturb(ve, x1, 1.0, n1, o1);
      const double d = o1[0] - x1[0];
      acc += d * d;
    }
    CHECK(std::sqrt(acc / n) == doctest::Approx(expected).epsilon(0.02));
  }
  SUBCASE("shape mismatch") {
    std::vector<double> bad(2);
    CHECK_THROWS_AS(perturb(ve, x0, 0.5, bad, out), ConfigError);
  }
}

TEST_CASE("kernel score") {
  const SdeSpec vp = SdeSpec::vp(0.01, 5.0);

  SUBCASE("zero at the kernel mean") {
    const std::vector<double> x0 = {1.5, -0.5};
    const KernelMoments km = kernel_moments(vp, 0.7);
    std::vector<double> xt = {km.mean_coeff * x0[0], km.mean_coeff * x0[1]};
    std::vector<double> out(2);
    kernel_score(vp, xt, x0, 0.7, out);
    CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("m=1/2 case: score(2 | x0=2) = -4/3") {
    // Bisect for the time where m(t) = 1/2; then s^2 = 1 - m^2 = 3/4 for VP.
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (kernel_moments(vp, mid).mean_coeff > 0.5 ? lo : hi) = mid;
    }
    const double t_star = 0.5 * (lo + hi);
    CHECK(kernel_moments(vp, t_star).var == doctest::Approx(0.75).epsilon(1e-9));
    std::vector<double> out(1);
    kernel_score(vp, std::vector<double>{2.0}, std::vector<double>{2.0}, t_star, out);
    CHECK(out[0] == doctest::Approx(-4.0 / 3.0).epsilon(1e-9));
  }

  SUBCASE("perturb then score recovers -noise/s exactly") {
    Rng rng(3);
    const std::vector<double> x0 = {0.2, -1.4, 3.0, 0.0};
    std::vector<double> noise(4), xt(4), out(4);
    for (double t : {0.05, 0.3, 0.8, 1.0}) {
      for (auto& n : noise) n = rng.normal();
      perturb(vp, x0, t, noise, xt);
      kernel_score(vp, xt, x0, t, out);
      const double s = std::sqrt(kernel_moments(vp, t).var);
      for (int i = 0; i < 4; ++i) {
        CHECK(out[i] == doctest::Approx(-noise[i] / s).epsilon(1e-12));
      }
    }
  }

  SUBCASE("singular below the time floor") {
    std::vector<double> out(1);
    CHECK_THROWS_AS(
        kernel_score(vp, std::vector<double>{1.0}, std::vector<double>{1.0}, 1e-6, out),
        NumericError);
  }
}

TEST_CASE("drift and diffusion") {
  SUBCASE("VE drift is zero") {
    const SdeSpec ve = SdeSpec::ve(0.04, 8.0);
    std::vector<double> x = {1.0, -3.0};
    std::vector<double> drift(2);
    double g = 0.0;
    drift_diffusion(ve, x, 0.4, drift, g);
    CHECK(drift[0] == 0.0);
    CHECK(drift[1] == 0.0);
    CHECK(g > 0.0);
  }
  SUBCASE("VP plug-in at t=1") {
    const SdeSpec vp = SdeSpec::vp(0.01, 5.0);
    std::vector<double> x = {1.0};
    std::vector<double> drift(1);
    double g = 0.0;
    drift_diffusion(vp, x, 1.0, drift, g);
    CHECK(drift[0] == doctest::Approx(-2.5));
    CHECK(g == doctest::Approx(std::sqrt(5.0)));
  }
  SUBCASE("sub-VP diffusion never exceeds VP diffusion") {
    const SdeSpec vp = SdeSpec::vp(0.01, 5.0);
    const SdeSpec sub = SdeSpec::subvp(0.01, 5.0);
    for (int i = 0; i <= 100; ++i) {
      const double t = static_cast<double>(i) / 100;
      CHECK(drift_coeffs(sub, t).g <= drift_coeffs(vp, t).g + 1e-15);
    }
  }
  SUBCASE("VE g(t) matches the schedule derivative (finite differences)") {
    const SdeSpec ve = SdeSpec::ve(0.04, 8.0);
    const double h = 1e-6;
    for (double t : {0.1, 0.5, 0.9}) {
      const double s2p = sigma(ve, t + h) * sigma(ve, t + h);
      const double s2m = sigma(ve, t - h) * sigma(ve, t - h);
      const double deriv = (s2p - s2m) / (2.0 * h);
      CHECK(drift_coeffs(ve, t).g == doctest::Approx(std::sqrt(deriv)).epsilon(1e-8));
    }
  }
}

TEST_CASE("discrete schedule") {
  const SdeSpec vp = SdeSpec::vp(0.01, 5.0);

  SUBCASE("basic structure") {
    const DiscreteSchedule ds = discrete_schedule(vp, 100);
    CHECK(ds.alpha_bars[0] == ds.alphas[0]);
    for (std::size_t i = 1; i < ds.alpha_bars.size(); ++i) {
      CHECK(ds.alpha_bars[i] < ds.alpha_bars[i - 1]);
      CHECK(ds.alphas[i] > 0.0);
      CHECK(ds.alphas[i] < 1.0);
    }
  }

  SUBCASE("product converges to exp(-int beta) at rate O(1/N)") {
    const double target = std::exp(-beta_integral(vp, 1.0));
    const double e1 = std::abs(discrete_schedule(vp, 1000).alpha_bars.back() - target);
    const double e2 = std::abs(discrete_schedule(vp, 10000).alpha_bars.back() - target);
    CHECK(e1 < 3.0 / 1000.0);
    CHECK(e2 < 3.0 / 10000.0);
    CHECK(e1 / e2 == doctest::Approx(10.0).epsilon(0.15));
  }

  SUBCASE("DDPM equivalence: sqrt(alpha_bar_i) tracks m(t_i)") {
    const int n = 1000;
    const DiscreteSchedule ds = discrete_schedule(vp, n);
    double max_err = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double m = kernel_moments(vp, static_cast<double>(i) / n).mean_coeff;
      max_err = std::max(max_err, std::abs(std::sqrt(ds.alpha_bars[i - 1]) - m));
    }
    CHECK(max_err < 3.0 / n);
  }

  SUBCASE("VE rejected") {
    CHECK_THROWS_AS(discrete_schedule(SdeSpec::ve(0.04, 8.0), 100), ConfigError);
  }
}

TEST_CASE("presets match the tuned schedule table") {
  const SdeSpec vp = SdeSpec::preset("vp-transonic");
  CHECK(vp.kind == SdeKind::Vp);
  CHECK(vp.beta_min == doctest::Approx(0.01));
  CHECK(vp.beta_max == doctest::Approx(5.0));
  const SdeSpec sub = SdeSpec::preset("subvp-transonic");
  CHECK(sub.beta_min == doctest::Approx(0.35));
  CHECK(sub.beta_max == doctest::Approx(30.0));
  const SdeSpec ve = SdeSpec::preset("ve-transonic");
  CHECK(ve.sigma_min == doctest::Approx(0.04));
  CHECK(ve.sigma_max == doctest::Approx(8.0));
  const SdeSpec vpr = SdeSpec::preset("vp-transonic-reg");
  CHECK(vpr.beta_min == doctest::Approx(0.39));
  CHECK(vpr.beta_max == doctest::Approx(5.6));
  CHECK(SdeSpec::preset_names().size() == 18);
  CHECK_THROWS_AS(SdeSpec::preset("vp-nonexistent"), ConfigError);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(SdeSpec::vp(5.0, 5.0), ConfigError);
  CHECK_THROWS_AS(SdeSpec::vp(-1.0, 5.0), ConfigError);
  CHECK_THROWS_AS(SdeSpec::ve(0.0, 8.0), ConfigError);
  CHECK_THROWS_AS(SdeSpec::ve(8.0, 0.04), ConfigError);
}
