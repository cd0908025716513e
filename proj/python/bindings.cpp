#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scoreflow/diagnostics.hpp"
#include "scoreflow/field.hpp"
#include "scoreflow/ftle.hpp"
#include "scoreflow/generators.hpp"
#include "scoreflow/gmm.hpp"
#include "scoreflow/pm_filter.hpp"
#include "scoreflow/rng.hpp"
#include "scoreflow/sampler.hpp"
#include "scoreflow/score_net.hpp"
#include "scoreflow/sde.hpp"

namespace py = pybind11;
using namespace scoreflow;

namespace {

py::array_t<double> channel_array(const Frame& f, const std::string& name) {
  const auto& data = f.channel(name);
  py::array_t<double> out({f.grid.nx, f.grid.ny});
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

void set_channel(Frame& f, const std::string& name,
                 py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
  if (arr.ndim() != 2 || arr.shape(0) != f.grid.nx || arr.shape(1) != f.grid.ny) {
    throw ConfigError("array shape must be (nx, ny)");
  }
  auto& data = f.channel(name);
  std::copy(arr.data(), arr.data() + data.size(), data.begin());
}

Boundary boundary_from(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "replicate") return Boundary::Replicate;
  throw ConfigError("boundary must be 'periodic' or 'replicate'");
}

std::vector<double> to_vector(
    py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
  return std::vector<double>(arr.data(), arr.data() + arr.size());
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array_2d(const std::vector<double>& v, int nx, int ny) {
  py::array_t<double> out({nx, ny});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

SdeSpec make_spec(const std::string& kind, double a, double b, int n_steps) {
  if (kind == "vp") return SdeSpec::vp(a, b, n_steps);
  if (kind == "subvp") return SdeSpec::subvp(a, b, n_steps);
  if (kind == "ve") return SdeSpec::ve(a, b, n_steps);
  throw ConfigError("kind must be vp, subvp, or ve");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conditional score-based diffusion for field surrogates, with "
            "fluid diagnostics";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  // ---- fields ----
  py::class_<Grid2>(m, "Grid2")
      .def_readonly("nx", &Grid2::nx)
      .def_readonly("ny", &Grid2::ny)
      .def_readonly("dx", &Grid2::dx)
      .def_readonly("dy", &Grid2::dy)
      .def_property_readonly("boundary", [](const Grid2& g) {
        return g.boundary == Boundary::Periodic ? "periodic" : "replicate";
      });

  py::class_<Frame>(m, "Frame")
      .def_readonly("grid", &Frame::grid)
      .def_readwrite("tau", &Frame::tau)
      .def_property_readonly("channel_names",
                             [](const Frame& f) {
                               std::vector<std::string> names;
                               for (const auto& c : f.channels) names.push_back(c.name);
                               return names;
                             })
      .def("channel", &channel_array, py::arg("name"))
      .def("set_channel", &set_channel, py::arg("name"), py::arg("values"));

  py::class_<Sequence>(m, "Sequence")
      .def_readonly("frames", &Sequence::frames)
      .def_readonly("metadata", &Sequence::metadata)
      .def("velocity_channels", &Sequence::velocity_channels);

  m.def(
      "make_frame",
      [](int nx, int ny, const std::vector<std::string>& channels, double dx, double dy,
         const std::string& boundary, std::int64_t tau) {
        return make_frame(Grid2{nx, ny, dx, dy, boundary_from(boundary)}, channels, tau);
      },
      py::arg("nx"), py::arg("ny"), py::arg("channels"), py::arg("dx") = 1.0,
      py::arg("dy") = 1.0, py::arg("boundary") = "periodic", py::arg("tau") = 0);

  m.def("read_frame", &read_frame, py::arg("path"));
  m.def("write_frame", &write_frame, py::arg("frame"), py::arg("path"));
  m.def("read_sequence", &read_sequence, py::arg("dir"));
  m.def("write_sequence", &write_sequence, py::arg("sequence"), py::arg("dir"));

  // ---- generators ----
  m.def(
      "make_gaussian_mixture_dataset",
      [](const std::vector<double>& w, const std::vector<double>& mu,
         const std::vector<double>& s, int n, std::uint64_t seed) {
        return to_array(make_gaussian_mixture_dataset(w, mu, s, n, seed));
      },
      py::arg("weights"), py::arg("means"), py::arg("stds"), py::arg("n_samples"),
      py::arg("seed"));
  m.def(
      "make_advected_blob_sequence",
      [](int nx, int ny, double cx, double cy, int n_steps, std::uint64_t seed,
         double noise_amp) {
        return make_advected_blob_sequence(Grid2{nx, ny, 1.0, 1.0, Boundary::Periodic},
                                           cx, cy, n_steps, seed, noise_amp);
      },
      py::arg("nx"), py::arg("ny"), py::arg("cx"), py::arg("cy"), py::arg("n_steps"),
      py::arg("seed"), py::arg("noise_amp") = 0.01);
  m.def(
      "make_spectral_field",
      [](int nx, int ny, double slope, int k_min, int k_max, std::uint64_t seed) {
        return make_spectral_field(Grid2{nx, ny, 1.0, 1.0, Boundary::Periodic}, slope,
                                   k_min, k_max, seed);
      },
      py::arg("nx"), py::arg("ny"), py::arg("slope"), py::arg("k_min"), py::arg("k_max"),
      py::arg("seed"));

  // ---- sde ----
  py::class_<SdeSpec>(m, "SdeSpec")
      .def_property_readonly("kind",
                             [](const SdeSpec& s) {
                               switch (s.kind) {
                                 case SdeKind::Vp:
                                   return "vp";
                                 case SdeKind::SubVp:
                                   return "subvp";
                                 default:
                                   return "ve";
                               }
                             })
      .def_readonly("beta_min", &SdeSpec::beta_min)
      .def_readonly("beta_max", &SdeSpec::beta_max)
      .def_readonly("sigma_min", &SdeSpec::sigma_min)
      .def_readonly("sigma_max", &SdeSpec::sigma_max)
      .def_readonly("n_steps", &SdeSpec::n_steps);

  m.def("sde", &make_spec, py::arg("kind"), py::arg("a"), py::arg("b"),
        py::arg("n_steps") = 1000,
        "Build an SDE spec; (a, b) are (beta_min, beta_max) or (sigma_min, sigma_max)");
  m.def("sde_preset", &SdeSpec::preset, py::arg("name"));
  m.def("sde_preset_names", &SdeSpec::preset_names);
  m.def("beta", &beta, py::arg("spec"), py::arg("t"));
  m.def("sigma", &sigma, py::arg("spec"), py::arg("t"));
  m.def(
      "kernel_moments",
      [](const SdeSpec& spec, double t) {
        const KernelMoments km = kernel_moments(spec, t);
        return py::make_tuple(km.mean_coeff, km.var);
      },
      py::arg("spec"), py::arg("t"), "Returns (mean_coeff, var)");
  m.def(
      "drift_diffusion",
      [](const SdeSpec& spec, double t) {
        const DriftCoeffs dc = drift_coeffs(spec, t);
        return py::make_tuple(dc.drift_coeff, dc.g);
      },
      py::arg("spec"), py::arg("t"), "Returns (linear drift coefficient, g)");
  m.def(
      "perturb",
      [](const SdeSpec& spec, py::array_t<double> x0, double t, py::array_t<double> noise) {
        const auto xv = to_vector(x0);
        const auto nv = to_vector(noise);
        std::vector<double> out(xv.size());
        perturb(spec, xv, t, nv, out);
        return to_array(out);
      },
      py::arg("spec"), py::arg("x0"), py::arg("t"), py::arg("noise"));
  m.def(
      "kernel_score",
      [](const SdeSpec& spec, py::array_t<double> x_t, py::array_t<double> x0, double t) {
        const auto xt = to_vector(x_t);
        const auto xv = to_vector(x0);
        std::vector<double> out(xv.size());
        kernel_score(spec, xt, xv, t, out);
        return to_array(out);
      },
      py::arg("spec"), py::arg("x_t"), py::arg("x0"), py::arg("t"));
  m.def(
      "discrete_schedule",
      [](const SdeSpec& spec, int n) {
        const DiscreteSchedule ds = discrete_schedule(spec, n);
        return py::make_tuple(to_array(ds.alphas), to_array(ds.alpha_bars));
      },
      py::arg("spec"), py::arg("n"), "Returns (alphas, alpha_bars)");

  // ---- analytic mixture scores ----
  py::class_<GaussianMixture>(m, "GaussianMixture")
      .def(py::init([](const std::vector<double>& w, const std::vector<double>& mu,
                       const std::vector<double>& s) {
             GaussianMixture mix{w, mu, s};
             mix.validate();
             return mix;
           }),
           py::arg("weights"), py::arg("means"), py::arg("stds"))
      .def("mean", &GaussianMixture::mean)
      .def("variance", &GaussianMixture::variance);
  m.def("gmm_score", &gmm_score, py::arg("mix"), py::arg("x"), py::arg("t"),
        py::arg("spec"));
  m.def("gmm_density", &gmm_density, py::arg("mix"), py::arg("x"), py::arg("t"),
        py::arg("spec"));

  // ---- score net ----
  py::class_<ScoreNet>(m, "ScoreNet")
      .def_readonly("data_dim", &ScoreNet::data_dim)
      .def_readonly("cond_dim", &ScoreNet::cond_dim)
      .def_readonly("hidden", &ScoreNet::hidden)
      .def_property_readonly("n_params", &ScoreNet::n_params);

  m.def("make_score_net", &make_score_net, py::arg("data_dim"), py::arg("cond_dim"),
        py::arg("hidden"), py::arg("seed"), py::arg("t_emb_dim") = 16);
  m.def(
      "net_forward",
      [](const ScoreNet& net, py::array_t<double> x, py::array_t<double> cond, double t) {
        return to_array(forward(net, to_vector(x), to_vector(cond), t));
      },
      py::arg("net"), py::arg("x_noisy"), py::arg("x_cond"), py::arg("t"));
  m.def(
      "train_samples",
      [](ScoreNet& net, const SdeSpec& spec, py::array_t<double> samples, int batch_size,
         int epochs, double lr, std::uint64_t seed, const std::string& weighting) {
        const auto values = to_vector(samples);
        std::vector<std::vector<double>> rows;
        rows.reserve(values.size());
        for (double v : values) rows.push_back({v});
        TrainConfig cfg;
        cfg.batch_size = batch_size;
        cfg.epochs = epochs;
        cfg.lr = lr;
        cfg.seed = seed;
        cfg.lambda_mode =
            weighting == "likelihood" ? LambdaMode::Likelihood : LambdaMode::Variance;
        const TrainHistory h = train_samples(net, spec, rows, cfg);
        return py::make_tuple(to_array(h.loss), to_array(h.reg));
      },
      py::arg("net"), py::arg("spec"), py::arg("samples"), py::arg("batch_size") = 128,
      py::arg("epochs") = 100, py::arg("lr") = 1e-3, py::arg("seed") = 0,
      py::arg("weighting") = "variance");
  m.def(
      "sample_unconditional",
      [](const ScoreNet& net, const SdeSpec& spec, int n_samples, int n_steps,
         std::uint64_t seed, int threads) {
        SamplerConfig cfg;
        cfg.n_steps = n_steps;
        cfg.seed = seed;
        ScoreFn score = [&net](std::span<const double> x, double t,
                               std::span<double> out) {
          thread_local NetWorkspace ws;
          forward_ws(net, x, {}, t, ws, out);
        };
        const auto states = sample_many(score, spec, net.data_dim, cfg, n_samples, threads);
        py::array_t<double> out({n_samples, net.data_dim});
        double* ptr = out.mutable_data();
        for (const auto& s : states) ptr = std::copy(s.begin(), s.end(), ptr);
        return out;
      },
      py::arg("net"), py::arg("spec"), py::arg("n_samples"), py::arg("n_steps") = 1000,
      py::arg("seed") = 0, py::arg("threads") = 1);

  // ---- diagnostics ----
  m.def(
      "energy_spectrum",
      [](const Frame& frame, const std::vector<std::string>& vel) {
        const SpectrumResult s = energy_spectrum_frame(frame, vel);
        return py::make_tuple(to_array(s.shells), to_array(s.time_avg));
      },
      py::arg("frame"), py::arg("velocity_channels") = std::vector<std::string>{"u", "v"},
      "Returns (shells, energy)");
  m.def(
      "sequence_spectrum",
      [](const Sequence& seq) {
        const SpectrumResult s = energy_spectrum(seq);
        return py::make_tuple(to_array(s.shells), to_array(s.time_avg));
      },
      py::arg("sequence"));
  m.def("mse", &mse, py::arg("pred"), py::arg("gt"));
  m.def(
      "pcc",
      [](const Frame& pred, const Frame& gt) {
        const PccResult r = pcc(pred, gt);
        return py::make_tuple(r.value, r.degenerate);
      },
      py::arg("pred"), py::arg("gt"), "Returns (value, degenerate)");
  m.def("kl_hist", &kl_hist, py::arg("pred"), py::arg("gt"), py::arg("bins") = 64);
  m.def(
      "kl_hist_values",
      [](py::array_t<double> gt, py::array_t<double> pred, int bins) {
        return kl_hist_values(to_vector(gt), to_vector(pred), bins);
      },
      py::arg("gt"), py::arg("pred"), py::arg("bins") = 64);
  m.def(
      "vorticity",
      [](const Frame& f) { return to_array_2d(vorticity(f), f.grid.nx, f.grid.ny); },
      py::arg("frame"));
  m.def(
      "q_criterion",
      [](const Frame& f) { return to_array_2d(q_criterion(f), f.grid.nx, f.grid.ny); },
      py::arg("frame"));
  m.def(
      "velocity_magnitude_series",
      [](const Sequence& s) { return to_array(velocity_magnitude_series(s)); },
      py::arg("sequence"));

  // ---- filtering ----
  m.def(
      "pm_filter",
      [](const Frame& frame, const std::vector<std::string>& channels, double gamma,
         double eta, double epsilon, int iters) {
        PmConfig cfg;
        cfg.gamma = gamma;
        cfg.eta = eta;
        cfg.epsilon = epsilon;
        cfg.n_iters = iters;
        return pm_filter(frame, channels, cfg);
      },
      py::arg("frame"), py::arg("channels"), py::arg("gamma") = 0.05,
      py::arg("eta") = 0.03, py::arg("epsilon") = 1e-8, py::arg("iters") = 20);

  // ---- ftle ----
  m.def(
      "ftle_builtin",
      [](const std::string& flow, double x0, double x1, double y0, double y1, int nx,
         int ny, double tau0, double dtau, double h_fd, int steps, int threads) {
        SeedGrid grid{x0, x1, y0, y1, nx, ny};
        const FtleField f =
            ftle_field(FlowField::builtin(flow), grid, tau0, dtau, h_fd, steps, threads);
        const GlobalLyapunov g = global_lyapunov_time(f);
        return py::make_tuple(to_array_2d(f.chi, nx, ny),
                              g.chaotic ? py::cast(g.tau_l) : py::none());
      },
      py::arg("flow"), py::arg("x0"), py::arg("x1"), py::arg("y0"), py::arg("y1"),
      py::arg("nx"), py::arg("ny"), py::arg("tau0") = 0.0, py::arg("dtau") = 2.0,
      py::arg("h_fd") = 1e-4, py::arg("steps") = 100, py::arg("threads") = 1,
      "Returns (chi grid, global Lyapunov time or None)");
  m.def(
      "ftle_sequence",
      [](const Sequence& seq, double x0, double x1, double y0, double y1, int nx, int ny,
         double tau0, double dtau, double h_fd, int steps, int threads) {
        SeedGrid grid{x0, x1, y0, y1, nx, ny};
        const FtleField f = ftle_field(FlowField::from_sequence(seq), grid, tau0, dtau,
                                       h_fd, steps, threads);
        const GlobalLyapunov g = global_lyapunov_time(f);
        return py::make_tuple(to_array_2d(f.chi, nx, ny),
                              g.chaotic ? py::cast(g.tau_l) : py::none());
      },
      py::arg("sequence"), py::arg("x0"), py::arg("x1"), py::arg("y0"), py::arg("y1"),
      py::arg("nx"), py::arg("ny"), py::arg("tau0") = 0.0, py::arg("dtau") = 2.0,
      py::arg("h_fd") = 1e-4, py::arg("steps") = 100, py::arg("threads") = 1);

  // ---- physics residuals ----
  m.def(
      "turbrad_residuals",
      [](const Frame& next, const Frame& prev, double dtau, double tau_cool) {
        const ResidualFields r = turbrad_residuals(next, prev, dtau, tau_cool);
        const int nx = prev.grid.nx, ny = prev.grid.ny;
        return py::make_tuple(to_array_2d(r.r1, nx, ny), to_array_2d(r.r2x, nx, ny),
                              to_array_2d(r.r2y, nx, ny), to_array_2d(r.r3, nx, ny));
      },
      py::arg("next"), py::arg("prev"), py::arg("dtau") = 1.0, py::arg("tau_cool") = 0.06,
      "Returns (R1, R2x, R2y, R3)");
  m.def(
      "physics_correct",
      [](const Frame& pred, const Frame& prev, int n_gd, double eta_u, double eta_rho,
         double eta_p, double lambda1, double lambda2, double lambda3, double tau_cool,
         double dtau) {
        PhysicsCorrConfig cfg;
        cfg.n_gd = n_gd;
        cfg.eta_u = eta_u;
        cfg.eta_rho = eta_rho;
        cfg.eta_p = eta_p;
        cfg.lambda1 = lambda1;
        cfg.lambda2 = lambda2;
        cfg.lambda3 = lambda3;
        cfg.tau_cool = tau_cool;
        cfg.dtau = dtau;
        PhysicsCorrResult r = physics_correct(pred, prev, cfg);
        return py::make_tuple(r.corrected, to_array(r.lgd_history));
      },
      py::arg("prediction"), py::arg("previous"), py::arg("n_gd") = 20,
      py::arg("eta_u") = 1e-3, py::arg("eta_rho") = 1e-3, py::arg("eta_p") = 1e-3,
      py::arg("lambda1") = 1.0, py::arg("lambda2") = 1.0, py::arg("lambda3") = 1.0,
      py::arg("tau_cool") = 0.06, py::arg("dtau") = 1.0,
      "Returns (corrected frame, L_GD history)");

  // ---- regularizer ----
  m.def("regularizer_term", &regularizer_term, py::arg("u_hat"), py::arg("u_true"),
        py::arg("u_past"),
        py::arg("velocity_channels") = std::vector<std::string>{"u", "v"});

  m.attr("__version__") = "0.1.0";
}
