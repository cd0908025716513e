#include "scoreflow/score_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace scoreflow {

std::vector<int> ScoreNet::layer_dims() const {
  std::vector<int> dims;
  dims.push_back(input_dim());
  for (int h : hidden) dims.push_back(h);
  dims.push_back(data_dim);
  return dims;
}

std::size_t ScoreNet::n_params() const {
  const auto dims = layer_dims();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    n += static_cast<std::size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
  }
  return n + t_emb_dim + 1;  // alpha weights and bias
}

ScoreNet make_score_net(int data_dim, int cond_dim, const std::vector<int>& hidden,
                        std::uint64_t seed, int t_emb_dim) {
  if (data_dim < 1 || cond_dim < 0 || t_emb_dim < 2 || t_emb_dim % 2 != 0) {
    throw ConfigError("invalid score net dimensions");
  }
  for (int h : hidden) {
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
  }
  ScoreNet net;
  net.data_dim = data_dim;
  net.cond_dim = cond_dim;
  net.t_emb_dim = t_emb_dim;
  net.hidden = hidden;
  net.params.assign(net.n_params(), 0.0);

  Rng rng(seed);
  const auto dims = net.layer_dims();
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (int i = 0; i < dims[l + 1] * dims[l]; ++i) net.params[pos++] = scale * rng.normal();
    pos += dims[l + 1];  // biases stay zero
  }
  // alpha starts at sigmoid(0) = 1/2
  return net;
}

void time_embedding(double t, std::span<double> out) {
  const int half = static_cast<int>(out.size()) / 2;
  for (int k = 0; k < half; ++k) {
    const double w = M_PI * std::pow(2.0, k);
    out[2 * k] = std::sin(w * t);
    out[2 * k + 1] = std::cos(w * t);
  }
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ParamView {
  // Offsets of W_l / b_l blocks within the flat parameter vector.
  std::vector<std::size_t> w_off, b_off;
  std::size_t alpha_w_off = 0, alpha_b_off = 0;
  std::vector<int> dims;
};

ParamView layout(const ScoreNet& net) {
  ParamView v;
  v.dims = net.layer_dims();
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < v.dims.size(); ++l) {
    v.w_off.push_back(pos);
    pos += static_cast<std::size_t>(v.dims[l + 1]) * v.dims[l];
    v.b_off.push_back(pos);
    pos += v.dims[l + 1];
  }
  v.alpha_w_off = pos;
  v.alpha_b_off = pos + net.t_emb_dim;
  return v;
}

}  // namespace

void forward_ws(const ScoreNet& net, std::span<const double> x_noisy,
                std::span<const double> x_cond, double t, NetWorkspace& ws,
                std::span<double> out) {
  if (static_cast<int>(x_noisy.size()) != net.data_dim ||
      static_cast<int>(x_cond.size()) != net.cond_dim ||
      static_cast<int>(out.size()) != net.data_dim) {
    throw ConfigError("score net input width mismatch");
  }
  const ParamView pv = layout(net);
  const std::size_t n_layers = pv.w_off.size();

  ws.emb.resize(net.t_emb_dim);
  time_embedding(t, ws.emb);
  ws.acts.resize(n_layers + 1);
  ws.acts[0].resize(net.input_dim());
  std::copy(x_noisy.begin(), x_noisy.end(), ws.acts[0].begin());
  std::copy(x_cond.begin(), x_cond.end(), ws.acts[0].begin() + net.data_dim);
  std::copy(ws.emb.begin(), ws.emb.end(),
            ws.acts[0].begin() + net.data_dim + net.cond_dim);

  for (std::size_t l = 0; l < n_layers; ++l) {
    const int in = pv.dims[l];
    const int out_dim = pv.dims[l + 1];
    const double* w = net.params.data() + pv.w_off[l];
    const double* b = net.params.data() + pv.b_off[l];
    const auto& h_prev = ws.acts[l];
    auto& h = ws.acts[l + 1];
    h.resize(out_dim);
    for (int i = 0; i < out_dim; ++i) {
      double z = b[i];
      const double* wi = w + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) z += wi[j] * h_prev[j];
      h[i] = (l + 1 < n_layers) ? std::tanh(z) : z;
    }
  }

  double alpha_pre = net.params[pv.alpha_b_off];
  for (int k = 0; k < net.t_emb_dim; ++k) {
    alpha_pre += net.params[pv.alpha_w_off + k] * ws.emb[k];
  }
  ws.alpha = sigmoid(alpha_pre);
  ws.raw_out = ws.acts.back();
  for (int i = 0; i < net.data_dim; ++i) out[i] = ws.alpha * ws.raw_out[i];
}

void backward_ws(const ScoreNet& net, const NetWorkspace& ws,
                 std::span<const double> dloss_dout, std::span<double> grads) {
  const ParamView pv = layout(net);
  const std::size_t n_layers = pv.w_off.size();

  double d_alpha = 0.0;
  std::vector<double> d_h(net.data_dim);
  for (int i = 0; i < net.data_dim; ++i) {
    d_alpha += dloss_dout[i] * ws.raw_out[i];
    d_h[i] = dloss_dout[i] * ws.alpha;
  }
  const double d_alpha_pre = d_alpha * ws.alpha * (1.0 - ws.alpha);
  for (int k = 0; k < net.t_emb_dim; ++k) {
    grads[pv.alpha_w_off + k] += d_alpha_pre * ws.emb[k];
  }
  grads[pv.alpha_b_off] += d_alpha_pre;

  for (std::size_t li = n_layers; li-- > 0;) {
    const int in = pv.dims[li];
    const int out_dim = pv.dims[li + 1];
    const auto& h = ws.acts[li + 1];
    const auto& h_prev = ws.acts[li];
    // d_z from d_h; hidden layers are tanh, the last layer is linear.
    std::vector<double> d_z(out_dim);
    for (int i = 0; i < out_dim; ++i) {
      d_z[i] = (li + 1 < n_layers) ? d_h[i] * (1.0 - h[i] * h[i]) : d_h[i];
    }
    double* gw = grads.data() + pv.w_off[li];
    double* gb = grads.data() + pv.b_off[li];
    const double* w = net.params.data() + pv.w_off[li];
    std::vector<double> d_prev(in, 0.0);
    for (int i = 0; i < out_dim; ++i) {
      const double dzi = d_z[i];
      double* gwi = gw + static_cast<std::size_t>(i) * in;
      const double* wi = w + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) {
        gwi[j] += dzi * h_prev[j];
        d_prev[j] += dzi * wi[j];
      }
      gb[i] += dzi;
    }
    d_h = std::move(d_prev);
  }
}

std::vector<double> forward(const ScoreNet& net, std::span<const double> x_noisy,
                            std::span<const double> x_cond, double t) {
  NetWorkspace ws;
  std::vector<double> out(net.data_dim);
  forward_ws(net, x_noisy, x_cond, t, ws, out);
  return out;
}

namespace {

double lambda_weight(const SdeSpec& spec, double t, LambdaMode mode) {
  if (mode == LambdaMode::Variance) return kernel_moments(spec, t).var;
  const double g = drift_coeffs(spec, t).g;
  return g * g;
}

}  // namespace

LossResult dsm_loss(const ScoreNet& net, const SdeSpec& spec,
                    const std::vector<std::vector<double>>& batch_x0, LambdaMode mode,
                    Rng& rng) {
  if (batch_x0.empty()) throw ConfigError("empty batch");
  LossResult result;
  result.grads.assign(net.params.size(), 0.0);
  NetWorkspace ws;
  const int d = net.data_dim;
  std::vector<double> noise(d), x_t(d), s_out(d), dl_dout(d);
  const std::vector<double> no_cond;
  const double inv_batch = 1.0 / static_cast<double>(batch_x0.size());

  for (const auto& x0 : batch_x0) {
    if (static_cast<int>(x0.size()) != d) throw ConfigError("sample width mismatch");
    const double t = rng.uniform(kTFloor, 1.0);
    for (int i = 0; i < d; ++i) noise[i] = rng.normal();
    const KernelMoments km = kernel_moments(spec, t);
    const double s = std::sqrt(km.var);
    for (int i = 0; i < d; ++i) x_t[i] = km.mean_coeff * x0[i] + s * noise[i];
    forward_ws(net, x_t, no_cond, t, ws, s_out);
    const double lam = lambda_weight(spec, t, mode);
    double sq = 0.0;
    for (int i = 0; i < d; ++i) {
      const double r = s_out[i] + noise[i] / s;
      sq += r * r;
      dl_dout[i] = lam * r * inv_batch;
    }
    result.loss += 0.5 * lam * sq * inv_batch;
    backward_ws(net, ws, dl_dout, result.grads);
  }
  return result;
}

double regularizer_value(std::span<const double> u_hat, std::span<const double> u_true,
                         std::span<const double> u_past, int n_cells, int n_comps,
                         std::span<double> dreg_du_hat) {
  const std::size_t n = static_cast<std::size_t>(n_cells) * n_comps;
  if (u_hat.size() != n || u_true.size() != n || u_past.size() != n) {
    throw ConfigError("regularizer inputs must have n_cells * n_comps values");
  }
  // Fluctuations against the two-frame mean U = (u(tau) + u(tau-1)) / 2; the
  // past frame comes from data, so the same U applies to the prediction.
  double b = 0.0;  // sum_r' ||u'(r', tau-1)||^2
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = 0.5 * (u_true[i] + u_past[i]);
    const double past_fluct = u_past[i] - mean;
    b += past_fluct * past_fluct;
  }
  const double inv_n2 = 1.0 / (static_cast<double>(n_cells) * n_cells);
  double a = 0.0;  // sum_r ||u'(r) - u_hat'(r)||^2; the mean cancels here
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = u_true[i] - u_hat[i];
    a += diff * diff;
    if (!dreg_du_hat.empty()) dreg_du_hat[i] = -2.0 * diff * b * inv_n2;
  }
  return inv_n2 * a * b;
}

double regularizer_term(const Frame& u_hat, const Frame& u_true, const Frame& u_past,
                        const std::vector<std::string>& velocity_channels) {
  if (!u_hat.grid.same_shape(u_true.grid) || !u_hat.grid.same_shape(u_past.grid)) {
    throw ConfigError("regularizer frames must share the grid");
  }
  if (velocity_channels.empty()) throw ConfigError("no velocity channels given");
  const int n_cells = u_hat.grid.cells();
  const int n_comps = static_cast<int>(velocity_channels.size());
  std::vector<double> hat, tru, past;
  for (const auto& name : velocity_channels) {
    const auto& h = u_hat.channel(name);
    const auto& t = u_true.channel(name);
    const auto& p = u_past.channel(name);
    hat.insert(hat.end(), h.begin(), h.end());
    tru.insert(tru.end(), t.begin(), t.end());
    past.insert(past.end(), p.begin(), p.end());
  }
  return regularizer_value(hat, tru, past, n_cells, n_comps, {});
}

LossResult am_loss(const ScoreNet& net, const SdeSpec& spec, const PairBatch& batch,
                   LambdaMode mode, double lambda_w, Rng& rng) {
  if (batch.pairs.empty()) throw ConfigError("empty batch");
  const int d = net.data_dim;
  const int n_cells = batch.n_cells;
  const int n_vel = static_cast<int>(batch.velocity_channels.size());
  if (lambda_w > 0.0 && n_vel == 0) {
    throw ConfigError("regularizer needs velocity channels");
  }

  LossResult result;
  result.grads.assign(net.params.size(), 0.0);
  NetWorkspace ws;
  std::vector<double> noise(d), x_t(d), s_out(d), dl_dout(d);
  std::vector<double> vel_hat(static_cast<std::size_t>(n_vel) * n_cells);
  std::vector<double> vel_true(vel_hat.size()), vel_past(vel_hat.size());
  std::vector<double> dreg(vel_hat.size());
  const double inv_batch = 1.0 / static_cast<double>(batch.pairs.size());

  for (const auto& [x_tau, x_prev] : batch.pairs) {
    if (static_cast<int>(x_tau->size()) != d || static_cast<int>(x_prev->size()) != net.cond_dim) {
      throw ConfigError("unpaired batch: frame widths do not match the net");
    }
    const double t = rng.uniform(kTFloor, 1.0);
    for (int i = 0; i < d; ++i) noise[i] = rng.normal();
    const KernelMoments km = kernel_moments(spec, t);
    const double s = std::sqrt(km.var);
    for (int i = 0; i < d; ++i) x_t[i] = km.mean_coeff * (*x_tau)[i] + s * noise[i];
    forward_ws(net, x_t, *x_prev, t, ws, s_out);

    const double lam = lambda_weight(spec, t, mode);
    double sq = 0.0;
    for (int i = 0; i < d; ++i) {
      const double r = s_out[i] + noise[i] / s;
      sq += r * r;
      dl_dout[i] = lam * r * inv_batch;
    }
    result.loss += 0.5 * lam * sq * inv_batch;

    if (lambda_w > 0.0) {
      // Denoised prediction x0_hat = (x_t + s^2 s_theta) / m, velocity part.
      const double s2_over_m = km.var / km.mean_coeff;
      for (int c = 0; c < n_vel; ++c) {
        const int chan = batch.velocity_channels[c];
        const std::size_t src = static_cast<std::size_t>(chan) * n_cells;
        const std::size_t dst = static_cast<std::size_t>(c) * n_cells;
        for (int r = 0; r < n_cells; ++r) {
          vel_hat[dst + r] = (x_t[src + r] + km.var * s_out[src + r]) / km.mean_coeff;
          vel_true[dst + r] = (*x_tau)[src + r];
          vel_past[dst + r] = (*x_prev)[src + r];
        }
      }
      const double reg = regularizer_value(vel_hat, vel_true, vel_past, n_cells, n_vel, dreg);
      result.reg_term += reg * inv_batch;
      result.loss += lambda_w * reg * inv_batch;
      for (int c = 0; c < n_vel; ++c) {
        const int chan = batch.velocity_channels[c];
        const std::size_t src = static_cast<std::size_t>(chan) * n_cells;
        const std::size_t dst = static_cast<std::size_t>(c) * n_cells;
        for (int r = 0; r < n_cells; ++r) {
          dl_dout[src + r] += lambda_w * dreg[dst + r] * s2_over_m * inv_batch;
        }
      }
    }
    backward_ws(net, ws, dl_dout, result.grads);
  }
  return result;
}

void TrainConfig::validate() const {
  if (batch_size < 1 || epochs < 1 || !(lr >= 0.0)) {
    throw ConfigError("batch size and epochs must be positive, lr nonnegative");
  }
  if (lambda_w < 0.0) throw ConfigError("lambda_w must be >= 0");
}

namespace {

struct Adam {
  std::vector<double> m, v;
  long step = 0;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void update(std::vector<double>& params, const std::vector<double>& grads,
              const TrainConfig& cfg) {
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
};

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.index(i)]);
  }
}

template <typename BatchLossFn>
TrainHistory train_loop(ScoreNet& net, std::size_t n_items, const TrainConfig& cfg,
                        BatchLossFn&& batch_loss) {
  cfg.validate();
  Rng rng(cfg.seed);
  Adam adam(net.params.size());
  TrainHistory hist;
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, rng);
    double epoch_loss = 0.0;
    double epoch_reg = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < n_items; start += cfg.batch_size) {
      const std::size_t end = std::min(n_items, start + cfg.batch_size);
      LossResult res = batch_loss(order, start, end, rng);
      if (!std::isfinite(res.loss)) {
        throw NumericError("training diverged: non-finite loss at epoch " +
                               std::to_string(epoch),
                           epoch);
      }
      adam.update(net.params, res.grads, cfg);
      epoch_loss += res.loss;
      epoch_reg += res.reg_term;
      ++n_batches;
    }
    hist.loss.push_back(epoch_loss / n_batches);
    hist.reg.push_back(epoch_reg / n_batches);
  }
  return hist;
}

}  // namespace

TrainHistory train_samples(ScoreNet& net, const SdeSpec& spec,
                           const std::vector<std::vector<double>>& samples,
                           const TrainConfig& cfg) {
  if (samples.empty()) throw ConfigError("empty training set");
  if (net.cond_dim != 0) throw ConfigError("unconditional training needs cond_dim 0");
  return train_loop(net, samples.size(), cfg,
                    [&](const std::vector<std::size_t>& order, std::size_t start,
                        std::size_t end, Rng& rng) {
                      std::vector<std::vector<double>> batch;
                      batch.reserve(end - start);
                      for (std::size_t k = start; k < end; ++k) batch.push_back(samples[order[k]]);
                      return dsm_loss(net, spec, batch, cfg.lambda_mode, rng);
                    });
}

TrainHistory train_sequence(ScoreNet& net, const SdeSpec& spec, const Sequence& seq,
                            const TrainConfig& cfg) {
  seq.validate();
  const std::size_t n_pairs = seq.frames.size() - 1;
  std::vector<std::vector<double>> flats(seq.frames.size());
  for (std::size_t i = 0; i < seq.frames.size(); ++i) flats[i] = seq.frames[i].flatten();

  std::vector<int> vel_channels;
  for (const auto& name : seq.velocity_channels()) {
    const int idx = seq.frames.front().channel_index(name);
    if (idx >= 0) vel_channels.push_back(idx);
  }
  const int n_cells = seq.frames.front().grid.cells();

  return train_loop(net, n_pairs, cfg,
                    [&](const std::vector<std::size_t>& order, std::size_t start,
                        std::size_t end, Rng& rng) {
                      PairBatch batch;
                      batch.n_cells = n_cells;
                      batch.velocity_channels = vel_channels;
                      for (std::size_t k = start; k < end; ++k) {
                        const std::size_t p = order[k];  // pair (tau = p+1, tau-1 = p)
                        batch.pairs.emplace_back(&flats[p + 1], &flats[p]);
                      }
                      return am_loss(net, spec, batch, cfg.lambda_mode, cfg.lambda_w, rng);
                    });
}

namespace {

constexpr char kNetMagic[4] = {'S', 'N', 'E', 'T'};
constexpr std::uint32_t kNetVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError(IoError::Code::CorruptFrame, "corrupt checkpoint: truncated");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint16_t>(os, static_cast<std::uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get<std::uint16_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw IoError(IoError::Code::CorruptFrame, "corrupt checkpoint: truncated");
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(IoError::Code::Os, "cannot open '" + path + "' for writing");
  os.write(kNetMagic, 4);
  put<std::uint32_t>(os, kNetVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.spec.kind));
  put<double>(os, ckpt.spec.beta_min);
  put<double>(os, ckpt.spec.beta_max);
  put<double>(os, ckpt.spec.sigma_min);
  put<double>(os, ckpt.spec.sigma_max);
  put<double>(os, ckpt.spec.time_horizon);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.spec.n_steps));

  const ScoreNet& net = ckpt.net;
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.data_dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.cond_dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.t_emb_dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.hidden.size()));
  for (int h : net.hidden) put<std::uint32_t>(os, static_cast<std::uint32_t>(h));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(net.params.size()));
  os.write(reinterpret_cast<const char*>(net.params.data()),
           static_cast<std::streamsize>(net.params.size() * sizeof(double)));

  put<std::uint8_t>(os, ckpt.layout.has_value() ? 1 : 0);
  if (ckpt.layout) {
    const FrameLayout& fl = *ckpt.layout;
    put<std::uint32_t>(os, static_cast<std::uint32_t>(fl.grid.nx));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(fl.grid.ny));
    put<double>(os, fl.grid.dx);
    put<double>(os, fl.grid.dy);
    put<std::uint8_t>(os, fl.grid.boundary == Boundary::Periodic ? 0 : 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(fl.channel_names.size()));
    for (const auto& name : fl.channel_names) put_string(os, name);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(fl.velocity_channels.size()));
    for (int c : fl.velocity_channels) put<std::uint32_t>(os, static_cast<std::uint32_t>(c));
  }
  if (!os) throw IoError(IoError::Code::Os, "write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(IoError::Code::Os, "cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kNetMagic, 4) != 0) {
    throw IoError(IoError::Code::BadMagic, "invalid header: bad magic in '" + path + "'");
  }
  if (get<std::uint32_t>(is) != kNetVersion) {
    throw IoError(IoError::Code::InvalidHeader, "invalid header: unsupported version");
  }
  Checkpoint ckpt;
  ckpt.spec.kind = static_cast<SdeKind>(get<std::uint32_t>(is));
  ckpt.spec.beta_min = get<double>(is);
  ckpt.spec.beta_max = get<double>(is);
  ckpt.spec.sigma_min = get<double>(is);
  ckpt.spec.sigma_max = get<double>(is);
  ckpt.spec.time_horizon = get<double>(is);
  ckpt.spec.n_steps = static_cast<int>(get<std::uint32_t>(is));
  ckpt.spec.validate();

  ScoreNet& net = ckpt.net;
  net.data_dim = static_cast<int>(get<std::uint32_t>(is));
  net.cond_dim = static_cast<int>(get<std::uint32_t>(is));
  net.t_emb_dim = static_cast<int>(get<std::uint32_t>(is));
  const auto n_hidden = get<std::uint32_t>(is);
  net.hidden.resize(n_hidden);
  for (auto& h : net.hidden) h = static_cast<int>(get<std::uint32_t>(is));
  const auto n_params = get<std::uint64_t>(is);
  if (n_params != net.n_params()) {
    throw IoError(IoError::Code::InvalidHeader, "invalid header: parameter count mismatch");
  }
  net.params.resize(n_params);
  is.read(reinterpret_cast<char*>(net.params.data()),
          static_cast<std::streamsize>(n_params * sizeof(double)));
  if (!is) throw IoError(IoError::Code::CorruptFrame, "corrupt checkpoint: truncated params");

  if (get<std::uint8_t>(is) != 0) {
    FrameLayout fl;
    fl.grid.nx = static_cast<int>(get<std::uint32_t>(is));
    fl.grid.ny = static_cast<int>(get<std::uint32_t>(is));
    fl.grid.dx = get<double>(is);
    fl.grid.dy = get<double>(is);
    fl.grid.boundary = get<std::uint8_t>(is) == 0 ? Boundary::Periodic : Boundary::Replicate;
    const auto n_chan = get<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n_chan; ++i) fl.channel_names.push_back(get_string(is));
    const auto n_vel = get<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n_vel; ++i) {
      fl.velocity_channels.push_back(static_cast<int>(get<std::uint32_t>(is)));
    }
    ckpt.layout = std::move(fl);
  }
  return ckpt;
}

void write_loss_history_csv(const TrainHistory& hist, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError(IoError::Code::Os, "cannot open '" + path + "' for writing");
  os << "epoch,loss,reg_term\n";
  os.precision(17);
  for (std::size_t i = 0; i < hist.loss.size(); ++i) {
    os << i << "," << hist.loss[i] << "," << hist.reg[i] << "\n";
  }
}

}  // namespace scoreflow
