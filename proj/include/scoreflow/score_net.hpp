#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scoreflow/field.hpp"
#include "scoreflow/rng.hpp"
#include "scoreflow/sde.hpp"

namespace scoreflow {

enum class LambdaMode { Variance, Likelihood };

// Fully connected score model s_theta(x_noisy, x_cond, t) with tanh hidden
// layers, a linear output layer, and a learnable logistic output scale
// alpha(t_emb) that modulates the correction magnitude with the noise level.
// Conditioning enters by plain concatenation of the previous-state vector.
// All parameters live in one flat vector (weights | biases per layer, then
// alpha weights and bias) so the optimizer and finite-difference checks can
// treat the model as a single parameter array.
struct ScoreNet {
  int data_dim = 0;
  int cond_dim = 0;
  int t_emb_dim = 16;
  std::vector<int> hidden;
  std::vector<double> params;

  int input_dim() const { return data_dim + cond_dim + t_emb_dim; }
  std::vector<int> layer_dims() const;
  std::size_t n_params() const;
};

ScoreNet make_score_net(int data_dim, int cond_dim, const std::vector<int>& hidden,
                        std::uint64_t seed, int t_emb_dim = 16);

// Sinusoidal embedding of diffusion time, frequencies pi * 2^k.
void time_embedding(double t, std::span<double> out);

std::vector<double> forward(const ScoreNet& net, std::span<const double> x_noisy,
                            std::span<const double> x_cond, double t);

// Forward pass retaining activations, and reverse-mode accumulation of
// parameter gradients for a given dL/d(output). Exposed for the loss
// implementations and gradient tests.
struct NetWorkspace {
  std::vector<std::vector<double>> acts;
  std::vector<double> emb;
  double alpha = 0.0;
  std::vector<double> raw_out;
};

void forward_ws(const ScoreNet& net, std::span<const double> x_noisy,
                std::span<const double> x_cond, double t, NetWorkspace& ws,
                std::span<double> out);
void backward_ws(const ScoreNet& net, const NetWorkspace& ws,
                 std::span<const double> dloss_dout, std::span<double> grads);

struct LossResult {
  double loss = 0.0;
  double reg_term = 0.0;
  std::vector<double> grads;
};

// Monte-Carlo denoising score matching loss over a batch of clean samples:
// (1/2) lambda(t) || s_theta(x_t, t) + noise/s(t) ||^2 averaged over the
// batch, t ~ U[kTFloor, 1]. lambda = s^2(t) (Variance) or g^2(t)
// (Likelihood).
LossResult dsm_loss(const ScoreNet& net, const SdeSpec& spec,
                    const std::vector<std::vector<double>>& batch_x0,
                    LambdaMode mode, Rng& rng);

// Conditional autoregressive loss over (x^tau, x^{tau-1}) pairs: the DSM term
// with the past frame concatenated as conditioning, plus lambda_w times the
// cross-correlation regularizer evaluated on the velocity components of the
// denoised prediction x0_hat = (x_t + s^2 s_theta)/m.
struct PairBatch {
  // Flattened frames, channel-major; each entry is (x_tau, x_prev).
  std::vector<std::pair<const std::vector<double>*, const std::vector<double>*>> pairs;
  int n_cells = 0;
  std::vector<int> velocity_channels;
};

LossResult am_loss(const ScoreNet& net, const SdeSpec& spec, const PairBatch& batch,
                   LambdaMode mode, double lambda_w, Rng& rng);

// Factorized fluctuation cross-correlation penalty
//   (1/|Omega|^2) sum_r ||u'(r) - u_hat'(r)||^2 sum_r' ||u'(r', tau-1)||^2
// with fluctuations taken against the two-frame mean of the data frames.
double regularizer_term(const Frame& u_hat, const Frame& u_true, const Frame& u_past,
                        const std::vector<std::string>& velocity_channels);

// Raw-array variant used inside the losses; velocity components are
// contiguous blocks of n_cells values.
double regularizer_value(std::span<const double> u_hat, std::span<const double> u_true,
                         std::span<const double> u_past, int n_cells, int n_comps,
                         std::span<double> dreg_du_hat);

struct TrainConfig {
  int batch_size = 32;
  int epochs = 100;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  double lambda_w = 0.0;
  LambdaMode lambda_mode = LambdaMode::Variance;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> loss;
  std::vector<double> reg;
};

// Adam with bias correction; deterministic given cfg.seed. Throws
// NumericError if the loss turns non-finite.
TrainHistory train_samples(ScoreNet& net, const SdeSpec& spec,
                           const std::vector<std::vector<double>>& samples,
                           const TrainConfig& cfg);
TrainHistory train_sequence(ScoreNet& net, const SdeSpec& spec, const Sequence& seq,
                            const TrainConfig& cfg);

// Frame shape bound to a conditional model so rollouts can rebuild frames.
struct FrameLayout {
  Grid2 grid;
  std::vector<std::string> channel_names;
  std::vector<int> velocity_channels;
};

struct Checkpoint {
  ScoreNet net;
  SdeSpec spec;
  std::optional<FrameLayout> layout;
};

// "SNET" binary checkpoint: layer sizes, parameters as f64 little-endian,
// plus the SdeSpec the model was trained against.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

void write_loss_history_csv(const TrainHistory& hist, const std::string& path);

}  // namespace scoreflow
