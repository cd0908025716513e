#pragma once

#include <span>
#include <string>
#include <vector>

#include "scoreflow/field.hpp"

namespace scoreflow {

// Shell-averaged kinetic energy spectrum of velocity fluctuations.
// Convention: per frame, u' = u - spatial mean per component; full complex
// 2D FFT, forward unnormalized; mode power |u'_hat|^2 / (nx ny)^2; shells are
// integer-radius annuli k - 1/2 <= |kappa| < k + 1/2 in index frequencies,
// covering every mode (k up to the corner of the frequency box) so the shell
// sum satisfies Parseval: sum_k E(k) = (1/2) <||u'||^2>.
struct SpectrumResult {
  std::vector<double> shells;                  // kappa_k = 1..K
  std::vector<std::vector<double>> per_frame;  // E(kappa_k, tau)
  std::vector<double> time_avg;                // (1/T) sum_tau E(kappa_k, tau)

  double total_energy() const;  // sum of time-averaged shell values
};

SpectrumResult energy_spectrum(const Sequence& seq);
SpectrumResult energy_spectrum_frame(const Frame& frame,
                                     const std::vector<std::string>& velocity_channels);

// (1/K) sum_k [log(E_gt + eps) - log(E_pred + eps)]^2 on matching shells.
double log_mse(const SpectrumResult& gt, const SpectrumResult& pred, double eps = 1e-12);

// Least-squares slope of log E over log kappa restricted to [k_min, k_max].
double fit_loglog_slope(const SpectrumResult& spec, int k_min, int k_max);

// ---- Field metrics ----

double mse(const Frame& pred, const Frame& gt);  // averaged over channels

struct PccResult {
  double value = 0.0;
  bool degenerate = false;  // a constant field has no defined correlation
};
PccResult pcc(const Frame& pred, const Frame& gt);

// KL(gt || pred) between 64-bin histograms over the union value range with
// additive smoothing 1e-10 per bin; averaged over channels for frames.
double kl_hist(const Frame& pred, const Frame& gt, int bins = 64);
double kl_hist_values(std::span<const double> gt, std::span<const double> pred,
                      int bins = 64);

struct MetricsReport {
  std::vector<double> mse_per_tau;
  std::vector<double> pcc_per_tau;
  std::vector<double> kl_per_tau;
  double mse_avg = 0.0;
  double pcc_avg = 0.0;
  double kl_avg = 0.0;
  bool pcc_degenerate = false;
};

// Per-tau metrics between matching frames of two sequences plus time
// averages (initial frames included when both sequences carry them).
MetricsReport sequence_metrics(const Sequence& pred, const Sequence& gt);

// ---- Derived fields ----

// 2D vorticity  omega = dv/dx - du/dy, central differences.
std::vector<double> vorticity(const Frame& frame);
// Q = (1/2)(Omega:Omega - D:D) with the 2D strain/rotation rate tensors.
std::vector<double> q_criterion(const Frame& frame);

// Spatial mean of ||u|| per frame.
std::vector<double> velocity_magnitude_series(const Sequence& seq);

void write_spectrum_csv(const SpectrumResult& spec, const std::string& path);
void write_metrics_report(const MetricsReport& report, const std::string& path);

}  // namespace scoreflow
