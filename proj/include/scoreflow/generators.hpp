#pragma once

#include <cstdint>
#include <vector>

#include "scoreflow/field.hpp"

namespace scoreflow {

// 1D i.i.d. draws from a Gaussian mixture; desk-scale stand-in for a data
// distribution.
std::vector<double> make_gaussian_mixture_dataset(const std::vector<double>& weights,
                                                  const std::vector<double>& means,
                                                  const std::vector<double>& stds,
                                                  int n_samples, std::uint64_t seed);

// Two-channel (u, v) periodic sequence: each step cyclically advects the
// previous frame by (cx, cy) cells per unit tau (bilinear resampling, exact
// for integer shifts) and adds seeded noise of amplitude noise_amp.
Sequence make_advected_blob_sequence(const Grid2& grid, double cx, double cy,
                                     int n_steps, std::uint64_t seed,
                                     double noise_amp = 0.01);

// Divergence-free two-channel velocity field whose shell spectrum follows
// kappa^slope exactly on shells k_min..k_max, random phases. Divergence is
// zero for the periodic central-difference operator by construction.
Frame make_spectral_field(const Grid2& grid, double slope, int k_min, int k_max,
                          std::uint64_t seed);

}  // namespace scoreflow
