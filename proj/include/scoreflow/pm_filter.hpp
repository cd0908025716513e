#pragma once

#include <string>
#include <vector>

#include "scoreflow/field.hpp"

namespace scoreflow {

struct PmConfig {
  double gamma = 0.05;    // edge threshold
  double eta = 0.03;      // step size
  double epsilon = 1e-8;  // gradient-norm floor inside the square root
  int n_iters = 20;

  void validate() const;
};

// Discrete anisotropic diffusion, applied componentwise to the selected
// channels (others untouched). Per iteration, in index space:
//   G = (half central differences), D = (1 + (|grad u| / gamma)^2)^-1 with
//   |grad u| = sqrt(Gx^2 + Gy^2 + epsilon), J = D G, u += eta div J.
// Stencils use the grid's boundary mode.
Frame pm_filter(const Frame& frame, const std::vector<std::string>& channels,
                const PmConfig& cfg);

// Single-channel variant on raw data.
void pm_filter_channel(std::vector<double>& data, const Grid2& grid, const PmConfig& cfg);

// Ratio of the max central-difference gradient magnitude after filtering to
// the one before; ~1 means edges survived.
double edge_retention(const std::vector<double>& original,
                      const std::vector<double>& filtered, const Grid2& grid);

}  // namespace scoreflow
