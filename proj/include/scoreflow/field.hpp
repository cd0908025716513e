#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scoreflow/errors.hpp"

namespace scoreflow {

enum class Boundary { Periodic, Replicate };

// Uniform rectangular grid. Values live on nodes (ix, iy) at positions
// (ix*dx, iy*dy); stencils wrap (Periodic) or clamp (Replicate).
struct Grid2 {
  int nx = 0;
  int ny = 0;
  double dx = 1.0;
  double dy = 1.0;
  Boundary boundary = Boundary::Periodic;

  void validate() const;
  int cells() const { return nx * ny; }
  bool same_shape(const Grid2& other) const {
    return nx == other.nx && ny == other.ny;
  }
};

struct Channel {
  std::string name;
  std::vector<double> data;  // nx*ny, index ix*ny + iy
};

// Multi-channel scalar fields on one grid at physical time index tau.
struct Frame {
  Grid2 grid;
  std::vector<Channel> channels;
  std::int64_t tau = 0;

  double& at(int c, int ix, int iy) { return channels[c].data[ix * grid.ny + iy]; }
  double at(int c, int ix, int iy) const { return channels[c].data[ix * grid.ny + iy]; }

  // Index of the named channel, -1 if absent.
  int channel_index(const std::string& name) const;
  // Throws ConfigError when the channel is missing.
  const std::vector<double>& channel(const std::string& name) const;
  std::vector<double>& channel(const std::string& name);

  int width() const { return static_cast<int>(channels.size()) * grid.cells(); }
  // Concatenated channel data (channel-major).
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& values);
  bool all_finite() const;
};

Frame make_frame(const Grid2& grid, const std::vector<std::string>& channel_names,
                 std::int64_t tau = 0);

// Frames at strictly increasing tau over one grid, plus free-form metadata
// (e.g. scenario parameters, velocity channel roles).
struct Sequence {
  std::vector<Frame> frames;
  std::map<std::string, std::string> metadata;

  void validate() const;
  // Velocity channel names from the "velocity_channels" metadata entry
  // (comma-separated); defaults to {"u","v"} filtered to existing channels.
  std::vector<std::string> velocity_channels() const;
};

// Binary frame format, little-endian:
//   "SFLD" | u32 version=1 | u32 nx | u32 ny | u32 n_channels | i64 tau
//   per channel: u16 name_len | name bytes | nx*ny f64 (row-major, x outer)
// Grid spacing and boundary mode are not part of the frame file; sequence
// metadata carries them (keys dx, dy, boundary).
void write_frame(const Frame& frame, const std::string& path);
Frame read_frame(const std::string& path);

// Sequence directory: frame_<tau>.sfld files plus metadata.txt (key=value).
void write_sequence(const Sequence& seq, const std::string& dir);
Sequence read_sequence(const std::string& dir);

// Two-column/triplet CSV exports for plotting.
void write_channel_csv(const Frame& frame, const std::string& channel,
                       const std::string& path);

}  // namespace scoreflow
