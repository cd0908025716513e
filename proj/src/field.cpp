#include "scoreflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace scoreflow {

namespace fs = std::filesystem;

void Grid2::validate() const {
  if (nx < 4 || ny < 4) {
    throw ConfigError("grid dimensions must satisfy nx >= 4 and ny >= 4");
  }
  if (!(dx > 0.0) || !(dy > 0.0)) {
    throw ConfigError("grid spacing must be positive");
  }
}

int Frame::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const std::vector<double>& Frame::channel(const std::string& name) const {
  const int idx = channel_index(name);
  if (idx < 0) throw ConfigError("missing channel '" + name + "'");
  return channels[idx].data;
}

std::vector<double>& Frame::channel(const std::string& name) {
  const int idx = channel_index(name);
  if (idx < 0) throw ConfigError("missing channel '" + name + "'");
  return channels[idx].data;
}

std::vector<double> Frame::flatten() const {
  std::vector<double> out;
  out.reserve(width());
  for (const auto& c : channels) out.insert(out.end(), c.data.begin(), c.data.end());
  return out;
}

void Frame::unflatten(const std::vector<double>& values) {
  if (static_cast<int>(values.size()) != width()) {
    throw ConfigError("flattened size does not match frame width");
  }
  std::size_t pos = 0;
  for (auto& c : channels) {
    std::copy(values.begin() + pos, values.begin() + pos + c.data.size(), c.data.begin());
    pos += c.data.size();
  }
}

bool Frame::all_finite() const {
  for (const auto& c : channels) {
    for (double v : c.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

Frame make_frame(const Grid2& grid, const std::vector<std::string>& channel_names,
                 std::int64_t tau) {
  grid.validate();
  Frame f;
  f.grid = grid;
  f.tau = tau;
  for (const auto& name : channel_names) {
    f.channels.push_back({name, std::vector<double>(static_cast<std::size_t>(grid.cells()), 0.0)});
  }
  return f;
}

void Sequence::validate() const {
  if (frames.size() < 2) throw ConfigError("sequence needs at least 2 frames");
  const Frame& first = frames.front();
  std::int64_t prev_tau = first.tau;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    if (f.tau <= prev_tau) throw ConfigError("sequence tau values must be strictly increasing");
    prev_tau = f.tau;
    if (!f.grid.same_shape(first.grid) || f.channels.size() != first.channels.size()) {
      throw ConfigError("sequence frames must share grid and channel list");
    }
    for (std::size_t c = 0; c < f.channels.size(); ++c) {
      if (f.channels[c].name != first.channels[c].name) {
        throw ConfigError("sequence frames must share channel names");
      }
    }
  }
}

std::vector<std::string> Sequence::velocity_channels() const {
  std::vector<std::string> names;
  auto it = metadata.find("velocity_channels");
  if (it != metadata.end()) {
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) names.push_back(item);
    }
    return names;
  }
  if (!frames.empty()) {
    for (const char* cand : {"u", "v"}) {
      if (frames.front().channel_index(cand) >= 0) names.emplace_back(cand);
    }
  }
  return names;
}

namespace {

constexpr char kMagic[4] = {'S', 'F', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw IoError(IoError::Code::CorruptFrame, "corrupt frame: truncated file");
  return value;
}

}  // namespace

void write_frame(const Frame& frame, const std::string& path) {
  frame.grid.validate();
  if (frame.channels.empty()) {
    throw IoError(IoError::Code::InvalidHeader, "invalid header: frame has no channels");
  }
  if (!frame.all_finite()) {
    throw IoError(IoError::Code::NonFinite, "refusing to write non-finite values");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(IoError::Code::Os, "cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(frame.grid.nx));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(frame.grid.ny));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(frame.channels.size()));
  put<std::int64_t>(os, frame.tau);
  for (const auto& c : frame.channels) {
    put<std::uint16_t>(os, static_cast<std::uint16_t>(c.name.size()));
    os.write(c.name.data(), static_cast<std::streamsize>(c.name.size()));
    os.write(reinterpret_cast<const char*>(c.data.data()),
             static_cast<std::streamsize>(c.data.size() * sizeof(double)));
  }
  if (!os) throw IoError(IoError::Code::Os, "write failed for '" + path + "'");
}

Frame read_frame(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(IoError::Code::Os, "cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError(IoError::Code::BadMagic, "invalid header: bad magic in '" + path + "'");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) {
    throw IoError(IoError::Code::InvalidHeader, "invalid header: unsupported version");
  }
  const auto nx = get<std::uint32_t>(is);
  const auto ny = get<std::uint32_t>(is);
  const auto n_channels = get<std::uint32_t>(is);
  const auto tau = get<std::int64_t>(is);
  if (nx < 4 || ny < 4 || n_channels == 0 || nx > (1u << 20) || ny > (1u << 20)) {
    throw IoError(IoError::Code::InvalidHeader, "invalid header: bad shape in '" + path + "'");
  }
  Frame frame;
  frame.grid = Grid2{static_cast<int>(nx), static_cast<int>(ny), 1.0, 1.0, Boundary::Periodic};
  frame.tau = tau;
  const std::size_t cells = static_cast<std::size_t>(nx) * ny;
  for (std::uint32_t c = 0; c < n_channels; ++c) {
    const auto name_len = get<std::uint16_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw IoError(IoError::Code::CorruptFrame, "corrupt frame: truncated channel name");
    Channel chan;
    chan.name = std::move(name);
    chan.data.resize(cells);
    is.read(reinterpret_cast<char*>(chan.data.data()),
            static_cast<std::streamsize>(cells * sizeof(double)));
    if (!is) throw IoError(IoError::Code::CorruptFrame, "corrupt frame: truncated data");
    frame.channels.push_back(std::move(chan));
  }
  if (!frame.all_finite()) {
    throw IoError(IoError::Code::NonFinite, "frame contains non-finite values");
  }
  return frame;
}

namespace {

std::string frame_filename(std::int64_t tau) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06lld.sfld", static_cast<long long>(tau));
  return buf;
}

std::string boundary_name(Boundary b) {
  return b == Boundary::Periodic ? "periodic" : "replicate";
}

Boundary boundary_from_name(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "replicate") return Boundary::Replicate;
  throw ConfigError("unknown boundary mode '" + s + "'", "boundary");
}

}  // namespace

void write_sequence(const Sequence& seq, const std::string& dir) {
  seq.validate();
  fs::create_directories(dir);
  const Grid2& g = seq.frames.front().grid;
  std::map<std::string, std::string> meta = seq.metadata;
  meta["dx"] = std::to_string(g.dx);
  meta["dy"] = std::to_string(g.dy);
  meta["boundary"] = boundary_name(g.boundary);
  std::ofstream os(fs::path(dir) / "metadata.txt");
  if (!os) throw IoError(IoError::Code::Os, "cannot write metadata in '" + dir + "'");
  for (const auto& [k, v] : meta) os << k << "=" << v << "\n";
  for (const auto& f : seq.frames) {
    write_frame(f, (fs::path(dir) / frame_filename(f.tau)).string());
  }
}

Sequence read_sequence(const std::string& dir) {
  Sequence seq;
  const fs::path root(dir);
  if (!fs::is_directory(root)) {
    throw IoError(IoError::Code::Os, "'" + dir + "' is not a sequence directory");
  }
  std::ifstream meta(root / "metadata.txt");
  if (meta) {
    std::string line;
    while (std::getline(meta, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos || line.empty()) continue;
      seq.metadata[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.path().extension() == ".sfld") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) seq.frames.push_back(read_frame(p.string()));
  std::sort(seq.frames.begin(), seq.frames.end(),
            [](const Frame& a, const Frame& b) { return a.tau < b.tau; });
  double dx = 1.0, dy = 1.0;
  Boundary boundary = Boundary::Periodic;
  if (auto it = seq.metadata.find("dx"); it != seq.metadata.end()) dx = std::stod(it->second);
  if (auto it = seq.metadata.find("dy"); it != seq.metadata.end()) dy = std::stod(it->second);
  if (auto it = seq.metadata.find("boundary"); it != seq.metadata.end()) {
    boundary = boundary_from_name(it->second);
  }
  for (auto& f : seq.frames) {
    f.grid.dx = dx;
    f.grid.dy = dy;
    f.grid.boundary = boundary;
  }
  seq.validate();
  return seq;
}

void write_channel_csv(const Frame& frame, const std::string& channel,
                       const std::string& path) {
  const auto& data = frame.channel(channel);
  std::ofstream os(path);
  if (!os) throw IoError(IoError::Code::Os, "cannot open '" + path + "' for writing");
  os << "x,y,value\n";
  os.precision(17);
  for (int ix = 0; ix < frame.grid.nx; ++ix) {
    for (int iy = 0; iy < frame.grid.ny; ++iy) {
      os << ix * frame.grid.dx << "," << iy * frame.grid.dy << ","
         << data[static_cast<std::size_t>(ix) * frame.grid.ny + iy] << "\n";
    }
  }
}

}  // namespace scoreflow
