#ifndef HAPTO_SNAPSHOT_HPP
#define HAPTO_SNAPSHOT_HPP

// HSIM1 snapshots: an ASCII header line "HSIM1 <nx> <ny> <Lx> <Ly> <t>\n"
// followed by nx*ny little-endian IEEE-754 doubles in row-major order.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hapto/error.hpp"
#include "hapto/grid.hpp"

namespace hapto {

struct Snapshot {
  Field field;
  double t = 0.0;
};

namespace detail {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
}

}  // namespace detail

inline std::string snapshot_header(const Grid& g, double t) {
  return "HSIM1 " + std::to_string(g.nx) + " " + std::to_string(g.ny) + " " +
         detail::format_g17(g.domain.lx) + " " + detail::format_g17(g.domain.ly) + " " +
         detail::format_g17(t) + "\n";
}

inline void write_snapshot(std::ostream& os, const Field& f, double t) {
  const std::string header = snapshot_header(f.grid, t);
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (double v : f.values) {
    const std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    os.write(bytes, 8);
  }
}

inline void write_snapshot(const std::filesystem::path& path, const Field& f, double t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  write_snapshot(os, f, t);
  if (!os) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

inline Snapshot read_snapshot(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw Error(ErrorCode::io_error, "missing HSIM1 header");
  std::istringstream hs(header);
  std::string magic;
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;
  double t = 0.0;
  if (!(hs >> magic >> nx >> ny >> lx >> ly >> t) || magic != "HSIM1")
    throw Error(ErrorCode::io_error, "malformed HSIM1 header: " + header);
  Snapshot s{Field(Grid::make(DomainSpec{lx, ly}, nx, ny)), t};
  for (auto& v : s.field.values) {
    char bytes[8];
    if (!is.read(bytes, 8)) throw Error(ErrorCode::io_error, "truncated HSIM1 payload");
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes, 8);
    v = std::bit_cast<double>(detail::to_little_endian(bits));
  }
  return s;
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  return read_snapshot(is);
}

/// Binary graymap with linear min-max scaling; the top image row is y = Ly.
inline void write_pgm(const std::filesystem::path& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  const auto [lo_it, hi_it] = std::minmax_element(f.values.begin(), f.values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  const Grid& g = f.grid;
  os << "P5\n" << g.nx << " " << g.ny << "\n255\n";
  for (int j = g.ny - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx; ++i) {
      const double s = span > 0.0 ? (f(i, j) - lo) / span : 0.0;
      const auto byte = static_cast<unsigned char>(std::clamp(std::lround(255.0 * s), 0L, 255L));
      os.put(static_cast<char>(byte));
    }
  }
}

}  // namespace hapto

#endif  // HAPTO_SNAPSHOT_HPP
