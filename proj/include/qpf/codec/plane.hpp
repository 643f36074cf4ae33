#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace qpf::codec {

// Single-channel image with real-valued samples, row-major.
struct Plane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  Plane() = default;
  Plane(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), pixels(w * h, fill) {}

  bool empty() const { return pixels.empty(); }
  double& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  bool operator==(const Plane&) const = default;
};

// Clip to [0, 255] and round half away from zero.
std::uint8_t to_byte(double v);
std::vector<std::uint8_t> to_bytes(const Plane& p);
Plane from_bytes(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& bytes);

// Edge-replicates `p` on the right and bottom up to (width, height).
Plane pad_replicate(const Plane& p, std::size_t width, std::size_t height);
Plane crop(const Plane& p, std::size_t x0, std::size_t y0, std::size_t width, std::size_t height);

double mean_squared_error(const Plane& a, const Plane& b);

// Binary PGM (P5), maxval 255. Throws IoError / FormatError.
Plane read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Plane& p);

}  // namespace qpf::codec
