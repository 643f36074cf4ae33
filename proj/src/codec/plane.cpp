#include "qpf/codec/plane.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "qpf/errors.hpp"

namespace qpf::codec {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

std::vector<std::uint8_t> to_bytes(const Plane& p) {
  std::vector<std::uint8_t> out(p.pixels.size());
  std::transform(p.pixels.begin(), p.pixels.end(), out.begin(), to_byte);
  return out;
}

Plane from_bytes(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() != width * height) {
    throw ShapeError("from_bytes: " + std::to_string(bytes.size()) + " bytes for a " +
                     std::to_string(width) + "x" + std::to_string(height) + " plane");
  }
  Plane p(width, height);
  std::copy(bytes.begin(), bytes.end(), p.pixels.begin());
  return p;
}

Plane pad_replicate(const Plane& p, std::size_t width, std::size_t height) {
  if (p.empty()) throw ShapeError("pad_replicate: empty plane");
  if (width < p.width || height < p.height) throw ShapeError("pad_replicate: target smaller than plane");
  Plane out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = std::min(y, p.height - 1);
    for (std::size_t x = 0; x < width; ++x) out.at(x, y) = p.at(std::min(x, p.width - 1), sy);
  }
  return out;
}

Plane crop(const Plane& p, std::size_t x0, std::size_t y0, std::size_t width, std::size_t height) {
  if (x0 + width > p.width || y0 + height > p.height) throw ShapeError("crop: window outside plane");
  Plane out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    std::copy_n(p.pixels.begin() + static_cast<std::ptrdiff_t>((y0 + y) * p.width + x0), width,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(y * width));
  }
  return out;
}

double mean_squared_error(const Plane& a, const Plane& b) {
  if (a.width != b.width || a.height != b.height) throw ShapeError("mean_squared_error: size mismatch");
  if (a.empty()) throw ShapeError("mean_squared_error: empty planes");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.pixels.size());
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

std::size_t pgm_number(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = pgm_token(in);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(c); })) {
    throw FormatError(path.string() + ": bad PGM header field '" + tok + "'");
  }
  return std::stoul(tok);
}

}  // namespace

Plane read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (pgm_token(in) != "P5") throw FormatError(path.string() + ": not a binary PGM (P5)");
  const std::size_t w = pgm_number(in, path);
  const std::size_t h = pgm_number(in, path);
  const std::size_t maxval = pgm_number(in, path);
  if (w == 0 || h == 0) throw FormatError(path.string() + ": empty image");
  if (maxval != 255) throw FormatError(path.string() + ": only 8-bit PGM (maxval 255) is supported");
  std::vector<std::uint8_t> bytes(w * h);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError(path.string() + ": truncated pixel data");
  }
  return from_bytes(w, h, bytes);
}

void write_pgm(const std::filesystem::path& path, const Plane& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << p.width << ' ' << p.height << "\n255\n";
  const auto bytes = to_bytes(p);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace qpf::codec
