#include "qpf/codec/dct.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qpf/errors.hpp"

namespace qpf::codec {

BlockDct::BlockDct(std::size_t size) : n_(size), basis_(size * size) {
  if (size < 2) throw std::invalid_argument("BlockDct: block size must be at least 2");
  const double n = static_cast<double>(size);
  for (std::size_t k = 0; k < size; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < size; ++i) {
      basis_[k * size + i] =
          scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(k) / (2.0 * n));
    }
  }
}

void BlockDct::check(std::size_t in, std::size_t out) const {
  if (in != n_ * n_ || out != n_ * n_) {
    throw ShapeError("BlockDct: expected " + std::to_string(n_ * n_) + " values, got " +
                     std::to_string(in) + " in / " + std::to_string(out) + " out");
  }
}

// X = C B C^T, computed as two separable passes.
void BlockDct::forward(std::span<const double> block, std::span<double> coeffs) const {
  check(block.size(), coeffs.size());
  std::vector<double> tmp(n_ * n_, 0.0);
  for (std::size_t k = 0; k < n_; ++k) {
    for (std::size_t j = 0; j < n_; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_; ++i) acc += basis_[k * n_ + i] * block[i * n_ + j];
      tmp[k * n_ + j] = acc;
    }
  }
  for (std::size_t k = 0; k < n_; ++k) {
    for (std::size_t l = 0; l < n_; ++l) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) acc += tmp[k * n_ + j] * basis_[l * n_ + j];
      coeffs[k * n_ + l] = acc;
    }
  }
}

// B = C^T X C.
void BlockDct::inverse(std::span<const double> coeffs, std::span<double> block) const {
  check(coeffs.size(), block.size());
  std::vector<double> tmp(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t l = 0; l < n_; ++l) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n_; ++k) acc += basis_[k * n_ + i] * coeffs[k * n_ + l];
      tmp[i * n_ + l] = acc;
    }
  }
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < n_; ++l) acc += tmp[i * n_ + l] * basis_[l * n_ + j];
      block[i * n_ + j] = acc;
    }
  }
}

std::vector<double> BlockDct::dct2(std::span<const double> block) const {
  std::vector<double> out(block.size());
  forward(block, out);
  return out;
}

std::vector<double> BlockDct::idct2(std::span<const double> coeffs) const {
  std::vector<double> out(coeffs.size());
  inverse(coeffs, out);
  return out;
}

}  // namespace qpf::codec
