#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qpf::codec {

// Orthonormal 2-D type-II DCT on square blocks of a fixed size.
class BlockDct {
 public:
  explicit BlockDct(std::size_t size);

  std::size_t size() const { return n_; }

  // Both take and return row-major size x size blocks; in and out may alias.
  void forward(std::span<const double> block, std::span<double> coeffs) const;
  void inverse(std::span<const double> coeffs, std::span<double> block) const;

  std::vector<double> dct2(std::span<const double> block) const;
  std::vector<double> idct2(std::span<const double> coeffs) const;

 private:
  void check(std::size_t in, std::size_t out) const;

  std::size_t n_;
  std::vector<double> basis_;  // basis_[k * n + i] = c_k cos(pi (2i + 1) k / 2n)
};

}  // namespace qpf::codec
