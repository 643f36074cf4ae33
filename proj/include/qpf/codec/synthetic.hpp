#pragma once

#include <cstddef>
#include <cstdint>

#include "qpf/codec/plane.hpp"

namespace qpf::codec {

// Gaussian random field with amplitude spectrum 1/f (power 1/f^2), scaled to
// mean 128 and standard deviation 48, then clipped and rounded to 8-bit
// values. Same (seed, size) gives the same image.
Plane synthetic_image(std::uint64_t seed, std::size_t width, std::size_t height);

}  // namespace qpf::codec
