#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qpf/codec/plane.hpp"

namespace qpf::codec {

struct DatasetSpec {
  // Directory of .pgm files (sorted by name). When unset, `count` synthetic
  // images of `image_size` squared pixels are generated from `seed`.
  std::optional<std::filesystem::path> image_dir;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::size_t image_size = 128;
  std::size_t patch = 64;
  std::vector<int> qps;
  // The last `validation_images` images form the validation split.
  std::size_t validation_images = 0;
  std::size_t block_size = 8;

  void validate() const;
};

struct ManifestEntry {
  std::string split;  // "train" or "val"
  std::string image;
  int qp = 0;
  std::string file;
  std::size_t patches = 0;
  double rate_bits = 0.0;
  double mse = 0.0;
  bool operator==(const ManifestEntry&) const = default;
};

// Patches of one (image, qp) pair, or several concatenated.
struct PatchSet {
  int qp = 0;
  std::size_t patch = 0;
  std::size_t count = 0;
  std::vector<std::uint8_t> original;  // count * patch * patch, patch-major
  std::vector<std::uint8_t> recon;
  bool operator==(const PatchSet&) const = default;
};

// Tiles `p` (edge-replicated up to a multiple of `patch`) in raster order.
std::vector<Plane> tile(const Plane& p, std::size_t patch);

// Writes one sample file per (image, qp) plus manifest.csv into `out_dir`.
// Images are encoded whole, then original and reconstruction are tiled.
std::vector<ManifestEntry> prepare_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);

void write_patch_file(const std::filesystem::path& path, const PatchSet& set);
PatchSet read_patch_file(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// Read access to a prepared dataset directory.
class SampleStore {
 public:
  explicit SampleStore(std::filesystem::path dir);

  const std::vector<ManifestEntry>& manifest() const { return entries_; }
  std::vector<int> qps() const;
  bool has_split(const std::string& split) const;

  // All patches of `split` at `qp`, concatenated in manifest order.
  PatchSet load(const std::string& split, int qp) const;

  // Summed rate of `split` at `qp`.
  double rate_bits(const std::string& split, int qp) const;

  // Patch count per QP of `split`.
  std::map<int, std::size_t> counts(const std::string& split) const;

 private:
  std::filesystem::path dir_;
  std::vector<ManifestEntry> entries_;
};

}  // namespace qpf::codec
