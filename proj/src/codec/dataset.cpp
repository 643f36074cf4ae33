#include "qpf/codec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qpf/codec/codec.hpp"
#include "qpf/codec/synthetic.hpp"
#include "qpf/errors.hpp"
#include "qpf/modulation/modulation.hpp"

namespace qpf::codec {
namespace {

constexpr const char* kManifestHeader = "split,image,qp,file,patches,rate_bits,mse";

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_field(const std::string& s, const std::string& what) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("manifest: bad " + what + " '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Source {
  std::string name;
  Plane image;
};

std::vector<Source> load_sources(const DatasetSpec& spec) {
  std::vector<Source> out;
  if (spec.image_dir) {
    if (!std::filesystem::is_directory(*spec.image_dir)) {
      throw IoError("image directory not found: " + spec.image_dir->string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(*spec.image_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (spec.count > 0 && files.size() > spec.count) files.resize(spec.count);
    for (const auto& f : files) out.push_back({f.stem().string(), read_pgm(f)});
  } else {
    for (std::size_t i = 0; i < spec.count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "syn%04zu", i);
      // Per-image seeds are derived, so image i does not depend on count.
      out.push_back({name, synthetic_image(spec.seed * 1000003ULL + i, spec.image_size, spec.image_size)});
    }
  }
  if (out.empty()) throw std::invalid_argument("dataset has no images");
  for (const auto& s : out) {
    if (s.image.width < spec.patch || s.image.height < spec.patch) {
      throw std::invalid_argument("image " + s.name + " is smaller than one " + std::to_string(spec.patch) +
                                  "-pixel patch");
    }
  }
  return out;
}

}  // namespace

void DatasetSpec::validate() const {
  if (patch < 8) throw std::invalid_argument("patch size must be at least 8");
  if (qps.empty()) throw std::invalid_argument("qp list is empty");
  for (int qp : qps) {
    if (qp < modulation::kMinQp || qp > modulation::kMaxQp) {
      throw std::invalid_argument("qp " + std::to_string(qp) + " outside [0, 63]");
    }
  }
  if (std::set<int>(qps.begin(), qps.end()).size() != qps.size()) {
    throw std::invalid_argument("qp list has duplicates");
  }
  if (!image_dir && count == 0) throw std::invalid_argument("synthetic dataset needs count > 0");
  if (!image_dir && image_size < patch) throw std::invalid_argument("image size smaller than patch size");
}

std::vector<Plane> tile(const Plane& p, std::size_t patch) {
  if (patch == 0) throw std::invalid_argument("tile: patch size 0");
  const std::size_t w = (p.width + patch - 1) / patch * patch;
  const std::size_t h = (p.height + patch - 1) / patch * patch;
  const Plane padded = pad_replicate(p, w, h);
  std::vector<Plane> out;
  for (std::size_t y = 0; y < h; y += patch) {
    for (std::size_t x = 0; x < w; x += patch) out.push_back(crop(padded, x, y, patch, patch));
  }
  return out;
}

void write_patch_file(const std::filesystem::path& path, const PatchSet& set) {
  const std::size_t px = set.patch * set.patch;
  if (set.original.size() != set.count * px || set.recon.size() != set.count * px) {
    throw ShapeError("patch set sizes do not match its header");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "QSIM1 " << set.patch << ' ' << set.qp << ' ' << set.count << '\n';
  std::vector<char> pairs(2 * px);
  for (std::size_t i = 0; i < set.count; ++i) {
    for (std::size_t j = 0; j < px; ++j) {
      pairs[2 * j] = static_cast<char>(set.original[i * px + j]);
      pairs[2 * j + 1] = static_cast<char>(set.recon[i * px + j]);
    }
    out.write(pairs.data(), static_cast<std::streamsize>(pairs.size()));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

PatchSet read_patch_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  PatchSet set;
  if (!(hs >> magic >> set.patch >> set.qp >> set.count) || magic != "QSIM1" || set.patch == 0) {
    throw FormatError(path.string() + ": bad sample file header");
  }
  const std::size_t px = set.patch * set.patch;
  std::vector<char> pairs(2 * px * set.count);
  in.read(pairs.data(), static_cast<std::streamsize>(pairs.size()));
  if (in.gcount() != static_cast<std::streamsize>(pairs.size()) || in.peek() != EOF) {
    throw FormatError(path.string() + ": payload does not match header");
  }
  set.original.resize(px * set.count);
  set.recon.resize(px * set.count);
  for (std::size_t i = 0; i < px * set.count; ++i) {
    set.original[i] = static_cast<std::uint8_t>(pairs[2 * i]);
    set.recon[i] = static_cast<std::uint8_t>(pairs[2 * i + 1]);
  }
  return set;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& e : entries) {
    out << e.split << ',' << e.image << ',' << e.qp << ',' << e.file << ',' << e.patches << ','
        << format_double(e.rate_bits) << ',' << format_double(e.mse) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) throw FormatError(path.string() + ": bad manifest header");
  std::vector<ManifestEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw FormatError(path.string() + ": bad manifest row '" + line + "'");
    ManifestEntry e;
    e.split = f[0];
    e.image = f[1];
    e.qp = parse_field<int>(f[2], "qp");
    e.file = f[3];
    e.patches = parse_field<std::size_t>(f[4], "patch count");
    e.rate_bits = parse_field<double>(f[5], "rate");
    e.mse = parse_field<double>(f[6], "mse");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> prepare_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  const auto sources = load_sources(spec);
  if (spec.validation_images >= sources.size()) {
    throw std::invalid_argument("validation split would leave no training images");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<ManifestEntry> entries;
  const std::size_t first_val = sources.size() - spec.validation_images;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i];
    const auto originals = tile(src.image, spec.patch);
    for (int qp : spec.qps) {
      QuantizerConfig cfg;
      cfg.block_size = spec.block_size;
      cfg.qp = qp;
      const EncodeResult enc = encode_decode(src.image, cfg);
      const auto recons = tile(enc.recon, spec.patch);

      PatchSet set;
      set.qp = qp;
      set.patch = spec.patch;
      set.count = originals.size();
      for (std::size_t p = 0; p < originals.size(); ++p) {
        const auto o = to_bytes(originals[p]);
        const auto r = to_bytes(recons[p]);
        set.original.insert(set.original.end(), o.begin(), o.end());
        set.recon.insert(set.recon.end(), r.begin(), r.end());
      }
      ManifestEntry e;
      e.split = i < first_val ? "train" : "val";
      e.image = src.name;
      e.qp = qp;
      e.file = src.name + "_qp" + std::to_string(qp) + ".qsim";
      e.patches = set.count;
      e.rate_bits = enc.rate_bits;
      e.mse = mean_squared_error(src.image, enc.recon);
      write_patch_file(out_dir / e.file, set);
      entries.push_back(std::move(e));
    }
  }
  write_manifest(out_dir / "manifest.csv", entries);
  return entries;
}

SampleStore::SampleStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  const auto manifest = dir_ / "manifest.csv";
  if (!std::filesystem::exists(manifest)) throw IoError("no dataset at " + dir_.string() + " (manifest.csv missing)");
  entries_ = read_manifest(manifest);
}

std::vector<int> SampleStore::qps() const {
  std::set<int> s;
  for (const auto& e : entries_) s.insert(e.qp);
  return {s.begin(), s.end()};
}

bool SampleStore::has_split(const std::string& split) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.split == split; });
}

PatchSet SampleStore::load(const std::string& split, int qp) const {
  PatchSet out;
  out.qp = qp;
  for (const auto& e : entries_) {
    if (e.split != split || e.qp != qp) continue;
    PatchSet s = read_patch_file(dir_ / e.file);
    if (s.qp != qp || s.count != e.patches) throw FormatError(e.file + ": does not match manifest");
    if (out.patch != 0 && s.patch != out.patch) throw FormatError(e.file + ": patch size differs from other files");
    out.patch = s.patch;
    out.count += s.count;
    out.original.insert(out.original.end(), s.original.begin(), s.original.end());
    out.recon.insert(out.recon.end(), s.recon.begin(), s.recon.end());
  }
  if (out.count == 0) {
    throw std::invalid_argument("dataset " + dir_.string() + " has no " + split + " samples at qp " + std::to_string(qp));
  }
  return out;
}

double SampleStore::rate_bits(const std::string& split, int qp) const {
  double sum = 0.0;
  for (const auto& e : entries_) {
    if (e.split == split && e.qp == qp) sum += e.rate_bits;
  }
  return sum;
}

std::map<int, std::size_t> SampleStore::counts(const std::string& split) const {
  std::map<int, std::size_t> out;
  for (const auto& e : entries_) {
    if (e.split == split) out[e.qp] += e.patches;
  }
  return out;
}

}  // namespace qpf::codec
