#include "qpf/app/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "qpf/errors.hpp"
#include "qpf/models/backbones.hpp"

namespace qpf::app {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'Q', 'F', 'C', 'K'};
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
  }
  template <typename T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void floats(const float* data, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open " + path.string());
  }
  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) fail("truncated file");
  }
  template <typename T>
  T pod() {
    T v;
    bytes(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    if (n > 4096) fail("string field too long");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  bool at_end() { return in_.peek() == EOF; }
  [[noreturn]] void fail(const std::string& what) const { throw FormatError(path_.string() + ": " + what); }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

struct Block {
  std::vector<std::uint64_t> dims;
  std::vector<float> data;
};

void write_block(Writer& w, const std::string& name, const std::vector<std::uint64_t>& dims, const float* data,
                 std::size_t n) {
  w.str(name);
  w.pod(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) w.pod(d);
  w.floats(data, n);
}

std::uint8_t mode_code(models::Mode m) { return static_cast<std::uint8_t>(m); }

models::Mode mode_from_code(std::uint8_t c, const Reader& r) {
  if (c > static_cast<std::uint8_t>(models::Mode::QpMap)) r.fail("unknown mode code " + std::to_string(c));
  return static_cast<models::Mode>(c);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const models::ModelSpec spec = checkpoint_spec(ckpt);
  models::validate_weights(spec, ckpt.weights);
  Writer w(path);
  for (char c : kMagic) w.pod(c);
  w.pod(kCheckpointVersion);
  w.str(ckpt.model);
  w.pod(mode_code(ckpt.mode));
  w.str(ckpt.strategy);
  w.pod(ckpt.seed);
  w.pod(ckpt.iterations);
  w.pod(static_cast<std::uint32_t>(ckpt.qps.size()));
  for (int qp : ckpt.qps) w.pod(static_cast<std::int32_t>(qp));

  std::uint32_t nblocks = 0;
  for (const auto& c : ckpt.weights.convs) nblocks += c.bias.empty() ? 1 : 2;
  nblocks += static_cast<std::uint32_t>(ckpt.weights.thetas.size());
  w.pod(nblocks);
  for (std::size_t i = 0; i < spec.convs.size(); ++i) {
    const auto& c = ckpt.weights.convs[i];
    const auto s = c.weights.shape();
    write_block(w, spec.conv_names[i] + ".weight", {s.n, s.c, s.h, s.w}, c.weights.data().data(), s.count());
    if (!c.bias.empty()) write_block(w, spec.conv_names[i] + ".bias", {c.bias.size()}, c.bias.data(), c.bias.size());
  }
  for (std::size_t i = 0; i < ckpt.weights.thetas.size(); ++i) {
    const auto& t = ckpt.weights.thetas[i];
    write_block(w, spec.conv_names[i] + ".theta", {t.size()}, t.data(), t.size());
  }
  w.finish();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) r.fail("not a checkpoint (bad magic)");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.model = r.str();
  ckpt.mode = mode_from_code(r.pod<std::uint8_t>(), r);
  ckpt.strategy = r.str();
  ckpt.seed = r.pod<std::uint64_t>();
  ckpt.iterations = r.pod<std::uint64_t>();
  const auto nqp = r.pod<std::uint32_t>();
  if (nqp > 64) r.fail("too many QP values");
  for (std::uint32_t i = 0; i < nqp; ++i) ckpt.qps.push_back(r.pod<std::int32_t>());

  std::map<std::string, Block> blocks;
  const auto nblocks = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < nblocks; ++i) {
    std::string name = r.str();
    Block b;
    const auto ndims = r.pod<std::uint32_t>();
    if (ndims == 0 || ndims > 4) r.fail(name + ": bad dimension count");
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < ndims; ++d) {
      b.dims.push_back(r.pod<std::uint64_t>());
      count *= b.dims.back();
      if (count > kMaxElements) r.fail(name + ": block too large");
    }
    b.data.resize(count);
    r.bytes(reinterpret_cast<char*>(b.data.data()), count * sizeof(float));
    if (!blocks.emplace(name, std::move(b)).second) r.fail("duplicate block " + name);
  }
  if (!r.at_end()) r.fail("trailing data");

  models::ModelSpec spec;
  try {
    spec = checkpoint_spec(ckpt);
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
  ckpt.weights = models::zero_weights<float>(spec);
  auto take = [&](const std::string& name, const std::vector<std::uint64_t>& dims, float* dst) {
    auto it = blocks.find(name);
    if (it == blocks.end()) r.fail("missing block " + name);
    if (it->second.dims != dims) r.fail(name + ": stored shape does not match the model");
    std::copy(it->second.data.begin(), it->second.data.end(), dst);
    blocks.erase(it);
  };
  for (std::size_t i = 0; i < spec.convs.size(); ++i) {
    auto& c = ckpt.weights.convs[i];
    const auto s = c.weights.shape();
    take(spec.conv_names[i] + ".weight", {s.n, s.c, s.h, s.w}, c.weights.data().data());
    if (!c.bias.empty()) take(spec.conv_names[i] + ".bias", {c.bias.size()}, c.bias.data());
  }
  for (std::size_t i = 0; i < ckpt.weights.thetas.size(); ++i) {
    auto& t = ckpt.weights.thetas[i];
    take(spec.conv_names[i] + ".theta", {t.size()}, t.data());
  }
  if (!blocks.empty()) r.fail("unexpected block " + blocks.begin()->first);
  return ckpt;
}

models::ModelSpec checkpoint_spec(const Checkpoint& ckpt) { return models::build_model(ckpt.model, ckpt.mode); }

models::ModelWeights<float> weights_for_mode(const Checkpoint& ckpt, models::Mode mode) {
  if (mode == ckpt.mode) return ckpt.weights;
  if (ckpt.mode == models::Mode::Vanilla && mode == models::Mode::QpAdaptive) {
    models::ModelWeights<float> w = models::zero_weights<float>(models::build_model(ckpt.model, mode));
    w.convs = ckpt.weights.convs;
    return w;
  }
  throw std::invalid_argument("checkpoint is " + models::to_string(ckpt.mode) + ", cannot run it in " +
                              models::to_string(mode) + " mode");
}

}  // namespace qpf::app
