#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "qpf/codec/codec.hpp"
#include "qpf/codec/dataset.hpp"
#include "qpf/codec/dct.hpp"
#include "qpf/codec/plane.hpp"
#include "qpf/codec/synthetic.hpp"
#include "qpf/errors.hpp"
#include "qpf/modulation/modulation.hpp"

using namespace qpf;
using namespace qpf::codec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("qpf_codec_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<double> random_block(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-200, 200);
  std::vector<double> b(n * n);
  for (auto& v : b) v = d(rng);
  return b;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Plane noise_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  Plane p(w, h);
  for (auto& v : p.pixels) v = d(rng);
  return p;
}

}  // namespace

TEST(Dct, InverseAndParseval) {
  for (std::size_t n : {4u, 8u, 16u}) {
    const BlockDct dct(n);
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto b = random_block(n, s);
      const auto c = dct.dct2(b);
      const auto back = dct.idct2(c);
      double e_pix = 0.0, e_coef = 0.0;
      for (std::size_t i = 0; i < b.size(); ++i) {
        EXPECT_NEAR(back[i], b[i], 1e-10);
        e_pix += b[i] * b[i];
        e_coef += c[i] * c[i];
      }
      EXPECT_NEAR(e_pix, e_coef, 1e-10 * e_pix);
    }
  }
}

TEST(Dct, ConstantBlockHasOnlyDc) {
  const BlockDct dct(8);
  const auto c = dct.dct2(std::vector<double>(64, 37.0));
  EXPECT_NEAR(c[0], 37.0 * 8.0, 1e-12);
  for (std::size_t i = 1; i < 64; ++i) EXPECT_NEAR(c[i], 0.0, 1e-12);
}

TEST(Dct, MatchesDirectDefinition) {
  // 2-D DCT-II evaluated straight from the cosine sum.
  const std::size_t n = 8;
  const BlockDct dct(n);
  const auto b = random_block(n, 77);
  const auto c = dct.dct2(b);
  const double pi = std::acos(-1.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      double s = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          s += b[y * n + x] * std::cos(pi * (2.0 * y + 1.0) * u / (2.0 * n)) *
               std::cos(pi * (2.0 * x + 1.0) * v / (2.0 * n));
        }
      }
      const double cu = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      const double cv = v == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      EXPECT_NEAR(c[u * n + v], cu * cv * s, 1e-9);
    }
  }
}

TEST(Quantizer, Examples) {
  EXPECT_EQ(quantize_coeff(10.3, 8.0, 0.5).value, 8.0);
  EXPECT_EQ(quantize_coeff(10.3, 8.0, 0.5).level, 1);
  EXPECT_EQ(quantize_coeff(-10.3, 8.0, 0.5).level, -1);
  EXPECT_EQ(quantize_coeff(12.0, 8.0, 0.5).level, 2);
  for (double q : {0.5, 1.0, 8.0, 90.0}) EXPECT_EQ(quantize_coeff(0.0, q, 0.5).value, 0.0);
  const double unit = modulation::qstep_from_qp(4);
  for (int c = -300; c <= 300; ++c) EXPECT_EQ(quantize_coeff(c, unit, 0.5).value, c);
}

TEST(Quantizer, EntropyOfKnownSequences) {
  EXPECT_EQ(entropy_bits({3, 3, 3, 3}), 0.0);
  EXPECT_NEAR(entropy_bits({0, 1, 0, 1}), 1.0, 1e-15);
  EXPECT_NEAR(entropy_bits({0, 1, 2, 3}), 2.0, 1e-15);
  EXPECT_NEAR(entropy_bits({5, 5, 5, 9}), -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25)), 1e-15);
}

TEST(Quantizer, ConfigValidation) {
  QuantizerConfig bad;
  bad.qp = 64;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.block_size = 1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.offset = 0.7;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Encode, ConstantImageCostsNoAcBits) {
  Plane flat(32, 24, 100.0);
  QuantizerConfig cfg;
  cfg.qp = 40;
  const auto r = encode_decode(flat, cfg);
  EXPECT_EQ(r.ac_bits, 0.0);
  EXPECT_EQ(r.dc_bits, 0.0);  // every block has the same DC level
  for (double v : r.recon.pixels) EXPECT_NEAR(v, 100.0, 4.0);
  EXPECT_EQ(r.recon.width, 32u);
}

TEST(Encode, RateAndDistortionMonotoneInQp) {
  const Plane img = synthetic_image(5, 128, 128);
  double prev_rate = std::numeric_limits<double>::infinity(), prev_mse = -1.0;
  for (int qp : {22, 27, 32, 37}) {
    QuantizerConfig cfg;
    cfg.qp = qp;
    const auto r = encode_decode(img, cfg);
    const double mse = mean_squared_error(img, r.recon);
    EXPECT_LT(r.rate_bits, prev_rate) << qp;
    EXPECT_GT(mse, prev_mse) << qp;
    prev_rate = r.rate_bits;
    prev_mse = mse;
  }
}

TEST(Encode, ErrorVarianceNearUniformModel) {
  // Uniform noise images keep almost every coefficient far from zero, so the
  // pixel-domain error variance follows qstep^2 / 12 (the orthonormal
  // transform preserves it) up to clipping and the final rounding.
  const Plane img = noise_image(128, 128, 3);
  for (int qp : {22, 27, 32, 37}) {
    QuantizerConfig cfg;
    cfg.qp = qp;
    const auto r = encode_decode(img, cfg);
    const double q = modulation::qstep_from_qp(qp);
    const double ratio = mean_squared_error(img, r.recon) / (q * q / 12.0);
    EXPECT_GT(ratio, 0.5) << qp;
    EXPECT_LT(ratio, 2.0) << qp;
  }
}

TEST(Encode, RequantizationIsNearlyIdempotent) {
  const Plane img = synthetic_image(9, 96, 80);
  for (int qp : {22, 27, 32, 37}) {
    QuantizerConfig cfg;
    cfg.qp = qp;
    const auto once = encode_decode(img, cfg);
    const auto twice = encode_decode(once.recon, cfg);
    const double m1 = mean_squared_error(img, once.recon);
    const double m2 = mean_squared_error(img, twice.recon);
    EXPECT_LT(std::abs(m2 - m1), 0.05 * m1) << qp;
  }
}

TEST(Encode, OddSizesArePaddedAndCropped) {
  const Plane img = synthetic_image(4, 37, 21);
  const auto r = encode_decode(img, {});
  EXPECT_EQ(r.recon.width, 37u);
  EXPECT_EQ(r.recon.height, 21u);
  EXPECT_EQ(r.coefficients, 40u * 24u);
  for (double v : r.recon.pixels) {
    EXPECT_EQ(v, std::round(v));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 255.0);
  }
}

TEST(NoiseScan, SlopeNearTwoOverallAndPerBin) {
  const auto r = noise_power_scan({22, 27, 32, 37});
  EXPECT_GE(r.coefficients_per_qp, 1'000'000u);
  EXPECT_NEAR(r.slope, 2.0, 0.05);
  ASSERT_EQ(r.bin_slopes.size(), 64u);
  for (double s : r.bin_slopes) EXPECT_NEAR(s, 2.0, 0.2);
  for (double u : r.uniform_ratio) EXPECT_NEAR(u, 1.0, 0.05);
}

TEST(NoiseScan, RejectsTooFewQps) { EXPECT_THROW(noise_power_scan({22, 37}), std::invalid_argument); }

TEST(NoiseScan, FitLineExact) {
  const auto [m, b] = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_NEAR(m, 2.0, 1e-14);
  EXPECT_NEAR(b, 1.0, 1e-14);
}

TEST(Plane, PgmRoundTripAndPadding) {
  const auto dir = scratch("pgm");
  fs::create_directories(dir);
  const Plane img = synthetic_image(2, 19, 7);
  write_pgm(dir / "a.pgm", img);
  EXPECT_EQ(read_pgm(dir / "a.pgm"), img);
  EXPECT_THROW(read_pgm(dir / "missing.pgm"), IoError);
  std::ofstream(dir / "bad.pgm") << "P2\n1 1\n255\n0\n";
  EXPECT_THROW(read_pgm(dir / "bad.pgm"), FormatError);

  const Plane padded = pad_replicate(img, 24, 8);
  EXPECT_EQ(padded.at(23, 7), img.at(18, 6));
  EXPECT_EQ(padded.at(20, 3), img.at(18, 3));
  EXPECT_EQ(crop(padded, 0, 0, 19, 7), img);
  fs::remove_all(dir);
}

TEST(Plane, ToByteRoundsAndClamps) {
  EXPECT_EQ(to_byte(-3.0), 0);
  EXPECT_EQ(to_byte(300.0), 255);
  EXPECT_EQ(to_byte(2.5), 3);
  EXPECT_EQ(to_byte(2.49), 2);
}

TEST(Synthetic, DeterministicAndInRange) {
  const Plane a = synthetic_image(11, 64, 48);
  EXPECT_EQ(a, synthetic_image(11, 64, 48));
  EXPECT_FALSE(a == synthetic_image(12, 64, 48));
  double mean = 0.0;
  for (double v : a.pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 255.0);
    mean += v;
  }
  EXPECT_NEAR(mean / static_cast<double>(a.pixels.size()), 128.0, 20.0);
}

TEST(Dataset, CountsAndDeterminism) {
  DatasetSpec spec;
  spec.seed = 3;
  spec.count = 8;
  spec.image_size = 128;
  spec.patch = 64;
  spec.qps = {22, 27, 32, 37};
  const auto a = scratch("ds_a"), b = scratch("ds_b");
  const auto entries = prepare_dataset(spec, a);
  prepare_dataset(spec, b);
  std::size_t total = 0;
  for (const auto& e : entries) total += e.patches;
  EXPECT_EQ(total, 4u * 8u * 4u);
  for (const auto& f : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(f.path()), slurp(b / f.path().filename())) << f.path();
  }
  const SampleStore store(a);
  EXPECT_EQ(store.qps(), (std::vector<int>{22, 27, 32, 37}));
  EXPECT_EQ(store.counts("train").at(27), 32u);
  const auto set = store.load("train", 32);
  EXPECT_EQ(set.count, 32u);
  EXPECT_EQ(set.original.size(), 32u * 64u * 64u);
  EXPECT_EQ(read_manifest(a / "manifest.csv"), entries);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Dataset, ValidationSplitIsDisjointAndAligned) {
  DatasetSpec spec;
  spec.seed = 4;
  spec.count = 5;
  spec.validation_images = 2;
  spec.qps = {22, 37};
  const auto dir = scratch("ds_split");
  const auto entries = prepare_dataset(spec, dir);
  std::set<std::string> train, val;
  for (const auto& e : entries) (e.split == "train" ? train : val).insert(e.image);
  EXPECT_EQ(train.size(), 3u);
  EXPECT_EQ(val.size(), 2u);
  for (const auto& v : val) EXPECT_EQ(train.count(v), 0u);
  // Originals agree across QPs; reconstructions do not.
  const SampleStore store(dir);
  const auto lo = store.load("val", 22), hi = store.load("val", 37);
  EXPECT_EQ(lo.original, hi.original);
  EXPECT_NE(lo.recon, hi.recon);
  fs::remove_all(dir);
}

TEST(Dataset, PatchFileRoundTripAndCorruption) {
  const auto dir = scratch("patch");
  fs::create_directories(dir);
  PatchSet s;
  s.qp = 27;
  s.patch = 4;
  s.count = 2;
  for (int i = 0; i < 32; ++i) {
    s.original.push_back(static_cast<std::uint8_t>(i * 7));
    s.recon.push_back(static_cast<std::uint8_t>(255 - i));
  }
  write_patch_file(dir / "p.qsim", s);
  EXPECT_EQ(read_patch_file(dir / "p.qsim"), s);
  auto bytes = slurp(dir / "p.qsim");
  bytes.resize(bytes.size() - 3);
  std::ofstream(dir / "short.qsim", std::ios::binary) << bytes;
  EXPECT_THROW(read_patch_file(dir / "short.qsim"), FormatError);
  EXPECT_THROW(read_patch_file(dir / "none.qsim"), IoError);
  fs::remove_all(dir);
}

TEST(Dataset, ImageDirectoryInput) {
  const auto src = scratch("imgs");
  fs::create_directories(src);
  write_pgm(src / "b.pgm", synthetic_image(1, 130, 70));
  write_pgm(src / "a.pgm", synthetic_image(2, 64, 64));
  DatasetSpec spec;
  spec.image_dir = src;
  spec.qps = {32};
  const auto out = scratch("imgs_out");
  const auto entries = prepare_dataset(spec, out);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].image, "a");
  EXPECT_EQ(entries[0].patches, 1u);
  EXPECT_EQ(entries[1].patches, 6u);  // padded to 192x128
  fs::remove_all(src);
  fs::remove_all(out);
}

TEST(Dataset, SpecValidation) {
  DatasetSpec spec;
  spec.count = 0;
  spec.qps = {22};
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec.count = 4;
  spec.validation_images = 4;
  EXPECT_THROW(prepare_dataset(spec, scratch("never")), std::invalid_argument);
}
