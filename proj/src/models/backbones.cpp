#include "qpf/models/backbones.hpp"

#include <charconv>
#include <stdexcept>

namespace qpf::models {

using engine::Activation;

ModelSpec build_dcad(Mode mode) {
  GraphBuilder b("dcad", mode);
  std::size_t h = b.input();
  for (int i = 1; i <= 9; ++i) {
    h = b.conv(h, 64, 3, "conv" + std::to_string(i));
    h = b.activate(h, Activation::relu());
  }
  h = b.conv(h, 1, 3, "conv10");
  return b.finish(b.add(b.image(), h), true);
}

ModelSpec build_vrcnn(Mode mode) {
  GraphBuilder b("vrcnn", mode);
  std::size_t h = b.input();
  h = b.activate(b.conv(h, 64, 5, "conv1", false), Activation::relu());
  const std::size_t a2 = b.conv(h, 16, 5, "conv2_5x5", false);
  const std::size_t b2 = b.conv(h, 32, 3, "conv2_3x3", false);
  h = b.activate(b.concat(a2, b2), Activation::relu());
  const std::size_t a3 = b.conv(h, 16, 3, "conv3_3x3", false);
  const std::size_t b3 = b.conv(h, 32, 1, "conv3_1x1", false);
  h = b.activate(b.concat(a3, b3), Activation::relu());
  h = b.conv(h, 1, 3, "conv4", false);
  return b.finish(b.add(b.image(), h), true);
}

ModelSpec build_liu_dsc(Mode mode, std::size_t width) {
  if (width == 0) throw std::invalid_argument("liu: width must be positive");
  GraphBuilder b("liu:" + std::to_string(width), mode);
  std::size_t h = b.input();
  h = b.activate(b.conv(h, width, 3, "stem"), Activation::relu());
  for (std::size_t i = 1; i <= kLiuBlocks; ++i) {
    h = b.conv(h, width, 3, "dw" + std::to_string(i), true, width);
    h = b.conv(h, width, 1, "pw" + std::to_string(i));
    h = b.activate(h, Activation::relu());
  }
  h = b.conv(h, 1, 3, "out");
  return b.finish(b.add(b.image(), h), true, true);
}

ModelSpec build_tucodec_mini(Mode mode, std::size_t blocks) {
  if (blocks == 0) throw std::invalid_argument("tucodec: block count must be positive");
  constexpr std::size_t kWidth = 64;
  GraphBuilder b("tucodec:" + std::to_string(blocks), mode);
  std::size_t h = b.input();
  h = b.activate(b.conv(h, kWidth, 3, "stem"), Activation::leaky_relu());
  for (std::size_t i = 1; i <= blocks; ++i) {
    const std::string tag = "res" + std::to_string(i);
    std::size_t r = b.activate(b.conv(h, kWidth, 3, tag + "a"), Activation::leaky_relu());
    r = b.conv(r, kWidth, 3, tag + "b");
    h = b.add(h, r);
  }
  h = b.conv(h, 1, 3, "out");
  return b.finish(b.add(b.image(), h), true, true);
}

namespace {

std::size_t parse_size_suffix(std::string_view text, std::size_t fallback) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return fallback;
  const std::string_view digits = text.substr(colon + 1);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || value == 0) {
    throw std::invalid_argument("bad backbone argument in '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

ModelSpec build_model(std::string_view name, Mode mode) {
  const std::string_view base = name.substr(0, name.find(':'));
  if (base == "dcad" && base.size() == name.size()) return build_dcad(mode);
  if (base == "vrcnn" && base.size() == name.size()) return build_vrcnn(mode);
  if (base == "liu") return build_liu_dsc(mode, parse_size_suffix(name, kLiuDefaultWidth));
  if (base == "tucodec") return build_tucodec_mini(mode, parse_size_suffix(name, kTucodecDefaultBlocks));
  throw std::invalid_argument("unknown backbone '" + std::string(name) + "'");
}

std::vector<std::string> backbone_names() { return {"liu", "vrcnn", "dcad", "tucodec"}; }

std::size_t reference_param_count(std::string_view backbone) {
  const std::string_view base = backbone.substr(0, backbone.find(':'));
  if (base == "liu") return 12'266;
  if (base == "vrcnn") return 54'512;
  if (base == "dcad") return 296'641;
  if (base == "tucodec") return 447'681;
  throw std::invalid_argument("unknown backbone '" + std::string(backbone) + "'");
}

}  // namespace qpf::models
