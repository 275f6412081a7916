#include "stackreg/stack_io.hpp"

#include "stackreg/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cfenv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace stackreg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

void check_frame(const Image& frame, std::size_t index, int height, int width) {
  if (frame.height() != height || frame.width() != width) {
    std::ostringstream msg;
    msg << "frame " << index << " is " << frame.height() << "x" << frame.width()
        << ", expected " << height << "x" << width;
    throw Error(ErrorCode::dimension_mismatch, msg.str());
  }
  const auto values = frame.values();
  const auto bad = std::find_if(values.begin(), values.end(),
                                [](double v) { return !std::isfinite(v); });
  if (bad != values.end()) {
    const auto offset = static_cast<int>(bad - values.begin());
    std::ostringstream msg;
    msg << "frame " << index << " has a non-finite pixel at (" << offset / width << ", "
        << offset % width << ")";
    throw Error(ErrorCode::non_finite_pixel, msg.str());
  }
}

}  // namespace

void validate_stack(const ImageStack& stack) {
  const auto& m = stack.metadata;
  if (m.frame_count < 2 || stack.frames.size() < 2) {
    throw Error(ErrorCode::too_few_frames, "a stack needs at least 2 frames");
  }
  if (static_cast<std::size_t>(m.frame_count) != stack.frames.size()) {
    throw Error(ErrorCode::invalid_metadata, "frame_count does not match the number of frames");
  }
  if (m.height <= 0 || m.width <= 0) {
    throw Error(ErrorCode::invalid_metadata, "height and width must be positive");
  }
  if (!(m.frame_time > 0.0) || !std::isfinite(m.frame_time)) {
    throw Error(ErrorCode::invalid_metadata, "frame_time must be positive");
  }
  if (m.pixel_size && (!(*m.pixel_size > 0.0) || !std::isfinite(*m.pixel_size))) {
    throw Error(ErrorCode::invalid_metadata, "pixel_size must be positive");
  }
  for (std::size_t i = 0; i < stack.frames.size(); ++i) {
    check_frame(stack.frames[i], i, m.height, m.width);
  }
}

ImageStack make_stack(std::vector<Image> frames, double frame_time,
                      std::optional<double> pixel_size) {
  ImageStack stack;
  stack.metadata.frame_count = static_cast<int>(frames.size());
  if (!frames.empty()) {
    stack.metadata.height = frames.front().height();
    stack.metadata.width = frames.front().width();
  }
  stack.metadata.frame_time = frame_time;
  stack.metadata.pixel_size = pixel_size;
  stack.frames = std::move(frames);
  validate_stack(stack);
  return stack;
}

Image load_raw_image(const fs::path& path, int height, int width) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, "cannot open frame file " + path.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  const std::uint64_t expected =
      static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(width) * sizeof(float);
  if (bytes != expected) {
    std::ostringstream msg;
    msg << path.string() << " holds " << bytes / sizeof(float) << " float32 values, expected "
        << height << "x" << width << " = " << expected / sizeof(float);
    throw Error(ErrorCode::dimension_mismatch, msg.str());
  }
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(height) * width);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw Error(ErrorCode::io_error, "short read from " + path.string());

  Image image(height, width);
  auto dst = image.values();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    dst[i] = static_cast<double>(std::bit_cast<float>(to_little_endian(raw[i])));
  }
  return image;
}

ImageStack load_stack(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::missing_file, "cannot open manifest " + manifest_path.string());

  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_manifest, "manifest is not valid JSON: " + std::string(e.what()));
  }

  ImageStack stack;
  std::vector<std::string> files;
  try {
    const auto dtype = manifest.at("dtype").get<std::string>();
    if (dtype != "float32") {
      throw Error(ErrorCode::invalid_manifest, "unsupported dtype '" + dtype + "'");
    }
    if (manifest.contains("byte_order") && manifest.at("byte_order").get<std::string>() != "little") {
      throw Error(ErrorCode::invalid_manifest, "only little-endian frames are supported");
    }
    stack.metadata.height = manifest.at("height").get<int>();
    stack.metadata.width = manifest.at("width").get<int>();
    stack.metadata.frame_time = manifest.at("frame_time").get<double>();
    if (manifest.contains("pixel_size") && !manifest.at("pixel_size").is_null()) {
      stack.metadata.pixel_size = manifest.at("pixel_size").get<double>();
    }
    files = manifest.at("frames").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_manifest, "malformed manifest: " + std::string(e.what()));
  }

  stack.metadata.frame_count = static_cast<int>(files.size());
  if (files.size() < 2) throw Error(ErrorCode::too_few_frames, "a stack needs at least 2 frames");
  if (stack.metadata.height <= 0 || stack.metadata.width <= 0) {
    throw Error(ErrorCode::invalid_metadata, "height and width must be positive");
  }

  const fs::path base = manifest_path.parent_path();
  stack.frames.reserve(files.size());
  for (const auto& name : files) {
    const fs::path frame_path = fs::path(name).is_absolute() ? fs::path(name) : base / name;
    if (!fs::exists(frame_path)) {
      throw Error(ErrorCode::missing_file, "frame file not found: " + frame_path.string());
    }
    stack.frames.push_back(load_raw_image(frame_path, stack.metadata.height, stack.metadata.width));
  }
  validate_stack(stack);
  return stack;
}

fs::path save_stack(const ImageStack& stack, const fs::path& directory) {
  validate_stack(stack);
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + directory.string());

  json frames = json::array();
  for (std::size_t i = 0; i < stack.frames.size(); ++i) {
    std::ostringstream name;
    name << "frame_" << std::setw(4) << std::setfill('0') << i << ".f32";
    save_image(stack.frames[i], directory / name.str(), ImageFormat::raw_float32);
    frames.push_back(name.str());
  }

  json manifest = {
      {"format", "stackreg.stack"},
      {"version", 1},
      {"dtype", "float32"},
      {"byte_order", "little"},
      {"height", stack.metadata.height},
      {"width", stack.metadata.width},
      {"frame_time", stack.metadata.frame_time},
      {"pixel_size", stack.metadata.pixel_size ? json(*stack.metadata.pixel_size) : json(nullptr)},
      {"frames", frames},
  };
  const fs::path manifest_path = directory / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
  return manifest_path;
}

std::vector<std::uint16_t> scale_to_u16(const Image& image) {
  std::vector<std::uint16_t> out(image.size(), 0);
  const auto values = image.values();
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return out;

  const int saved_mode = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double span = hi - lo;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double scaled = std::nearbyint((values[i] - lo) / span * 65535.0);
    out[i] = static_cast<std::uint16_t>(std::clamp(scaled, 0.0, 65535.0));
  }
  std::fesetround(saved_mode);
  return out;
}

void save_image(const Image& image, const fs::path& path, ImageFormat format) {
  const auto values = image.values();
  if (std::any_of(values.begin(), values.end(), [](double v) { return !std::isfinite(v); })) {
    throw Error(ErrorCode::non_finite_pixel, "cannot save an image with non-finite pixels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());

  if (format == ImageFormat::raw_float32) {
    std::vector<std::uint32_t> raw(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      raw[i] = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
  } else {
    const auto scaled = scale_to_u16(image);
    out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
    std::vector<unsigned char> bytes(scaled.size() * 2);
    for (std::size_t i = 0; i < scaled.size(); ++i) {
      bytes[2 * i] = static_cast<unsigned char>(scaled[i] >> 8);
      bytes[2 * i + 1] = static_cast<unsigned char>(scaled[i] & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

}  // namespace stackreg
