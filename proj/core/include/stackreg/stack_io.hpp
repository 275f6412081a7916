#pragma once

#include "stackreg/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace stackreg {

/// Acquisition metadata shared by every frame of a stack.
struct StackMetadata {
  int frame_count = 0;
  int height = 0;
  int width = 0;
  /// Seconds between frame starts.
  double frame_time = 1.0;
  /// Angstrom per pixel, when known.
  std::optional<double> pixel_size;
};

struct ImageStack {
  StackMetadata metadata;
  std::vector<Image> frames;
};

/// Throws Error for any violated metadata or frame invariant.
void validate_stack(const ImageStack& stack);

/// Builds a stack from frames, deriving the geometry fields and validating.
ImageStack make_stack(std::vector<Image> frames, double frame_time,
                      std::optional<double> pixel_size = std::nullopt);

/// Reads a JSON manifest plus the raw float32 little-endian frame files it
/// lists. Frame paths are resolved relative to the manifest directory.
ImageStack load_stack(const std::filesystem::path& manifest_path);

/// Writes one raw frame per file plus `manifest.json` into `directory`.
/// Returns the manifest path.
std::filesystem::path save_stack(const ImageStack& stack, const std::filesystem::path& directory);

enum class ImageFormat { raw_float32, pgm16 };

void save_image(const Image& image, const std::filesystem::path& path, ImageFormat format);

/// Row-major float32 little-endian, no header.
Image load_raw_image(const std::filesystem::path& path, int height, int width);

/// Min-max scaling to [0, 65535], ties to even. Constant images map to 0.
std::vector<std::uint16_t> scale_to_u16(const Image& image);

}  // namespace stackreg
