#pragma once

#include "stackreg/grid.hpp"
#include "stackreg/stack_io.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stackreg {

struct SynthAtom {
  /// Fractional coordinates in the lattice basis.
  Vec2 position;
  double brightness = 1.0;
  /// Gaussian width (px).
  double sigma = 1.0;
};

struct SynthPld {
  /// Peak displacement (px). Zero disables the PLD.
  double amplitude = 0.0;
  /// Wavevector (cycles/px).
  Vec2 wavevector;
  /// Displacement perpendicular to the wavevector instead of along it.
  bool transverse = false;
};

enum class DriftKind { random_walk, constant_velocity, piecewise, explicit_positions };
std::string_view to_string(DriftKind kind);
DriftKind parse_drift_kind(std::string_view name);

struct DriftSegment {
  int frames = 0;
  Vec2 velocity;
};

struct DriftModel {
  DriftKind kind = DriftKind::random_walk;
  /// random-walk: per-frame step standard deviation per axis (px/frame).
  double step_sigma = 1.0;
  /// constant-velocity (px/frame).
  Vec2 velocity;
  /// piecewise: consecutive constant-velocity runs covering the stack.
  std::vector<DriftSegment> segments;
  /// explicit: stage position per frame (px).
  std::vector<Vec2> positions;
};

struct SynthParams {
  int height = 256;
  int width = 256;
  int frame_count = 40;
  double frame_time = 1.0;
  std::optional<double> pixel_size;
  /// Lattice vectors (px).
  Vec2 a1{24.0, 0.0};
  Vec2 a2{0.0, 24.0};
  std::vector<SynthAtom> atoms;
  /// Relative standard deviation of per-site brightness (cation disorder).
  double disorder = 0.0;
  SynthPld pld;
  /// Peak-to-peak amplitude of a smooth random background, relative to the
  /// brightest atom.
  double background = 0.0;
  /// Correlation length of the background (px).
  double background_scale = 16.0;
  DriftModel drift;
  /// Expected counts at the brightest scene pixel per frame. Unset renders
  /// noiseless frames on the same scale with a peak of 1.
  std::optional<double> dose;
  /// Frames receiving burst distortion (row-block offsets).
  std::vector<int> corrupt_frames;
  /// Largest per-block offset (px) in burst frames.
  int burst_amplitude = 6;
  /// Rows per displaced block in burst frames.
  int burst_rows = 8;
  /// Number of offsets the blocks cycle through; 0 gives every block its own.
  int burst_groups = 0;
  /// Scene padding on every side of the frame (px); drift plus burst
  /// offsets must stay inside it.
  int margin = 48;
  std::uint64_t seed = 1;
};

struct SynthTruth {
  /// Stage position p_i per frame; frame i shows scene(x - p_i).
  std::vector<Vec2> positions;
  Vec2 a1;
  Vec2 a2;
  /// PLD phase 2 pi q.x at the frame origin of each frame.
  std::vector<double> pld_phase;
  std::vector<int> corrupt_frames;
};

/// Throws invalid_params listing every offending field.
void validate_synth_params(const SynthParams& params);

/// Stage positions implied by the drift model (random walks draw from the
/// seed).
std::vector<Vec2> drift_positions(const SynthParams& params);

/// Noiseless supersampled scene of size (H + 2 margin) x (W + 2 margin),
/// periodic so that Fourier shifting is exact. Peak value 1.
Image render_scene(const SynthParams& params);

struct SynthResult {
  ImageStack stack;
  SynthTruth truth;
};

/// Deterministic for fixed params: frame i uses the sub-seed
/// splitmix64(seed + i + 1), so frames can be rendered in any order.
SynthResult generate_stack(const SynthParams& params, int threads = 0);

/// Lattice period bumped by half a pixel and explicit drift whose
/// consecutive steps have fractional parts near 0.5 on both axes.
SynthParams inject_unit_cell_ambiguity(const SynthParams& params);

/// Named presets: paper-like-40, nb3cl8-like-27, ambiguous.
SynthParams synth_preset(std::string_view name);
std::vector<std::string> synth_preset_names();

void to_json(nlohmann::json& j, const SynthParams& params);
void from_json(const nlohmann::json& j, SynthParams& params);
void to_json(nlohmann::json& j, const SynthTruth& truth);
void from_json(const nlohmann::json& j, SynthTruth& truth);

/// Strict parse: unknown keys and bad values throw invalid_params naming the
/// fields. Missing keys keep the values from `base`.
SynthParams parse_synth_params(const nlohmann::json& j, const SynthParams& base = {});

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace stackreg
