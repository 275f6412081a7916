#include "helpers.hpp"

#include "stackreg/synth.hpp"

#include <nlohmann/json.hpp>

using namespace stackreg;

namespace {

SynthParams small_params() {
  SynthParams p;
  p.height = 64;
  p.width = 64;
  p.frame_count = 4;
  p.a1 = {12.0, 0.0};
  p.a2 = {0.0, 12.0};
  p.atoms = {{{0.0, 0.0}, 1.0, 1.5}, {{0.5, 0.5}, 0.6, 1.5}};
  p.drift.kind = DriftKind::constant_velocity;
  p.drift.velocity = {0.75, -0.5};
  p.margin = 16;
  p.dose = 50.0;
  p.seed = 42;
  return p;
}

}  // namespace

TEST(Synth, Deterministic) {
  const auto p = small_params();
  const auto a = generate_stack(p, 1);
  const auto b = generate_stack(p, 4);
  EXPECT_EQ(a.stack.frames, b.stack.frames);
  EXPECT_EQ(a.truth.positions, b.truth.positions);
  auto q = p;
  q.seed = 43;
  EXPECT_NE(generate_stack(q, 1).stack.frames, a.stack.frames);
}

TEST(Synth, ConstantVelocityPositions) {
  const auto pos = drift_positions(small_params());
  ASSERT_EQ(pos.size(), 4u);
  for (int i = 1; i < 4; ++i) EXPECT_EQ(pos[i] - pos[i - 1], (Vec2{0.75, -0.5}));
}

TEST(Synth, NoiselessFrameIsShiftedScene) {
  auto p = small_params();
  p.dose.reset();
  const auto r = generate_stack(p, 1);
  // Both frames come from one periodic scene; peak of 1.
  double peak = 0.0;
  for (double v : r.stack.frames[0].values()) peak = std::max(peak, v);
  EXPECT_LE(peak, 1.0 + 1e-9);
  EXPECT_GT(peak, 0.5);
}

TEST(Synth, JsonRoundTrip) {
  auto p = small_params();
  p.corrupt_frames = {2};
  p.pixel_size = 0.4;
  p.pld = {0.3, {1.0 / 36.0, 0.0}, true};
  const nlohmann::json j = p;
  const SynthParams back = parse_synth_params(j);
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(Synth, InvalidParamsListFields) {
  nlohmann::json j = small_params();
  j["height"] = -3;
  j["frame_count"] = 1;
  try {
    parse_synth_params(j);
    FAIL() << "expected invalid_params";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_params);
    const std::string what = e.what();
    EXPECT_NE(what.find("height"), std::string::npos) << what;
    EXPECT_NE(what.find("frame_count"), std::string::npos) << what;
  }
  nlohmann::json unknown = small_params();
  unknown["colour"] = "blue";
  EXPECT_ERROR_CODE(parse_synth_params(unknown), ErrorCode::invalid_params);
}

TEST(Synth, DriftBeyondMargin) {
  auto p = small_params();
  p.drift.velocity = {10.0, 0.0};
  EXPECT_ERROR_CODE(generate_stack(p, 1), ErrorCode::drift_exceeds_margin);
}

TEST(Synth, Presets) {
  for (const auto& name : synth_preset_names()) {
    const auto p = synth_preset(name);
    EXPECT_NO_THROW(validate_synth_params(p)) << name;
  }
  EXPECT_EQ(synth_preset("paper-like-40").frame_count, 40);
  EXPECT_EQ(synth_preset("nb3cl8-like-27").frame_count, 27);
  EXPECT_ERROR_CODE(synth_preset("nope"), ErrorCode::invalid_params);
}

TEST(Synth, AmbiguityStepsNearHalfPixel) {
  const auto p = inject_unit_cell_ambiguity(small_params());
  const auto pos = drift_positions(p);
  for (std::size_t i = 1; i < pos.size(); ++i) {
    const Vec2 d = pos[i] - pos[i - 1];
    EXPECT_NEAR(std::abs(d.x - std::floor(d.x) - 0.5), 0.0, 0.15);
    EXPECT_NEAR(std::abs(d.y - std::floor(d.y) - 0.5), 0.0, 0.15);
  }
  EXPECT_NEAR(std::abs(p.a1.x - 12.0), 0.5, 1e-12);
}

TEST(Synth, Splitmix) {
  // Reference values of the standard splitmix64 finalizer on 0 and 1.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFull);
  EXPECT_NE(splitmix64(1), splitmix64(2));
}
