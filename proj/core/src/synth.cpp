#include "stackreg/synth.hpp"

#include "stackreg/error.hpp"
#include "stackreg/fft.hpp"
#include "stackreg/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

namespace stackreg {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

constexpr int kSupersample = 4;

// Independent streams for the parts that are not per-frame.
constexpr std::uint64_t kDriftStream = 0x6472696674ULL;
constexpr std::uint64_t kSceneStream = 0x7363656e65ULL;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ tag);
}

std::uint64_t frame_seed(std::uint64_t seed, int frame) {
  return splitmix64(seed + static_cast<std::uint64_t>(frame) + 1);
}

double max_sigma(const SynthParams& p) {
  double s = 0.0;
  for (const auto& a : p.atoms) s = std::max(s, a.sigma);
  return s;
}

}  // namespace

std::string_view to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::random_walk: return "random-walk";
    case DriftKind::constant_velocity: return "constant-velocity";
    case DriftKind::piecewise: return "piecewise";
    case DriftKind::explicit_positions: return "explicit";
  }
  return "random-walk";
}

DriftKind parse_drift_kind(std::string_view name) {
  if (name == "random-walk") return DriftKind::random_walk;
  if (name == "constant-velocity") return DriftKind::constant_velocity;
  if (name == "piecewise") return DriftKind::piecewise;
  if (name == "explicit") return DriftKind::explicit_positions;
  throw Error(ErrorCode::invalid_params, "unknown drift model '" + std::string(name) + "'");
}

void validate_synth_params(const SynthParams& p) {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const char* field) {
    if (!ok) bad.emplace_back(field);
  };
  check(p.height >= 8, "height");
  check(p.width >= 8, "width");
  check(p.frame_count >= 2, "frame_count");
  check(std::isfinite(p.frame_time) && p.frame_time > 0.0, "frame_time");
  check(!p.pixel_size || (std::isfinite(*p.pixel_size) && *p.pixel_size > 0.0), "pixel_size");
  check(std::isfinite(p.a1.x) && std::isfinite(p.a1.y) && p.a1.norm() > 0.0, "a1");
  check(std::isfinite(p.a2.x) && std::isfinite(p.a2.y) && p.a2.norm() > 0.0, "a2");
  check(std::abs(p.a1.cross(p.a2)) > 1e-9 * p.a1.norm() * p.a2.norm(), "a2");
  check(!p.atoms.empty(), "atoms");
  for (const auto& a : p.atoms) {
    check(std::isfinite(a.sigma) && a.sigma > 0.0, "atoms.sigma");
    check(std::isfinite(a.brightness) && a.brightness > 0.0, "atoms.brightness");
    check(std::isfinite(a.position.x) && std::isfinite(a.position.y), "atoms.position");
  }
  check(std::isfinite(p.disorder) && p.disorder >= 0.0, "disorder");
  check(std::isfinite(p.pld.amplitude) && p.pld.amplitude >= 0.0, "pld.amplitude");
  check(p.pld.amplitude == 0.0 || p.pld.wavevector.norm() > 0.0, "pld.wavevector");
  check(std::isfinite(p.background) && p.background >= 0.0, "background");
  check(std::isfinite(p.background_scale) && p.background_scale > 0.0, "background_scale");
  check(!p.dose || (std::isfinite(*p.dose) && *p.dose > 0.0), "dose");
  check(p.burst_amplitude >= 0, "burst_amplitude");
  check(p.burst_rows >= 1, "burst_rows");
  check(p.burst_groups >= 0, "burst_groups");
  check(p.margin >= 0, "margin");
  for (int f : p.corrupt_frames) check(f >= 0 && f < p.frame_count, "corrupt_frames");

  const auto& d = p.drift;
  switch (d.kind) {
    case DriftKind::random_walk:
      check(std::isfinite(d.step_sigma) && d.step_sigma >= 0.0, "drift.step_sigma");
      break;
    case DriftKind::constant_velocity:
      check(std::isfinite(d.velocity.x) && std::isfinite(d.velocity.y), "drift.velocity");
      break;
    case DriftKind::piecewise: {
      int total = 0;
      for (const auto& s : d.segments) {
        check(s.frames >= 1, "drift.segments.frames");
        total += std::max(s.frames, 0);
      }
      check(total >= p.frame_count - 1, "drift.segments");
      break;
    }
    case DriftKind::explicit_positions:
      check(static_cast<int>(d.positions.size()) == p.frame_count, "drift.positions");
      break;
  }

  if (!bad.empty()) {
    std::sort(bad.begin(), bad.end());
    bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
    std::string msg = "invalid synth parameters:";
    for (const auto& f : bad) msg += " " + f;
    throw Error(ErrorCode::invalid_params, msg);
  }
}

std::vector<Vec2> drift_positions(const SynthParams& p) {
  std::vector<Vec2> pos(static_cast<std::size_t>(p.frame_count));
  const auto& d = p.drift;
  switch (d.kind) {
    case DriftKind::random_walk: {
      std::mt19937_64 rng(stream_seed(p.seed, kDriftStream));
      std::normal_distribution<double> step(0.0, 1.0);
      for (int i = 1; i < p.frame_count; ++i) {
        const double dx = step(rng) * d.step_sigma;
        const double dy = step(rng) * d.step_sigma;
        pos[static_cast<std::size_t>(i)] = pos[static_cast<std::size_t>(i - 1)] + Vec2{dx, dy};
      }
      break;
    }
    case DriftKind::constant_velocity:
      for (int i = 0; i < p.frame_count; ++i) pos[static_cast<std::size_t>(i)] = i * d.velocity;
      break;
    case DriftKind::piecewise: {
      int i = 1;
      for (const auto& s : d.segments) {
        for (int f = 0; f < s.frames && i < p.frame_count; ++f, ++i) {
          pos[static_cast<std::size_t>(i)] = pos[static_cast<std::size_t>(i - 1)] + s.velocity;
        }
      }
      break;
    }
    case DriftKind::explicit_positions:
      pos = d.positions;
      break;
  }
  return pos;
}

Image render_scene(const SynthParams& p) {
  validate_synth_params(p);
  const int sh = p.height + 2 * p.margin;
  const int sw = p.width + 2 * p.margin;
  Image scene(sh, sw, 0.0);
  std::mt19937_64 rng(stream_seed(p.seed, kSceneStream));
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Lattice index range covering the scene rectangle.
  const double det = p.a1.cross(p.a2);
  double n1_lo = INFINITY, n1_hi = -INFINITY, n2_lo = INFINITY, n2_hi = -INFINITY;
  for (const Vec2 c : {Vec2{0, 0}, Vec2{double(sw), 0}, Vec2{0, double(sh)}, Vec2{double(sw), double(sh)}}) {
    const double n1 = c.cross(p.a2) / det;
    const double n2 = p.a1.cross(c) / det;
    n1_lo = std::min(n1_lo, n1);
    n1_hi = std::max(n1_hi, n1);
    n2_lo = std::min(n2_lo, n2);
    n2_hi = std::max(n2_hi, n2);
  }

  const Vec2 q = p.pld.wavevector;
  const double qn = q.norm();
  const Vec2 pld_dir = qn > 0.0 ? (p.pld.transverse ? Vec2{-q.y, q.x} / qn : q / qn) : Vec2{};
  const double sub = 1.0 / kSupersample;

  for (int n2 = static_cast<int>(std::floor(n2_lo)) - 1; n2 <= static_cast<int>(std::ceil(n2_hi)) + 1; ++n2) {
    for (int n1 = static_cast<int>(std::floor(n1_lo)) - 1; n1 <= static_cast<int>(std::ceil(n1_hi)) + 1; ++n1) {
      for (const auto& atom : p.atoms) {
        const Vec2 ideal = (n1 + atom.position.x) * p.a1 + (n2 + atom.position.y) * p.a2;
        if (ideal.x < 0.0 || ideal.x >= sw || ideal.y < 0.0 || ideal.y >= sh) continue;
        double brightness = atom.brightness;
        if (p.disorder > 0.0) brightness = std::max(0.0, brightness * (1.0 + p.disorder * gauss(rng)));
        Vec2 site = ideal;
        if (p.pld.amplitude > 0.0) {
          site += p.pld.amplitude * std::sin(2.0 * std::numbers::pi * q.dot(ideal)) * pld_dir;
        }
        // Average of the Gaussian over a 4x4 grid of sub-pixel samples per
        // pixel, wrapped around the scene edges.
        const int radius = static_cast<int>(std::ceil(4.0 * atom.sigma)) + 1;
        const int cx = static_cast<int>(std::lround(site.x));
        const int cy = static_cast<int>(std::lround(site.y));
        const double inv = 1.0 / (2.0 * atom.sigma * atom.sigma);
        std::vector<double> wx(static_cast<std::size_t>(2 * radius + 1));
        std::vector<double> wy(wx.size());
        for (int t = -radius; t <= radius; ++t) {
          double ax = 0.0, ay = 0.0;
          for (int s = 0; s < kSupersample; ++s) {
            const double off = -0.5 + (s + 0.5) * sub;
            const double dx = cx + t + off - site.x;
            const double dy = cy + t + off - site.y;
            ax += std::exp(-dx * dx * inv);
            ay += std::exp(-dy * dy * inv);
          }
          wx[static_cast<std::size_t>(t + radius)] = ax * sub;
          wy[static_cast<std::size_t>(t + radius)] = ay * sub;
        }
        for (int ty = -radius; ty <= radius; ++ty) {
          const int y = ((cy + ty) % sh + sh) % sh;
          const double vy = brightness * wy[static_cast<std::size_t>(ty + radius)];
          for (int tx = -radius; tx <= radius; ++tx) {
            const int x = ((cx + tx) % sw + sw) % sw;
            scene(y, x) += vy * wx[static_cast<std::size_t>(tx + radius)];
          }
        }
      }
    }
  }

  if (p.background > 0.0) {
    // Gaussian-filtered white noise: smooth, periodic, correlation length
    // background_scale.
    Image white(sh, sw);
    for (double& v : white.values()) v = gauss(rng);
    ComplexImage spectrum = fft::forward(white);
    const double s2 = 2.0 * std::numbers::pi * std::numbers::pi * p.background_scale * p.background_scale;
    for (int y = 0; y < sh; ++y) {
      const double fy = fft_frequency(y, sh);
      for (int x = 0; x < sw; ++x) {
        const double fx = fft_frequency(x, sw);
        spectrum(y, x) *= std::exp(-s2 * (fx * fx + fy * fy));
      }
    }
    const Image bg = fft::inverse_real(spectrum);
    const auto [lo, hi] = std::minmax_element(bg.values().begin(), bg.values().end());
    double peak_site = 0.0;
    for (const auto& a : p.atoms) peak_site = std::max(peak_site, a.brightness);
    const double scale = *hi > *lo ? p.background * peak_site / (*hi - *lo) : 0.0;
    const double base = *lo;
    for (std::size_t i = 0; i < bg.size(); ++i) scene.values()[i] += (bg.values()[i] - base) * scale;
  }

  const double peak = *std::max_element(scene.values().begin(), scene.values().end());
  if (!(peak > 0.0)) throw Error(ErrorCode::invalid_params, "scene is empty");
  for (double& v : scene.values()) v /= peak;
  return scene;
}

SynthResult generate_stack(const SynthParams& p, int threads) {
  validate_synth_params(p);
  const auto positions = drift_positions(p);
  const bool any_burst = !p.corrupt_frames.empty();
  const double reach = std::ceil(4.0 * max_sigma(p));
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Vec2 pos = positions[i];
    const double extent = std::max(std::abs(pos.x), std::abs(pos.y)) + (any_burst ? p.burst_amplitude : 0);
    if (!std::isfinite(extent) || extent + reach > p.margin) {
      std::ostringstream msg;
      msg << "frame " << i << " at (" << pos.x << ", " << pos.y << ") px needs a margin of "
          << extent + reach << " px (drift, burst offsets and 4 atom sigmas); margin is " << p.margin;
      throw Error(ErrorCode::drift_exceeds_margin, msg.str());
    }
  }

  const Image scene = render_scene(p);
  const ComplexImage scene_spectrum = fft::forward(scene);
  const int sh = scene.height();
  const int sw = scene.width();
  const std::set<int> corrupt(p.corrupt_frames.begin(), p.corrupt_frames.end());
  const double scale = p.dose.value_or(1.0);

  std::vector<Image> frames(static_cast<std::size_t>(p.frame_count));
  parallel_for(frames.size(), threads, [&](std::size_t idx) {
    const int f = static_cast<int>(idx);
    const Vec2 pos = positions[idx];
    ComplexImage spec = scene_spectrum;
    std::vector<std::complex<double>> rx(static_cast<std::size_t>(sw)), ry(static_cast<std::size_t>(sh));
    for (int x = 0; x < sw; ++x) {
      rx[static_cast<std::size_t>(x)] =
          (sw % 2 == 0 && x == sw / 2) ? std::complex<double>(std::cos(std::numbers::pi * pos.x))
                                       : std::polar(1.0, -2.0 * std::numbers::pi * fft_frequency(x, sw) * pos.x);
    }
    for (int y = 0; y < sh; ++y) {
      ry[static_cast<std::size_t>(y)] =
          (sh % 2 == 0 && y == sh / 2) ? std::complex<double>(std::cos(std::numbers::pi * pos.y))
                                       : std::polar(1.0, -2.0 * std::numbers::pi * fft_frequency(y, sh) * pos.y);
    }
    for (int y = 0; y < sh; ++y) {
      for (int x = 0; x < sw; ++x) spec(y, x) *= ry[static_cast<std::size_t>(y)] * rx[static_cast<std::size_t>(x)];
    }
    const Image moved = fft::inverse_real(spec);

    std::mt19937_64 rng(frame_seed(p.seed, f));
    const bool burst = corrupt.count(f) > 0;
    std::uniform_int_distribution<int> offset(-p.burst_amplitude, p.burst_amplitude);
    // Burst frames: blocks of burst_rows rows are displaced. With
    // burst_groups > 0 the blocks cycle through that many random offsets,
    // otherwise every block draws its own.
    std::vector<std::pair<int, int>> groups;
    if (burst) {
      for (int g = 0; g < p.burst_groups; ++g) groups.emplace_back(offset(rng), offset(rng));
    }
    Image frame(p.height, p.width);
    int dx = 0, dy = 0;
    for (int y = 0; y < p.height; ++y) {
      if (burst && y % p.burst_rows == 0) {
        if (groups.empty()) {
          dx = offset(rng);
          dy = offset(rng);
        } else {
          std::tie(dx, dy) = groups[static_cast<std::size_t>((y / p.burst_rows) % p.burst_groups)];
        }
      }
      for (int x = 0; x < p.width; ++x) {
        frame(y, x) = moved(y + p.margin + dy, x + p.margin + dx) * scale;
      }
    }
    if (p.dose) {
      for (double& v : frame.values()) {
        std::poisson_distribution<long> counts(std::max(v, 0.0));
        v = v > 0.0 ? static_cast<double>(counts(rng)) : 0.0;
      }
    }
    for (double& v : frame.values()) v = static_cast<double>(static_cast<float>(v));
    frames[idx] = std::move(frame);
  });

  SynthResult result;
  result.stack = make_stack(std::move(frames), p.frame_time, p.pixel_size);
  result.truth.positions = positions;
  result.truth.a1 = p.a1;
  result.truth.a2 = p.a2;
  result.truth.corrupt_frames.assign(corrupt.begin(), corrupt.end());
  for (const Vec2 pos : positions) {
    result.truth.pld_phase.push_back(-2.0 * std::numbers::pi * p.pld.wavevector.dot(pos));
  }
  return result;
}

SynthParams inject_unit_cell_ambiguity(const SynthParams& params) {
  SynthParams p = params;
  for (Vec2* a : {&p.a1, &p.a2}) {
    const double len = a->norm();
    if (std::abs(len - std::round(len)) < 1e-9) *a = *a * ((len + 0.5) / len);
  }
  // Steps of +/-0.5 or +/-1.5 px per axis (plus small jitter), signed to
  // keep the walk near the origin.
  std::mt19937_64 rng(stream_seed(p.seed, kDriftStream));
  std::uniform_int_distribution<int> whole(0, 1);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::bernoulli_distribution coin(0.5);
  auto step = [&](double current) {
    double sign = coin(rng) ? 1.0 : -1.0;
    if (current > 3.0) sign = -1.0;
    if (current < -3.0) sign = 1.0;
    return sign * (whole(rng) + 0.5 + jitter(rng));
  };
  p.drift = DriftModel{};
  p.drift.kind = DriftKind::explicit_positions;
  p.drift.positions.assign(static_cast<std::size_t>(p.frame_count), Vec2{});
  for (int i = 1; i < p.frame_count; ++i) {
    const Vec2 prev = p.drift.positions[static_cast<std::size_t>(i - 1)];
    const double sx = step(prev.x);
    const double sy = step(prev.y);
    p.drift.positions[static_cast<std::size_t>(i)] = prev + Vec2{sx, sy};
  }
  return p;
}

namespace {

std::vector<SynthAtom> perovskite_atoms(double sigma_a, double sigma_b, double ratio) {
  return {SynthAtom{{0.0, 0.0}, 1.0, sigma_a}, SynthAtom{{0.5, 0.5}, 1.0 / ratio, sigma_b}};
}

}  // namespace

SynthParams synth_preset(std::string_view name) {
  SynthParams p;
  if (name == "paper-like-40" || name == "nb3cl8-like-27") {
    p.height = 256;
    p.width = 256;
    p.a1 = {32.0, 0.0};
    p.a2 = {0.0, 32.0};
    p.atoms = perovskite_atoms(8.0, 8.0, 3.0);
    p.disorder = 0.15;
    p.pld = {0.1, {1.0 / 128.0, 0.0}, false};
    p.background = 0.5;
    p.background_scale = 48.0;
    p.dose = 70.0;
    p.margin = 64;
    if (name == "paper-like-40") {
      p.frame_count = 40;
      p.frame_time = 0.63;
      p.drift.kind = DriftKind::random_walk;
      p.drift.step_sigma = 1.0;
    } else {
      p.frame_count = 27;
      p.frame_time = 0.58;
      p.drift.kind = DriftKind::constant_velocity;
      p.drift.velocity = {2.0, -0.8};
      p.margin = 96;
    }
    return p;
  }
  if (name == "ambiguous") {
    p.height = 128;
    p.width = 128;
    p.frame_count = 21;
    p.frame_time = 0.63;
    p.a1 = {7.0, 0.0};
    p.a2 = {0.0, 7.0};
    p.atoms = perovskite_atoms(1.0, 1.0, 3.0);
    p.disorder = 0.3;
    p.background = 0.3;
    p.background_scale = 48.0;
    p.dose = 20.0;
    p.margin = 24;
    return inject_unit_cell_ambiguity(p);
  }
  throw Error(ErrorCode::invalid_params, "unknown synth preset '" + std::string(name) + "'");
}

std::vector<std::string> synth_preset_names() { return {"paper-like-40", "nb3cl8-like-27", "ambiguous"}; }

namespace {

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw std::invalid_argument("expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void to_json(json& j, const SynthParams& p) {
  json atoms = json::array();
  for (const auto& a : p.atoms) {
    atoms.push_back({{"position", vec_json(a.position)}, {"brightness", a.brightness}, {"sigma", a.sigma}});
  }
  json drift = {{"model", std::string(to_string(p.drift.kind))}};
  switch (p.drift.kind) {
    case DriftKind::random_walk: drift["step_sigma"] = p.drift.step_sigma; break;
    case DriftKind::constant_velocity: drift["velocity"] = vec_json(p.drift.velocity); break;
    case DriftKind::piecewise: {
      json segs = json::array();
      for (const auto& s : p.drift.segments) segs.push_back({{"frames", s.frames}, {"velocity", vec_json(s.velocity)}});
      drift["segments"] = segs;
      break;
    }
    case DriftKind::explicit_positions: {
      json pos = json::array();
      for (const auto& v : p.drift.positions) pos.push_back(vec_json(v));
      drift["positions"] = pos;
      break;
    }
  }
  j = json{{"height", p.height},
           {"width", p.width},
           {"frame_count", p.frame_count},
           {"frame_time", p.frame_time},
           {"pixel_size", p.pixel_size ? json(*p.pixel_size) : json(nullptr)},
           {"a1", vec_json(p.a1)},
           {"a2", vec_json(p.a2)},
           {"atoms", atoms},
           {"disorder", p.disorder},
           {"pld",
            {{"amplitude", p.pld.amplitude},
             {"wavevector", vec_json(p.pld.wavevector)},
             {"transverse", p.pld.transverse}}},
           {"background", p.background},
           {"background_scale", p.background_scale},
           {"drift", drift},
           {"dose", p.dose ? json(*p.dose) : json(nullptr)},
           {"corrupt_frames", p.corrupt_frames},
           {"burst_amplitude", p.burst_amplitude},
           {"burst_rows", p.burst_rows},
           {"burst_groups", p.burst_groups},
           {"margin", p.margin},
           {"seed", p.seed}};
}

SynthParams parse_synth_params(const json& j, const SynthParams& base) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_params, "synth parameters must be a JSON object");
  SynthParams p = base;
  std::vector<std::string> bad;

  auto field = [&](const json& obj, const std::string& prefix, const char* key, auto&& apply) {
    if (!obj.contains(key)) return;
    try {
      apply(obj.at(key));
    } catch (const std::exception&) {
      bad.push_back(prefix + key);
    }
  };
  auto number = [](const json& v) {
    if (!v.is_number()) throw std::invalid_argument("number");
    return v.get<double>();
  };
  auto integer = [](const json& v) {
    if (!v.is_number_integer()) throw std::invalid_argument("integer");
    return v.get<int>();
  };
  auto check_keys = [&](const json& obj, const std::string& prefix, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : obj.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* allowed) { return k == allowed; })) {
        bad.push_back(prefix + k + " (unknown)");
      }
    }
  };

  check_keys(j, "", {"height", "width", "frame_count", "frame_time", "pixel_size", "a1", "a2", "atoms",
                     "disorder", "pld", "background", "background_scale", "drift", "dose", "corrupt_frames", "burst_amplitude",
                     "burst_rows", "burst_groups", "margin", "seed"});
  field(j, "", "height", [&](const json& v) { p.height = integer(v); });
  field(j, "", "width", [&](const json& v) { p.width = integer(v); });
  field(j, "", "frame_count", [&](const json& v) { p.frame_count = integer(v); });
  field(j, "", "frame_time", [&](const json& v) { p.frame_time = number(v); });
  field(j, "", "pixel_size", [&](const json& v) {
    p.pixel_size = v.is_null() ? std::nullopt : std::optional<double>(number(v));
  });
  field(j, "", "a1", [&](const json& v) { p.a1 = vec_from(v); });
  field(j, "", "a2", [&](const json& v) { p.a2 = vec_from(v); });
  field(j, "", "atoms", [&](const json& v) {
    if (!v.is_array()) throw std::invalid_argument("array");
    std::vector<SynthAtom> atoms;
    for (const auto& a : v) {
      if (!a.is_object()) throw std::invalid_argument("object");
      for (const auto& [k, unused] : a.items()) {
        if (k != "position" && k != "brightness" && k != "sigma") throw std::invalid_argument(k);
      }
      SynthAtom atom;
      atom.position = vec_from(a.at("position"));
      if (a.contains("brightness")) atom.brightness = number(a.at("brightness"));
      if (a.contains("sigma")) atom.sigma = number(a.at("sigma"));
      atoms.push_back(atom);
    }
    p.atoms = std::move(atoms);
  });
  field(j, "", "disorder", [&](const json& v) { p.disorder = number(v); });
  field(j, "", "pld", [&](const json& v) {
    if (!v.is_object()) throw std::invalid_argument("object");
    check_keys(v, "pld.", {"amplitude", "wavevector", "transverse"});
    field(v, "pld.", "amplitude", [&](const json& x) { p.pld.amplitude = number(x); });
    field(v, "pld.", "wavevector", [&](const json& x) { p.pld.wavevector = vec_from(x); });
    field(v, "pld.", "transverse", [&](const json& x) { p.pld.transverse = x.get<bool>(); });
  });
  field(j, "", "background", [&](const json& v) { p.background = number(v); });
  field(j, "", "background_scale", [&](const json& v) { p.background_scale = number(v); });
  field(j, "", "drift", [&](const json& v) {
    if (!v.is_object()) throw std::invalid_argument("object");
    check_keys(v, "drift.", {"model", "step_sigma", "velocity", "segments", "positions"});
    field(v, "drift.", "model", [&](const json& x) { p.drift.kind = parse_drift_kind(x.get<std::string>()); });
    field(v, "drift.", "step_sigma", [&](const json& x) { p.drift.step_sigma = number(x); });
    field(v, "drift.", "velocity", [&](const json& x) { p.drift.velocity = vec_from(x); });
    field(v, "drift.", "segments", [&](const json& x) {
      std::vector<DriftSegment> segs;
      for (const auto& s : x) segs.push_back({integer(s.at("frames")), vec_from(s.at("velocity"))});
      p.drift.segments = std::move(segs);
    });
    field(v, "drift.", "positions", [&](const json& x) {
      std::vector<Vec2> pos;
      for (const auto& s : x) pos.push_back(vec_from(s));
      p.drift.positions = std::move(pos);
    });
  });
  field(j, "", "dose", [&](const json& v) { p.dose = v.is_null() ? std::nullopt : std::optional<double>(number(v)); });
  field(j, "", "corrupt_frames", [&](const json& v) {
    std::vector<int> frames;
    for (const auto& f : v) frames.push_back(integer(f));
    p.corrupt_frames = std::move(frames);
  });
  field(j, "", "burst_amplitude", [&](const json& v) { p.burst_amplitude = integer(v); });
  field(j, "", "burst_rows", [&](const json& v) { p.burst_rows = integer(v); });
  field(j, "", "burst_groups", [&](const json& v) { p.burst_groups = integer(v); });
  field(j, "", "margin", [&](const json& v) { p.margin = integer(v); });
  field(j, "", "seed", [&](const json& v) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw std::invalid_argument("seed");
    }
    p.seed = v.get<std::uint64_t>();
  });

  if (!bad.empty()) {
    std::string msg = "invalid synth parameters:";
    for (const auto& f : bad) msg += " " + f;
    throw Error(ErrorCode::invalid_params, msg);
  }
  validate_synth_params(p);
  return p;
}

void from_json(const json& j, SynthParams& params) { params = parse_synth_params(j); }

void to_json(json& j, const SynthTruth& t) {
  json pos = json::array();
  for (const auto& v : t.positions) pos.push_back(vec_json(v));
  j = json{{"format", "stackreg.truth"},
           {"version", 1},
           {"positions", pos},
           {"a1", vec_json(t.a1)},
           {"a2", vec_json(t.a2)},
           {"pld_phase", t.pld_phase},
           {"corrupt_frames", t.corrupt_frames}};
}

void from_json(const json& j, SynthTruth& t) {
  try {
    t.positions.clear();
    for (const auto& v : j.at("positions")) t.positions.push_back(vec_from(v));
    t.a1 = vec_from(j.at("a1"));
    t.a2 = vec_from(j.at("a2"));
    t.pld_phase = j.value("pld_phase", std::vector<double>{});
    t.corrupt_frames = j.value("corrupt_frames", std::vector<int>{});
  } catch (const std::exception& e) {
    throw Error(ErrorCode::invalid_params, std::string("invalid truth file: ") + e.what());
  }
}

}  // namespace stackreg
