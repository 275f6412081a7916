#include "commands.hpp"

#include "stackreg/error.hpp"
#include "stackreg/pipeline.hpp"
#include "stackreg/preprocess.hpp"
#include "stackreg/reconstruct.hpp"
#include "stackreg/stack_io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

namespace stackreg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::missing_file, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_params, path.string() + " is not valid JSON: " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

// Merges flag overrides into the config document so that parse_config
// validates both sources the same way.
json apply_overrides(json doc, const RegisterOverrides& o) {
  auto set = [&](const char* section, const char* key, const auto& value) {
    if (value) doc[section][key] = *value;
  };
  if (o.input) doc["input"] = *o.input;
  if (o.output) doc["output"] = *o.output;
  if (o.threads) doc["threads"] = *o.threads;
  set("correlation", "window", o.window);
  set("correlation", "method", o.method);
  set("correlation", "peak_mode", o.peak_mode);
  set("correlation", "candidates", o.candidates);
  set("mask", "kind", o.mask);
  set("mask", "k_max", o.k_max);
  set("mask", "k_min", o.k_min);
  set("mask", "axis_scale", o.axis_scale);
  set("mask", "weights_file", o.weights_file);
  set("outliers", "method", o.outlier_method);
  set("outliers", "threshold", o.threshold);
  set("outliers", "max_paths", o.max_paths);
  set("outliers", "polynomial_order", o.polynomial_order);
  set("outliers", "row_outlier_fraction", o.row_fraction);
  return doc;
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

void save_pgm(const Image& image, const fs::path& path) { save_image(image, path, ImageFormat::pgm16); }

Image validity_image(const Mask& m) {
  Image out(m.height(), m.width());
  for (std::size_t i = 0; i < m.size(); ++i) out.values()[i] = m.values()[i] ? 1.0 : 0.0;
  return out;
}

}  // namespace

int run_register(const std::optional<fs::path>& config_path, const RegisterOverrides& overrides) {
  json doc = json::object();
  fs::path base = fs::current_path();
  if (config_path) {
    doc = read_json(*config_path);
    if (!doc.is_object()) throw Error(ErrorCode::invalid_params, "config must be a JSON object");
    // Paths inside a config file are relative to the file.
    base = fs::absolute(*config_path).parent_path();
  }
  const bool input_from_flag = overrides.input.has_value();
  const bool output_from_flag = overrides.output.has_value();
  const bool weights_from_flag = overrides.weights_file.has_value();
  doc = apply_overrides(std::move(doc), overrides);

  RegistrationConfig config = parse_config(doc);
  if (!doc.contains("input")) throw Error(ErrorCode::invalid_params, "no input manifest given");
  if (!doc.contains("output")) throw Error(ErrorCode::invalid_params, "no output directory given");

  const std::string input = doc["input"].get<std::string>();
  const fs::path input_path = input_from_flag ? fs::path(input) : resolve(input, base);
  const fs::path output = output_from_flag ? fs::path(doc["output"].get<std::string>())
                                           : resolve(doc["output"].get<std::string>(), base);

  const ImageStack stack = load_stack(input_path);

  if (config.correlation.mask.kind == MaskKind::custom) {
    if (!doc["mask"].contains("weights_file")) {
      throw Error(ErrorCode::invalid_params, "custom mask needs mask.weights_file");
    }
    const std::string wf = doc["mask"]["weights_file"].get<std::string>();
    const fs::path weights_path = weights_from_flag ? fs::path(wf) : resolve(wf, base);
    const Image shape = preprocess_frame(stack.frames.front(), config.correlation.window);
    config.custom_weights = load_raw_image(weights_path, shape.height(), shape.width());
  }

  const RegistrationResult result = register_stack(stack, config);
  const json report = make_report(config, result, stack.metadata, input);

  std::error_code ec;
  fs::create_directories(output, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + output.string());

  write_json(report, output / "report.json");
  save_image(result.average.mean, output / "average.f32", ImageFormat::raw_float32);
  save_pgm(result.average.mean, output / "average.pgm");
  save_pgm(power_spectrum(result.average.mean), output / "spectrum_average.pgm");
  for (std::size_t f = 0; f < stack.frames.size(); ++f) {
    if (result.solution.included(static_cast<int>(f))) {
      save_pgm(power_spectrum(stack.frames[f]), output / "spectrum_frame.pgm");
      break;
    }
  }
  save_pgm(result.measured.x(), output / "shift_x.pgm");
  save_pgm(result.measured.y(), output / "shift_y.pgm");
  save_pgm(result.repaired.x(), output / "shift_x_repaired.pgm");
  save_pgm(result.repaired.y(), output / "shift_y_repaired.pgm");
  save_pgm(validity_image(result.validity), output / "validity.pgm");

  return report["outliers"]["unrepaired"].get<int>() == 0 ? kExitOk : kExitUnrepaired;
}

void run_synth(const SynthOptions& o) {
  SynthParams params;
  if (o.preset) params = synth_preset(*o.preset);
  if (o.params_file) params = parse_synth_params(read_json(*o.params_file), params);
  if (!o.preset && !o.params_file) throw Error(ErrorCode::invalid_params, "give a preset or a params file");
  if (o.seed) params.seed = *o.seed;

  const SynthResult result = generate_stack(params, o.threads);
  save_stack(result.stack, o.output);
  json truth = result.truth;
  write_json(truth, o.output / "truth.json");
  json echo = params;
  write_json(echo, o.output / "params.json");
}

namespace {

struct PositionSource {
  std::vector<Vec2> positions;
  std::vector<int> excluded;
  std::optional<double> jump_threshold;
};

PositionSource load_positions(const fs::path& path) {
  const json j = read_json(path);
  const std::string format = j.value("format", "");
  PositionSource s;
  if (format == "stackreg.truth") {
    SynthTruth truth = j.get<SynthTruth>();
    s.positions = truth.positions;
    s.excluded = truth.corrupt_frames;
    s.jump_threshold = 0.5 * std::min(truth.a1.norm(), truth.a2.norm());
    return s;
  }
  if (format == "stackreg.report") {
    if (j.value("status", "") != "ok") throw Error(ErrorCode::invalid_params, path.string() + " is an error report");
    for (const auto& v : j.at("optimal_shifts")) s.positions.push_back({v[0].get<double>(), v[1].get<double>()});
    s.excluded = j.at("excluded_frames").get<std::vector<int>>();
    return s;
  }
  throw Error(ErrorCode::invalid_params, path.string() + " is neither a report nor a truth file");
}

json vec_list(const std::vector<int>& v) { return json(v); }

}  // namespace

json run_compare(const fs::path& a, const fs::path& b, std::optional<double> jump_threshold) {
  const PositionSource pa = load_positions(a);
  const PositionSource pb = load_positions(b);
  if (!jump_threshold) jump_threshold = pa.jump_threshold ? pa.jump_threshold : pb.jump_threshold;
  if (!jump_threshold) {
    throw Error(ErrorCode::invalid_params, "no lattice available; pass --jump-threshold");
  }
  const CompareMetrics m = compare_positions(pa.positions, pb.positions, *jump_threshold, pa.excluded, pb.excluded);
  return json{{"format", "stackreg.compare"},
              {"version", 1},
              {"rms", m.rms},
              {"max", m.max},
              {"jump_threshold", *jump_threshold},
              {"jumps", m.jumps},
              {"jump_frames", vec_list(m.jump_frames)},
              {"compared", m.compared},
              {"excluded_a", vec_list(m.excluded_a)},
              {"excluded_b", vec_list(m.excluded_b)},
              {"excluded_agree", m.excluded_agree}};
}

}  // namespace stackreg::cli
