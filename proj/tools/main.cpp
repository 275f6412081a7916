#include "commands.hpp"

#include "stackreg/error.hpp"
#include "stackreg/report.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace stackreg;

int fail(ErrorCode code, const std::string& message) {
  std::cout << error_record(code, message).dump(2) << '\n';
  return cli::kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drift correction and averaging for atomic-resolution image stacks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stackreg 0.1.0");

  // register
  auto* reg = app.add_subcommand("register", "Register and average a stack");
  std::optional<std::string> config_path;
  cli::RegisterOverrides ov;
  reg->add_option("-c,--config", config_path, "JSON config file");
  reg->add_option("-i,--input", ov.input, "Stack manifest");
  reg->add_option("-o,--output", ov.output, "Output directory");
  reg->add_option("-j,--threads", ov.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  reg->add_option("--window", ov.window, "hann | mirror-pad | periodic-smooth");
  reg->add_option("--method", ov.method, "cross | mutual | phase");
  reg->add_option("--peak", ov.peak_mode, "argmax | gaussian-fit");
  reg->add_option("--candidates", ov.candidates, "Local maxima fitted per pair (1-10)");
  reg->add_option("--mask", ov.mask, "none | lowpass | bandpass | anisotropic-gaussian | custom");
  reg->add_option("--k-max", ov.k_max, "Mask cutoff (cycles/px)");
  reg->add_option("--k-min", ov.k_min, "Bandpass inner cutoff (cycles/px)");
  reg->add_option("--axis-scale", ov.axis_scale, "Anisotropic mask width in units of |b_i|");
  reg->add_option("--weights", ov.weights_file, "Custom mask weights (raw float32, FFT layout)");
  reg->add_option("--outliers", ov.outlier_method, "transitivity | neighbor | background-fit");
  reg->add_option("--threshold", ov.threshold, "Outlier threshold (px)");
  reg->add_option("--max-paths", ov.max_paths, "Paths per element");
  reg->add_option("--poly-order", ov.polynomial_order, "Background-fit polynomial order");
  reg->add_option("--row-fraction", ov.row_fraction, "Row outlier fraction for frame exclusion");

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a synthetic stack with ground truth");
  cli::SynthOptions so;
  std::string synth_out;
  std::optional<std::string> params_file;
  syn->add_option("preset", so.preset, "Preset name");
  syn->add_option("-p,--params", params_file, "Params JSON (overrides the preset)");
  syn->add_option("-o,--output", synth_out, "Output directory")->required();
  syn->add_option("-s,--seed", so.seed, "Seed override");
  syn->add_option("-j,--threads", so.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  syn->add_flag_callback("--list", [] {
    for (const auto& name : synth_preset_names()) std::cout << name << '\n';
    std::exit(0);
  }, "List presets and exit");

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare shifts from two reports or truth files");
  std::string cmp_a, cmp_b;
  std::optional<std::string> cmp_out;
  std::optional<double> jump_threshold;
  cmp->add_option("a", cmp_a, "Report or truth file")->required();
  cmp->add_option("b", cmp_b, "Report or truth file")->required();
  cmp->add_option("--jump-threshold", jump_threshold, "Jump threshold (px); default half the shortest lattice vector");
  cmp->add_option("-o,--output", cmp_out, "Write metrics JSON here as well");

  CLI11_PARSE(app, argc, argv);

  std::optional<std::filesystem::path> out_dir;
  try {
    if (*reg) {
      if (ov.output) out_dir = *ov.output;
      std::optional<std::filesystem::path> cfg;
      if (config_path) cfg = *config_path;
      return cli::run_register(cfg, ov);
    }
    if (*syn) {
      so.output = synth_out;
      if (params_file) so.params_file = *params_file;
      cli::run_synth(so);
      return cli::kExitOk;
    }
    if (*cmp) {
      const auto metrics = cli::run_compare(cmp_a, cmp_b, jump_threshold);
      std::cout << metrics.dump(2) << '\n';
      if (cmp_out) cli::write_json(metrics, *cmp_out);
      return cli::kExitOk;
    }
  } catch (const Error& e) {
    const int rc = fail(e.code(), e.what());
    if (out_dir) {
      std::error_code ec;
      std::filesystem::create_directories(*out_dir, ec);
      if (!ec) {
        try {
          cli::write_json(error_record(e.code(), e.what()), *out_dir / "report.json");
        } catch (const Error&) {
        }
      }
    }
    return rc;
  } catch (const std::exception& e) {
    return fail(ErrorCode::io_error, e.what());
  }
  return cli::kExitError;
}
