#include "stackreg/report.hpp"

#include "stackreg/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace stackreg {

using nlohmann::json;

namespace {

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

template <typename T>
json grid_json(const Grid<T>& g) {
  json rows = json::array();
  for (int y = 0; y < g.height(); ++y) {
    json row = json::array();
    for (int x = 0; x < g.width(); ++x) row.push_back(g(y, x));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vecs_json(const std::vector<Vec2>& v) {
  json out = json::array();
  for (const auto& p : v) out.push_back(vec_json(p));
  return out;
}

}  // namespace

json config_to_json(const RegistrationConfig& c) {
  const auto& corr = c.correlation;
  return json{
      {"format", "stackreg.config"},
      {"version", kConfigVersion},
      {"correlation",
       {{"window", std::string(to_string(corr.window))},
        {"method", std::string(to_string(corr.method))},
        {"peak_mode", std::string(to_string(corr.peak_mode))},
        {"candidates", corr.candidates}}},
      {"mask",
       {{"kind", std::string(to_string(corr.mask.kind))},
        {"k_max", corr.mask.params.k_max},
        {"k_min", corr.mask.params.k_min},
        {"axis_scale", corr.mask.params.axis_scale},
        {"auto_basis", corr.mask.auto_basis},
        {"basis", vecs_json(corr.mask.basis)}}},
      {"outliers",
       {{"method", std::string(to_string(c.outlier_method))},
        {"threshold", c.outlier_threshold},
        {"max_paths", c.max_paths},
        {"polynomial_order", c.polynomial_order},
        {"row_outlier_fraction", c.row_outlier_fraction}}},
  };
}

RegistrationConfig parse_config(const json& j, const RegistrationConfig& base) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_params, "config must be a JSON object");
  RegistrationConfig c = base;
  std::vector<std::string> bad;

  auto allow = [&](const json& obj, const std::string& prefix, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : obj.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        bad.push_back(prefix + k + " (unknown)");
      }
    }
  };
  auto field = [&](const json& obj, const std::string& prefix, const char* key, auto&& apply) {
    if (!obj.contains(key)) return;
    try {
      if (!apply(obj.at(key))) bad.push_back(prefix + key);
    } catch (const std::exception&) {
      bad.push_back(prefix + key);
    }
  };
  auto section = [&](const char* key) -> const json* {
    if (!j.contains(key)) return nullptr;
    if (!j.at(key).is_object()) {
      bad.emplace_back(key);
      return nullptr;
    }
    return &j.at(key);
  };
  auto number = [](const json& v) {
    if (!v.is_number()) throw std::invalid_argument("number");
    return v.get<double>();
  };
  auto integer = [](const json& v) {
    if (!v.is_number_integer()) throw std::invalid_argument("integer");
    return v.get<int>();
  };

  allow(j, "", {"format", "version", "input", "output", "threads", "correlation", "mask", "outliers"});
  field(j, "", "format", [&](const json& v) { return v.get<std::string>() == "stackreg.config"; });
  field(j, "", "version", [&](const json& v) { return integer(v) == kConfigVersion; });
  field(j, "", "input", [&](const json& v) { return v.is_string(); });
  field(j, "", "output", [&](const json& v) { return v.is_string(); });
  field(j, "", "threads", [&](const json& v) {
    c.correlation.threads = integer(v);
    return c.correlation.threads >= 0;
  });

  if (const json* s = section("correlation")) {
    allow(*s, "correlation.", {"window", "method", "peak_mode", "candidates"});
    field(*s, "correlation.", "window", [&](const json& v) {
      c.correlation.window = parse_window_kind(v.get<std::string>());
      return true;
    });
    field(*s, "correlation.", "method", [&](const json& v) {
      c.correlation.method = parse_correlation_method(v.get<std::string>());
      return true;
    });
    field(*s, "correlation.", "peak_mode", [&](const json& v) {
      c.correlation.peak_mode = parse_peak_mode(v.get<std::string>());
      return true;
    });
    field(*s, "correlation.", "candidates", [&](const json& v) {
      c.correlation.candidates = integer(v);
      return c.correlation.candidates >= 1 && c.correlation.candidates <= 10;
    });
  }

  if (const json* s = section("mask")) {
    auto& m = c.correlation.mask;
    allow(*s, "mask.", {"kind", "k_max", "k_min", "axis_scale", "auto_basis", "basis", "weights_file"});
    field(*s, "mask.", "kind", [&](const json& v) {
      m.kind = parse_mask_kind(v.get<std::string>());
      return true;
    });
    field(*s, "mask.", "k_max", [&](const json& v) {
      m.params.k_max = number(v);
      return m.params.k_max > 0.0 && m.params.k_max <= 0.5;
    });
    field(*s, "mask.", "k_min", [&](const json& v) {
      m.params.k_min = number(v);
      return m.params.k_min >= 0.0 && m.params.k_min <= 0.5;
    });
    field(*s, "mask.", "axis_scale", [&](const json& v) {
      m.params.axis_scale = number(v);
      return m.params.axis_scale > 0.0 && std::isfinite(m.params.axis_scale);
    });
    field(*s, "mask.", "auto_basis", [&](const json& v) {
      m.auto_basis = v.get<bool>();
      return true;
    });
    field(*s, "mask.", "basis", [&](const json& v) {
      std::vector<Vec2> basis;
      for (const auto& b : v) {
        if (!b.is_array() || b.size() != 2) return false;
        basis.push_back({number(b[0]), number(b[1])});
      }
      m.basis = std::move(basis);
      return m.basis.size() <= 2;
    });
    field(*s, "mask.", "weights_file", [&](const json& v) { return v.is_string(); });
  }

  if (const json* s = section("outliers")) {
    allow(*s, "outliers.", {"method", "threshold", "max_paths", "polynomial_order", "row_outlier_fraction"});
    field(*s, "outliers.", "method", [&](const json& v) {
      c.outlier_method = parse_outlier_method(v.get<std::string>());
      return true;
    });
    field(*s, "outliers.", "threshold", [&](const json& v) {
      c.outlier_threshold = number(v);
      return c.outlier_threshold > 0.0 && std::isfinite(c.outlier_threshold);
    });
    field(*s, "outliers.", "max_paths", [&](const json& v) {
      c.max_paths = integer(v);
      return c.max_paths >= 1;
    });
    field(*s, "outliers.", "polynomial_order", [&](const json& v) {
      c.polynomial_order = integer(v);
      return c.polynomial_order >= 0 && c.polynomial_order <= 6;
    });
    field(*s, "outliers.", "row_outlier_fraction", [&](const json& v) {
      c.row_outlier_fraction = number(v);
      return c.row_outlier_fraction > 0.0 && c.row_outlier_fraction <= 1.0;
    });
  }

  if (bad.empty() && c.correlation.mask.kind == MaskKind::bandpass &&
      !(c.correlation.mask.params.k_min < c.correlation.mask.params.k_max)) {
    bad.emplace_back("mask.k_min");
  }
  if (!bad.empty()) {
    std::string msg = "invalid config:";
    for (const auto& b : bad) msg += " " + b;
    throw Error(ErrorCode::invalid_params, msg);
  }
  return c;
}

json make_report(const RegistrationConfig& config, const RegistrationResult& r, const StackMetadata& metadata,
                 const std::string& input) {
  const int n = r.measured.size();
  json flagged = json::array();
  for (const auto& [i, j] : flagged_elements(r)) flagged.push_back(json::array({i, j}));

  int unrepaired = 0;
  for (int i = 0; i < n; ++i) {
    if (!r.solution.included(i)) continue;
    for (int j = i + 1; j < n; ++j) {
      if (r.solution.included(j) && !r.repaired.valid(i, j)) ++unrepaired;
    }
  }

  json included = json::array();
  for (int f = 0; f < n; ++f) included.push_back(r.solution.included(f));

  json drift = nullptr;
  if (r.drift) {
    const auto& d = *r.drift;
    json speed = json::array();
    for (const auto& v : d.velocities) speed.push_back(v.norm());
    drift = {{"unit", d.unit},
             {"frames", d.frames},
             {"times", d.times},
             {"positions", vecs_json(d.positions)},
             {"smoothed", vecs_json(d.smoothed)},
             {"velocities", vecs_json(d.velocities)},
             {"speed", speed}};
  }

  const double n_included = static_cast<double>(n - static_cast<int>(r.solution.excluded.size()));
  const double ratio = r.frame_snr_median > 0.0 ? r.average_snr / r.frame_snr_median : 0.0;

  json stages = json::object();
  double total = 0.0;
  for (const auto& [name, seconds] : r.timing) {
    stages[name] = seconds;
    total += seconds;
  }

  return json{
      {"format", "stackreg.report"},
      {"version", kReportVersion},
      {"status", "ok"},
      {"input", input},
      {"settings", config_to_json(config)},
      {"stack",
       {{"frame_count", metadata.frame_count},
        {"height", metadata.height},
        {"width", metadata.width},
        {"frame_time", metadata.frame_time},
        {"pixel_size", metadata.pixel_size ? json(*metadata.pixel_size) : json(nullptr)}}},
      {"mask", {{"kind", std::string(to_string(r.mask.kind))}, {"basis", vecs_json(r.mask.basis)}}},
      {"shift_matrix",
       {{"measured",
         {{"x", grid_json(r.measured.x())},
          {"y", grid_json(r.measured.y())},
          {"score", grid_json(r.measured.scores())},
          {"refined", grid_json(r.measured.refined_mask())}}},
        {"validity", grid_json(r.validity)},
        {"repaired", {{"x", grid_json(r.repaired.x())}, {"y", grid_json(r.repaired.y())}}}}},
      {"outliers",
       {{"flagged", flagged.size()},
        {"flagged_elements", flagged},
        {"repaired", static_cast<int>(flagged.size()) - unrepaired},
        {"unrepaired", unrepaired}}},
      {"excluded_frames", r.solution.excluded},
      {"included", included},
      {"optimal_shifts", vecs_json(r.solution.shifts)},
      {"drift", drift},
      {"snr",
       {{"frames", r.frame_snr},
        {"frame_median", r.frame_snr_median},
        {"average", r.average_snr},
        {"ratio", ratio},
        {"ratio_over_sqrt_n", ratio / std::sqrt(n_included)}}},
      {"timing", {{"threads", resolve_thread_count(config.correlation.threads)}, {"total", total}, {"stages", stages}}},
  };
}

json error_record(ErrorCode code, const std::string& message) {
  return json{{"format", "stackreg.report"},
              {"version", kReportVersion},
              {"status", "error"},
              {"error", {{"code", std::string(to_string(code))}, {"message", message}}}};
}

}  // namespace stackreg
