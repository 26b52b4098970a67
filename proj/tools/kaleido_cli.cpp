// kaleido: command-line front end to the kaleidoscope calibration library.
//
// Exit codes:
//   0 success
//   1 usage error, unreadable input or unwritable output
//   2 input does not parse
//   3 scene generation failed
//   4 chambers (or the reference object) required by the method are missing
//   5 degenerate configuration
//   6 internal error

#include "kaleido/kaleido.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace {

constexpr int kExitUsage = 1;

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void raise(kaleido_status status, const std::string& context) {
  std::string msg = context;
  const char* detail = kaleido_last_error();
  if (detail != nullptr && *detail != '\0') msg += ": " + std::string(detail);
  throw Failure{static_cast<int>(status), msg};
}

void check(kaleido_status status, const std::string& context) {
  if (status != KALEIDO_OK) raise(status, context);
}

// Owns a string allocated by the library.
struct LibString {
  char* ptr = nullptr;
  ~LibString() { kaleido_string_free(ptr); }
  std::string str() const { return ptr == nullptr ? std::string() : std::string(ptr); }
};

template <typename T, void (*Destroy)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(ptr); }
};

using Scene = Handle<kaleido_scene, kaleido_scene_destroy>;
using Correspondences = Handle<kaleido_correspondences, kaleido_correspondences_destroy>;
using Reference = Handle<kaleido_reference, kaleido_reference_destroy>;
using Calibration = Handle<kaleido_calibration, kaleido_calibration_destroy>;
using Sweep = Handle<kaleido_sweep, kaleido_sweep_destroy>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitUsage, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Failure{kExitUsage, "cannot read " + path};
  return ss.str();
}

// All outputs of a command are staged next to their targets and renamed into
// place only once every one of them has been written.
class OutputSet {
 public:
  void add(const std::string& path, std::string content) {
    files_.emplace_back(path, std::move(content));
  }

  void commit() {
    std::vector<std::string> staged;
    try {
      for (const auto& [path, content] : files_) {
        const std::string tmp = path + ".tmp";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Failure{kExitUsage, "cannot write " + path};
        staged.push_back(tmp);
        out << content;
        out.close();
        if (!out) throw Failure{kExitUsage, "cannot write " + path};
      }
      for (std::size_t k = 0; k < files_.size(); ++k) {
        std::filesystem::rename(staged[k], files_[k].first);
      }
    } catch (...) {
      std::error_code ignored;
      for (const auto& tmp : staged) std::filesystem::remove(tmp, ignored);
      throw;
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string sidecar(const std::string& output, const char* suffix) {
  std::string base = output;
  const std::string ext = ".json";
  if (base.size() > ext.size() && base.compare(base.size() - ext.size(), ext.size(), ext) == 0) {
    base.erase(base.size() - ext.size());
  }
  return base + suffix;
}

int cmd_simulate(const std::string& config_path, const std::string& output,
                 std::string truth_path, std::string reference_path) {
  const std::string config = read_file(config_path);
  Scene scene;
  check(kaleido_simulate(config.c_str(), &scene.ptr), "simulate " + config_path);
  LibString corr, truth, reference;
  check(kaleido_scene_correspondences_json(scene.ptr, &corr.ptr), "serialize correspondences");
  check(kaleido_scene_truth_json(scene.ptr, &truth.ptr), "serialize ground truth");
  check(kaleido_scene_reference_json(scene.ptr, &reference.ptr), "serialize reference object");
  if (truth_path.empty()) truth_path = sidecar(output, ".truth.json");
  if (reference_path.empty()) reference_path = sidecar(output, ".reference.json");

  OutputSet files;
  files.add(output, corr.str());
  files.add(truth_path, truth.str());
  files.add(reference_path, reference.str());
  files.commit();

  Correspondences parsed;
  check(kaleido_correspondences_parse(corr.ptr, &parsed.ptr), "reparse correspondences");
  std::cout << "{\"command\": \"simulate\", \"points\": "
            << kaleido_correspondences_point_count(parsed.ptr) << ", \"output\": " << quoted(output)
            << ", \"truth\": " << quoted(truth_path) << ", \"reference\": " << quoted(reference_path)
            << "}\n";
  return 0;
}

int cmd_calibrate(const std::string& input, const std::string& output, const std::string& method,
                  bool ba, const std::string& reference_path) {
  kaleido_calibrate_options options{};
  if (method == "proposed") {
    options.method = KALEIDO_METHOD_PROPOSED;
  } else if (method == "baseline") {
    options.method = KALEIDO_METHOD_BASELINE;
  } else {
    options.method = KALEIDO_METHOD_TAKAHASHI;
  }
  options.bundle_adjust = ba ? 1 : 0;

  const std::string text = read_file(input);
  Correspondences corr;
  check(kaleido_correspondences_parse(text.c_str(), &corr.ptr), "parse " + input);
  Reference reference;
  if (!reference_path.empty()) {
    const std::string ref_text = read_file(reference_path);
    check(kaleido_reference_parse(ref_text.c_str(), &reference.ptr), "parse " + reference_path);
  } else if (options.method != KALEIDO_METHOD_PROPOSED) {
    throw Failure{KALEIDO_ERR_MISSING_CHAMBERS,
                  "method " + method + " requires a reference object (--reference)"};
  }

  Calibration cal;
  check(kaleido_calibrate(corr.ptr, &options, reference.ptr, &cal.ptr), "calibrate (" + method + ")");
  LibString json;
  check(kaleido_calibration_to_json(cal.ptr, &json.ptr), "serialize calibration");
  OutputSet files;
  files.add(output, json.str());
  files.commit();

  const bool degenerate = kaleido_calibration_degenerate(cal.ptr) != 0;
  std::cout << "{\"command\": \"calibrate\", \"method\": " << quoted(method)
            << ", \"bundle_adjustment\": " << (ba ? "true" : "false")
            << ", \"reprojection_error\": "
            << format_double(kaleido_calibration_reprojection_error(cal.ptr))
            << ", \"degenerate\": " << (degenerate ? "true" : "false") << "}\n";
  if (degenerate) {
    std::cerr << "kaleido: degenerate configuration; see diagnostics in " << output << "\n";
    return KALEIDO_ERR_DEGENERATE;
  }
  return 0;
}

int cmd_triangulate(const std::string& input, const std::string& calibration,
                    const std::string& output) {
  const std::string text = read_file(input);
  Correspondences corr;
  check(kaleido_correspondences_parse(text.c_str(), &corr.ptr), "parse " + input);
  const std::string cal_text = read_file(calibration);
  Calibration cal;
  check(kaleido_calibration_parse(cal_text.c_str(), &cal.ptr), "parse " + calibration);
  LibString json;
  check(kaleido_triangulate_json(corr.ptr, cal.ptr, &json.ptr), "triangulate");
  OutputSet files;
  files.add(output, json.str());
  files.commit();
  std::cout << "{\"command\": \"triangulate\", \"points\": "
            << kaleido_correspondences_point_count(corr.ptr) << ", \"output\": " << quoted(output)
            << "}\n";
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& output) {
  const std::string spec = read_file(spec_path);
  Sweep sweep;
  check(kaleido_sweep_run(spec.c_str(), &sweep.ptr), "sweep " + spec_path);
  LibString csv;
  check(kaleido_sweep_csv(sweep.ptr, &csv.ptr), "format sweep");
  OutputSet files;
  files.add(output, csv.str());
  files.commit();
  std::cout << "{\"command\": \"sweep\", \"rows\": " << kaleido_sweep_row_count(sweep.ptr)
            << ", \"output\": " << quoted(output) << "}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kaleidoscopic mirror calibration from projections of a single 3D point"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kaleido_version());

  std::string sim_config, sim_output, sim_truth, sim_reference;
  auto* simulate = app.add_subcommand("simulate", "Render a synthetic scene to a correspondence file");
  simulate->add_option("config", sim_config, "Scene configuration JSON")->required();
  simulate->add_option("-o,--output", sim_output, "Correspondence file to write")->required();
  simulate->add_option("--truth", sim_truth, "Ground-truth sidecar (default: OUTPUT.truth.json)");
  simulate->add_option("--reference", sim_reference,
                       "Reference-object sidecar (default: OUTPUT.reference.json)");

  std::string cal_input, cal_output, cal_method = "proposed", cal_ba = "on", cal_reference;
  auto* calibrate = app.add_subcommand("calibrate", "Estimate mirror normals and distances");
  calibrate->add_option("input", cal_input, "Correspondence file")->required();
  calibrate->add_option("-o,--output", cal_output, "Calibration file to write")->required();
  calibrate->add_option("--method", cal_method, "proposed | baseline | takahashi")
      ->check(CLI::IsMember({"proposed", "baseline", "takahashi"}))
      ->capture_default_str();
  calibrate->add_option("--ba", cal_ba, "Kaleidoscopic bundle adjustment: on | off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  calibrate->add_option("--reference", cal_reference, "Reference object (baseline, takahashi)");

  std::string tri_input, tri_calibration, tri_output;
  auto* triangulate = app.add_subcommand("triangulate", "Triangulate scene points with known mirrors");
  triangulate->add_option("input", tri_input, "Correspondence file")->required();
  triangulate->add_option("--calibration", tri_calibration, "Calibration file")->required();
  triangulate->add_option("-o,--output", tri_output, "Point file to write")->required();

  std::string sweep_spec, sweep_output;
  auto* sweep = app.add_subcommand("sweep", "Run a Monte-Carlo evaluation sweep");
  sweep->add_option("spec", sweep_spec, "Sweep specification JSON")->required();
  sweep->add_option("-o,--output", sweep_output, "CSV file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim_config, sim_output, sim_truth, sim_reference);
    if (calibrate->parsed()) {
      return cmd_calibrate(cal_input, cal_output, cal_method, cal_ba == "on", cal_reference);
    }
    if (triangulate->parsed()) return cmd_triangulate(tri_input, tri_calibration, tri_output);
    if (sweep->parsed()) return cmd_sweep(sweep_spec, sweep_output);
  } catch (const Failure& f) {
    std::cerr << "kaleido: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "kaleido: " << e.what() << "\n";
    return KALEIDO_ERR_INTERNAL;
  }
  return kExitUsage;
}
