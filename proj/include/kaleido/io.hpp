#pragma once

#include "kaleido/harness.hpp"
#include "kaleido/synth.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// JSON file formats. Every parse function throws Error(ErrorCode::Parse) on
// malformed input; writers produce deterministic text (keys in a fixed order,
// shortest round-trip doubles, two-space indentation).
namespace kaleido::io {

// Scene configuration. Every field is optional; missing fields come from the
// rig named by "rig" ("default" or "parallel_intersection").
SceneConfig parse_scene_config(std::string_view json);
std::string write_scene_config(const SceneConfig& config);

struct Correspondences {
  CameraIntrinsics intrinsics = CameraIntrinsics::from_focal(1.0, 0.0, 0.0);
  std::vector<KaleidoscopicObservation> points;
};

// {"intrinsics": [[...],[...],[...]], "points": [{"0": [u, v], "12": [u, v]}, ...]}
Correspondences parse_correspondences(std::string_view json);
std::string write_correspondences(const Correspondences& c);

// Sidecar with the generating mirrors and scene points.
GroundTruth parse_ground_truth(std::string_view json);
std::string write_ground_truth(const GroundTruth& truth);

// {"planar": bool, "landmarks": [[x, y, z], ...]}
ReferenceObject parse_reference(std::string_view json);
std::string write_reference(const ReferenceObject& reference);

struct CalibrationRecord {
  std::string method = "proposed";
  bool bundle_adjustment = false;
  MirrorSet mirrors{};
  bool metric = false;
  double reprojection_error = 0.0;
  std::optional<LinearDiagnostics> linear;
  std::optional<RefinementReport> refinement;

  bool degenerate() const { return linear && linear->degenerate(); }
};

CalibrationRecord parse_calibration(std::string_view json);
std::string write_calibration(const CalibrationRecord& record);

std::string write_points(const std::vector<Point3>& points, bool metric);

SweepSpec parse_sweep_spec(std::string_view json);

}  // namespace kaleido::io
