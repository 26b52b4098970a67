#pragma once

#include "kaleido/baselines.hpp"
#include "kaleido/calib_linear.hpp"
#include "kaleido/calib_refine.hpp"
#include "kaleido/synth.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kaleido {

enum class Method { ProposedLinear, ProposedBa, Baseline, Takahashi };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

// Mean absolute angle (rad) between estimated and true normals.
double error_normal(std::span<const Vec3> estimated, std::span<const Vec3> truth);

// Mean absolute distance difference. With gauge alignment the estimate (in
// the d1 = 1 gauge) is first multiplied by the true d1.
double error_distance(std::span<const double> estimated, std::span<const double> truth,
                      bool align_gauge);

// Triangulates every point with the given mirrors, reprojects it through
// every observed chamber and returns the mean residual length (px) per
// chamber observation.
double error_reprojection(const MirrorSet& mirrors, std::span<const KaleidoscopicObservation> obs,
                          const CameraIntrinsics& a);

struct MethodOutcome {
  MirrorSet mirrors{};
  bool metric = false;  // false: d1 == 1 gauge
  std::optional<LinearDiagnostics> linear;
  std::optional<RefinementReport> refinement;

  bool flagged() const { return linear && linear->degenerate(); }
};

// Runs one calibration method end to end. The reference-object methods need
// `reference`; the kaleidoscopic bundle adjustment is applied on top when
// `refine` is set (metric methods keep their initial d1 as scale).
MethodOutcome run_method(Method method, std::span<const KaleidoscopicObservation> obs,
                         const CameraIntrinsics& a, const ReferenceObject* reference, bool refine);

// run_method with the refinement implied by the method name.
MethodOutcome run_method(Method method, std::span<const KaleidoscopicObservation> obs,
                         const CameraIntrinsics& a, const ReferenceObject* reference);

struct TrialResult {
  double e_n = 0.0;    // rad
  double e_d = 0.0;    // metric units
  double e_rep = 0.0;  // px
  int n_iter = 0;
  bool degenerate = false;
  std::string failure;
  std::optional<RefinementReport> refinement;
};

TrialResult evaluate_trial(Method method, const Scene& scene, const CameraIntrinsics& a);

struct MethodConfig {
  Method method = Method::ProposedLinear;
  int points = 5;
  PointLayout layout = PointLayout::RandomVolume;
  std::string label;  // generated when empty

  std::string display_label() const;
};

enum class SweepAxis { NoiseSigma, PointCount };

struct SweepSpec {
  SweepAxis axis = SweepAxis::NoiseSigma;
  std::vector<double> levels;
  int trials = 100;
  std::uint64_t seed = 0;
  double sigma = 1.0;  // noise level used on the point-count axis
  SceneConfig rig = default_rig();
  std::vector<MethodConfig> methods;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
};

// Default grids: sigma in {0, 0.5, 1, 1.5, 2} px at five points, and
// N_p in {1, 2, 3, 5, 8} at sigma = 1 px.
SweepSpec default_noise_sweep();
SweepSpec default_point_sweep();

struct CellResult {
  double axis_value = 0.0;
  std::vector<std::vector<TrialResult>> trials;  // [method][trial]
};

// Trials of one cell. Trial t uses seed spec.seed + t; methods sharing a
// point configuration see identical noisy observations.
CellResult run_cell(const SweepSpec& spec, double level);

struct SweepRow {
  double axis_value = 0.0;
  std::string method;
  double mean_e_n = 0.0, std_e_n = 0.0;
  double mean_e_d = 0.0, std_e_d = 0.0;
  double mean_e_rep = 0.0, std_e_rep = 0.0;
  double mean_n_iter = 0.0;
  int degenerate_count = 0;
  int trials = 0;
};

std::vector<SweepRow> summarize(const SweepSpec& spec, const CellResult& cell);
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

// Fixed decimal notation with `significant` significant digits.
std::string format_significant(double value, int significant = 9);
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace kaleido
