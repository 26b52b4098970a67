#pragma once

#include "kaleido/calib_linear.hpp"
#include "kaleido/geometry.hpp"
#include "kaleido/synth.hpp"

#include <array>
#include <span>

namespace kaleido {

// Eight free mirror parameters under the gauge d1 = 1: spherical angles
// (theta_i, phi_i) of each normal, n = (sin t cos p, sin t sin p, cos t),
// followed by d2 and d3.
struct MirrorParams {
  static constexpr int kSize = 8;
  Eigen::Matrix<double, kSize, 1> values = Eigen::Matrix<double, kSize, 1>::Zero();

  // Mirrors are rescaled so that d1 = 1 before encoding.
  static MirrorParams from_mirrors(const MirrorSet& mirrors);
  MirrorSet to_mirrors() const;
};

// Reprojection residuals q - q_hat (px): for every point, p0 is triangulated
// from the current mirrors and reprojected through every observed chamber in
// observation order, u then v.
Eigen::VectorXd residual(const MirrorParams& params, std::span<const KaleidoscopicObservation> obs,
                         const CameraIntrinsics& a);

// Forward-difference Jacobian of residual() with the given step.
Eigen::MatrixXd residual_jacobian(const MirrorParams& params,
                                  std::span<const KaleidoscopicObservation> obs,
                                  const CameraIntrinsics& a, double step = 1e-6);

struct RefineOptions {
  int max_iterations = 100;
  double initial_damping = 1e-3;
  double max_damping = 1e12;
  double jacobian_step = 1e-6;
  double relative_cost_tolerance = 1e-12;
  double gradient_tolerance = 1e-10;
};

struct RefinementReport {
  double initial_cost = 0.0;  // px^2
  double final_cost = 0.0;    // px^2
  int iterations = 0;         // accepted steps
  bool converged = false;
};

struct Refinement {
  MirrorSet mirrors{};  // d1 == 1
  RefinementReport report;
};

// Levenberg-Marquardt on ||residual||^2 over MirrorParams.
Refinement bundle_adjust(const MirrorSet& init, std::span<const KaleidoscopicObservation> obs,
                         const CameraIntrinsics& a, const RefineOptions& options = {});
Refinement bundle_adjust(const LinearCalibration& init,
                         std::span<const KaleidoscopicObservation> obs, const CameraIntrinsics& a,
                         const RefineOptions& options = {});

}  // namespace kaleido
