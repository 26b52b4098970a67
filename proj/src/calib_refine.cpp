#include "kaleido/calib_refine.hpp"

#include "kaleido/error.hpp"

#include <algorithm>
#include <cmath>

namespace kaleido {

namespace {

Vec3 from_spherical(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

bool try_residual(const MirrorParams& params, std::span<const KaleidoscopicObservation> obs,
                  const CameraIntrinsics& a, Eigen::VectorXd& out) {
  try {
    out = residual(params, obs, a);
  } catch (const Error&) {
    return false;
  }
  return out.allFinite();
}

}  // namespace

MirrorParams MirrorParams::from_mirrors(const MirrorSet& mirrors) {
  const double scale = mirrors[0].distance;
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "d1 must be positive");
  MirrorParams out;
  for (int i = 0; i < 3; ++i) {
    const Vec3 n = mirrors[static_cast<std::size_t>(i)].normal.normalized();
    out.values(2 * i) = std::acos(std::clamp(n.z(), -1.0, 1.0));
    out.values(2 * i + 1) = std::atan2(n.y(), n.x());
  }
  out.values(6) = mirrors[1].distance / scale;
  out.values(7) = mirrors[2].distance / scale;
  return out;
}

MirrorSet MirrorParams::to_mirrors() const {
  MirrorSet out;
  for (int i = 0; i < 3; ++i) {
    out[static_cast<std::size_t>(i)].normal = from_spherical(values(2 * i), values(2 * i + 1));
  }
  out[0].distance = 1.0;
  out[1].distance = values(6);
  out[2].distance = values(7);
  return out;
}

Eigen::VectorXd residual(const MirrorParams& params, std::span<const KaleidoscopicObservation> obs,
                         const CameraIntrinsics& a) {
  const MirrorSet mirrors = params.to_mirrors();
  Eigen::Index size = 0;
  for (const auto& o : obs) size += 2 * static_cast<Eigen::Index>(o.views.size());
  Eigen::VectorXd r(size);
  Eigen::Index k = 0;
  for (const auto& o : obs) {
    const Point3 p0 = triangulate(o, a, mirrors);
    for (const auto& [seq, q] : o.views) {
      const Pixel predicted = project(a, compose(seq, mirrors).apply(p0));
      r(k++) = q.u - predicted.u;
      r(k++) = q.v - predicted.v;
    }
  }
  return r;
}

Eigen::MatrixXd residual_jacobian(const MirrorParams& params,
                                  std::span<const KaleidoscopicObservation> obs,
                                  const CameraIntrinsics& a, double step) {
  const Eigen::VectorXd r0 = residual(params, obs, a);
  Eigen::MatrixXd j(r0.size(), MirrorParams::kSize);
  for (int c = 0; c < MirrorParams::kSize; ++c) {
    MirrorParams shifted = params;
    shifted.values(c) += step;
    j.col(c) = (residual(shifted, obs, a) - r0) / step;
  }
  return j;
}

Refinement bundle_adjust(const MirrorSet& init, std::span<const KaleidoscopicObservation> obs,
                         const CameraIntrinsics& a, const RefineOptions& options) {
  MirrorParams params = MirrorParams::from_mirrors(init);
  Eigen::VectorXd r = residual(params, obs, a);
  double cost = r.squaredNorm();

  Refinement out;
  out.report.initial_cost = cost;
  double damping = options.initial_damping;
  bool stalled = false;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::MatrixXd j;
    try {
      j = residual_jacobian(params, obs, a, options.jacobian_step);
    } catch (const Error&) {
      stalled = true;
      break;
    }
    const Eigen::VectorXd gradient = j.transpose() * r;
    if (gradient.norm() < options.gradient_tolerance) {
      out.report.converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = j.transpose() * j;

    bool accepted = false;
    double new_cost = cost;
    while (!accepted) {
      Eigen::MatrixXd system = jtj;
      for (int c = 0; c < MirrorParams::kSize; ++c) {
        system(c, c) += damping * std::max(jtj(c, c), 1e-12);
      }
      MirrorParams candidate = params;
      candidate.values += system.ldlt().solve(-gradient);
      Eigen::VectorXd candidate_r;
      if (candidate.values.allFinite() && try_residual(candidate, obs, a, candidate_r) &&
          candidate_r.squaredNorm() < cost) {
        params = candidate;
        r = std::move(candidate_r);
        new_cost = r.squaredNorm();
        damping = std::max(damping / 10.0, 1e-15);
        accepted = true;
      } else {
        damping *= 10.0;
        if (damping > options.max_damping) break;
      }
    }
    if (!accepted) {
      stalled = true;
      break;
    }
    ++out.report.iterations;
    const double relative_change = (cost - new_cost) / std::max(cost, 1e-300);
    cost = new_cost;
    if (relative_change < options.relative_cost_tolerance) {
      out.report.converged = true;
      break;
    }
  }

  if (stalled) {
    // No decreasing step exists even with maximal damping. After progress (or
    // from an exact fit) that is a minimum to working precision; otherwise the
    // optimisation diverged from its start.
    out.report.converged = out.report.iterations > 0 || cost < 1e-14;
  }
  if (!out.report.converged && out.report.iterations == 0) {
    out.mirrors = MirrorParams::from_mirrors(init).to_mirrors();
    out.report.final_cost = out.report.initial_cost;
    return out;
  }
  out.mirrors = params.to_mirrors();
  out.report.final_cost = cost;
  return out;
}

Refinement bundle_adjust(const LinearCalibration& init,
                         std::span<const KaleidoscopicObservation> obs, const CameraIntrinsics& a,
                         const RefineOptions& options) {
  return bundle_adjust(init.mirrors, obs, a, options);
}

}  // namespace kaleido
