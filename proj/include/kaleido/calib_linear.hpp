#pragma once

#include "kaleido/geometry.hpp"
#include "kaleido/synth.hpp"

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kaleido {

// A null-space solve is flagged when sigma_second / sigma_smallest falls
// below this ratio. Flagged solves still return a result.
inline constexpr double kDegeneracyRatio = 10.0;

struct SolveDiagnostics {
  double smallest = 0.0;
  double second_smallest = 0.0;
  std::size_t rows = 0;

  // +inf for an exact null space with a non-zero gap.
  double ratio() const;
  bool flagged() const { return !(ratio() >= kDegeneracyRatio); }
};

struct NullSpaceSolution {
  Eigen::VectorXd vector;  // unit right singular vector
  SolveDiagnostics diagnostics;
};

// Right singular vector of the smallest singular value. Matrices with fewer
// rows than columns are treated as padded with zero rows.
NullSpaceSolution smallest_singular_vector(const Eigen::MatrixXd& m);

// Row r with r . n = 0 for a point / mirror-image pair seen through a mirror
// with normal n; equals the cross product of the two homogeneous rays.
Vec3 coplanarity_row(const NormalizedPoint& x, const NormalizedPoint& x_mirrored);

// Normal of one mirror from >= 2 (point, mirror image) pairs, sign fixed so
// n.z < 0. The mirror distance is not observable from these pairs alone.
Vec3 estimate_normal_single_mirror(
    std::span<const std::pair<NormalizedPoint, NormalizedPoint>> pairs);

struct NormalEstimate {
  std::array<Vec3, 3> normals;
  std::array<SolveDiagnostics, 3> diagnostics;
};

// Coplanarity rows for `mirror` (1-based): one row for every observed pair of
// chambers (s, mirror * s), over all points.
Eigen::MatrixXd normal_constraint_rows(std::span<const KaleidoscopicObservation> obs,
                                       const CameraIntrinsics& a, int mirror);

NormalEstimate estimate_normals(std::span<const KaleidoscopicObservation> obs,
                                const CameraIntrinsics& a);

// Collinearity constraint x_s x (S_s p0) = 0 of one chamber, split into the
// part multiplying p0 and the part multiplying (d1, d2, d3).
struct CollinearityBlock {
  Mat3 point;
  Mat3 distances;
};

CollinearityBlock collinearity_block(const NormalizedPoint& x, const ReflectionSequence& seq,
                                     std::span<const Vec3> normals);

// Stacked collinearity constraints. Columns are [p0 of point 0 | ... |
// p0 of point L-1 | d1 d2 d3]; three rows per (point, chamber) in
// observation order.
struct DistanceSystem {
  Eigen::MatrixXd k;
  std::size_t point_count = 0;
  std::vector<std::pair<std::size_t, ReflectionSequence>> blocks;
};

DistanceSystem build_distance_system(std::span<const KaleidoscopicObservation> obs,
                                     const CameraIntrinsics& a, std::span<const Vec3> normals);

struct DistanceEstimate {
  std::array<double, 3> distances{};  // d1 == 1
  std::vector<Point3> points;         // same gauge as the distances
  SolveDiagnostics diagnostics;
};

DistanceEstimate estimate_distances(const DistanceSystem& system);

// Least-squares p0 from the collinearity system with known mirrors, via the
// normal equations K'^T K' p0 = -K'^T K'' d.
Point3 triangulate(const KaleidoscopicObservation& obs, const CameraIntrinsics& a,
                   std::span<const MirrorPlane> mirrors);
std::vector<Point3> triangulate(std::span<const KaleidoscopicObservation> obs,
                                const CameraIntrinsics& a, std::span<const MirrorPlane> mirrors);

struct LinearDiagnostics {
  std::array<SolveDiagnostics, 3> normals;
  SolveDiagnostics distances;
  std::vector<std::string> warnings;

  bool degenerate() const { return !warnings.empty(); }
};

struct LinearCalibration {
  MirrorSet mirrors{};          // d1 == 1
  std::vector<Point3> points;   // triangulated, same gauge
  LinearDiagnostics diagnostics;
};

LinearCalibration calibrate_linear(std::span<const KaleidoscopicObservation> obs,
                                   const CameraIntrinsics& a);

}  // namespace kaleido
