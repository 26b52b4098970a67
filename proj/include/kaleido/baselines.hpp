#pragma once

#include "kaleido/geometry.hpp"
#include "kaleido/synth.hpp"

#include <array>
#include <span>
#include <vector>

namespace kaleido {

// Rigid pose p_cam = rotation * p_model + translation. When `mirrored` is set
// the model is the object with its x axis flipped, so that views with an odd
// number of reflections are still fit by a proper rotation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  bool mirrored = false;

  Point3 apply(const Point3& object_point) const;
};

struct PoseEstimate {
  Pose pose;
  std::vector<Point3> landmarks;       // camera frame
  double cost = 0.0;                   // sum of squared pixel residuals
  std::vector<double> candidate_costs; // one per refined initialisation
};

// Perspective-n-point: linear initialisation (homography for planar objects,
// DLT otherwise) followed by Levenberg-Marquardt on the reprojection error.
// Planar objects are refined from both sides of the two-fold flip ambiguity
// and the lower-cost pose is returned. Needs >= 4 planar / >= 6 general
// landmarks.
PoseEstimate estimate_pose(std::span<const Pixel> landmarks2d, const ReferenceObject& object,
                           const CameraIntrinsics& a, bool odd_reflections);

// Camera-frame landmark positions per chamber.
struct PosedLandmarks {
  std::vector<std::pair<ReflectionSequence, std::vector<Point3>>> chambers;

  const std::vector<Point3>& at(const ReflectionSequence& seq) const;
  bool contains(const ReflectionSequence& seq) const;
  std::size_t landmark_count() const;
};

// Chambers used by both reference-object methods.
std::vector<ReflectionSequence> reference_method_sequences();

// Landmark l of the reference object is observation l. Runs one PnP per
// required chamber; throws MissingChambers listing absent chamber keys.
PosedLandmarks pose_landmarks(std::span<const KaleidoscopicObservation> obs,
                              const ReferenceObject& object, const CameraIntrinsics& a);

// Exactly posed landmarks: every scene point pushed through every sequence.
PosedLandmarks exact_posed_landmarks(std::span<const Point3> points, const MirrorSet& mirrors,
                                     std::span<const ReflectionSequence> sequences);

// Normals from summed mirror-pair displacement vectors and distances from the
// averaged pair midpoints lying on each plane. Metric scale.
MirrorSet baseline_calibrate(const PosedLandmarks& posed);

struct TakahashiResult {
  MirrorSet mirrors{};
  std::array<Vec3, 3> intersections;  // m12, m23, m31 (unit)
};

// Intersection vector of mirrors i and j from the orthogonality constraint on
// the four chamber pairs that mirror each other across planes i and j.
Vec3 estimate_intersection_vector(const PosedLandmarks& posed, int i, int j);

// Normals from cross products of intersection vectors, distances from
// direct-view / first-reflection midpoints. Throws Degenerate when two
// intersection vectors are parallel.
TakahashiResult takahashi_calibrate_detailed(const PosedLandmarks& posed);
MirrorSet takahashi_calibrate(const PosedLandmarks& posed);

}  // namespace kaleido
