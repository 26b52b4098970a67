#pragma once

#include "kaleido/geometry.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace kaleido {

using MirrorSet = std::array<MirrorPlane, 3>;

// All 2D measurements of one scene point, one entry per observed chamber.
// Entries keep their insertion order; residual vectors and files follow it.
struct KaleidoscopicObservation {
  std::vector<std::pair<ReflectionSequence, Pixel>> views;

  const Pixel* find(const ReflectionSequence& seq) const;
  void set(const ReflectionSequence& seq, const Pixel& q);
};

enum class PointLayout { RandomVolume, Planar };

struct PointSpec {
  int count = 1;
  PointLayout layout = PointLayout::RandomVolume;
  // Volume: points uniform in center +- half_extent (per axis).
  // Planar: points uniform in the square [-plane_half_size, plane_half_size]^2
  // of a board whose frame is rotated by plane_rotation (axis-angle vector)
  // and centred at `center`.
  Point3 center = Point3(0.0, 0.0, 0.7);
  Vec3 half_extent = Vec3(0.02, 0.02, 0.01);
  Vec3 plane_rotation = Vec3(0.35, 0.0, 0.0);
  double plane_half_size = 0.025;
};

struct SceneConfig {
  CameraIntrinsics intrinsics = CameraIntrinsics::from_focal(1000.0, 500.0, 500.0);
  MirrorSet mirrors{};
  PointSpec points{};
  std::vector<ReflectionSequence> sequences = default_sequences();
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  int image_width = 1000;
  int image_height = 1000;

  // Mirror convention, pairwise non-parallel mirrors, sigma >= 0, count >= 1.
  void validate() const;
};

// Known object geometry handed to the reference-object methods: landmark
// positions in the object frame.
struct ReferenceObject {
  std::vector<Point3> landmarks;
  bool planar = false;
};

struct GroundTruth {
  MirrorSet mirrors{};
  std::vector<Point3> points;
  ReferenceObject reference;
};

struct Scene {
  GroundTruth truth;
  std::vector<KaleidoscopicObservation> observations;
};

// Exact projections of every point through every sequence. Throws
// ErrorCode::Generation naming the point and chamber if a reflected point has
// non-positive depth.
std::vector<KaleidoscopicObservation> render(const CameraIntrinsics& a,
                                             std::span<const MirrorPlane> mirrors,
                                             std::span<const Point3> points,
                                             std::span<const ReflectionSequence> sequences);

// Draws points, renders them and adds i.i.d. N(0, sigma^2) noise to u and v.
// Output is a pure function of the config (including its seed).
Scene generate(const SceneConfig& config);

// Three mirrors around the optical axis at ~120 degree spacing forming a
// tube nearly parallel to the viewing direction; f = 1000 px on a
// 1000 x 1000 image.
SceneConfig default_rig();

// Rig whose three normals are all perpendicular to the x axis, so the three
// mirror intersection lines are parallel. Used to exercise the degeneracy of
// the intersection-vector method.
SceneConfig parallel_intersection_rig();

}  // namespace kaleido
