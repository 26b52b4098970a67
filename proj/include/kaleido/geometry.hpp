#pragma once

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kaleido {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Point3 = Eigen::Vector3d;

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

// Normalized image coordinates (x, y, 1) = A^-1 (u, v, 1).
struct NormalizedPoint {
  double x = 0.0;
  double y = 0.0;

  Vec3 homogeneous() const { return {x, y, 1.0}; }
};

// Pinhole intrinsics. The matrix is upper triangular with a positive
// diagonal and a unit bottom-right entry.
class CameraIntrinsics {
 public:
  explicit CameraIntrinsics(const Mat3& a);

  static CameraIntrinsics from_focal(double focal, double cx, double cy);

  const Mat3& matrix() const { return a_; }
  const Mat3& inverse() const { return a_inv_; }

 private:
  Mat3 a_;
  Mat3 a_inv_;
};

// Plane n^T x + d = 0 with |n| = 1, d > 0 and n.z < 0: the camera centre
// lies on the positive side and the mirror faces the camera.
struct MirrorPlane {
  Vec3 normal = Vec3(0.0, 0.0, -1.0);
  double distance = 1.0;

  double signed_distance(const Point3& p) const { return normal.dot(p) + distance; }

  // Throws InvalidArgument when the plane violates the convention above.
  void validate() const;
};

// Rigid motion p -> linear * p + translation. For m composed reflections the
// linear part is orthogonal with determinant (-1)^m.
struct ReflectionTransform {
  Mat3 linear = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static ReflectionTransform identity() { return {}; }

  Point3 apply(const Point3& p) const { return linear * p + translation; }

  // (this * rhs).apply(p) == this->apply(rhs.apply(p))
  ReflectionTransform operator*(const ReflectionTransform& rhs) const {
    return {linear * rhs.linear, linear * rhs.translation + translation};
  }
};

// Ordered mirror indices (1-based), outermost reflection first: [i, j] is the
// chamber seen through S_i S_j. The empty sequence is the direct view.
class ReflectionSequence {
 public:
  ReflectionSequence() = default;
  ReflectionSequence(std::initializer_list<int> indices);
  explicit ReflectionSequence(std::vector<int> indices);

  // "0" is the base chamber, otherwise one digit per reflection ("123").
  static ReflectionSequence from_key(std::string_view key);
  std::string key() const;

  const std::vector<int>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  int front() const { return indices_.front(); }

  // The chamber obtained by reflecting this one once more in `mirror`.
  // prepended() throws when can_prepend() is false.
  bool can_prepend(int mirror) const { return indices_.empty() || indices_.front() != mirror; }
  ReflectionSequence prepended(int mirror) const;

  // Largest mirror index referenced, 0 for the base chamber.
  int max_index() const;

  auto operator<=>(const ReflectionSequence&) const = default;
  bool operator==(const ReflectionSequence&) const = default;

 private:
  void validate() const;

  std::vector<int> indices_;
};

// The ten chambers up to second order, in the row order of the distance
// system: 0, 1, 2, 3, 12, 21, 23, 32, 31, 13.
std::vector<ReflectionSequence> default_sequences();

Mat3 skew(const Vec3& v);

Pixel project(const CameraIntrinsics& a, const Point3& p);
NormalizedPoint normalize(const CameraIntrinsics& a, const Pixel& q);

Mat3 householder(const Vec3& unit_normal);
ReflectionTransform reflection_transform(const MirrorPlane& m);
Point3 reflect(const MirrorPlane& m, const Point3& p);

// Product of the per-mirror transforms in sequence order. Mirror index k
// refers to mirrors[k - 1].
ReflectionTransform compose(const ReflectionSequence& seq, std::span<const MirrorPlane> mirrors);

}  // namespace kaleido
