#include "kaleido/geometry.hpp"

#include "kaleido/error.hpp"

#include <cmath>
#include <sstream>

namespace kaleido {

namespace {

bool all_finite(const Mat3& m) { return m.allFinite(); }

}  // namespace

CameraIntrinsics::CameraIntrinsics(const Mat3& a) : a_(a) {
  if (!all_finite(a)) throw Error(ErrorCode::InvalidArgument, "intrinsics contain non-finite values");
  if (a(1, 0) != 0.0 || a(2, 0) != 0.0 || a(2, 1) != 0.0 || a(2, 2) != 1.0) {
    throw Error(ErrorCode::InvalidArgument,
                "intrinsics must be upper triangular with a(2,2) = 1");
  }
  if (!(a(0, 0) > 0.0) || !(a(1, 1) > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "intrinsics must have a positive diagonal");
  }
  a_inv_ = a.inverse();
}

CameraIntrinsics CameraIntrinsics::from_focal(double focal, double cx, double cy) {
  Mat3 a;
  a << focal, 0.0, cx, 0.0, focal, cy, 0.0, 0.0, 1.0;
  return CameraIntrinsics(a);
}

void MirrorPlane::validate() const {
  if (!normal.allFinite() || !std::isfinite(distance)) {
    throw Error(ErrorCode::InvalidArgument, "mirror plane has non-finite parameters");
  }
  if (std::abs(normal.norm() - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "mirror normal is not unit length");
  }
  if (!(distance > 0.0)) throw Error(ErrorCode::InvalidArgument, "mirror distance must be positive");
  if (!(normal.z() < 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "mirror normal must face the camera (n.z < 0)");
  }
}

ReflectionSequence::ReflectionSequence(std::initializer_list<int> indices) : indices_(indices) {
  validate();
}

ReflectionSequence::ReflectionSequence(std::vector<int> indices) : indices_(std::move(indices)) {
  validate();
}

void ReflectionSequence::validate() const {
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] < 1) {
      throw Error(ErrorCode::InvalidArgument, "mirror indices start at 1");
    }
    if (k + 1 < indices_.size() && indices_[k] == indices_[k + 1]) {
      throw Error(ErrorCode::InvalidArgument,
                  "degenerate sequence: consecutive reflections in mirror " +
                      std::to_string(indices_[k]));
    }
  }
}

ReflectionSequence ReflectionSequence::from_key(std::string_view key) {
  if (key.empty()) throw Error(ErrorCode::Parse, "empty chamber key");
  if (key == "0") return {};
  std::vector<int> indices;
  indices.reserve(key.size());
  for (char c : key) {
    if (c < '1' || c > '9') {
      throw Error(ErrorCode::Parse, "invalid chamber key '" + std::string(key) + "'");
    }
    indices.push_back(c - '0');
  }
  for (std::size_t k = 0; k + 1 < indices.size(); ++k) {
    if (indices[k] == indices[k + 1]) {
      throw Error(ErrorCode::Parse,
                  "chamber key '" + std::string(key) + "' repeats a consecutive mirror");
    }
  }
  return ReflectionSequence(std::move(indices));
}

std::string ReflectionSequence::key() const {
  if (indices_.empty()) return "0";
  std::string out;
  for (int i : indices_) {
    if (i > 9) {
      std::ostringstream msg;
      msg << "mirror index " << i << " has no single-digit chamber key";
      throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    out.push_back(static_cast<char>('0' + i));
  }
  return out;
}

ReflectionSequence ReflectionSequence::prepended(int mirror) const {
  std::vector<int> out;
  out.reserve(indices_.size() + 1);
  out.push_back(mirror);
  out.insert(out.end(), indices_.begin(), indices_.end());
  return ReflectionSequence(std::move(out));
}

int ReflectionSequence::max_index() const {
  int m = 0;
  for (int i : indices_) m = std::max(m, i);
  return m;
}

std::vector<ReflectionSequence> default_sequences() {
  return {{}, {1}, {2}, {3}, {1, 2}, {2, 1}, {2, 3}, {3, 2}, {3, 1}, {1, 3}};
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Pixel project(const CameraIntrinsics& a, const Point3& p) {
  if (!(p.z() > 0.0)) throw Error(ErrorCode::PointBehindCamera, "point behind camera");
  const Vec3 q = a.matrix() * p;
  return {q.x() / q.z(), q.y() / q.z()};
}

NormalizedPoint normalize(const CameraIntrinsics& a, const Pixel& q) {
  const Vec3 x = a.inverse() * Vec3(q.u, q.v, 1.0);
  return {x.x() / x.z(), x.y() / x.z()};
}

Mat3 householder(const Vec3& unit_normal) {
  return Mat3::Identity() - 2.0 * unit_normal * unit_normal.transpose();
}

ReflectionTransform reflection_transform(const MirrorPlane& m) {
  return {householder(m.normal), -2.0 * m.distance * m.normal};
}

Point3 reflect(const MirrorPlane& m, const Point3& p) {
  return p - 2.0 * m.signed_distance(p) * m.normal;
}

ReflectionTransform compose(const ReflectionSequence& seq, std::span<const MirrorPlane> mirrors) {
  ReflectionTransform out;
  for (int i : seq.indices()) {
    if (static_cast<std::size_t>(i) > mirrors.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  "sequence references mirror " + std::to_string(i) + " of " +
                      std::to_string(mirrors.size()));
    }
    out = out * reflection_transform(mirrors[static_cast<std::size_t>(i) - 1]);
  }
  return out;
}

}  // namespace kaleido
