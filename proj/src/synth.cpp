#include "kaleido/synth.hpp"

#include "kaleido/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace kaleido {

const Pixel* KaleidoscopicObservation::find(const ReflectionSequence& seq) const {
  for (const auto& [s, q] : views) {
    if (s == seq) return &q;
  }
  return nullptr;
}

void KaleidoscopicObservation::set(const ReflectionSequence& seq, const Pixel& q) {
  for (auto& [s, existing] : views) {
    if (s == seq) {
      existing = q;
      return;
    }
  }
  views.emplace_back(seq, q);
}

void SceneConfig::validate() const {
  for (const auto& m : mirrors) m.validate();
  for (std::size_t i = 0; i < mirrors.size(); ++i) {
    for (std::size_t j = i + 1; j < mirrors.size(); ++j) {
      if (std::abs(mirrors[i].normal.dot(mirrors[j].normal)) >= 1.0 - 1e-6) {
        throw Error(ErrorCode::InvalidArgument, "mirrors " + std::to_string(i + 1) + " and " +
                                                    std::to_string(j + 1) + " are parallel");
      }
    }
  }
  if (points.count < 1) throw Error(ErrorCode::InvalidArgument, "point count must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorCode::InvalidArgument, "noise sigma must be finite and >= 0");
  }
  for (const auto& s : sequences) {
    if (s.max_index() > static_cast<int>(mirrors.size())) {
      throw Error(ErrorCode::InvalidArgument, "sequence " + s.key() + " references a missing mirror");
    }
  }
}

std::vector<KaleidoscopicObservation> render(const CameraIntrinsics& a,
                                             std::span<const MirrorPlane> mirrors,
                                             std::span<const Point3> points,
                                             std::span<const ReflectionSequence> sequences) {
  std::vector<ReflectionTransform> transforms;
  transforms.reserve(sequences.size());
  for (const auto& s : sequences) transforms.push_back(compose(s, mirrors));

  std::vector<KaleidoscopicObservation> out(points.size());
  for (std::size_t l = 0; l < points.size(); ++l) {
    for (std::size_t k = 0; k < sequences.size(); ++k) {
      const Point3 p = transforms[k].apply(points[l]);
      if (!(p.z() > 0.0)) {
        std::ostringstream msg;
        msg << "point " << l << " has non-positive depth " << p.z() << " in chamber "
            << sequences[k].key();
        throw Error(ErrorCode::Generation, msg.str());
      }
      out[l].views.emplace_back(sequences[k], project(a, p));
    }
  }
  return out;
}

namespace {

Mat3 rotation_from_vector(const Vec3& r) {
  const double angle = r.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, r / angle).toRotationMatrix();
}

MirrorPlane tube_mirror(double azimuth_deg, double tilt_deg, double distance) {
  const double az = azimuth_deg * std::numbers::pi / 180.0;
  const double tilt = tilt_deg * std::numbers::pi / 180.0;
  // Normal points inward (towards the axis) and back towards the camera.
  return {Vec3(-std::cos(tilt) * std::cos(az), -std::cos(tilt) * std::sin(az), -std::sin(tilt)),
          distance};
}

MirrorPlane fan_mirror(double angle_deg, double distance) {
  const double t = angle_deg * std::numbers::pi / 180.0;
  return {Vec3(0.0, std::sin(t), -std::cos(t)), distance};
}

}  // namespace

Scene generate(const SceneConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Scene scene;
  scene.truth.mirrors = config.mirrors;
  const auto& spec = config.points;
  auto& reference = scene.truth.reference;
  reference.planar = spec.layout == PointLayout::Planar;

  if (spec.layout == PointLayout::Planar) {
    const Mat3 r = rotation_from_vector(spec.plane_rotation);
    for (int l = 0; l < spec.count; ++l) {
      const Point3 local(spec.plane_half_size * unit(rng), spec.plane_half_size * unit(rng), 0.0);
      reference.landmarks.push_back(local);
      scene.truth.points.push_back(r * local + spec.center);
    }
  } else {
    for (int l = 0; l < spec.count; ++l) {
      const Vec3 offset(spec.half_extent.x() * unit(rng), spec.half_extent.y() * unit(rng),
                        spec.half_extent.z() * unit(rng));
      reference.landmarks.push_back(offset);
      scene.truth.points.push_back(spec.center + offset);
    }
  }

  scene.observations =
      render(config.intrinsics, config.mirrors, scene.truth.points, config.sequences);

  if (config.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, config.noise_sigma);
    for (auto& obs : scene.observations) {
      for (auto& [seq, q] : obs.views) {
        q.u += noise(rng);
        q.v += noise(rng);
      }
    }
  }
  return scene;
}

SceneConfig default_rig() {
  SceneConfig config;
  config.mirrors = {tube_mirror(90.0, 5.0, 0.150), tube_mirror(210.0, 6.0, 0.158),
                    tube_mirror(330.0, 4.0, 0.143)};
  return config;
}

SceneConfig parallel_intersection_rig() {
  SceneConfig config;
  // V-shaped trough with a back mirror; all three intersection lines run
  // along x.
  config.mirrors = {fan_mirror(-50.0, 0.51), fan_mirror(5.0, 0.85), fan_mirror(50.0, 0.51)};
  // Off the x = 0 plane, otherwise every chamber projects onto one image line.
  config.points.center = Point3(0.05, 0.0, 0.7);
  return config;
}

}  // namespace kaleido
