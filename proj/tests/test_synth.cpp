#include <doctest.h>

#include "kaleido/error.hpp"
#include "kaleido/synth.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace kaleido;

TEST_CASE("default rig is valid and keeps every chamber in the image") {
  SceneConfig cfg = default_rig();
  CHECK_NOTHROW(cfg.validate());
  cfg.points.count = 20;
  cfg.seed = 5;
  const Scene scene = generate(cfg);
  REQUIRE(scene.observations.size() == 20);
  for (const auto& obs : scene.observations) {
    REQUIRE(obs.views.size() == 10);
    for (const auto& [seq, q] : obs.views) {
      CHECK(q.u > 0);
      CHECK(q.u < cfg.image_width);
      CHECK(q.v > 0);
      CHECK(q.v < cfg.image_height);
    }
  }
}

TEST_CASE("noiseless rendering matches the reflection oracle") {
  SceneConfig cfg = default_rig();
  cfg.points.count = 4;
  cfg.seed = 9;
  const Scene scene = generate(cfg);
  const Mat3& a = cfg.intrinsics.matrix();
  for (std::size_t l = 0; l < scene.observations.size(); ++l) {
    for (const auto& [seq, q] : scene.observations[l].views) {
      const auto expect = oracle::project_pinhole(
          a, oracle::reflect_sequence(seq, scene.truth.mirrors, scene.truth.points[l]));
      CHECK(std::abs(q.u - expect.x()) < 1e-9);
      CHECK(std::abs(q.v - expect.y()) < 1e-9);
    }
  }
}

TEST_CASE("generation is a pure function of the config") {
  SceneConfig cfg = default_rig();
  cfg.points.count = 3;
  cfg.noise_sigma = 1.0;
  cfg.seed = 42;
  const Scene a = generate(cfg);
  const Scene b = generate(cfg);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(a.truth.points[l] == b.truth.points[l]);
    for (std::size_t v = 0; v < a.observations[l].views.size(); ++v) {
      CHECK(a.observations[l].views[v].second.u == b.observations[l].views[v].second.u);
      CHECK(a.observations[l].views[v].second.v == b.observations[l].views[v].second.v);
    }
  }
  cfg.seed = 43;
  const Scene c = generate(cfg);
  CHECK(c.truth.points[0] != a.truth.points[0]);
}

TEST_CASE("noise has the requested spread") {
  SceneConfig cfg = default_rig();
  cfg.points.count = 200;
  cfg.seed = 1;
  const Scene clean = generate(cfg);
  cfg.noise_sigma = 1.5;
  const Scene noisy = generate(cfg);
  double sum = 0, sum2 = 0;
  std::size_t n = 0;
  for (std::size_t l = 0; l < 200; ++l) {
    CHECK(clean.truth.points[l] == noisy.truth.points[l]);
    for (std::size_t v = 0; v < clean.observations[l].views.size(); ++v) {
      for (double e : {noisy.observations[l].views[v].second.u - clean.observations[l].views[v].second.u,
                       noisy.observations[l].views[v].second.v - clean.observations[l].views[v].second.v}) {
        sum += e;
        sum2 += e * e;
        ++n;
      }
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(sum2 / static_cast<double>(n) - mean * mean);
  CHECK(std::abs(mean) < 0.1);
  CHECK(sd == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("points stay inside the requested volume") {
  SceneConfig cfg = default_rig();
  cfg.points.count = 100;
  const Scene s = generate(cfg);
  for (const auto& p : s.truth.points) {
    const Vec3 off = (p - cfg.points.center).cwiseAbs();
    CHECK((off.array() <= cfg.points.half_extent.array() + 1e-15).all());
  }
  CHECK_FALSE(s.truth.reference.planar);
}

TEST_CASE("planar layout puts landmarks on a z = 0 board") {
  SceneConfig cfg = default_rig();
  cfg.points.count = 6;
  cfg.points.layout = PointLayout::Planar;
  const Scene s = generate(cfg);
  REQUIRE(s.truth.reference.planar);
  REQUIRE(s.truth.reference.landmarks.size() == 6);
  // The camera-frame points are one rigid motion of the landmarks.
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(s.truth.reference.landmarks[i].z() == 0.0);
    for (std::size_t j = i + 1; j < 6; ++j) {
      const double dm = (s.truth.reference.landmarks[i] - s.truth.reference.landmarks[j]).norm();
      const double dc = (s.truth.points[i] - s.truth.points[j]).norm();
      CHECK(dm == doctest::Approx(dc).epsilon(1e-12));
    }
  }
  // Coplanar in the camera frame.
  const Vec3 n = (s.truth.points[1] - s.truth.points[0]).cross(s.truth.points[2] - s.truth.points[0]);
  for (const auto& p : s.truth.points) CHECK(std::abs(n.normalized().dot(p - s.truth.points[0])) < 1e-12);
}

TEST_CASE("config validation") {
  SceneConfig cfg = default_rig();
  cfg.noise_sigma = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = default_rig();
  cfg.points.count = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = default_rig();
  cfg.mirrors[1] = cfg.mirrors[0];
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = default_rig();
  cfg.mirrors[2].distance = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("a point behind a mirror image raises a generation error") {
  SceneConfig cfg = default_rig();
  cfg.mirrors[0] = MirrorPlane{Vec3(0, 0.3, -1).normalized(), 1.0};
  cfg.points.center = Point3(0, 0, 3.0);  // beyond mirror 1: its image lands behind the camera
  cfg.points.half_extent = Vec3::Zero();
  cfg.sequences = {ReflectionSequence{}, ReflectionSequence{1}};
  try {
    generate(cfg);
    FAIL("expected generation failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Generation);
  }
}

TEST_CASE("parallel-intersection rig has coplanar normals") {
  const SceneConfig cfg = parallel_intersection_rig();
  CHECK_NOTHROW(cfg.validate());
  for (const auto& m : cfg.mirrors) CHECK(std::abs(m.normal.x()) < 1e-15);
}

TEST_CASE("built-in rigs keep the scene on the camera side of every mirror") {
  for (SceneConfig cfg : {default_rig(), parallel_intersection_rig()}) {
    cfg.points.count = 50;
    const Scene s = generate(cfg);
    for (const auto& p : s.truth.points) {
      for (const auto& m : cfg.mirrors) CHECK(m.signed_distance(p) > 0.01);
    }
  }
}
