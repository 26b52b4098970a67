#include <doctest.h>

#include "kaleido/error.hpp"
#include "kaleido/geometry.hpp"
#include "kaleido/synth.hpp"
#include "oracles.hpp"

#include <random>

using namespace kaleido;

TEST_CASE("intrinsics validation") {
  Mat3 a;
  a << 800, 0, 320, 0, 810, 240, 0, 0, 1;
  const CameraIntrinsics k(a);
  CHECK((k.matrix() * k.inverse() - Mat3::Identity()).norm() < 1e-12);

  Mat3 bad = a;
  bad(1, 0) = 0.5;
  CHECK_THROWS_AS(CameraIntrinsics{bad}, Error);
  bad = a;
  bad(2, 2) = 2.0;
  CHECK_THROWS_AS(CameraIntrinsics{bad}, Error);
  bad = a;
  bad(0, 0) = -800;
  CHECK_THROWS_AS(CameraIntrinsics{bad}, Error);
}

TEST_CASE("project and normalize are inverse on the image plane") {
  Mat3 a;
  a << 900, 1.5, 300, 0, 880, 260, 0, 0, 1;
  const CameraIntrinsics k(a);
  const Point3 p(0.1, -0.2, 1.3);
  const Pixel q = project(k, p);
  const auto expect = oracle::project_pinhole(a, p);
  CHECK(q.u == doctest::Approx(expect.x()).epsilon(1e-14));
  CHECK(q.v == doctest::Approx(expect.y()).epsilon(1e-14));
  const NormalizedPoint x = normalize(k, q);
  CHECK(x.x == doctest::Approx(p.x() / p.z()).epsilon(1e-12));
  CHECK(x.y == doctest::Approx(p.y() / p.z()).epsilon(1e-12));
}

TEST_CASE("project rejects points behind the camera") {
  const auto k = CameraIntrinsics::from_focal(1000, 500, 500);
  try {
    project(k, Point3(0, 0, -1));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PointBehindCamera);
  }
  CHECK_THROWS_AS(project(k, Point3(0, 0, 0)), Error);
}

TEST_CASE("mirror plane convention") {
  CHECK_NOTHROW((MirrorPlane{Vec3(0, 0, -1), 1.0}.validate()));
  CHECK_THROWS_AS((MirrorPlane{Vec3(0, 0, 1), 1.0}.validate()), Error);
  CHECK_THROWS_AS((MirrorPlane{Vec3(0, 0, -1), -1.0}.validate()), Error);
  CHECK_THROWS_AS((MirrorPlane{Vec3(0, 0, -2), 1.0}.validate()), Error);
}

TEST_CASE("sequence keys") {
  CHECK(ReflectionSequence{}.key() == "0");
  CHECK(ReflectionSequence({1, 2, 3}).key() == "123");
  CHECK(ReflectionSequence::from_key("0").empty());
  CHECK(ReflectionSequence::from_key("31") == ReflectionSequence({3, 1}));
  CHECK_THROWS_AS(ReflectionSequence::from_key("11"), Error);
  CHECK_THROWS_AS(ReflectionSequence::from_key(""), Error);
  CHECK_THROWS_AS(ReflectionSequence::from_key("1a"), Error);
  CHECK_THROWS_AS(ReflectionSequence::from_key("01"), Error);
  CHECK_THROWS_AS((ReflectionSequence{2, 2}), Error);
  CHECK_THROWS_AS((ReflectionSequence{0}), Error);

  const ReflectionSequence s{2, 1};
  CHECK(s.can_prepend(3));
  CHECK_FALSE(s.can_prepend(2));
  CHECK(s.prepended(3) == ReflectionSequence({3, 2, 1}));
  CHECK_THROWS_AS(s.prepended(2), Error);
  CHECK(s.max_index() == 2);
  CHECK(ReflectionSequence{}.max_index() == 0);
}

TEST_CASE("default chamber order") {
  std::vector<std::string> keys;
  for (const auto& s : default_sequences()) keys.push_back(s.key());
  CHECK(keys == std::vector<std::string>{"0", "1", "2", "3", "12", "21", "23", "32", "31", "13"});
}

TEST_CASE("skew matrix is the cross product") {
  const Vec3 a(0.3, -1.2, 2.0), b(-0.7, 0.4, 1.1);
  CHECK((skew(a) * b - a.cross(b)).norm() < 1e-15);
}

TEST_CASE("reflection matches the foot-of-perpendicular oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int t = 0; t < 500; ++t) {
    const MirrorPlane m = oracle::random_plane(rng);
    const Point3 p(u(rng), u(rng), u(rng));
    CHECK(oracle::rel_err(reflect(m, p), oracle::reflect_foot(m, p)) < 1e-12);
  }
}

TEST_CASE("householder properties") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const Vec3 n = oracle::random_unit(rng);
    const Mat3 h = householder(n);
    CHECK((h * h - Mat3::Identity()).norm() < 1e-13);
    CHECK((h - h.transpose()).norm() < 1e-15);
    CHECK(h.determinant() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK((h * n + n).norm() < 1e-14);
  }
}

TEST_CASE("reflection transform translation is -2dn") {
  const MirrorPlane m{Vec3(0.6, 0, -0.8), 0.5};
  const auto s = reflection_transform(m);
  CHECK((s.translation - (-2.0 * 0.5 * m.normal)).norm() < 1e-15);
  // Points on the plane are fixed.
  const Point3 on = Point3(0, 1, 0) + (-0.5) * m.normal;
  CHECK(std::abs(m.signed_distance(on)) < 1e-15);
  CHECK((s.apply(on) - on).norm() < 1e-14);
}

TEST_CASE("composition matches sequential reflection") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> len(0, 5), idx(1, 3);
  for (int t = 0; t < 500; ++t) {
    MirrorSet ms{oracle::random_plane(rng), oracle::random_plane(rng), oracle::random_plane(rng)};
    std::vector<int> indices;
    const int n = len(rng);
    while (static_cast<int>(indices.size()) < n) {
      const int k = idx(rng);
      if (indices.empty() || indices.back() != k) indices.push_back(k);
    }
    const ReflectionSequence seq(indices);
    const Point3 p(u(rng), u(rng), u(rng));
    const auto s = compose(seq, ms);
    CHECK(oracle::rel_err(s.apply(p), oracle::reflect_sequence(seq, ms, p)) < 1e-10);
    CHECK(s.linear.determinant() ==
          doctest::Approx(n % 2 == 0 ? 1.0 : -1.0).epsilon(1e-10));
  }
}

TEST_CASE("compose rejects indices beyond the mirror set") {
  const std::array<MirrorPlane, 2> two{};
  CHECK_THROWS_AS(compose(ReflectionSequence{3}, two), Error);
}
