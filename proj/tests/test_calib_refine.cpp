#include <doctest.h>

#include "kaleido/calib_linear.hpp"
#include "kaleido/calib_refine.hpp"
#include "kaleido/synth.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace kaleido;

namespace {

Scene make_scene(int points, double sigma, std::uint64_t seed) {
  auto cfg = default_rig();
  cfg.points.count = points;
  cfg.noise_sigma = sigma;
  cfg.seed = seed;
  return generate(cfg);
}

// Central-difference Jacobian, independent of the library's forward scheme.
Eigen::MatrixXd central_jacobian(const MirrorParams& p, std::span<const KaleidoscopicObservation> obs,
                                 const CameraIntrinsics& a, double h) {
  const Eigen::VectorXd r0 = residual(p, obs, a);
  Eigen::MatrixXd j(r0.size(), MirrorParams::kSize);
  for (int k = 0; k < MirrorParams::kSize; ++k) {
    MirrorParams plus = p, minus = p;
    plus.values(k) += h;
    minus.values(k) -= h;
    j.col(k) = (residual(plus, obs, a) - residual(minus, obs, a)) / (2 * h);
  }
  return j;
}

}  // namespace

TEST_CASE("parameter encoding round-trips in the d1 = 1 gauge") {
  const auto cfg = default_rig();
  const MirrorParams p = MirrorParams::from_mirrors(cfg.mirrors);
  const MirrorSet back = p.to_mirrors();
  const double s = cfg.mirrors[0].distance;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((back[i].normal - cfg.mirrors[i].normal).norm() < 1e-14);
    CHECK(back[i].distance * s == doctest::Approx(cfg.mirrors[i].distance).epsilon(1e-14));
  }
  CHECK(back[0].distance == 1.0);
}

TEST_CASE("residual is zero at the truth on noiseless data") {
  const auto cfg = default_rig();
  const Scene s = make_scene(3, 0.0, 1);
  const Eigen::VectorXd r = residual(MirrorParams::from_mirrors(cfg.mirrors), s.observations, cfg.intrinsics);
  CHECK(r.size() == 3 * 10 * 2);
  CHECK(r.norm() < 1e-8);
}

TEST_CASE("forward Jacobian agrees with central differences") {
  const auto cfg = default_rig();
  const Scene s = make_scene(2, 0.5, 3);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 0.02);
  for (int t = 0; t < 10; ++t) {
    MirrorParams p = MirrorParams::from_mirrors(cfg.mirrors);
    for (int k = 0; k < MirrorParams::kSize; ++k) p.values(k) += g(rng);
    const Eigen::MatrixXd jf = residual_jacobian(p, s.observations, cfg.intrinsics);
    const Eigen::MatrixXd jc = central_jacobian(p, s.observations, cfg.intrinsics, 1e-6);
    CHECK((jf - jc).norm() / jc.norm() < 1e-4);
  }
}

TEST_CASE("bundle adjustment never increases the cost") {
  const auto cfg = default_rig();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scene s = make_scene(5, 1.0, seed);
    const LinearCalibration lin = calibrate_linear(s.observations, cfg.intrinsics);
    const Refinement ref = bundle_adjust(lin, s.observations, cfg.intrinsics);
    CHECK(ref.report.final_cost <= ref.report.initial_cost);
    CHECK(ref.report.iterations <= 100);
    CHECK(ref.mirrors[0].distance == doctest::Approx(1.0));
    // The optimum is at least as good as the noisy truth.
    const double truth_cost =
        residual(MirrorParams::from_mirrors(cfg.mirrors), s.observations, cfg.intrinsics).squaredNorm();
    CHECK(ref.report.final_cost <= truth_cost * (1 + 1e-9));
  }
}

TEST_CASE("bundle adjustment recovers the truth from a perturbed start") {
  const auto cfg = default_rig();
  const Scene s = make_scene(3, 0.0, 4);
  MirrorSet init = cfg.mirrors;
  init[0].normal = (init[0].normal + Vec3(0.01, -0.01, 0.0)).normalized();
  init[1].distance *= 1.02;
  init[2].normal = (init[2].normal + Vec3(0.0, 0.01, 0.005)).normalized();
  const Refinement ref = bundle_adjust(init, s.observations, cfg.intrinsics);
  CHECK(ref.report.converged);
  CHECK(ref.report.iterations > 0);
  CHECK(ref.report.final_cost < 1e-12);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((ref.mirrors[i].normal - cfg.mirrors[i].normal).norm() < 1e-6);
    CHECK(ref.mirrors[i].distance * cfg.mirrors[0].distance ==
          doctest::Approx(cfg.mirrors[i].distance).epsilon(1e-6));
  }
}

TEST_CASE("bundle adjustment at the optimum stops immediately") {
  const auto cfg = default_rig();
  const Scene s = make_scene(2, 0.0, 5);
  const Refinement ref = bundle_adjust(cfg.mirrors, s.observations, cfg.intrinsics);
  CHECK(ref.report.converged);
  CHECK(ref.report.final_cost <= ref.report.initial_cost);
  CHECK(ref.report.initial_cost < 1e-14);
}
