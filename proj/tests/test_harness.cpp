#include <doctest.h>

#include "kaleido/error.hpp"
#include "kaleido/harness.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

using namespace kaleido;

TEST_CASE("method names round-trip") {
  for (Method m : {Method::ProposedLinear, Method::ProposedBa, Method::Baseline, Method::Takahashi}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(method_from_string("zhang"), Error);
}

TEST_CASE("error metrics") {
  const std::array<Vec3, 2> truth{Vec3(0, 0, -1), Vec3(1, 0, 0)};
  const std::array<Vec3, 2> est{Vec3(0, std::sin(0.1), -std::cos(0.1)), Vec3(1, 0, 0)};
  CHECK(error_normal(est, truth) == doctest::Approx(0.05));
  // Tiny angles are resolved, well below the acos floor of ~1.5e-8.
  const std::array<Vec3, 1> close{Vec3(1, 1e-11, 0).normalized()};
  const std::array<Vec3, 1> ref{Vec3(1, 0, 0)};
  CHECK(error_normal(close, ref) == doctest::Approx(1e-11).epsilon(1e-6));
  const std::array<Vec3, 1> opposite{Vec3(-1, 0, 0)};
  CHECK(error_normal(opposite, ref) == doctest::Approx(std::numbers::pi));

  const std::array<double, 3> dt{0.2, 0.3, 0.4};
  const std::array<double, 3> dg{1.0, 1.5, 2.1};  // d1 = 1 gauge
  CHECK(error_distance(dg, dt, true) == doctest::Approx((0.0 + 0.0 + 0.02) / 3));
  CHECK(error_distance(dt, dt, false) == 0.0);
}

TEST_CASE("reprojection error is zero at the truth") {
  auto cfg = default_rig();
  cfg.points.count = 3;
  const Scene s = generate(cfg);
  CHECK(error_reprojection(cfg.mirrors, s.observations, cfg.intrinsics) < 1e-9);
  // Scaling every distance leaves the image unchanged.
  MirrorSet scaled = cfg.mirrors;
  for (auto& m : scaled) m.distance *= 3.0;
  CHECK(error_reprojection(scaled, s.observations, cfg.intrinsics) < 1e-9);
}

TEST_CASE("every method is exact on noiseless data") {
  auto cfg = default_rig();
  cfg.points.layout = PointLayout::Planar;
  cfg.points.count = 5;
  cfg.seed = 12;
  const Scene s = generate(cfg);
  for (Method m : {Method::ProposedLinear, Method::ProposedBa, Method::Baseline, Method::Takahashi}) {
    CAPTURE(to_string(m));
    const TrialResult r = evaluate_trial(m, s, cfg.intrinsics);
    CHECK_FALSE(r.degenerate);
    CHECK(r.e_n < 1e-8);
    CHECK(r.e_d < 1e-8);
    CHECK(r.e_rep < 1e-6);
  }
}

TEST_CASE("reference methods need a reference object") {
  auto cfg = default_rig();
  const Scene s = generate(cfg);
  try {
    run_method(Method::Baseline, s.observations, cfg.intrinsics, nullptr);
    FAIL("expected missing reference");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingChambers);
  }
}

TEST_CASE("degenerate trials are recorded, not thrown") {
  auto cfg = parallel_intersection_rig();
  cfg.points.layout = PointLayout::Planar;
  cfg.points.count = 5;
  const Scene s = generate(cfg);
  const TrialResult r = evaluate_trial(Method::Takahashi, s, cfg.intrinsics);
  CHECK(r.degenerate);
  CHECK_FALSE(r.failure.empty());
}

TEST_CASE("format_significant") {
  CHECK(format_significant(0.0) == "0.00000000");
  CHECK(format_significant(1.0) == "1.00000000");
  CHECK(format_significant(123.456) == "123.456000");
  CHECK(format_significant(0.00123456789123) == "0.00123456789");
  CHECK(format_significant(-2.5) == "-2.50000000");
  CHECK(format_significant(std::nan("")) == "nan");
}

TEST_CASE("sweep spec validation") {
  SweepSpec spec = default_noise_sweep();
  CHECK_NOTHROW(spec.validate());
  spec.levels = {1.0, 0.5};
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = default_point_sweep();
  spec.levels = {1.5};
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = default_noise_sweep();
  spec.trials = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = default_noise_sweep();
  spec.methods.clear();
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("sweep is deterministic and independent of the thread count") {
  SweepSpec spec = default_noise_sweep();
  spec.levels = {0.0, 1.0};
  spec.trials = 6;
  spec.seed = 99;
  spec.threads = 1;
  const auto a = sweep_csv(run_sweep(spec));
  spec.threads = 3;
  const auto b = sweep_csv(run_sweep(spec));
  CHECK(a == b);
  // Header plus one row per (level, method).
  CHECK(std::count(a.begin(), a.end(), '\n') == 1 + 2 * 8);
}

TEST_CASE("noiseless sweep has zero normal error") {
  SweepSpec spec = default_noise_sweep();
  spec.levels = {0.0};
  spec.trials = 1;
  const auto rows = run_sweep(spec);
  for (const auto& r : rows) {
    CAPTURE(r.method);
    CHECK(r.mean_e_n < 1e-8);
    CHECK(r.degenerate_count == 0);
  }
}

TEST_CASE("methods with the same point spec share a scene") {
  SweepSpec spec;
  spec.levels = {1.0};
  spec.trials = 4;
  spec.methods = {{Method::ProposedLinear, 5, PointLayout::Planar, "a"},
                  {Method::ProposedLinear, 5, PointLayout::Planar, "b"}};
  const CellResult cell = run_cell(spec, 1.0);
  for (std::size_t t = 0; t < 4; ++t) CHECK(cell.trials[0][t].e_n == cell.trials[1][t].e_n);
}

TEST_CASE("bundle adjustment helps on average at unit noise") {
  SweepSpec spec;
  spec.levels = {1.0};
  spec.trials = 20;
  spec.methods = {{Method::ProposedLinear, 5, PointLayout::RandomVolume, ""},
                  {Method::ProposedBa, 5, PointLayout::RandomVolume, ""}};
  const CellResult cell = run_cell(spec, 1.0);
  for (std::size_t t = 0; t < 20; ++t) {
    if (cell.trials[0][t].degenerate || cell.trials[1][t].degenerate) continue;
    // Same data; the refined cost is never above the linear one.
    REQUIRE(cell.trials[1][t].refinement.has_value());
    CHECK(cell.trials[1][t].refinement->final_cost <= cell.trials[1][t].refinement->initial_cost);
  }
  const auto rows = summarize(spec, cell);
  CHECK(rows[1].mean_e_rep <= rows[0].mean_e_rep);
}
