#include <doctest.h>

#include "kaleido/kaleido.h"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

namespace {

struct Str {
  char* ptr = nullptr;
  ~Str() { kaleido_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

const char* kDefault = R"({"rig": "default", "points": {"count": 1, "layout": "random"},
                           "noise_sigma": 0.0, "seed": 1})";
const char* kParallel = R"({"rig": "parallel_intersection", "points": {"count": 5, "layout": "planar"},
                            "noise_sigma": 0.0, "seed": 3})";

struct Simulated {
  kaleido_scene* scene = nullptr;
  kaleido_correspondences* corr = nullptr;
  kaleido_reference* ref = nullptr;
  nlohmann::json truth;

  explicit Simulated(const char* config) {
    REQUIRE(kaleido_simulate(config, &scene) == KALEIDO_OK);
    Str c, t, r;
    REQUIRE(kaleido_scene_correspondences_json(scene, &c.ptr) == KALEIDO_OK);
    REQUIRE(kaleido_scene_truth_json(scene, &t.ptr) == KALEIDO_OK);
    REQUIRE(kaleido_scene_reference_json(scene, &r.ptr) == KALEIDO_OK);
    REQUIRE(kaleido_correspondences_parse(c.ptr, &corr) == KALEIDO_OK);
    REQUIRE(kaleido_reference_parse(r.ptr, &ref) == KALEIDO_OK);
    truth = nlohmann::json::parse(t.str());
  }
  ~Simulated() {
    kaleido_reference_destroy(ref);
    kaleido_correspondences_destroy(corr);
    kaleido_scene_destroy(scene);
  }
};

double angle(const double* a, const std::vector<double>& b) {
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  const double cx = a[1] * b[2] - a[2] * b[1];
  const double cy = a[2] * b[0] - a[0] * b[2];
  const double cz = a[0] * b[1] - a[1] * b[0];
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(kaleido_version()).size() > 0);
  CHECK(std::string(kaleido_status_name(KALEIDO_OK)) == "ok");
  CHECK(std::string(kaleido_status_name(KALEIDO_ERR_DEGENERATE)).size() > 0);
  CHECK(std::string(kaleido_status_name(static_cast<kaleido_status>(99))).size() > 0);
}

TEST_CASE("null arguments are rejected") {
  kaleido_scene* scene = nullptr;
  CHECK(kaleido_simulate(nullptr, &scene) == KALEIDO_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(kaleido_last_error()) > 0);
  CHECK(kaleido_simulate(kDefault, nullptr) == KALEIDO_ERR_INVALID_ARGUMENT);
  kaleido_calibration* cal = nullptr;
  CHECK(kaleido_calibrate(nullptr, nullptr, nullptr, &cal) == KALEIDO_ERR_INVALID_ARGUMENT);
  CHECK(cal == nullptr);
  kaleido_scene_destroy(nullptr);
  kaleido_correspondences_destroy(nullptr);
  kaleido_reference_destroy(nullptr);
  kaleido_calibration_destroy(nullptr);
  kaleido_sweep_destroy(nullptr);
  kaleido_string_free(nullptr);
}

TEST_CASE("malformed input gives a parse error") {
  kaleido_scene* scene = nullptr;
  CHECK(kaleido_simulate("{\"rig\": ", &scene) == KALEIDO_ERR_PARSE);
  CHECK(scene == nullptr);
  kaleido_correspondences* c = nullptr;
  CHECK(kaleido_correspondences_parse("[1, 2", &c) == KALEIDO_ERR_PARSE);
  CHECK(std::string(kaleido_last_error()).size() > 0);
}

TEST_CASE("default config round-trips through simulate") {
  Str json;
  REQUIRE(kaleido_default_config_json(&json.ptr) == KALEIDO_OK);
  kaleido_scene* scene = nullptr;
  CHECK(kaleido_simulate(json.ptr, &scene) == KALEIDO_OK);
  kaleido_scene_destroy(scene);
}

TEST_CASE("simulate, calibrate and triangulate") {
  Simulated sim(kDefault);
  CHECK(kaleido_correspondences_point_count(sim.corr) == 1);
  const kaleido_calibrate_options options{KALEIDO_METHOD_PROPOSED, 1};
  kaleido_calibration* cal = nullptr;
  REQUIRE(kaleido_calibrate(sim.corr, &options, nullptr, &cal) == KALEIDO_OK);
  CHECK(kaleido_calibration_degenerate(cal) == 0);
  CHECK(kaleido_calibration_reprojection_error(cal) < 1e-7);

  const double d1 = sim.truth["mirrors"][0]["distance"].get<double>();
  for (int i = 1; i <= 3; ++i) {
    double n[3];
    double d = 0.0;
    REQUIRE(kaleido_calibration_mirror(cal, i, n, &d) == KALEIDO_OK);
    const auto& m = sim.truth["mirrors"][i - 1];
    CHECK(angle(n, m["normal"].get<std::vector<double>>()) < 1e-9);
    CHECK(std::abs(d * d1 - m["distance"].get<double>()) < 1e-9);
  }
  double n[3];
  double d = 0.0;
  CHECK(kaleido_calibration_mirror(cal, 0, n, &d) == KALEIDO_ERR_INVALID_ARGUMENT);
  CHECK(kaleido_calibration_mirror(cal, 4, n, &d) == KALEIDO_ERR_INVALID_ARGUMENT);

  double xyz[3];
  CHECK(kaleido_triangulate(sim.corr, cal, xyz, 2) == KALEIDO_ERR_INVALID_ARGUMENT);
  REQUIRE(kaleido_triangulate(sim.corr, cal, xyz, 3) == KALEIDO_OK);
  const auto p = sim.truth["points"][0].get<std::vector<double>>();
  for (int k = 0; k < 3; ++k) CHECK(std::abs(xyz[k] * d1 - p[k]) < 1e-9);

  Str tri;
  REQUIRE(kaleido_triangulate_json(sim.corr, cal, &tri.ptr) == KALEIDO_OK);
  CHECK(tri.str().find("points") != std::string::npos);

  Str text;
  REQUIRE(kaleido_calibration_to_json(cal, &text.ptr) == KALEIDO_OK);
  kaleido_calibration* back = nullptr;
  REQUIRE(kaleido_calibration_parse(text.ptr, &back) == KALEIDO_OK);
  Str again;
  REQUIRE(kaleido_calibration_to_json(back, &again.ptr) == KALEIDO_OK);
  CHECK(text.str() == again.str());
  kaleido_calibration_destroy(back);
  kaleido_calibration_destroy(cal);
}

TEST_CASE("correspondences serialize byte-stably") {
  Simulated sim(kDefault);
  Str a;
  REQUIRE(kaleido_correspondences_to_json(sim.corr, &a.ptr) == KALEIDO_OK);
  kaleido_correspondences* c = nullptr;
  REQUIRE(kaleido_correspondences_parse(a.ptr, &c) == KALEIDO_OK);
  Str b;
  REQUIRE(kaleido_correspondences_to_json(c, &b.ptr) == KALEIDO_OK);
  CHECK(a.str() == b.str());
  kaleido_correspondences_destroy(c);
}

TEST_CASE("reference methods need a reference object") {
  Simulated sim(kParallel);
  const kaleido_calibrate_options options{KALEIDO_METHOD_BASELINE, 0};
  kaleido_calibration* cal = nullptr;
  CHECK(kaleido_calibrate(sim.corr, &options, nullptr, &cal) == KALEIDO_ERR_MISSING_CHAMBERS);
  CHECK(cal == nullptr);
  REQUIRE(kaleido_calibrate(sim.corr, &options, sim.ref, &cal) == KALEIDO_OK);
  CHECK(kaleido_calibration_reprojection_error(cal) < 1e-6);
  kaleido_calibration_destroy(cal);
}

TEST_CASE("takahashi is degenerate on the parallel rig, proposed is not") {
  Simulated sim(kParallel);
  kaleido_calibration* cal = nullptr;
  const kaleido_calibrate_options takahashi{KALEIDO_METHOD_TAKAHASHI, 0};
  const kaleido_status status = kaleido_calibrate(sim.corr, &takahashi, sim.ref, &cal);
  if (status == KALEIDO_OK) {
    CHECK(kaleido_calibration_degenerate(cal) != 0);
    kaleido_calibration_destroy(cal);
    cal = nullptr;
  } else {
    CHECK(status == KALEIDO_ERR_DEGENERATE);
  }

  const kaleido_calibrate_options proposed{KALEIDO_METHOD_PROPOSED, 0};
  REQUIRE(kaleido_calibrate(sim.corr, &proposed, nullptr, &cal) == KALEIDO_OK);
  CHECK(kaleido_calibration_degenerate(cal) == 0);
  CHECK(kaleido_calibration_reprojection_error(cal) < 1e-7);
  kaleido_calibration_destroy(cal);
}

TEST_CASE("sweep through the C interface") {
  kaleido_sweep* sweep = nullptr;
  REQUIRE(kaleido_sweep_run(R"({"axis": "sigma_q", "levels": [0.0], "trials": 1, "seed": 5})",
                            &sweep) == KALEIDO_OK);
  CHECK(kaleido_sweep_row_count(sweep) > 0);
  Str csv;
  REQUIRE(kaleido_sweep_csv(sweep, &csv.ptr) == KALEIDO_OK);
  CHECK(csv.str().rfind("axis_value,method,", 0) == 0);
  kaleido_sweep_destroy(sweep);

  CHECK(kaleido_sweep_run(R"({"axis": "sigma_q", "levels": [], "trials": 1, "seed": 5})", &sweep) !=
        KALEIDO_OK);
}
