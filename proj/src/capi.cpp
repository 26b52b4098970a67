#include "kaleido/kaleido.h"

#include "kaleido/error.hpp"
#include "kaleido/harness.hpp"
#include "kaleido/io.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <exception>
#include <new>
#include <string>

struct kaleido_scene {
  kaleido::SceneConfig config;
  kaleido::Scene scene;
};

struct kaleido_correspondences {
  kaleido::io::Correspondences data;
};

struct kaleido_reference {
  kaleido::ReferenceObject object;
};

struct kaleido_calibration {
  kaleido::io::CalibrationRecord record;
};

struct kaleido_sweep {
  std::vector<kaleido::SweepRow> rows;
};

namespace {

thread_local std::string last_error;

kaleido_status status_of(kaleido::ErrorCode code) {
  using kaleido::ErrorCode;
  switch (code) {
    case ErrorCode::Parse: return KALEIDO_ERR_PARSE;
    case ErrorCode::Generation: return KALEIDO_ERR_GENERATION;
    case ErrorCode::MissingChambers: return KALEIDO_ERR_MISSING_CHAMBERS;
    case ErrorCode::Degenerate:
    case ErrorCode::InconsistentGeometry:
    case ErrorCode::IllPosed: return KALEIDO_ERR_DEGENERATE;
    case ErrorCode::InvalidArgument:
    case ErrorCode::PointBehindCamera: return KALEIDO_ERR_INVALID_ARGUMENT;
  }
  return KALEIDO_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
kaleido_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return KALEIDO_OK;
  } catch (const kaleido::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return KALEIDO_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (p == nullptr) {
    throw kaleido::Error(kaleido::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

kaleido::Method method_of(const kaleido_calibrate_options& options) {
  switch (options.method) {
    case KALEIDO_METHOD_PROPOSED:
      return options.bundle_adjust ? kaleido::Method::ProposedBa : kaleido::Method::ProposedLinear;
    case KALEIDO_METHOD_BASELINE: return kaleido::Method::Baseline;
    case KALEIDO_METHOD_TAKAHASHI: return kaleido::Method::Takahashi;
  }
  throw kaleido::Error(kaleido::ErrorCode::InvalidArgument, "unknown method");
}

const char* method_name(kaleido_method m) {
  switch (m) {
    case KALEIDO_METHOD_PROPOSED: return "proposed";
    case KALEIDO_METHOD_BASELINE: return "baseline";
    case KALEIDO_METHOD_TAKAHASHI: return "takahashi";
  }
  return "unknown";
}

}  // namespace

extern "C" {

const char* kaleido_version(void) { return "1.0.0"; }

const char* kaleido_last_error(void) { return last_error.c_str(); }

const char* kaleido_status_name(kaleido_status status) {
  switch (status) {
    case KALEIDO_OK: return "ok";
    case KALEIDO_ERR_INVALID_ARGUMENT: return "invalid argument";
    case KALEIDO_ERR_PARSE: return "parse error";
    case KALEIDO_ERR_GENERATION: return "generation failure";
    case KALEIDO_ERR_MISSING_CHAMBERS: return "missing chambers";
    case KALEIDO_ERR_DEGENERATE: return "degenerate configuration";
    case KALEIDO_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void kaleido_string_free(char* str) { std::free(str); }

kaleido_status kaleido_default_config_json(char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    *out_json = duplicate(kaleido::io::write_scene_config(kaleido::default_rig()));
  });
}

kaleido_status kaleido_simulate(const char* config_json, kaleido_scene** out_scene) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out_scene, "out_scene");
    auto scene = std::make_unique<kaleido_scene>();
    scene->config = kaleido::io::parse_scene_config(config_json);
    scene->scene = kaleido::generate(scene->config);
    *out_scene = scene.release();
  });
}

kaleido_status kaleido_scene_correspondences_json(const kaleido_scene* scene, char** out_json) {
  return guarded([&] {
    require(scene, "scene");
    require(out_json, "out_json");
    *out_json = duplicate(kaleido::io::write_correspondences(
        {scene->config.intrinsics, scene->scene.observations}));
  });
}

kaleido_status kaleido_scene_truth_json(const kaleido_scene* scene, char** out_json) {
  return guarded([&] {
    require(scene, "scene");
    require(out_json, "out_json");
    *out_json = duplicate(kaleido::io::write_ground_truth(scene->scene.truth));
  });
}

kaleido_status kaleido_scene_reference_json(const kaleido_scene* scene, char** out_json) {
  return guarded([&] {
    require(scene, "scene");
    require(out_json, "out_json");
    *out_json = duplicate(kaleido::io::write_reference(scene->scene.truth.reference));
  });
}

void kaleido_scene_destroy(kaleido_scene* scene) { delete scene; }

kaleido_status kaleido_correspondences_parse(const char* json, kaleido_correspondences** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new kaleido_correspondences{kaleido::io::parse_correspondences(json)};
  });
}

kaleido_status kaleido_correspondences_to_json(const kaleido_correspondences* c, char** out_json) {
  return guarded([&] {
    require(c, "correspondences");
    require(out_json, "out_json");
    *out_json = duplicate(kaleido::io::write_correspondences(c->data));
  });
}

size_t kaleido_correspondences_point_count(const kaleido_correspondences* c) {
  return c == nullptr ? 0 : c->data.points.size();
}

void kaleido_correspondences_destroy(kaleido_correspondences* c) { delete c; }

kaleido_status kaleido_reference_parse(const char* json, kaleido_reference** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new kaleido_reference{kaleido::io::parse_reference(json)};
  });
}

void kaleido_reference_destroy(kaleido_reference* reference) { delete reference; }

kaleido_status kaleido_calibrate(const kaleido_correspondences* c,
                                 const kaleido_calibrate_options* options,
                                 const kaleido_reference* reference, kaleido_calibration** out) {
  return guarded([&] {
    require(c, "correspondences");
    require(options, "options");
    require(out, "out");
    const auto method = method_of(*options);
    const auto outcome =
        kaleido::run_method(method, c->data.points, c->data.intrinsics,
                            reference ? &reference->object : nullptr, options->bundle_adjust != 0);
    auto cal = std::make_unique<kaleido_calibration>();
    auto& r = cal->record;
    r.method = method_name(options->method);
    r.bundle_adjustment = options->bundle_adjust != 0;
    r.mirrors = outcome.mirrors;
    r.metric = outcome.metric;
    r.linear = outcome.linear;
    r.refinement = outcome.refinement;
    r.reprojection_error =
        kaleido::error_reprojection(outcome.mirrors, c->data.points, c->data.intrinsics);
    *out = cal.release();
  });
}

kaleido_status kaleido_calibration_parse(const char* json, kaleido_calibration** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new kaleido_calibration{kaleido::io::parse_calibration(json)};
  });
}

kaleido_status kaleido_calibration_to_json(const kaleido_calibration* cal, char** out_json) {
  return guarded([&] {
    require(cal, "calibration");
    require(out_json, "out_json");
    *out_json = duplicate(kaleido::io::write_calibration(cal->record));
  });
}

kaleido_status kaleido_calibration_mirror(const kaleido_calibration* cal, int index,
                                          double normal[3], double* distance) {
  return guarded([&] {
    require(cal, "calibration");
    if (index < 1 || index > 3) {
      throw kaleido::Error(kaleido::ErrorCode::InvalidArgument, "mirror index must be 1, 2 or 3");
    }
    const auto& m = cal->record.mirrors[static_cast<std::size_t>(index - 1)];
    if (normal != nullptr) {
      for (int k = 0; k < 3; ++k) normal[k] = m.normal(k);
    }
    if (distance != nullptr) *distance = m.distance;
  });
}

double kaleido_calibration_reprojection_error(const kaleido_calibration* cal) {
  return cal == nullptr ? -1.0 : cal->record.reprojection_error;
}

int kaleido_calibration_degenerate(const kaleido_calibration* cal) {
  return cal != nullptr && cal->record.degenerate() ? 1 : 0;
}

void kaleido_calibration_destroy(kaleido_calibration* cal) { delete cal; }

kaleido_status kaleido_triangulate(const kaleido_correspondences* c,
                                   const kaleido_calibration* cal, double* xyz, size_t capacity) {
  return guarded([&] {
    require(c, "correspondences");
    require(cal, "calibration");
    require(xyz, "xyz");
    if (capacity < 3 * c->data.points.size()) {
      throw kaleido::Error(kaleido::ErrorCode::InvalidArgument, "output buffer too small");
    }
    const auto points = kaleido::triangulate(c->data.points, c->data.intrinsics, cal->record.mirrors);
    for (std::size_t l = 0; l < points.size(); ++l) {
      for (int k = 0; k < 3; ++k) xyz[3 * l + static_cast<std::size_t>(k)] = points[l](k);
    }
  });
}

kaleido_status kaleido_triangulate_json(const kaleido_correspondences* c,
                                        const kaleido_calibration* cal, char** out_json) {
  return guarded([&] {
    require(c, "correspondences");
    require(cal, "calibration");
    require(out_json, "out_json");
    const auto points = kaleido::triangulate(c->data.points, c->data.intrinsics, cal->record.mirrors);
    *out_json = duplicate(kaleido::io::write_points(points, cal->record.metric));
  });
}

kaleido_status kaleido_sweep_run(const char* spec_json, kaleido_sweep** out) {
  return guarded([&] {
    require(spec_json, "spec_json");
    require(out, "out");
    const auto spec = kaleido::io::parse_sweep_spec(spec_json);
    *out = new kaleido_sweep{kaleido::run_sweep(spec)};
  });
}

size_t kaleido_sweep_row_count(const kaleido_sweep* sweep) {
  return sweep == nullptr ? 0 : sweep->rows.size();
}

kaleido_status kaleido_sweep_csv(const kaleido_sweep* sweep, char** out_csv) {
  return guarded([&] {
    require(sweep, "sweep");
    require(out_csv, "out_csv");
    *out_csv = duplicate(kaleido::sweep_csv(sweep->rows));
  });
}

void kaleido_sweep_destroy(kaleido_sweep* sweep) { delete sweep; }

}  // extern "C"
