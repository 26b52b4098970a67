#include "kaleido/io.hpp"

#include "kaleido/error.hpp"

#include <json.hpp>

#include <cmath>
#include <set>
#include <string>
#include <vector>
#include <type_traits>

namespace kaleido::io {

using Json = nlohmann::ordered_json;

namespace {

constexpr int kIndent = 2;

// Rejects duplicate object keys, which the JSON library would silently merge.
Json parse_text(std::string_view text) {
  std::vector<std::set<std::string>> open_objects;
  const Json::parser_callback_t check = [&](int, Json::parse_event_t event, Json& parsed) {
    switch (event) {
      case Json::parse_event_t::object_start: open_objects.emplace_back(); break;
      case Json::parse_event_t::object_end: open_objects.pop_back(); break;
      case Json::parse_event_t::key: {
        const auto& key = parsed.get_ref<const std::string&>();
        if (!open_objects.back().insert(key).second) {
          throw Error(ErrorCode::Parse, "duplicate key \"" + key + "\"");
        }
        break;
      }
      default: break;
    }
    return true;
  };
  try {
    return Json::parse(text.begin(), text.end(), check);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("invalid JSON: ") + e.what());
  }
}

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::Parse, what); }

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) fail(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(what + " must be finite");
  return v;
}

bool boolean(const Json& j, const std::string& what) {
  if (!j.is_boolean()) fail(what + " must be a boolean");
  return j.get<bool>();
}

std::string string(const Json& j, const std::string& what) {
  if (!j.is_string()) fail(what + " must be a string");
  return j.get<std::string>();
}

Vec3 vec3(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) fail(what + " must be an array of 3 numbers");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Mat3 matrix3(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) fail(what + " must be a 3x3 array");
  Mat3 m;
  for (int r = 0; r < 3; ++r) m.row(r) = vec3(j[static_cast<std::size_t>(r)], what).transpose();
  return m;
}

Json to_json(const Mat3& m) {
  Json out = Json::array();
  for (int r = 0; r < 3; ++r) out.push_back(to_json(Vec3(m.row(r).transpose())));
  return out;
}

CameraIntrinsics intrinsics(const Json& j) {
  const Mat3 m = matrix3(j, "intrinsics");
  try {
    return CameraIntrinsics(m);
  } catch (const Error& e) {
    fail(e.what());
  }
}

// Normals that are not already unit length are normalised on read; the
// remaining plane convention is checked.
MirrorSet mirrors(const Json& j) {
  if (!j.is_array() || j.size() != 3) fail("mirrors must be an array of 3 planes");
  MirrorSet out;
  for (std::size_t i = 0; i < 3; ++i) {
    const Vec3 n = vec3(require(j[i], "normal"), "mirror normal");
    if (!(n.norm() > 0.0)) fail("mirror normal must be non-zero");
    const Vec3 unit = std::abs(n.norm() - 1.0) <= 1e-12 ? n : Vec3(n.normalized());
    out[i] = {unit, number(require(j[i], "distance"), "mirror distance")};
    try {
      out[i].validate();
    } catch (const Error& e) {
      fail("mirror " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

Json to_json(const MirrorSet& ms) {
  Json out = Json::array();
  for (const auto& m : ms) {
    Json plane;
    plane["normal"] = to_json(m.normal);
    plane["distance"] = m.distance;
    out.push_back(plane);
  }
  return out;
}

std::vector<Point3> point_list(const Json& j, const std::string& what) {
  if (!j.is_array()) fail(what + " must be an array");
  std::vector<Point3> out;
  for (const auto& p : j) out.push_back(vec3(p, what));
  return out;
}

Json to_json(const std::vector<Point3>& pts) {
  Json out = Json::array();
  for (const auto& p : pts) out.push_back(to_json(p));
  return out;
}

ReflectionSequence sequence_key(const std::string& key) {
  ReflectionSequence seq;
  try {
    seq = ReflectionSequence::from_key(key);
  } catch (const Error& e) {
    fail(e.what());
  }
  if (seq.max_index() > 3) fail("chamber key \"" + key + "\" refers to a mirror other than 1, 2, 3");
  return seq;
}

std::string_view layout_name(PointLayout layout) {
  return layout == PointLayout::Planar ? "planar" : "random";
}

PointLayout parse_layout(const std::string& name) {
  if (name == "planar") return PointLayout::Planar;
  if (name == "random" || name == "random-volume") return PointLayout::RandomVolume;
  fail("unknown point layout '" + name + "'");
}

SceneConfig scene_config(const Json& j) {
  if (!j.is_object()) fail("scene configuration must be a JSON object");
  SceneConfig config = default_rig();
  if (j.contains("rig")) {
    const auto rig = string(j["rig"], "rig");
    if (rig == "parallel_intersection") {
      config = parallel_intersection_rig();
    } else if (rig != "default") {
      fail("unknown rig '" + rig + "'");
    }
  }
  if (j.contains("intrinsics")) config.intrinsics = intrinsics(j["intrinsics"]);
  if (j.contains("image_size")) {
    const auto& s = j["image_size"];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer()) {
      fail("image_size must be [width, height]");
    }
    config.image_width = s[0].get<int>();
    config.image_height = s[1].get<int>();
  }
  if (j.contains("mirrors")) config.mirrors = mirrors(j["mirrors"]);
  if (j.contains("points")) {
    const auto& p = j["points"];
    if (!p.is_object()) fail("points must be an object");
    auto& spec = config.points;
    if (p.contains("count")) {
      if (!p["count"].is_number_integer()) fail("points.count must be an integer");
      spec.count = p["count"].get<int>();
    }
    if (p.contains("layout")) spec.layout = parse_layout(string(p["layout"], "points.layout"));
    if (p.contains("center")) spec.center = vec3(p["center"], "points.center");
    if (p.contains("half_extent")) spec.half_extent = vec3(p["half_extent"], "points.half_extent");
    if (p.contains("plane_rotation")) {
      spec.plane_rotation = vec3(p["plane_rotation"], "points.plane_rotation");
    }
    if (p.contains("plane_half_size")) {
      spec.plane_half_size = number(p["plane_half_size"], "points.plane_half_size");
    }
  }
  if (j.contains("sequences")) {
    const auto& s = j["sequences"];
    if (!s.is_array()) fail("sequences must be an array of chamber keys");
    config.sequences.clear();
    for (const auto& key : s) config.sequences.push_back(sequence_key(string(key, "chamber key")));
  }
  if (j.contains("noise_sigma")) config.noise_sigma = number(j["noise_sigma"], "noise_sigma");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed must be a non-negative integer");
    config.seed = j["seed"].get<std::uint64_t>();
  }
  try {
    config.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  return config;
}

Json to_json(const SceneConfig& config) {
  Json j;
  j["intrinsics"] = to_json(config.intrinsics.matrix());
  j["image_size"] = Json::array({config.image_width, config.image_height});
  j["mirrors"] = to_json(config.mirrors);
  Json p;
  p["count"] = config.points.count;
  p["layout"] = layout_name(config.points.layout);
  p["center"] = to_json(config.points.center);
  p["half_extent"] = to_json(config.points.half_extent);
  p["plane_rotation"] = to_json(config.points.plane_rotation);
  p["plane_half_size"] = config.points.plane_half_size;
  j["points"] = p;
  Json seqs = Json::array();
  for (const auto& s : config.sequences) seqs.push_back(s.key());
  j["sequences"] = seqs;
  j["noise_sigma"] = config.noise_sigma;
  j["seed"] = config.seed;
  return j;
}

Json to_json(const SolveDiagnostics& d) {
  Json j;
  j["smallest"] = d.smallest;
  j["second_smallest"] = d.second_smallest;
  j["rows"] = d.rows;
  return j;
}

SolveDiagnostics solve_diagnostics(const Json& j) {
  SolveDiagnostics d;
  d.smallest = number(require(j, "smallest"), "smallest");
  d.second_smallest = number(require(j, "second_smallest"), "second_smallest");
  const auto& rows = require(j, "rows");
  if (!rows.is_number_unsigned() && !rows.is_number_integer()) fail("rows must be an integer");
  d.rows = rows.get<std::size_t>();
  return d;
}

}  // namespace

SceneConfig parse_scene_config(std::string_view json) { return scene_config(parse_text(json)); }

std::string write_scene_config(const SceneConfig& config) {
  return to_json(config).dump(kIndent) + "\n";
}

Correspondences parse_correspondences(std::string_view json) {
  const Json j = parse_text(json);
  Correspondences out;
  out.intrinsics = intrinsics(require(j, "intrinsics"));
  const auto& points = require(j, "points");
  if (!points.is_array() || points.empty()) fail("points must be a non-empty array");
  for (std::size_t l = 0; l < points.size(); ++l) {
    const auto& p = points[l];
    if (!p.is_object()) fail("point " + std::to_string(l) + " must be an object");
    KaleidoscopicObservation obs;
    for (const auto& [key, value] : p.items()) {
      const auto seq = sequence_key(key);
      if (obs.find(seq) != nullptr) fail("point " + std::to_string(l) + ": duplicate chamber " + key);
      if (!value.is_array() || value.size() != 2) {
        fail("point " + std::to_string(l) + " chamber " + key + " must be [u, v]");
      }
      const std::string what = "point " + std::to_string(l) + " chamber " + key;
      obs.views.emplace_back(seq, Pixel{number(value[0], what), number(value[1], what)});
    }
    if (obs.find({}) == nullptr) fail("point " + std::to_string(l) + " lacks base chamber \"0\"");
    out.points.push_back(std::move(obs));
  }
  return out;
}

std::string write_correspondences(const Correspondences& c) {
  Json j;
  j["intrinsics"] = to_json(c.intrinsics.matrix());
  Json points = Json::array();
  for (const auto& obs : c.points) {
    Json p = Json::object();
    for (const auto& [seq, q] : obs.views) p[seq.key()] = Json::array({q.u, q.v});
    points.push_back(p);
  }
  j["points"] = points;
  return j.dump(kIndent) + "\n";
}

GroundTruth parse_ground_truth(std::string_view json) {
  const Json j = parse_text(json);
  GroundTruth truth;
  truth.mirrors = mirrors(require(j, "mirrors"));
  truth.points = point_list(require(j, "points"), "points");
  return truth;
}

std::string write_ground_truth(const GroundTruth& truth) {
  Json j;
  j["mirrors"] = to_json(truth.mirrors);
  j["points"] = to_json(truth.points);
  return j.dump(kIndent) + "\n";
}

ReferenceObject parse_reference(std::string_view json) {
  const Json j = parse_text(json);
  ReferenceObject ref;
  ref.planar = boolean(require(j, "planar"), "planar");
  ref.landmarks = point_list(require(j, "landmarks"), "landmarks");
  if (ref.landmarks.empty()) fail("reference object needs landmarks");
  return ref;
}

std::string write_reference(const ReferenceObject& reference) {
  Json j;
  j["planar"] = reference.planar;
  j["landmarks"] = to_json(reference.landmarks);
  return j.dump(kIndent) + "\n";
}

CalibrationRecord parse_calibration(std::string_view json) {
  const Json j = parse_text(json);
  CalibrationRecord r;
  r.method = string(require(j, "method"), "method");
  r.bundle_adjustment = boolean(require(j, "bundle_adjustment"), "bundle_adjustment");
  const auto scale = string(require(j, "scale"), "scale");
  if (scale != "metric" && scale != "d1=1") fail("scale must be \"metric\" or \"d1=1\"");
  r.metric = scale == "metric";
  r.mirrors = mirrors(require(j, "mirrors"));
  r.reprojection_error = number(require(j, "reprojection_error"), "reprojection_error");
  const auto& diag = require(j, "diagnostics");
  if (diag.contains("normal_solves")) {
    const auto& solves = diag["normal_solves"];
    if (!solves.is_array() || solves.size() != 3) fail("normal_solves must hold 3 entries");
    LinearDiagnostics linear;
    for (std::size_t i = 0; i < 3; ++i) linear.normals[i] = solve_diagnostics(solves[i]);
    linear.distances = solve_diagnostics(require(diag, "distance_solve"));
    for (const auto& w : require(diag, "warnings")) linear.warnings.push_back(string(w, "warning"));
    r.linear = std::move(linear);
  }
  if (diag.contains("refinement")) {
    const auto& ref = diag["refinement"];
    RefinementReport report;
    report.initial_cost = number(require(ref, "initial_cost"), "initial_cost");
    report.final_cost = number(require(ref, "final_cost"), "final_cost");
    if (!require(ref, "iterations").is_number_integer()) fail("iterations must be an integer");
    report.iterations = ref["iterations"].get<int>();
    report.converged = boolean(require(ref, "converged"), "converged");
    r.refinement = report;
  }
  return r;
}

std::string write_calibration(const CalibrationRecord& record) {
  Json j;
  j["method"] = record.method;
  j["bundle_adjustment"] = record.bundle_adjustment;
  j["scale"] = record.metric ? "metric" : "d1=1";
  j["mirrors"] = to_json(record.mirrors);
  j["reprojection_error"] = record.reprojection_error;
  Json diag = Json::object();
  diag["degenerate"] = record.degenerate();
  if (record.linear) {
    Json solves = Json::array();
    for (const auto& d : record.linear->normals) solves.push_back(to_json(d));
    diag["normal_solves"] = solves;
    diag["distance_solve"] = to_json(record.linear->distances);
    diag["warnings"] = record.linear->warnings;
  }
  if (record.refinement) {
    Json ref;
    ref["initial_cost"] = record.refinement->initial_cost;
    ref["final_cost"] = record.refinement->final_cost;
    ref["iterations"] = record.refinement->iterations;
    ref["converged"] = record.refinement->converged;
    diag["refinement"] = ref;
  }
  j["diagnostics"] = diag;
  return j.dump(kIndent) + "\n";
}

std::string write_points(const std::vector<Point3>& points, bool metric) {
  Json j;
  j["scale"] = metric ? "metric" : "d1=1";
  j["points"] = to_json(points);
  return j.dump(kIndent) + "\n";
}

SweepSpec parse_sweep_spec(std::string_view json) {
  const Json j = parse_text(json);
  if (!j.is_object()) fail("sweep spec must be a JSON object");
  SweepSpec spec;
  const auto axis = j.contains("axis") ? string(j["axis"], "axis") : std::string("sigma_q");
  if (axis == "sigma_q") {
    spec = default_noise_sweep();
  } else if (axis == "n_points") {
    spec = default_point_sweep();
  } else {
    fail("axis must be \"sigma_q\" or \"n_points\"");
  }
  if (j.contains("levels")) {
    if (!j["levels"].is_array()) fail("levels must be an array");
    spec.levels.clear();
    for (const auto& v : j["levels"]) spec.levels.push_back(number(v, "level"));
  }
  auto integer = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) fail(std::string(key) + " must be an integer");
    target = j[key].get<std::remove_reference_t<decltype(target)>>();
  };
  integer("trials", spec.trials);
  integer("threads", spec.threads);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed must be a non-negative integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("sigma_q")) spec.sigma = number(j["sigma_q"], "sigma_q");
  if (j.contains("rig")) spec.rig = scene_config(j["rig"]);
  if (j.contains("methods")) {
    if (!j["methods"].is_array()) fail("methods must be an array");
    spec.methods.clear();
    for (const auto& m : j["methods"]) {
      MethodConfig mc;
      try {
        mc.method = method_from_string(string(require(m, "method"), "method"));
      } catch (const Error& e) {
        fail(e.what());
      }
      if (m.contains("points")) {
        if (!m["points"].is_number_integer()) fail("method points must be an integer");
        mc.points = m["points"].get<int>();
      }
      if (m.contains("layout")) mc.layout = parse_layout(string(m["layout"], "layout"));
      if (m.contains("label")) mc.label = string(m["label"], "label");
      spec.methods.push_back(std::move(mc));
    }
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  return spec;
}

}  // namespace kaleido::io
