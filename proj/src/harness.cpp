#include "kaleido/harness.hpp"

#include "kaleido/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace kaleido {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::ProposedLinear: return "proposed-linear";
    case Method::ProposedBa: return "proposed-ba";
    case Method::Baseline: return "baseline";
    case Method::Takahashi: return "takahashi";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::ProposedLinear, Method::ProposedBa, Method::Baseline,
                   Method::Takahashi}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::Parse, "unknown method '" + std::string(name) + "'");
}

double error_normal(std::span<const Vec3> estimated, std::span<const Vec3> truth) {
  if (estimated.size() != truth.size() || estimated.empty()) {
    throw Error(ErrorCode::InvalidArgument, "normal sets differ in size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    // Same angle as acos(a . b), but resolvable below 1e-8 rad.
    const Vec3 a = estimated[i].normalized();
    const Vec3 b = truth[i].normalized();
    sum += std::atan2(a.cross(b).norm(), a.dot(b));
  }
  return sum / static_cast<double>(estimated.size());
}

double error_distance(std::span<const double> estimated, std::span<const double> truth,
                      bool align_gauge) {
  if (estimated.size() != truth.size() || estimated.empty()) {
    throw Error(ErrorCode::InvalidArgument, "distance sets differ in size");
  }
  const double scale = align_gauge ? truth[0] : 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) sum += std::abs(scale * estimated[i] - truth[i]);
  return sum / static_cast<double>(estimated.size());
}

double error_reprojection(const MirrorSet& mirrors, std::span<const KaleidoscopicObservation> obs,
                          const CameraIntrinsics& a) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& o : obs) {
    const Point3 p0 = triangulate(o, a, mirrors);
    for (const auto& [seq, q] : o.views) {
      const Pixel predicted = project(a, compose(seq, mirrors).apply(p0));
      sum += std::hypot(q.u - predicted.u, q.v - predicted.v);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "no observations");
  return sum / static_cast<double>(count);
}

MethodOutcome run_method(Method method, std::span<const KaleidoscopicObservation> obs,
                         const CameraIntrinsics& a, const ReferenceObject* reference, bool refine) {
  MethodOutcome out;
  switch (method) {
    case Method::ProposedLinear:
    case Method::ProposedBa: {
      auto linear = calibrate_linear(obs, a);
      out.mirrors = linear.mirrors;
      out.linear = std::move(linear.diagnostics);
      break;
    }
    case Method::Baseline:
    case Method::Takahashi: {
      if (reference == nullptr) {
        throw Error(ErrorCode::MissingChambers,
                    std::string(to_string(method)) + " requires a reference object");
      }
      const auto posed = pose_landmarks(obs, *reference, a);
      out.mirrors =
          method == Method::Baseline ? baseline_calibrate(posed) : takahashi_calibrate(posed);
      out.metric = true;
      break;
    }
  }
  if (refine) {
    const double scale = out.mirrors[0].distance;
    auto refined = bundle_adjust(out.mirrors, obs, a);
    if (out.metric) {
      for (auto& m : refined.mirrors) m.distance *= scale;
    }
    out.mirrors = refined.mirrors;
    out.refinement = refined.report;
  }
  return out;
}

MethodOutcome run_method(Method method, std::span<const KaleidoscopicObservation> obs,
                         const CameraIntrinsics& a, const ReferenceObject* reference) {
  return run_method(method, obs, a, reference, method == Method::ProposedBa);
}

TrialResult evaluate_trial(Method method, const Scene& scene, const CameraIntrinsics& a) {
  TrialResult result;
  try {
    const auto outcome = run_method(method, scene.observations, a, &scene.truth.reference);
    std::array<Vec3, 3> est_n, true_n;
    std::array<double, 3> est_d, true_d;
    for (std::size_t i = 0; i < 3; ++i) {
      est_n[i] = outcome.mirrors[i].normal;
      true_n[i] = scene.truth.mirrors[i].normal;
      est_d[i] = outcome.mirrors[i].distance;
      true_d[i] = scene.truth.mirrors[i].distance;
    }
    result.e_n = error_normal(est_n, true_n);
    result.e_d = error_distance(est_d, true_d, !outcome.metric);
    result.e_rep = error_reprojection(outcome.mirrors, scene.observations, a);
    if (outcome.refinement) {
      result.n_iter = outcome.refinement->iterations;
      result.refinement = outcome.refinement;
    }
    if (outcome.flagged()) {
      result.degenerate = true;
      result.failure = outcome.linear->warnings.front();
    }
  } catch (const Error& e) {
    result.degenerate = true;
    result.failure = e.what();
  }
  return result;
}

std::string MethodConfig::display_label() const {
  if (!label.empty()) return label;
  std::ostringstream os;
  os << to_string(method) << "/np" << points << "/"
     << (layout == PointLayout::Planar ? "planar" : "random");
  return os.str();
}

void SweepSpec::validate() const {
  if (levels.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one level");
  for (std::size_t k = 1; k < levels.size(); ++k) {
    if (!(levels[k] > levels[k - 1])) {
      throw Error(ErrorCode::InvalidArgument, "sweep levels must be strictly increasing");
    }
  }
  for (double level : levels) {
    if (!std::isfinite(level) || level < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "sweep levels must be finite and >= 0");
    }
    if (axis == SweepAxis::PointCount && (level < 1.0 || level != std::floor(level))) {
      throw Error(ErrorCode::InvalidArgument, "point-count levels must be positive integers");
    }
  }
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one method");
  for (const auto& m : methods) {
    if (axis == SweepAxis::NoiseSigma && m.points < 1) {
      throw Error(ErrorCode::InvalidArgument, "method point count must be >= 1");
    }
  }
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  rig.validate();
}

namespace {

std::vector<MethodConfig> default_methods() {
  return {
      {Method::ProposedLinear, 5, PointLayout::RandomVolume, ""},
      {Method::ProposedBa, 5, PointLayout::RandomVolume, ""},
      {Method::ProposedLinear, 5, PointLayout::Planar, ""},
      {Method::ProposedBa, 5, PointLayout::Planar, ""},
      {Method::ProposedLinear, 1, PointLayout::RandomVolume, ""},
      {Method::ProposedBa, 1, PointLayout::RandomVolume, ""},
      {Method::Baseline, 5, PointLayout::Planar, ""},
      {Method::Takahashi, 5, PointLayout::Planar, ""},
  };
}

}  // namespace

SweepSpec default_noise_sweep() {
  SweepSpec spec;
  spec.axis = SweepAxis::NoiseSigma;
  spec.levels = {0.0, 0.5, 1.0, 1.5, 2.0};
  spec.methods = default_methods();
  return spec;
}

SweepSpec default_point_sweep() {
  SweepSpec spec;
  spec.axis = SweepAxis::PointCount;
  spec.levels = {1.0, 2.0, 3.0, 5.0, 8.0};
  spec.sigma = 1.0;
  spec.methods = default_methods();
  return spec;
}

CellResult run_cell(const SweepSpec& spec, double level) {
  spec.validate();
  const std::size_t method_count = spec.methods.size();
  const auto trials = static_cast<std::size_t>(spec.trials);

  // Scene configuration per method; methods with equal point specs share it.
  std::vector<std::pair<int, PointLayout>> point_specs(method_count);
  for (std::size_t m = 0; m < method_count; ++m) {
    const int count = spec.axis == SweepAxis::PointCount ? static_cast<int>(level)
                                                         : spec.methods[m].points;
    point_specs[m] = {count, spec.methods[m].layout};
  }
  const double sigma = spec.axis == SweepAxis::NoiseSigma ? level : spec.sigma;

  CellResult cell;
  cell.axis_value = level;
  cell.trials.assign(method_count, std::vector<TrialResult>(trials));

  auto run_trial = [&](std::size_t t) {
    std::map<std::pair<int, PointLayout>, Scene> scenes;
    for (std::size_t m = 0; m < method_count; ++m) {
      auto it = scenes.find(point_specs[m]);
      if (it == scenes.end()) {
        SceneConfig config = spec.rig;
        config.points.count = point_specs[m].first;
        config.points.layout = point_specs[m].second;
        config.noise_sigma = sigma;
        config.seed = spec.seed + t;
        it = scenes.emplace(point_specs[m], generate(config)).first;
      }
      cell.trials[m][t] = evaluate_trial(spec.methods[m].method, it->second, spec.rig.intrinsics);
    }
  };

  unsigned workers = spec.threads > 0 ? static_cast<unsigned>(spec.threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(trials));
  if (workers <= 1) {
    for (std::size_t t = 0; t < trials; ++t) run_trial(t);
    return cell;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < trials && !failed; t = next++) {
          try {
            run_trial(t);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return cell;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

std::vector<SweepRow> summarize(const SweepSpec& spec, const CellResult& cell) {
  std::vector<SweepRow> rows;
  for (std::size_t m = 0; m < spec.methods.size(); ++m) {
    SweepRow row;
    row.axis_value = cell.axis_value;
    row.method = spec.methods[m].display_label();
    row.trials = static_cast<int>(cell.trials[m].size());
    std::vector<double> en, ed, erep, iters;
    for (const auto& t : cell.trials[m]) {
      if (t.degenerate) {
        ++row.degenerate_count;
        continue;
      }
      en.push_back(t.e_n);
      ed.push_back(t.e_d);
      erep.push_back(t.e_rep);
      iters.push_back(static_cast<double>(t.n_iter));
    }
    std::tie(row.mean_e_n, row.std_e_n) = mean_std(en);
    std::tie(row.mean_e_d, row.std_e_d) = mean_std(ed);
    std::tie(row.mean_e_rep, row.std_e_rep) = mean_std(erep);
    row.mean_n_iter = mean_std(iters).first;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepRow> rows;
  for (double level : spec.levels) {
    auto cell_rows = summarize(spec, run_cell(spec, level));
    rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
  }
  return rows;
}

std::string format_significant(double value, int significant) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  int decimals = significant - 1;
  if (value != 0.0) {
    const int exponent = static_cast<int>(std::floor(std::log10(std::abs(value))));
    decimals = std::max(0, significant - 1 - exponent);
  }
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << "axis_value,method,mean_e_n,std_e_n,mean_e_d,std_e_d,mean_e_rep,std_e_rep,mean_n_iter,"
        "degenerate_count,trials\n";
  for (const auto& r : rows) {
    os << format_significant(r.axis_value) << ',' << r.method << ','
       << format_significant(r.mean_e_n) << ',' << format_significant(r.std_e_n) << ','
       << format_significant(r.mean_e_d) << ',' << format_significant(r.std_e_d) << ','
       << format_significant(r.mean_e_rep) << ',' << format_significant(r.std_e_rep) << ','
       << format_significant(r.mean_n_iter) << ',' << r.degenerate_count << ',' << r.trials
       << '\n';
  }
  return os.str();
}

}  // namespace kaleido
