#include "kaleido/baselines.hpp"

#include "kaleido/calib_linear.hpp"
#include "kaleido/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kaleido {

namespace {

const Mat3 kFlipX = Vec3(-1.0, 1.0, 1.0).asDiagonal();

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Mat3 exp_rotation(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

// Similarity that moves the centroid to the origin and scales the mean
// distance to sqrt(2) (2D) or sqrt(3) (3D).
template <int Dim>
Eigen::Matrix<double, Dim + 1, Dim + 1> conditioning(
    const std::vector<Eigen::Matrix<double, Dim, 1>>& pts) {
  Eigen::Matrix<double, Dim, 1> centroid = Eigen::Matrix<double, Dim, 1>::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const auto& p : pts) mean += (p - centroid).norm();
  mean /= static_cast<double>(pts.size());
  const double s = mean > 0.0 ? std::sqrt(static_cast<double>(Dim)) / mean : 1.0;
  Eigen::Matrix<double, Dim + 1, Dim + 1> t = Eigen::Matrix<double, Dim + 1, Dim + 1>::Identity();
  t.template topLeftCorner<Dim, Dim>() *= s;
  t.template topRightCorner<Dim, 1>() = -s * centroid;
  return t;
}

Pose pose_from_homography(const std::vector<Eigen::Vector2d>& image,
                          const std::vector<Eigen::Vector2d>& model) {
  const auto t_img = conditioning<2>(image);
  const auto t_obj = conditioning<2>(model);
  Eigen::MatrixXd rows(2 * static_cast<Eigen::Index>(image.size()), 9);
  for (std::size_t l = 0; l < image.size(); ++l) {
    const Vec3 x = t_img * image[l].homogeneous();
    const Vec3 X = t_obj * model[l].homogeneous();
    const auto r = 2 * static_cast<Eigen::Index>(l);
    rows.row(r) << X.transpose(), 0.0, 0.0, 0.0, -x.x() * X.transpose();
    rows.row(r + 1) << 0.0, 0.0, 0.0, X.transpose(), -x.y() * X.transpose();
  }
  const Eigen::VectorXd h = smallest_singular_vector(rows).vector;
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Mat3 hm = t_img.inverse() * hn * t_obj;
  const double scale = 0.5 * (hm.col(0).norm() + hm.col(1).norm());
  hm /= scale;
  if (hm(2, 2) < 0.0) hm = -hm;
  Mat3 r;
  r.col(0) = hm.col(0);
  r.col(1) = hm.col(1);
  r.col(2) = hm.col(0).cross(hm.col(1));
  return {nearest_rotation(r), hm.col(2), false};
}

Pose pose_from_dlt(const std::vector<Eigen::Vector2d>& image, const std::vector<Vec3>& model) {
  const auto t_img = conditioning<2>(image);
  const auto t_obj = conditioning<3>(model);
  Eigen::MatrixXd rows(2 * static_cast<Eigen::Index>(image.size()), 12);
  for (std::size_t l = 0; l < image.size(); ++l) {
    const Vec3 x = t_img * image[l].homogeneous();
    const Eigen::Vector4d X = t_obj * model[l].homogeneous();
    const auto r = 2 * static_cast<Eigen::Index>(l);
    rows.row(r) << X.transpose(), Eigen::RowVector4d::Zero(), -x.x() * X.transpose();
    rows.row(r + 1) << Eigen::RowVector4d::Zero(), X.transpose(), -x.y() * X.transpose();
  }
  const Eigen::VectorXd v = smallest_singular_vector(rows).vector;
  Eigen::Matrix<double, 3, 4> pn;
  pn << v.segment<4>(0).transpose(), v.segment<4>(4).transpose(), v.segment<4>(8).transpose();
  Eigen::Matrix<double, 3, 4> p = t_img.inverse() * pn * t_obj;
  Mat3 m = p.leftCols<3>();
  if (m.determinant() < 0.0) {
    p = -p;
    m = -m;
  }
  const double s = std::cbrt(m.determinant());
  if (!(s > 0.0)) throw Error(ErrorCode::Degenerate, "degenerate landmark configuration");
  return {nearest_rotation(m / s), p.col(3) / s, false};
}

constexpr double kMinFootprint = 0.1;

struct PoseProblem {
  const CameraIntrinsics& a;
  std::span<const Pixel> observed;
  const std::vector<Vec3>& model;

  // false when a landmark falls behind the camera.
  bool residual(const Mat3& r, const Vec3& t, Eigen::VectorXd& out) const {
    out.resize(2 * static_cast<Eigen::Index>(model.size()));
    for (std::size_t l = 0; l < model.size(); ++l) {
      const Point3 p = r * model[l] + t;
      if (!(p.z() > 0.0)) return false;
      const Pixel q = project(a, p);
      out(2 * static_cast<Eigen::Index>(l)) = q.u - observed[l].u;
      out(2 * static_cast<Eigen::Index>(l) + 1) = q.v - observed[l].v;
    }
    return out.allFinite();
  }
};

// Levenberg-Marquardt with the rotation updated on the left by exp(w).
double refine_pose(const PoseProblem& problem, Pose& pose) {
  Eigen::VectorXd r;
  if (!problem.residual(pose.rotation, pose.translation, r)) {
    return std::numeric_limits<double>::infinity();
  }
  double cost = r.squaredNorm();
  double damping = 1e-3;
  constexpr double step = 1e-7;
  for (int iter = 0; iter < 200 && cost > 1e-28; ++iter) {
    Eigen::MatrixXd j(r.size(), 6);
    Eigen::VectorXd shifted;
    bool ok = true;
    for (int c = 0; c < 6 && ok; ++c) {
      Mat3 rot = pose.rotation;
      Vec3 t = pose.translation;
      if (c < 3) {
        rot = exp_rotation(step * Vec3::Unit(c)) * rot;
      } else {
        t(c - 3) += step;
      }
      ok = problem.residual(rot, t, shifted);
      if (ok) j.col(c) = (shifted - r) / step;
    }
    if (!ok) break;
    const Eigen::Matrix<double, 6, 6> jtj = j.transpose() * j;
    const Eigen::Matrix<double, 6, 1> g = j.transpose() * r;
    bool accepted = false;
    double new_cost = cost;
    while (!accepted && damping <= 1e12) {
      Eigen::Matrix<double, 6, 6> system = jtj;
      for (int c = 0; c < 6; ++c) system(c, c) += damping * std::max(jtj(c, c), 1e-12);
      const Eigen::Matrix<double, 6, 1> delta = system.ldlt().solve(-g);
      const Mat3 rot = exp_rotation(delta.head<3>()) * pose.rotation;
      const Vec3 t = pose.translation + delta.tail<3>();
      Eigen::VectorXd candidate;
      if (delta.allFinite() && problem.residual(rot, t, candidate) &&
          candidate.squaredNorm() < cost) {
        pose.rotation = nearest_rotation(rot);
        pose.translation = t;
        r = std::move(candidate);
        new_cost = r.squaredNorm();
        damping = std::max(damping / 10.0, 1e-15);
        accepted = true;
      } else {
        damping *= 10.0;
      }
    }
    if (!accepted) break;
    const double relative = (cost - new_cost) / cost;
    cost = new_cost;
    if (relative < 1e-15) break;
  }
  return cost;
}

double pixel_spread(const std::vector<Pixel>& px) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& q : px) mean += Eigen::Vector2d(q.u, q.v);
  mean /= static_cast<double>(px.size());
  double sum = 0.0;
  for (const auto& q : px) sum += (Eigen::Vector2d(q.u, q.v) - mean).squaredNorm();
  return std::sqrt(sum / static_cast<double>(px.size()));
}

bool collapsed(const PoseProblem& problem, const Pose& pose) {
  std::vector<Pixel> projected;
  for (const auto& p : problem.model) projected.push_back(project(problem.a, pose.rotation * p + pose.translation));
  const std::vector<Pixel> observed(problem.observed.begin(), problem.observed.end());
  return pixel_spread(projected) < kMinFootprint * pixel_spread(observed);
}

void check_spread(const std::vector<Vec3>& model) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : model) centroid += p;
  centroid /= static_cast<double>(model.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : model) scatter += (p - centroid) * (p - centroid).transpose();
  const Vec3 ev = Eigen::SelfAdjointEigenSolver<Mat3>(scatter).eigenvalues();
  if (!(ev(1) > 1e-12 * ev(2))) {
    throw Error(ErrorCode::Degenerate, "degenerate landmark configuration (collinear)");
  }
}

}  // namespace

Point3 Pose::apply(const Point3& object_point) const {
  const Point3 model = mirrored ? Point3(kFlipX * object_point) : object_point;
  return rotation * model + translation;
}

PoseEstimate estimate_pose(std::span<const Pixel> landmarks2d, const ReferenceObject& object,
                           const CameraIntrinsics& a, bool odd_reflections) {
  const std::size_t count = object.landmarks.size();
  if (landmarks2d.size() != count) {
    throw Error(ErrorCode::InvalidArgument, "landmark count does not match the reference object");
  }
  const std::size_t needed = object.planar ? 4 : 6;
  if (count < needed) {
    throw Error(ErrorCode::Degenerate, "PnP needs at least " + std::to_string(needed) +
                                           " landmarks, got " + std::to_string(count));
  }

  std::vector<Vec3> model;
  model.reserve(count);
  for (const auto& p : object.landmarks) model.push_back(odd_reflections ? Vec3(kFlipX * p) : p);
  check_spread(model);

  std::vector<Eigen::Vector2d> image;
  image.reserve(count);
  for (const auto& q : landmarks2d) {
    const NormalizedPoint x = normalize(a, q);
    image.emplace_back(x.x, x.y);
  }

  std::vector<Pose> candidates;
  if (object.planar) {
    for (const auto& p : model) {
      if (std::abs(p.z()) > 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "planar reference landmarks must have z = 0");
      }
    }
    std::vector<Eigen::Vector2d> plane;
    for (const auto& p : model) plane.emplace_back(p.x(), p.y());
    const Pose init = pose_from_homography(image, plane);
    candidates.push_back(init);
    // Other side of the flip ambiguity: turn the board about the line of
    // sight and about its own normal.
    const Vec3 v = init.translation.normalized();
    const Mat3 about_sight = 2.0 * v * v.transpose() - Mat3::Identity();
    const Mat3 about_normal = Vec3(-1.0, -1.0, 1.0).asDiagonal();
    candidates.push_back({about_sight * init.rotation * about_normal, init.translation, false});
  } else {
    candidates.push_back(pose_from_dlt(image, model));
  }

  const PoseProblem problem{a, landmarks2d, model};
  PoseEstimate out;
  double best = std::numeric_limits<double>::infinity();
  bool diverged = false;
  for (auto& candidate : candidates) {
    double cost = refine_pose(problem, candidate);
    // Sliding off toward infinity collapses every landmark onto one pixel.
    if (std::isfinite(cost) && collapsed(problem, candidate)) {
      cost = std::numeric_limits<double>::infinity();
      diverged = true;
    }
    out.candidate_costs.push_back(cost);
    if (cost < best) {
      best = cost;
      out.pose = candidate;
    }
  }
  if (!std::isfinite(best)) {
    throw Error(ErrorCode::Degenerate, diverged
                                           ? "PnP refinement diverged"
                                           : "PnP refinement failed: landmarks behind the camera");
  }
  out.pose.mirrored = odd_reflections;
  out.cost = best;
  for (const auto& p : model) out.landmarks.push_back(out.pose.rotation * p + out.pose.translation);
  return out;
}

const std::vector<Point3>& PosedLandmarks::at(const ReflectionSequence& seq) const {
  for (const auto& [s, pts] : chambers) {
    if (s == seq) return pts;
  }
  throw Error(ErrorCode::MissingChambers, "missing chambers: " + seq.key());
}

bool PosedLandmarks::contains(const ReflectionSequence& seq) const {
  return std::any_of(chambers.begin(), chambers.end(),
                     [&](const auto& c) { return c.first == seq; });
}

std::size_t PosedLandmarks::landmark_count() const {
  return chambers.empty() ? 0 : chambers.front().second.size();
}

std::vector<ReflectionSequence> reference_method_sequences() { return default_sequences(); }

PosedLandmarks pose_landmarks(std::span<const KaleidoscopicObservation> obs,
                              const ReferenceObject& object, const CameraIntrinsics& a) {
  if (obs.size() != object.landmarks.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "reference object has " + std::to_string(object.landmarks.size()) +
                    " landmarks but " + std::to_string(obs.size()) + " points were observed");
  }
  const auto sequences = reference_method_sequences();
  std::string missing;
  for (const auto& seq : sequences) {
    for (const auto& o : obs) {
      if (o.find(seq) == nullptr) {
        missing += (missing.empty() ? "" : ", ") + seq.key();
        break;
      }
    }
  }
  if (!missing.empty()) throw Error(ErrorCode::MissingChambers, "missing chambers: " + missing);

  PosedLandmarks posed;
  for (const auto& seq : sequences) {
    std::vector<Pixel> pixels;
    pixels.reserve(obs.size());
    for (const auto& o : obs) pixels.push_back(*o.find(seq));
    auto estimate = estimate_pose(pixels, object, a, seq.size() % 2 == 1);
    posed.chambers.emplace_back(seq, std::move(estimate.landmarks));
  }
  return posed;
}

PosedLandmarks exact_posed_landmarks(std::span<const Point3> points, const MirrorSet& mirrors,
                                     std::span<const ReflectionSequence> sequences) {
  PosedLandmarks posed;
  for (const auto& seq : sequences) {
    const auto transform = compose(seq, mirrors);
    std::vector<Point3> pts;
    for (const auto& p : points) pts.push_back(transform.apply(p));
    posed.chambers.emplace_back(seq, std::move(pts));
  }
  return posed;
}

namespace {

ReflectionSequence seq_of(std::initializer_list<int> indices) { return ReflectionSequence(indices); }

void check_distance(double d, int mirror) {
  if (!(d > 0.0)) {
    throw Error(ErrorCode::InconsistentGeometry,
                "inconsistent geometry: distance of mirror " + std::to_string(mirror) +
                    " is not positive");
  }
}

}  // namespace

MirrorSet baseline_calibrate(const PosedLandmarks& posed) {
  const std::size_t count = posed.landmark_count();
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "no posed landmarks");
  const auto& p0 = posed.at({});
  const std::array<const std::vector<Point3>*, 3> first = {&posed.at({1}), &posed.at({2}),
                                                           &posed.at({3})};
  MirrorSet out;
  for (int i = 1; i <= 3; ++i) {
    const int j = i % 3 + 1;
    const int k = j % 3 + 1;
    const auto& pi = *first[static_cast<std::size_t>(i - 1)];
    const auto& pj = *first[static_cast<std::size_t>(j - 1)];
    const auto& pk = *first[static_cast<std::size_t>(k - 1)];
    const auto& pij = posed.at(seq_of({i, j}));
    const auto& pik = posed.at(seq_of({i, k}));

    // Each difference is a mirror image minus its source across plane i, so a
    // multiple of n. Only the direct pair is known to start on the camera side.
    Vec3 sum = Vec3::Zero();
    Vec3 back = Vec3::Zero();
    for (std::size_t l = 0; l < count; ++l) {
      sum += pi[l] - p0[l] + pij[l] - pj[l] + pik[l] - pk[l];
      back += p0[l] - pi[l];
    }
    if (!(sum.norm() > 0.0)) {
      throw Error(ErrorCode::Degenerate, "baseline: zero displacement sum for mirror " +
                                             std::to_string(i));
    }
    const Vec3 n = sum.dot(back) < 0.0 ? Vec3(-sum.normalized()) : Vec3(sum.normalized());

    // The six points form three mirror pairs across plane i, whose midpoints
    // lie on the plane: n^T (p + p') = -2 d.
    Vec3 total = Vec3::Zero();
    for (std::size_t l = 0; l < count; ++l) {
      total += p0[l] + (*first[0])[l] + (*first[1])[l] + (*first[2])[l] + pij[l] + pik[l];
    }
    const double d = -n.dot(total) / (6.0 * static_cast<double>(count));
    check_distance(d, i);
    out[static_cast<std::size_t>(i - 1)] = {n, d};
  }
  return out;
}

Vec3 estimate_intersection_vector(const PosedLandmarks& posed, int i, int j) {
  // Chamber pairs (a, b) with a = S_i c and b = S_j c for some chamber c.
  std::vector<std::pair<ReflectionSequence, ReflectionSequence>> pairs;
  const std::pair<int, int> key{std::min(i, j), std::max(i, j)};
  if (key == std::pair{1, 2}) {
    pairs = {{seq_of({1}), seq_of({2})}, {seq_of({}), seq_of({2, 1})},
             {seq_of({1, 2}), seq_of({})}, {seq_of({1, 3}), seq_of({2, 3})}};
  } else if (key == std::pair{2, 3}) {
    pairs = {{seq_of({2}), seq_of({3})}, {seq_of({2, 1}), seq_of({3, 1})},
             {seq_of({}), seq_of({3, 2})}, {seq_of({2, 3}), seq_of({})}};
  } else if (key == std::pair{1, 3}) {
    pairs = {{seq_of({3}), seq_of({1})}, {seq_of({3, 1}), seq_of({})},
             {seq_of({3, 2}), seq_of({1, 2})}, {seq_of({}), seq_of({1, 3})}};
  } else {
    throw Error(ErrorCode::InvalidArgument, "intersection vector needs two distinct mirrors");
  }
  const std::size_t count = posed.landmark_count();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(pairs.size() * count), 3);
  Eigen::Index r = 0;
  for (const auto& [sa, sb] : pairs) {
    const auto& pa = posed.at(sa);
    const auto& pb = posed.at(sb);
    for (std::size_t l = 0; l < count; ++l) rows.row(r++) = (pa[l] - pb[l]).transpose();
  }
  return smallest_singular_vector(rows).vector.head<3>().normalized();
}

TakahashiResult takahashi_calibrate_detailed(const PosedLandmarks& posed) {
  const std::size_t count = posed.landmark_count();
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "no posed landmarks");
  TakahashiResult out;
  out.intersections = {estimate_intersection_vector(posed, 1, 2),
                       estimate_intersection_vector(posed, 2, 3),
                       estimate_intersection_vector(posed, 3, 1)};
  const auto& [m12, m23, m31] = out.intersections;
  const std::array<std::pair<const Vec3*, const Vec3*>, 3> factors = {
      std::pair{&m12, &m31}, std::pair{&m23, &m12}, std::pair{&m31, &m23}};
  static constexpr const char* kNames[3][2] = {{"m12", "m31"}, {"m23", "m12"}, {"m31", "m23"}};

  const auto& p0 = posed.at({});
  for (int i = 0; i < 3; ++i) {
    const Vec3 c = factors[static_cast<std::size_t>(i)].first->cross(
        *factors[static_cast<std::size_t>(i)].second);
    if (c.norm() < 1e-6) {
      throw Error(ErrorCode::Degenerate, std::string("takahashi: intersection vectors ") +
                                             kNames[i][0] + " and " + kNames[i][1] +
                                             " are parallel");
    }
    const auto& pi = posed.at(seq_of({i + 1}));
    // Orient n from the reflected landmarks back towards the direct ones.
    Vec3 back = Vec3::Zero();
    for (std::size_t l = 0; l < count; ++l) back += p0[l] - pi[l];
    const Vec3 n = c.dot(back) < 0.0 ? Vec3(-c.normalized()) : Vec3(c.normalized());
    double d = 0.0;
    for (std::size_t l = 0; l < count; ++l) d -= 0.5 * n.dot(pi[l] + p0[l]);
    d /= static_cast<double>(count);
    check_distance(d, i + 1);
    out.mirrors[static_cast<std::size_t>(i)] = {n, d};
  }
  return out;
}

MirrorSet takahashi_calibrate(const PosedLandmarks& posed) {
  return takahashi_calibrate_detailed(posed).mirrors;
}

}  // namespace kaleido
