#include "kaleido/calib_linear.hpp"

#include "kaleido/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <string>

namespace kaleido {

namespace {

constexpr int kMirrorCount = 3;
constexpr double kRankTolerance = 1e-12;
constexpr double kMaxTriangulationCondition = 1e12;

void check_mirror_indices(std::span<const KaleidoscopicObservation> obs) {
  for (std::size_t l = 0; l < obs.size(); ++l) {
    for (const auto& [seq, q] : obs[l].views) {
      if (seq.max_index() > kMirrorCount) {
        throw Error(ErrorCode::InvalidArgument,
                    "point " + std::to_string(l) + ": chamber " + seq.key() +
                        " references a mirror beyond the third");
      }
      if (!std::isfinite(q.u) || !std::isfinite(q.v)) {
        throw Error(ErrorCode::InvalidArgument, "point " + std::to_string(l) + ": chamber " +
                                                    seq.key() + " has a non-finite pixel");
      }
    }
  }
}

std::string describe(const SolveDiagnostics& d) {
  std::ostringstream os;
  os << "singular value ratio " << d.ratio() << " < " << kDegeneracyRatio;
  return os.str();
}

}  // namespace

double SolveDiagnostics::ratio() const {
  if (smallest == 0.0) {
    return second_smallest > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return second_smallest / smallest;
}

NullSpaceSolution smallest_singular_vector(const Eigen::MatrixXd& m) {
  const Eigen::Index cols = m.cols();
  Eigen::MatrixXd padded = m;
  if (m.rows() < cols) {
    padded = Eigen::MatrixXd::Zero(cols, cols);
    padded.topRows(m.rows()) = m;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(padded, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  NullSpaceSolution out;
  out.vector = svd.matrixV().col(cols - 1);
  out.diagnostics.smallest = sv(cols - 1);
  out.diagnostics.second_smallest = cols >= 2 ? sv(cols - 2) : 0.0;
  out.diagnostics.rows = static_cast<std::size_t>(m.rows());
  return out;
}

Vec3 coplanarity_row(const NormalizedPoint& x, const NormalizedPoint& x_mirrored) {
  return {x.y - x_mirrored.y, x_mirrored.x - x.x, x.x * x_mirrored.y - x_mirrored.x * x.y};
}

Vec3 estimate_normal_single_mirror(
    std::span<const std::pair<NormalizedPoint, NormalizedPoint>> pairs) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(pairs.size()), 3);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    rows.row(static_cast<Eigen::Index>(k)) =
        coplanarity_row(pairs[k].first, pairs[k].second).transpose();
  }
  const auto solution = smallest_singular_vector(rows);
  if (pairs.size() < 2 || solution.diagnostics.second_smallest <= kRankTolerance * rows.norm()) {
    throw Error(ErrorCode::Degenerate, "degenerate point configuration");
  }
  Vec3 n = solution.vector.head<3>().normalized();
  if (n.z() > 0.0) n = -n;
  return n;
}

namespace {

// Keys of the second-order chambers pairing across `mirror` that no point
// observes.
std::string missing_pair_keys(std::span<const KaleidoscopicObservation> obs, int mirror) {
  const auto all = default_sequences();
  std::set<std::string> missing;
  auto observed = [&](const ReflectionSequence& seq) {
    return std::any_of(obs.begin(), obs.end(), [&](const auto& o) { return o.find(seq) != nullptr; });
  };
  for (const auto& seq : all) {
    if (!seq.can_prepend(mirror)) continue;
    const auto image = seq.prepended(mirror);
    if (std::find(all.begin(), all.end(), image) == all.end()) continue;
    for (const auto& s : {seq, image}) {
      if (!observed(s)) missing.insert(s.key());
    }
  }
  std::string out;
  for (const auto& key : missing) out += (out.empty() ? "" : ", ") + key;
  return out;
}

}  // namespace

Eigen::MatrixXd normal_constraint_rows(std::span<const KaleidoscopicObservation> obs,
                                       const CameraIntrinsics& a, int mirror) {
  std::vector<Vec3> rows;
  for (const auto& o : obs) {
    for (const auto& [seq, q] : o.views) {
      if (!seq.can_prepend(mirror)) continue;
      const Pixel* mirrored = o.find(seq.prepended(mirror));
      if (mirrored == nullptr) continue;
      rows.push_back(coplanarity_row(normalize(a, q), normalize(a, *mirrored)));
    }
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
  }
  return out;
}

NormalEstimate estimate_normals(std::span<const KaleidoscopicObservation> obs,
                                const CameraIntrinsics& a) {
  check_mirror_indices(obs);
  NormalEstimate out;
  for (int i = 1; i <= kMirrorCount; ++i) {
    const Eigen::MatrixXd rows = normal_constraint_rows(obs, a, i);
    if (rows.rows() < 2) {
      throw Error(ErrorCode::MissingChambers,
                  "mirror " + std::to_string(i) + " has " + std::to_string(rows.rows()) +
                      " coplanarity constraint(s), at least 2 are required; missing chambers: " +
                      missing_pair_keys(obs, i));
    }
    const auto solution = smallest_singular_vector(rows);
    const auto& d = solution.diagnostics;
    if (d.second_smallest <= kRankTolerance * rows.norm()) {
      throw Error(ErrorCode::Degenerate, "mirror " + std::to_string(i) +
                                             ": fewer than 2 independent coplanarity constraints");
    }
    Vec3 n = solution.vector.head<3>().normalized();
    if (n.z() > 0.0) n = -n;
    out.normals[static_cast<std::size_t>(i - 1)] = n;
    out.diagnostics[static_cast<std::size_t>(i - 1)] = d;
  }
  return out;
}

CollinearityBlock collinearity_block(const NormalizedPoint& x, const ReflectionSequence& seq,
                                     std::span<const Vec3> normals) {
  const Mat3 cross = skew(x.homogeneous());
  // chain = H_{i1} ... H_{i(k-1)} while walking the sequence outermost-first.
  Mat3 chain = Mat3::Identity();
  Mat3 distance_part = Mat3::Zero();
  for (int i : seq.indices()) {
    const Vec3& n = normals[static_cast<std::size_t>(i) - 1];
    distance_part.col(i - 1) += -2.0 * chain * n;
    chain = chain * householder(n);
  }
  return {cross * chain, cross * distance_part};
}

DistanceSystem build_distance_system(std::span<const KaleidoscopicObservation> obs,
                                     const CameraIntrinsics& a, std::span<const Vec3> normals) {
  check_mirror_indices(obs);
  if (normals.size() != kMirrorCount) {
    throw Error(ErrorCode::InvalidArgument, "three mirror normals are required");
  }
  std::size_t block_count = 0;
  for (const auto& o : obs) block_count += o.views.size();

  const auto points = static_cast<Eigen::Index>(obs.size());
  DistanceSystem system;
  system.point_count = obs.size();
  system.k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(3 * block_count), 3 * points + 3);
  Eigen::Index row = 0;
  for (Eigen::Index l = 0; l < points; ++l) {
    for (const auto& [seq, q] : obs[static_cast<std::size_t>(l)].views) {
      const auto block = collinearity_block(normalize(a, q), seq, normals);
      system.k.block<3, 3>(row, 3 * l) = block.point;
      system.k.block<3, 3>(row, 3 * points) = block.distances;
      system.blocks.emplace_back(static_cast<std::size_t>(l), seq);
      row += 3;
    }
  }
  return system;
}

DistanceEstimate estimate_distances(const DistanceSystem& system) {
  const auto points = static_cast<Eigen::Index>(system.point_count);
  if (system.k.cols() != 3 * points + 3) {
    throw Error(ErrorCode::InvalidArgument, "distance system has inconsistent column count");
  }
  const auto solution = smallest_singular_vector(system.k);
  Eigen::VectorXd v = solution.vector;
  const double d1 = v(3 * points);
  if (d1 == 0.0 || !std::isfinite(d1)) {
    throw Error(ErrorCode::InconsistentGeometry, "inconsistent geometry: d1 vanishes");
  }
  v /= d1;

  DistanceEstimate out;
  out.diagnostics = solution.diagnostics;
  for (int i = 0; i < kMirrorCount; ++i) {
    out.distances[static_cast<std::size_t>(i)] = v(3 * points + i);
    if (!(out.distances[static_cast<std::size_t>(i)] > 0.0)) {
      throw Error(ErrorCode::InconsistentGeometry,
                  "inconsistent geometry: d" + std::to_string(i + 1) + " is not positive");
    }
  }
  for (Eigen::Index l = 0; l < points; ++l) {
    const Point3 p = v.segment<3>(3 * l);
    if (!(p.z() > 0.0)) {
      throw Error(ErrorCode::InconsistentGeometry,
                  "inconsistent geometry: point " + std::to_string(l) + " lies behind the camera");
    }
    out.points.push_back(p);
  }
  return out;
}

Point3 triangulate(const KaleidoscopicObservation& obs, const CameraIntrinsics& a,
                   std::span<const MirrorPlane> mirrors) {
  if (mirrors.size() != kMirrorCount) {
    throw Error(ErrorCode::InvalidArgument, "three mirrors are required");
  }
  std::array<Vec3, 3> normals;
  Vec3 d;
  for (int i = 0; i < kMirrorCount; ++i) {
    normals[static_cast<std::size_t>(i)] = mirrors[static_cast<std::size_t>(i)].normal;
    d(i) = mirrors[static_cast<std::size_t>(i)].distance;
  }
  // Accumulate K'^T K' and K'^T K'' d block by block.
  Mat3 normal_matrix = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (const auto& [seq, q] : obs.views) {
    if (seq.max_index() > kMirrorCount) {
      throw Error(ErrorCode::InvalidArgument, "chamber " + seq.key() + " references a mirror beyond the third");
    }
    const auto block = collinearity_block(normalize(a, q), seq, normals);
    normal_matrix += block.point.transpose() * block.point;
    rhs -= block.point.transpose() * (block.distances * d);
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(normal_matrix);
  const Vec3 lambda = eig.eigenvalues();
  if (!(lambda(0) > 0.0) || lambda(2) / lambda(0) > kMaxTriangulationCondition) {
    throw Error(ErrorCode::IllPosed, "ill-posed triangulation");
  }
  return eig.eigenvectors() * (lambda.cwiseInverse().asDiagonal() *
                               (eig.eigenvectors().transpose() * rhs));
}

std::vector<Point3> triangulate(std::span<const KaleidoscopicObservation> obs,
                                const CameraIntrinsics& a, std::span<const MirrorPlane> mirrors) {
  std::vector<Point3> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back(triangulate(o, a, mirrors));
  return out;
}

LinearCalibration calibrate_linear(std::span<const KaleidoscopicObservation> obs,
                                   const CameraIntrinsics& a) {
  if (obs.empty()) throw Error(ErrorCode::InvalidArgument, "no observations");
  LinearCalibration out;
  const auto normals = estimate_normals(obs, a);
  out.diagnostics.normals = normals.diagnostics;
  for (int i = 0; i < kMirrorCount; ++i) {
    if (normals.diagnostics[static_cast<std::size_t>(i)].flagged()) {
      out.diagnostics.warnings.push_back("normal of mirror " + std::to_string(i + 1) + ": " +
                                         describe(normals.diagnostics[static_cast<std::size_t>(i)]));
    }
    for (int j = i + 1; j < kMirrorCount; ++j) {
      const double c = normals.normals[static_cast<std::size_t>(i)].dot(
          normals.normals[static_cast<std::size_t>(j)]);
      if (std::abs(c) >= 1.0 - 1e-6) {
        throw Error(ErrorCode::Degenerate, "mirrors " + std::to_string(i + 1) + " and " +
                                               std::to_string(j + 1) + " are parallel");
      }
    }
  }

  const auto system = build_distance_system(obs, a, normals.normals);
  const auto distances = estimate_distances(system);
  out.diagnostics.distances = distances.diagnostics;
  if (distances.diagnostics.flagged()) {
    out.diagnostics.warnings.push_back("distances: " + describe(distances.diagnostics));
  }
  for (std::size_t i = 0; i < kMirrorCount; ++i) {
    out.mirrors[i] = {normals.normals[i], distances.distances[i]};
  }
  out.points = triangulate(obs, a, out.mirrors);
  return out;
}

}  // namespace kaleido
