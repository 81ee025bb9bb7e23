#include "scancalib/registration.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "scancalib/kdtree.hpp"

namespace scancalib {

namespace {

std::vector<Vec3> positions_of(const PointCloud& cloud) {
  std::vector<Vec3> out;
  out.reserve(cloud.points.size());
  for (const CloudPoint& p : cloud.points) {
    out.push_back(p.position);
  }
  return out;
}

double rotation_angle(const Rotation3& r) {
  const double c = std::clamp((r.matrix().trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace

PointCloud binarize_by_intensity(const PointCloud& cloud, double threshold) {
  PointCloud out;
  out.frame = cloud.frame;
  for (const CloudPoint& p : cloud.points) {
    if (!p.intensity.has_value()) {
      throw std::invalid_argument("binarization requires intensity on every point");
    }
    if (*p.intensity >= threshold) {
      out.points.push_back(p);
    }
  }
  return out;
}

PointCloud statistical_outlier_removal(const PointCloud& cloud, int k,
                                       double stddev_mult) {
  if (k < 1) {
    throw std::invalid_argument("statistical outlier removal needs k >= 1");
  }
  const std::size_t n = cloud.points.size();
  if (n <= static_cast<std::size_t>(k)) {
    throw std::invalid_argument("cloud too small for the requested neighbor count");
  }
  const std::vector<Vec3> pts = positions_of(cloud);
  const KdTree3 tree(pts);
  std::vector<double> mean_dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto hits = tree.k_nearest(pts[i], k, static_cast<int>(i));
    double sum = 0.0;
    for (const auto& h : hits) {
      sum += std::sqrt(h.dist2);
    }
    mean_dist[i] = sum / static_cast<double>(hits.size());
  }
  const double mean =
      std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double d : mean_dist) {
    var += (d - mean) * (d - mean);
  }
  const double stddev = std::sqrt(var / static_cast<double>(n));
  const double cutoff = mean + stddev_mult * stddev;

  PointCloud out;
  out.frame = cloud.frame;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (mean_dist[i] <= cutoff) {
      out.points.push_back(cloud.points[i]);
    }
  }
  return out;
}

RigidTransform rigid_fit(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  if (src.size() != dst.size() || src.empty()) {
    throw std::invalid_argument("rigid_fit needs equal, nonzero point counts");
  }
  const double n = static_cast<double>(src.size());
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= n;
  cd /= n;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    h += (src[i] - cs) * (dst[i] - cd).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  const Eigen::Matrix3d r = svd.matrixV() * d * svd.matrixU().transpose();
  const Rotation3 rot = Rotation3::from_matrix(r);
  return {rot, cd - rot * cs};
}

namespace {

struct CloudMoments {
  Vec3 centroid = Vec3::Zero();
  Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();  // columns, det +1
  Vec3 third = Vec3::Zero();  // third central moment along each axis
};

CloudMoments moments_of(const std::vector<Vec3>& pts) {
  CloudMoments m;
  const double n = static_cast<double>(pts.size());
  for (const Vec3& p : pts) m.centroid += p;
  m.centroid /= n;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Vec3& p : pts) {
    const Vec3 d = p - m.centroid;
    cov += d * d.transpose();
  }
  cov /= n;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  // Descending eigenvalue order, right-handed basis.
  m.axes.col(0) = es.eigenvectors().col(2);
  m.axes.col(1) = es.eigenvectors().col(1);
  m.axes.col(2) = m.axes.col(0).cross(m.axes.col(1));
  for (int k = 0; k < 3; ++k) {
    double acc = 0.0;
    for (const Vec3& p : pts) {
      const double t = (p - m.centroid).dot(m.axes.col(k));
      acc += t * t * t;
    }
    m.third[k] = acc / n;
  }
  return m;
}

RigidTransform pca_align(const std::vector<Vec3>& scene, const std::vector<Vec3>& model) {
  const CloudMoments ms = moments_of(scene);
  const CloudMoments mm = moments_of(model);
  // Proper-rotation sign patterns for the model axes.
  static constexpr int kSigns[4][3] = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  double best_score = std::numeric_limits<double>::infinity();
  Eigen::Matrix3d best_r = Eigen::Matrix3d::Identity();
  for (const auto& s : kSigns) {
    double score = 0.0;
    for (int k = 0; k < 3; ++k) {
      score += std::abs(ms.third[k] - s[k] * mm.third[k]);
    }
    if (score < best_score) {
      best_score = score;
      Eigen::Matrix3d flipped = mm.axes;
      for (int k = 0; k < 3; ++k) flipped.col(k) *= s[k];
      best_r = ms.axes * flipped.transpose();
    }
  }
  const Rotation3 rot = Rotation3::from_matrix(best_r);
  return {rot, ms.centroid - rot * mm.centroid};
}

std::vector<Vec3> subsample(const std::vector<Vec3>& pts, std::size_t target, Rng& rng) {
  if (pts.size() <= target) return pts;
  // Partial Fisher-Yates over an index array.
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<Vec3> out;
  out.reserve(target);
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t j = i + rng.next_u64() % (idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(pts[idx[i]]);
  }
  return out;
}

bool transforms_distinct(const RigidTransform& a, const RigidTransform& b,
                         double inlier_dist) {
  const double ang = rotation_angle(a.rotation.transposed() * b.rotation);
  const double t = (a.translation - b.translation).norm();
  return ang > 0.15 || t > std::max(3.0 * inlier_dist, 5.0);
}

RigidTransform ransac_align(const PointCloud& scene_cloud, const PointCloud& model_cloud,
                            const RegistrationParams& params, Rng& rng) {
  const std::vector<Vec3> scene = positions_of(scene_cloud);
  const std::vector<Vec3> model = positions_of(model_cloud);
  const KdTree3 scene_tree(scene);
  const std::vector<Vec3> sub_scene = subsample(scene, 400, rng);
  const std::vector<Vec3> sub_model = subsample(model, 400, rng);
  const double tol = params.ransac_inlier_dist;

  // Model pair table sorted by distance, for congruent-pair lookup.
  struct Pair {
    double d;
    int i, j;
  };
  std::vector<Pair> pairs;
  pairs.reserve(sub_model.size() * (sub_model.size() - 1) / 2);
  for (std::size_t i = 0; i < sub_model.size(); ++i) {
    for (std::size_t j = i + 1; j < sub_model.size(); ++j) {
      pairs.push_back({(sub_model[i] - sub_model[j]).norm(), static_cast<int>(i),
                       static_cast<int>(j)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return a.d < b.d || (a.d == b.d && (a.i < b.i || (a.i == b.i && a.j < b.j)));
  });

  Vec3 lo = sub_scene.front(), hi = sub_scene.front();
  for (const Vec3& p : sub_scene) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double min_sep = 0.15 * (hi - lo).norm();

  auto inlier_fraction_of = [&](const RigidTransform& h) {
    std::size_t inliers = 0;
    for (const Vec3& m : sub_model) {
      if (scene_tree.nearest(apply(h, m), tol)) {
        ++inliers;
      }
    }
    return static_cast<double>(inliers) / static_cast<double>(sub_model.size());
  };

  double best_frac = -1.0, second_frac = -1.0;
  RigidTransform best;
  for (int iter = 0; iter < params.ransac_iters && best_frac < 0.8; ++iter) {
    const std::size_t n = sub_scene.size();
    const std::size_t a = rng.next_u64() % n;
    const std::size_t b = rng.next_u64() % n;
    const std::size_t c = rng.next_u64() % n;
    if (a == b || a == c || b == c) continue;
    const Vec3& s1 = sub_scene[a];
    const Vec3& s2 = sub_scene[b];
    const Vec3& s3 = sub_scene[c];
    const double d12 = (s1 - s2).norm();
    const double d13 = (s1 - s3).norm();
    const double d23 = (s2 - s3).norm();
    if (d12 < min_sep || d13 < min_sep || d23 < min_sep) continue;

    const auto lo_it = std::lower_bound(pairs.begin(), pairs.end(), d12 - tol,
                                        [](const Pair& p, double v) { return p.d < v; });
    const auto hi_it = std::upper_bound(pairs.begin(), pairs.end(), d12 + tol,
                                        [](double v, const Pair& p) { return v < p.d; });
    const std::ptrdiff_t window = hi_it - lo_it;
    if (window <= 0) continue;
    const std::ptrdiff_t stride = std::max<std::ptrdiff_t>(1, window / 32);
    int scored = 0;
    for (auto it = lo_it; it < hi_it && scored < 8; it += stride) {
      for (int orient = 0; orient < 2 && scored < 8; ++orient) {
        const Vec3& m1 = sub_model[orient == 0 ? it->i : it->j];
        const Vec3& m2 = sub_model[orient == 0 ? it->j : it->i];
        for (const Vec3& m3 : sub_model) {
          if (std::abs((m3 - m1).norm() - d13) > tol) continue;
          if (std::abs((m3 - m2).norm() - d23) > tol) continue;
          const RigidTransform h = rigid_fit({m1, m2, m3}, {s1, s2, s3});
          if ((apply(h, m1) - s1).norm() > 2.0 * tol ||
              (apply(h, m2) - s2).norm() > 2.0 * tol ||
              (apply(h, m3) - s3).norm() > 2.0 * tol) {
            continue;
          }
          const double frac = inlier_fraction_of(h);
          ++scored;
          if (frac > best_frac) {
            if (best_frac >= 0.0 && transforms_distinct(best, h, tol)) {
              second_frac = best_frac;
            }
            best_frac = frac;
            best = h;
          } else if (frac > second_frac && transforms_distinct(best, h, tol)) {
            second_frac = frac;
          }
          if (scored >= 8) break;
        }
      }
    }
  }

  if (best_frac < 0.2) {
    throw CoarseAlignmentError("coarse alignment failed: best candidate has " +
                               std::to_string(best_frac * 100.0) + "% inliers");
  }
  if (second_frac >= 0.9 * best_frac) {
    std::cerr << "[scancalib] warning: coarse alignment is ambiguous (runner-up "
                 "candidate within 10% of the best); the target may be symmetric\n";
  }
  return best;
}

}  // namespace

RigidTransform coarse_align(const PointCloud& scene, const PointCloud& model,
                            const RegistrationParams& params, Rng& rng) {
  if (scene.empty() || model.empty()) {
    throw std::invalid_argument("coarse alignment needs nonempty clouds");
  }
  if (params.coarse == CoarseMode::pca_centroid) {
    return pca_align(positions_of(scene), positions_of(model));
  }
  return ransac_align(scene, model, params, rng);
}

RegistrationResult icp(const PointCloud& scene, const PointCloud& model,
                       const RigidTransform& init, const RegistrationParams& params) {
  if (scene.empty() || model.empty()) {
    throw std::invalid_argument("icp needs nonempty clouds");
  }
  const std::vector<Vec3> scene_pts = positions_of(scene);
  const std::vector<Vec3> model_pts = positions_of(model);
  const KdTree3 tree(scene_pts);

  RegistrationResult result;
  result.transform = init;
  std::vector<Vec3> src, dst;
  src.reserve(model_pts.size());
  dst.reserve(model_pts.size());
  for (int iter = 0; iter < params.icp_max_iters; ++iter) {
    src.clear();
    dst.clear();
    for (const Vec3& m : model_pts) {
      const Vec3 q = apply(result.transform, m);
      if (const auto hit = tree.nearest(q, params.icp_max_corr_dist)) {
        src.push_back(m);
        dst.push_back(scene_pts[hit->index]);
      }
    }
    if (src.empty()) {
      throw RegistrationFailedError("icp rejected every correspondence");
    }
    const RigidTransform updated = rigid_fit(src, dst);
    const RigidTransform delta = compose(updated, invert(result.transform));
    result.transform = updated;
    result.iterations_used = iter + 1;
    result.inlier_fraction =
        static_cast<double>(src.size()) / static_cast<double>(model_pts.size());

    double ss = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
      ss += (apply(updated, src[i]) - dst[i]).squaredNorm();
    }
    result.rms_error = std::sqrt(ss / static_cast<double>(src.size()));
    result.rms_history.push_back(result.rms_error);

    const double twist = std::hypot(rotation_angle(delta.rotation), delta.translation.norm());
    if (twist < params.icp_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

RegistrationResult localize_target(const ReconstructedCloud& recon,
                                   const PointCloud& model,
                                   const RegistrationParams& params, Rng& rng) {
  PointCloud scene = binarize_by_intensity(recon.cloud, params.intensity_threshold);
  scene = statistical_outlier_removal(scene, params.sor_k, params.sor_stddev_mult);
  const RigidTransform init = coarse_align(scene, model, params, rng);
  return icp(scene, model, init, params);
}

}  // namespace scancalib
