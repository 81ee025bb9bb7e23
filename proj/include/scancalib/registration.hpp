#pragma once

#include <vector>

#include "scancalib/point_cloud.hpp"
#include "scancalib/reconstruction.hpp"
#include "scancalib/rng.hpp"

namespace scancalib {

enum class CoarseMode {
  pca_centroid,   // centroid + principal axes, signs fixed by third moments
  ransac_points,  // congruent-triple RANSAC
};

struct RegistrationParams {
  double intensity_threshold = 0.5;
  int sor_k = 8;
  double sor_stddev_mult = 1.0;
  CoarseMode coarse = CoarseMode::pca_centroid;
  int icp_max_iters = 100;
  double icp_tol = 1e-6;           // twist-norm convergence threshold
  double icp_max_corr_dist = 2.0;  // mm, correspondence rejection
  int ransac_iters = 2000;
  double ransac_inlier_dist = 1.0;  // mm
};

struct RegistrationResult {
  RigidTransform transform;  // model frame -> scene frame
  double rms_error = 0.0;    // mm, over the final correspondence set
  double inlier_fraction = 0.0;
  int iterations_used = 0;
  bool converged = false;
  std::vector<double> rms_history;  // per-iteration rms, diagnostics
};

// Keeps points with intensity >= threshold. Every point must carry an
// intensity value.
PointCloud binarize_by_intensity(const PointCloud& cloud, double threshold);

// Drops points whose mean distance to their k nearest neighbors exceeds
// global mean + stddev_mult * global stddev of that statistic.
PointCloud statistical_outlier_removal(const PointCloud& cloud, int k,
                                       double stddev_mult);

// Initial model -> scene estimate. pca_centroid aligns centroids and
// principal axes; ransac_points searches congruent point triples and keeps
// the candidate with the most inliers (fails below 20% inliers). Warns on
// stderr when the runner-up candidate is within 10% of the best, which
// indicates a (near-)symmetric target.
RigidTransform coarse_align(const PointCloud& scene, const PointCloud& model,
                            const RegistrationParams& params, Rng& rng);

// Point-to-point ICP refining init; correspondences run from the transformed
// model into the scene and pairs farther than icp_max_corr_dist are dropped.
RegistrationResult icp(const PointCloud& scene, const PointCloud& model,
                       const RigidTransform& init, const RegistrationParams& params);

// Full localization pipeline on a reconstructed cloud:
// binarize -> statistical outlier removal -> coarse_align -> icp.
// The resulting translation is the registered target origin in frame B.
RegistrationResult localize_target(const ReconstructedCloud& recon,
                                   const PointCloud& model,
                                   const RegistrationParams& params, Rng& rng);

// Least-squares rigid fit mapping src[i] onto dst[i] (SVD of the
// cross-covariance). Requires equal, nonzero sizes.
RigidTransform rigid_fit(const std::vector<Vec3>& src, const std::vector<Vec3>& dst);

}  // namespace scancalib
