#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numbers>
#include <numeric>

#include "scancalib/registration.hpp"
#include "scancalib/scanner_sim.hpp"

using namespace scancalib;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

PointCloud cloud_from(const std::vector<Vec3>& pts, const std::string& frame = "B") {
  PointCloud c;
  c.frame = frame;
  for (const Vec3& p : pts) c.points.push_back({p, 1.0});
  return c;
}

PointCloud unit_grid_10x10() {
  std::vector<Vec3> pts;
  for (int u = 0; u < 10; ++u) {
    for (int v = 0; v < 10; ++v) {
      pts.emplace_back(u, v, 0.0);
    }
  }
  return cloud_from(pts);
}

// Brute-force mean distance to the k nearest neighbors; independent of the
// kd-tree used by the implementation.
std::vector<double> brute_mean_knn(const PointCloud& c, int k) {
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j == i) continue;
      d.push_back((c.points[i].position - c.points[j].position).norm());
    }
    std::sort(d.begin(), d.end());
    double sum = 0.0;
    for (int n = 0; n < k; ++n) sum += d[n];
    out[i] = sum / k;
  }
  return out;
}

PointCloud sampled_block(double density = 2.0, std::uint64_t seed = 3) {
  return mesh_to_model_cloud(make_step_block(80, 80, 3, 10), density, seed);
}

RegistrationParams wide_icp_params() {
  RegistrationParams p;
  p.icp_max_corr_dist = 1e9;  // no rejection
  return p;
}

}  // namespace

TEST_CASE("binarization keeps only bright points") {
  PointCloud c;
  c.points.push_back({Vec3(0, 0, 0), 0.2});
  c.points.push_back({Vec3(1, 0, 0), 0.9});
  const PointCloud kept = binarize_by_intensity(c, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept.points[0].position.x() == 1.0);

  CHECK(binarize_by_intensity(c, 0.0).size() == 2);
  CHECK(binarize_by_intensity(c, 1.1).empty());

  PointCloud missing;
  missing.points.push_back({Vec3(0, 0, 0), std::nullopt});
  CHECK_THROWS_AS(binarize_by_intensity(missing, 0.5), std::invalid_argument);
}

TEST_CASE("outlier removal matches the brute-force statistic") {
  PointCloud c = unit_grid_10x10();
  c.points.push_back({Vec3(1000, 0, 0), 1.0});
  const int k = 4;
  const double mult = 1.0;

  // Independent oracle: compute the survivor set directly.
  const std::vector<double> stat = brute_mean_knn(c, k);
  const double mean = std::accumulate(stat.begin(), stat.end(), 0.0) / stat.size();
  double var = 0.0;
  for (double d : stat) var += (d - mean) * (d - mean);
  const double cutoff = mean + mult * std::sqrt(var / stat.size());
  std::vector<Vec3> expected;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (stat[i] <= cutoff) expected.push_back(c.points[i].position);
  }
  REQUIRE(expected.size() == 100);  // the far point is the single casualty

  const PointCloud filtered = statistical_outlier_removal(c, k, mult);
  REQUIRE(filtered.size() == expected.size());
  for (std::size_t i = 0; i < filtered.size(); ++i) {
    CHECK((filtered.points[i].position - expected[i]).norm() == 0.0);
  }
}

TEST_CASE("uniform grid survives a loose outlier filter") {
  const PointCloud c = unit_grid_10x10();
  CHECK(statistical_outlier_removal(c, 4, 10.0).size() == c.size());
}

TEST_CASE("outlier removal rejects undersized clouds") {
  const PointCloud c = cloud_from({Vec3(0, 0, 0), Vec3(1, 0, 0)});
  CHECK_THROWS_AS(statistical_outlier_removal(c, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(statistical_outlier_removal(c, 0, 1.0), std::invalid_argument);
}

TEST_CASE("pca coarse alignment of a cloud with itself is the identity") {
  const PointCloud model = sampled_block();
  RegistrationParams params;
  Rng rng(1);
  const RigidTransform h = coarse_align(model, model, params, rng);
  CHECK(rotation_angle_between(h.rotation, Rotation3::identity()) < 1e-6);
  CHECK(h.translation.norm() < 1e-6);
}

TEST_CASE("pca coarse alignment recovers a rigid motion") {
  const PointCloud model = sampled_block();
  const RigidTransform truth{rot_from_axis_angle(Vec3(0, 0, 1), 30 * kDeg),
                             Vec3(25, -10, 5)};
  const PointCloud scene = transform_cloud(truth, model, "B");
  RegistrationParams params;
  Rng rng(2);
  const RigidTransform h = coarse_align(scene, model, params, rng);
  CHECK(rotation_angle_between(h.rotation, truth.rotation) < 1e-6);
  CHECK((h.translation - truth.translation).norm() < 1e-6);
}

TEST_CASE("ransac coarse alignment recovers a rigid motion") {
  const PointCloud model = sampled_block(1.0);
  const RigidTransform truth{rot_from_axis_angle(Vec3(0, 0, 1), 30 * kDeg),
                             Vec3(40, -25, 15)};
  const PointCloud scene = transform_cloud(truth, model, "B");
  RegistrationParams params;
  params.coarse = CoarseMode::ransac_points;
  Rng rng(3);
  const RigidTransform h = coarse_align(scene, model, params, rng);
  CHECK(rotation_angle_between(h.rotation, truth.rotation) < 2 * kDeg);
  CHECK((h.translation - truth.translation).norm() < 1.0);
}

TEST_CASE("ransac coarse alignment fails without overlap") {
  const PointCloud model = sampled_block(1.0);
  Rng scatter(9);
  std::vector<Vec3> random_pts;
  for (int i = 0; i < 2000; ++i) {
    random_pts.emplace_back(scatter.uniform(-100, 100), scatter.uniform(-100, 100),
                            scatter.uniform(-100, 100));
  }
  const PointCloud scene = cloud_from(random_pts);
  RegistrationParams params;
  params.coarse = CoarseMode::ransac_points;
  params.ransac_iters = 300;
  Rng rng(4);
  CHECK_THROWS_AS(coarse_align(scene, model, params, rng), CoarseAlignmentError);
}

TEST_CASE("coarse alignment rejects empty clouds") {
  const PointCloud model = sampled_block(0.5);
  PointCloud empty;
  RegistrationParams params;
  Rng rng(5);
  CHECK_THROWS_AS(coarse_align(empty, model, params, rng), std::invalid_argument);
  CHECK_THROWS_AS(coarse_align(model, empty, params, rng), std::invalid_argument);
}

TEST_CASE("icp of a cloud with itself returns the identity") {
  const PointCloud model = sampled_block();
  const RegistrationResult r =
      icp(model, model, RigidTransform::identity(), RegistrationParams{});
  CHECK(r.converged);
  CHECK(r.rms_error < 1e-9);
  CHECK(rotation_angle_between(r.transform.rotation, Rotation3::identity()) < 1e-9);
  CHECK(r.transform.translation.norm() < 1e-9);
  CHECK(r.inlier_fraction == doctest::Approx(1.0));
}

TEST_CASE("icp recovers a pure translation from an identity start") {
  const PointCloud model = sampled_block();
  const Vec3 shift(3, -2, 5);
  const PointCloud scene =
      transform_cloud(RigidTransform::from_translation(shift), model, "B");
  RegistrationParams params;
  params.icp_max_corr_dist = 10.0;
  const RegistrationResult r = icp(scene, model, RigidTransform::identity(), params);
  CHECK(r.converged);
  CHECK((r.transform.translation - shift).norm() < 1e-6);
  CHECK(rotation_angle_between(r.transform.rotation, Rotation3::identity()) < 1e-6);
}

TEST_CASE("icp averages away measurement noise") {
  const PointCloud model = sampled_block(10000.0 / 7000.0);  // roughly 10k points
  Vec3 mean_err = Vec3::Zero();
  const int kSeeds = 5;
  for (int s = 0; s < kSeeds; ++s) {
    Rng noise(100 + s);
    const Vec3 shift(4, 1, -6);
    PointCloud scene =
        transform_cloud(RigidTransform::from_translation(shift), model, "B");
    for (auto& p : scene.points) {
      p.position += 0.1 * Vec3(noise.gaussian(), noise.gaussian(), noise.gaussian());
    }
    RegistrationParams params;
    params.icp_max_corr_dist = 10.0;
    const RegistrationResult r = icp(scene, model, RigidTransform::identity(), params);
    mean_err += (r.transform.translation - shift).cwiseAbs();
  }
  mean_err /= kSeeds;
  CHECK(mean_err.maxCoeff() < 0.05);
}

TEST_CASE("icp rms is non-increasing") {
  const PointCloud model = sampled_block();
  const RigidTransform truth{rot_from_axis_angle(Vec3(1, 0, 0), 8 * kDeg),
                             Vec3(6, -4, 3)};
  const PointCloud scene = transform_cloud(truth, model, "B");
  const RegistrationResult r =
      icp(scene, model, RigidTransform::identity(), wide_icp_params());
  REQUIRE(r.rms_history.size() >= 2);
  for (std::size_t i = 1; i < r.rms_history.size(); ++i) {
    CHECK(r.rms_history[i] <= r.rms_history[i - 1] + 1e-12);
  }
  CHECK(r.converged);
}

TEST_CASE("coarse init plus icp recovers moderate rigid motions exactly") {
  const PointCloud model = sampled_block();
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec3 axis =
        Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()).normalized();
    const RigidTransform truth{
        rot_from_axis_angle(UnitAxis::normalized(axis), rng.uniform(2, 15) * kDeg),
        Vec3(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20))};
    const PointCloud scene = transform_cloud(truth, model, "B");
    RegistrationParams params;
    Rng coarse_rng(7);
    const RigidTransform init = coarse_align(scene, model, params, coarse_rng);
    const RegistrationResult r = icp(scene, model, init, params);
    CHECK(r.converged);
    CHECK(rotation_angle_between(r.transform.rotation, truth.rotation) < 1e-6);
    CHECK((r.transform.translation - truth.translation).norm() < 1e-6);
  }
}

TEST_CASE("icp reports failure when every correspondence is rejected") {
  const PointCloud model = sampled_block(0.5);
  const PointCloud scene = transform_cloud(
      RigidTransform::from_translation(Vec3(500, 0, 0)), model, "B");
  RegistrationParams params;  // max_corr_dist 2 mm
  CHECK_THROWS_AS(icp(scene, model, RigidTransform::identity(), params),
                  RegistrationFailedError);
}

TEST_CASE("icp with clutter still lands within 2 mm") {
  const PointCloud model = sampled_block(1.0);
  const RigidTransform truth{rot_from_axis_angle(Vec3(0, 0, 1), 25 * kDeg),
                             Vec3(30, -18, 12)};
  PointCloud scene = transform_cloud(truth, model, "B");
  Rng clutter(11);
  const std::size_t extra = scene.size() / 2;
  for (std::size_t i = 0; i < extra; ++i) {
    scene.points.push_back({Vec3(clutter.uniform(-80, 110), clutter.uniform(-90, 70),
                                 clutter.uniform(-20, 60)),
                            1.0});
  }
  RegistrationParams params;
  params.coarse = CoarseMode::ransac_points;
  Rng rng(12);
  const RigidTransform init = coarse_align(scene, model, params, rng);
  const RegistrationResult r = icp(scene, model, init, params);
  CHECK((r.transform.translation - truth.translation).norm() < 2.0);
}

namespace {

// Scan of the step block at the origin with a non-trivial hand-eye; the
// exactly reconstructed surface doubles as the model so the localization
// oracle is not limited by sampling mismatch.
struct LocalizeFixture {
  RigidTransform hand_eye;
  ScanRecord record;
  Rotation3 ee_rotation;
  PointCloud exact_model;  // frame "C" (target pose is the identity)
};

LocalizeFixture make_localize_fixture() {
  LocalizeFixture fx;
  Eigen::Matrix3d m;
  m << 0, 0, -1,
       0, -1, 0,
       -1, 0, 0;
  fx.hand_eye = {Rotation3::from_matrix(m), Vec3(907.5, 97.0, 40.0)};
  const ScanScene scene{make_step_block(80, 80, 3, 10), RigidTransform::identity(),
                        fx.hand_eye};
  Eigen::Matrix3d dl;
  dl << 1, 0, 0,
        0, -1, 0,
        0, 0, -1;
  const Rotation3 sensor_rot = Rotation3::from_matrix(dl);
  fx.ee_rotation = sensor_rot * fx.hand_eye.rotation.transposed();
  auto ee_position_for = [&](const Vec3& sensor_pos) -> Vec3 {
    return sensor_pos - fx.ee_rotation * fx.hand_eye.translation;
  };
  SensorModel sensor;
  sensor.sigma_z = sensor.sigma_x = sensor.ee_jitter = 0.0;
  const Trajectory traj =
      interpolate_trajectory(ee_position_for(Vec3(0, -52, 550)),
                             ee_position_for(Vec3(0, 52, 550)), 80, fx.ee_rotation);
  const ScanDataset ds = acquire_dataset(scene, {traj}, sensor, 21);
  fx.record = ds.records[0];
  const ReconstructedCloud full =
      reconstruct_record(fx.record, fx.hand_eye, ReconMode::true_hand_eye);
  fx.exact_model = transform_cloud(RigidTransform::identity(), full.cloud, "C");
  return fx;
}

RegistrationParams exact_pipeline_params() {
  RegistrationParams params;
  params.sor_stddev_mult = 10.0;  // noise-free grid: keep the point sets identical
  return params;
}

}  // namespace

TEST_CASE("localizing the shifted reconstruction recovers the offset origin") {
  const LocalizeFixture fx = make_localize_fixture();
  const ReconstructedCloud shifted =
      reconstruct_record(fx.record, fx.hand_eye, ReconMode::rotation_only);
  Rng rng(13);
  const RegistrationResult r =
      localize_target(shifted, fx.exact_model, exact_pipeline_params(), rng);
  // The target origin sits at the base-frame origin, so the registered
  // origin is minus (ee rotation) * (hand-eye translation).
  const Vec3 expected = -(fx.ee_rotation * fx.hand_eye.translation);
  CHECK((r.transform.translation - expected).norm() < 1e-3);
  CHECK(r.converged);
}

TEST_CASE("localizing the true reconstruction recovers the target origin") {
  const LocalizeFixture fx = make_localize_fixture();
  const ReconstructedCloud full =
      reconstruct_record(fx.record, fx.hand_eye, ReconMode::true_hand_eye);
  Rng rng(14);
  const RegistrationResult r =
      localize_target(full, fx.exact_model, exact_pipeline_params(), rng);
  CHECK(r.transform.translation.norm() < 1e-3);
}

TEST_CASE("localization against a sampled model stays within registration noise") {
  const LocalizeFixture fx = make_localize_fixture();
  const PointCloud model = mesh_to_model_cloud(make_step_block(80, 80, 3, 10), 4.0, 2);
  const ReconstructedCloud shifted =
      reconstruct_record(fx.record, fx.hand_eye, ReconMode::rotation_only);
  Rng rng(15);
  RegistrationParams params;
  params.sor_stddev_mult = 3.0;
  const RegistrationResult r = localize_target(shifted, model, params, rng);
  const Vec3 expected = -(fx.ee_rotation * fx.hand_eye.translation);
  CHECK((r.transform.translation - expected).norm() < 0.1);
}
