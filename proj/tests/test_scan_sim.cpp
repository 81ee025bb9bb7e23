#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <set>

#include "scancalib/reconstruction.hpp"
#include "scancalib/scanner_sim.hpp"

using namespace scancalib;

namespace {

// Closest-point-on-triangle distance, used as an independent surface oracle.
double point_triangle_dist(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return (p - (a + v * ab)).norm();
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return (p - (a + w * ac)).norm();
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return (p - (a + ab * v + ac * w)).norm();
}

double distance_to_mesh(const Vec3& p, const TriMesh& mesh) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles) {
    best = std::min(best, point_triangle_dist(p, mesh.vertices[t[0]],
                                              mesh.vertices[t[1]],
                                              mesh.vertices[t[2]]));
  }
  return best;
}

TriMesh big_plane(double half = 200.0) {
  TriMesh mesh;
  mesh.vertices = {Vec3(-half, -half, 0), Vec3(half, -half, 0), Vec3(half, half, 0),
                   Vec3(-half, half, 0)};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  return mesh;
}

Rotation3 down_looking() {
  Eigen::Matrix3d m;
  m << 1, 0, 0,
       0, -1, 0,
       0, 0, -1;
  return Rotation3::from_matrix(m);
}

SensorModel quiet_sensor() {
  SensorModel s;
  s.sigma_z = 0.0;
  s.sigma_x = 0.0;
  s.ee_jitter = 0.0;
  return s;
}

ScanScene plane_scene() {
  return {big_plane(), RigidTransform::identity(), RigidTransform::identity()};
}

}  // namespace

TEST_CASE("linear interpolation hits the documented waypoints") {
  const Trajectory t =
      interpolate_trajectory(Vec3(0, 0, 0), Vec3(10, 0, 0), 10, Rotation3::identity());
  REQUIRE(t.ee_positions.size() == 11);
  CHECK((t.ee_positions[5] - Vec3(5, 0, 0)).norm() < 1e-15);
  CHECK(t.ee_positions.front() == Vec3(0, 0, 0));
  CHECK(t.ee_positions.back() == Vec3(10, 0, 0));
}

TEST_CASE("interpolation endpoints are exact and spacing is uniform") {
  const Vec3 start(0.1, 0.2, 0.3), end(3.1, 6.2, 9.3);
  const Trajectory t = interpolate_trajectory(start, end, 3, Rotation3::identity());
  REQUIRE(t.ee_positions.size() == 4);
  CHECK(t.ee_positions[0] == start);
  CHECK(t.ee_positions[3] == end);
  CHECK((t.ee_positions[1] - (start + (end - start) / 3.0)).norm() < 1e-12);
  CHECK((t.ee_positions[2] - (start + 2.0 * (end - start) / 3.0)).norm() < 1e-12);
}

TEST_CASE("integer waypoint example") {
  const Trajectory t =
      interpolate_trajectory(Vec3(0, 0, 0), Vec3(3, 6, 9), 3, Rotation3::identity());
  CHECK((t.ee_positions[1] - Vec3(1, 2, 3)).norm() < 1e-12);
  CHECK((t.ee_positions[2] - Vec3(2, 4, 6)).norm() < 1e-12);
}

TEST_CASE("invalid step counts are rejected") {
  CHECK_THROWS_AS(interpolate_trajectory(Vec3::Zero(), Vec3::Zero(), 0,
                                         Rotation3::identity()),
                  std::invalid_argument);
}

TEST_CASE("flat plane gives a constant-depth profile") {
  const ScanScene scene = plane_scene();
  const RigidTransform ee{down_looking(), Vec3(0, 0, 500)};
  const LaserProfile p = acquire_profile(scene, ee, quiet_sensor(), RngStream(1));
  REQUIRE(p.points.size() == quiet_sensor().samples_per_profile);
  for (const auto& pt : p.points) {
    CHECK(std::abs(pt.position.z() - 500.0) < 1e-9);
    CHECK(pt.position.y() == 0.0);
    CHECK(pt.intensity.value() == doctest::Approx(1.0));
  }
}

TEST_CASE("target outside the field of view gives an empty profile") {
  const ScanScene scene = plane_scene();
  const RigidTransform ee{down_looking(), Vec3(1000, 1000, 500)};
  CHECK(acquire_profile(scene, ee, quiet_sensor(), RngStream(1)).points.empty());
}

TEST_CASE("hits outside the range gate are dropped") {
  const ScanScene scene = plane_scene();
  const RigidTransform ee{down_looking(), Vec3(0, 0, 900)};  // beyond z_far
  CHECK(acquire_profile(scene, ee, quiet_sensor(), RngStream(1)).points.empty());
  const RigidTransform close{down_looking(), Vec3(0, 0, 100)};  // inside z_near
  CHECK(acquire_profile(scene, close, quiet_sensor(), RngStream(1)).points.empty());
}

TEST_CASE("a step edge under the laser line yields exactly two depths") {
  const ScanScene scene{make_step_block(100, 100, 3, 10), RigidTransform::identity(),
                        RigidTransform::identity()};
  SensorModel sensor = quiet_sensor();
  sensor.fov_width = 30.0;
  // Line centered on the boundary between the first two levels (x = -25).
  const RigidTransform ee{down_looking(), Vec3(-25, 0, 500)};
  const LaserProfile p = acquire_profile(scene, ee, sensor, RngStream(1));
  REQUIRE(!p.points.empty());
  std::set<long> depths;
  for (const auto& pt : p.points) {
    depths.insert(std::lround(pt.position.z() * 1e6));
  }
  CHECK(depths.size() == 2);
}

TEST_CASE("dataset dimensions follow the trajectories") {
  const ScanScene scene = plane_scene();
  std::vector<Trajectory> trajs;
  for (int i = 0; i < 3; ++i) {
    trajs.push_back(interpolate_trajectory(Vec3(-20, -20 + 10 * i, 480),
                                           Vec3(20, -20 + 10 * i, 480), 10,
                                           down_looking()));
  }
  const ScanDataset ds = acquire_dataset(scene, trajs, quiet_sensor(), 99);
  REQUIRE(ds.records.size() == 3);
  for (const auto& rec : ds.records) {
    CHECK(rec.profiles.size() == 11);
    CHECK(rec.trajectory.ee_positions.size() == 11);
  }
  CHECK_THROWS_AS(acquire_dataset(scene, {}, quiet_sensor(), 1),
                  std::invalid_argument);
}

TEST_CASE("identical seeds give bit-identical datasets") {
  const ScanScene scene = plane_scene();
  SensorModel noisy;
  noisy.sigma_z = 0.2;
  noisy.sigma_x = 0.05;
  noisy.ee_jitter = 0.05;
  const std::vector<Trajectory> trajs = {interpolate_trajectory(
      Vec3(-30, 0, 500), Vec3(30, 0, 500), 15, down_looking())};
  const ScanDataset a = acquire_dataset(scene, trajs, noisy, 1234);
  const ScanDataset b = acquire_dataset(scene, trajs, noisy, 1234);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& pa = a.records[i].profiles;
    const auto& pb = b.records[i].profiles;
    REQUIRE(pa.size() == pb.size());
    for (std::size_t j = 0; j < pa.size(); ++j) {
      REQUIRE(pa[j].points.size() == pb[j].points.size());
      for (std::size_t k = 0; k < pa[j].points.size(); ++k) {
        CHECK(pa[j].points[k].position == pb[j].points[k].position);
      }
    }
  }

  const ScanDataset c = acquire_dataset(scene, trajs, noisy, 1235);
  bool differs = false;
  for (std::size_t j = 0; j < c.records[0].profiles.size() && !differs; ++j) {
    const auto& pc = c.records[0].profiles[j].points;
    const auto& pa = a.records[0].profiles[j].points;
    if (pc.size() != pa.size()) {
      differs = true;
      break;
    }
    for (std::size_t k = 0; k < pc.size(); ++k) {
      if (pc[k].position != pa[k].position) {
        differs = true;
        break;
      }
    }
  }
  CHECK(differs);
}

TEST_CASE("noise-free scans reconstruct onto the target surface") {
  // Non-trivial hand-eye, target at the origin: every reconstructed point
  // must land back on the mesh.
  const TriMesh block = make_step_block(80, 80, 3, 10);
  Eigen::Matrix3d fixture;
  fixture << 0, 0, -1,
             0, -1, 0,
             -1, 0, 0;
  const RigidTransform hand_eye{Rotation3::from_matrix(fixture), Vec3(907.5, 97.0, 40.0)};
  const ScanScene scene{block, RigidTransform::identity(), hand_eye};

  const Rotation3 sensor_rot = down_looking();
  const Rotation3 ee_rot = sensor_rot * hand_eye.rotation.transposed();
  auto ee_position_for = [&](const Vec3& sensor_pos) -> Vec3 {
    return sensor_pos - ee_rot * hand_eye.translation;
  };
  const Trajectory traj = interpolate_trajectory(ee_position_for(Vec3(0, -55, 550)),
                                                 ee_position_for(Vec3(0, 55, 550)), 40,
                                                 ee_rot);
  const ScanDataset ds = acquire_dataset(scene, {traj}, quiet_sensor(), 5);
  const ReconstructedCloud recon =
      reconstruct_record(ds.records[0], hand_eye, ReconMode::true_hand_eye);
  REQUIRE(recon.cloud.size() > 2000);
  double worst = 0.0;
  for (const auto& p : recon.cloud.points) {
    worst = std::max(worst, distance_to_mesh(p.position, block));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("dataset save/load round trip") {
  const ScanScene scene = plane_scene();
  SensorModel sensor = quiet_sensor();
  sensor.sigma_z = 0.1;
  const std::vector<Trajectory> trajs = {
      interpolate_trajectory(Vec3(-20, 0, 520), Vec3(20, 0, 520), 6, down_looking()),
      interpolate_trajectory(Vec3(-20, 5, 500), Vec3(20, 5, 500), 6, down_looking())};
  ScanDataset ds = acquire_dataset(scene, trajs, sensor, 77);
  ds.scene_description = "plane test";

  const auto dir = std::filesystem::temp_directory_path() / "scancalib_dataset_test";
  std::filesystem::remove_all(dir);
  save_dataset(ds, dir);
  const ScanDataset back = load_dataset(dir);
  CHECK(back.seed == ds.seed);
  CHECK(back.scene_description == ds.scene_description);
  CHECK(back.sensor.sigma_z == doctest::Approx(ds.sensor.sigma_z));
  CHECK((back.hand_eye_true.translation - ds.hand_eye_true.translation).norm() < 1e-12);
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& ra = ds.records[i];
    const auto& rb = back.records[i];
    REQUIRE(rb.profiles.size() == ra.profiles.size());
    CHECK((rb.trajectory.ee_rotation.matrix() - ra.trajectory.ee_rotation.matrix())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    for (std::size_t j = 0; j < ra.profiles.size(); ++j) {
      REQUIRE(rb.profiles[j].points.size() == ra.profiles[j].points.size());
      for (std::size_t k = 0; k < ra.profiles[j].points.size(); ++k) {
        CHECK((rb.profiles[j].points[k].position -
               ra.profiles[j].points[k].position)
                  .norm() < 1e-6);
      }
    }
  }
}

TEST_CASE("sensor validation") {
  SensorModel bad;
  bad.z_near = 500;
  bad.z_far = 400;
  CHECK_THROWS_AS(validate_sensor(bad), std::invalid_argument);
  SensorModel one_ray;
  one_ray.samples_per_profile = 1;
  CHECK_THROWS_AS(validate_sensor(one_ray), std::invalid_argument);
  SensorModel neg;
  neg.sigma_z = -0.1;
  CHECK_THROWS_AS(validate_sensor(neg), std::invalid_argument);
}
