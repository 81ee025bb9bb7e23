#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "scancalib/point_cloud.hpp"
#include "scancalib/rng.hpp"
#include "scancalib/targets.hpp"

namespace scancalib {

// Laser profile sensor: parallel rays spanning fov_width along the sensor x
// axis, measuring range along the sensor z axis. Hits outside
// [z_near, z_far] are dropped. sigma_x / sigma_z are Gaussian measurement
// noise; ee_jitter is a uniform per-axis positioning error of the robot
// (the commanded pose is recorded, the jittered one is scanned from).
struct SensorModel {
  double fov_width = 120.0;      // mm, laser line length
  double z_near = 300.0;         // mm
  double z_far = 800.0;          // mm
  int samples_per_profile = 240;
  double sigma_z = 0.1;          // mm
  double sigma_x = 0.02;         // mm
  double ee_jitter = 0.05;       // mm, uniform in [-ee_jitter, ee_jitter]
};

void validate_sensor(const SensorModel& sensor);

using TargetModel = std::variant<TriMesh, GrayImage>;

// Ground-truth world: a target placed in the robot base frame plus the true
// hand-eye transform used to drive the simulated sensor.
struct ScanScene {
  TargetModel target;
  RigidTransform target_pose;    // base <- target frame
  RigidTransform hand_eye_true;  // end-effector <- sensor frame
};

// One scan pass: the end-effector keeps a fixed orientation and visits a
// sequence of positions.
struct Trajectory {
  Rotation3 ee_rotation;
  std::vector<Vec3> ee_positions;
};

struct ScanRecord {
  Trajectory trajectory;
  std::vector<LaserProfile> profiles;  // one per trajectory position
};

struct ScanDataset {
  std::vector<ScanRecord> records;
  std::uint64_t seed = 0;
  SensorModel sensor;
  RigidTransform hand_eye_true;
  RigidTransform target_pose;
  std::string scene_description;
};

// N+1 positions linearly interpolated between the endpoints (inclusive,
// endpoints exact). Requires N >= 1.
Trajectory interpolate_trajectory(const Vec3& start, const Vec3& end, int n_steps,
                                  const Rotation3& ee_rotation);

// Casts one profile from the given end-effector pose. Rays that miss the
// target or fall outside the range gate produce no point; an empty profile
// is valid. noise feeds per-ray substreams.
LaserProfile acquire_profile(const ScanScene& scene, const RigidTransform& ee_pose,
                             const SensorModel& sensor, const RngStream& noise);

// Full stop-and-look acquisition over all trajectories. Deterministic given
// the seed; profile j of record i uses substreams derived from (seed, i, j).
ScanDataset acquire_dataset(const ScanScene& scene,
                            const std::vector<Trajectory>& trajectories,
                            const SensorModel& sensor, std::uint64_t seed);

// Directory layout: manifest.json plus one PLY per profile.
void save_dataset(const ScanDataset& dataset, const std::filesystem::path& dir);
ScanDataset load_dataset(const std::filesystem::path& dir);

}  // namespace scancalib
