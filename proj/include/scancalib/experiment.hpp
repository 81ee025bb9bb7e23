#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scancalib/calibration.hpp"
#include "scancalib/json_io.hpp"
#include "scancalib/registration.hpp"
#include "scancalib/scanner_sim.hpp"

namespace scancalib {

struct TargetSpec {
  enum class Kind { step_block, wedge, flat_logo, mesh_file, image_file };
  Kind kind = Kind::step_block;
  // step_block
  double base_w = 80.0;
  double base_h = 80.0;
  int steps = 3;
  double step_height = 10.0;
  // wedge
  double length = 80.0;
  double width = 80.0;
  double slope = 0.3;
  // flat_logo
  int image_w = 64;
  int image_h = 64;
  double dpi = 25.4;
  // mesh_file / image_file
  std::string path;
};

TargetModel make_target(const TargetSpec& spec);
std::string describe_target(const TargetSpec& spec);

struct TrajectorySpec {
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  int steps = 40;
  Rotation3 ee_rotation;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int repetitions = 1;
  TargetSpec target;
  RigidTransform target_pose;  // base <- target, ground truth
  RigidTransform hand_eye;     // ground truth; its rotation is the known prior
  SensorModel sensor;
  double model_samples_per_mm2 = 2.0;
  double model_intensity_min = 0.5;
  RegistrationParams registration;
  std::vector<TrajectorySpec> trajectories;
};

// Step-block scene with ten aimed scan passes whose relative rotation axes
// are pairwise non-parallel.
ExperimentConfig default_experiment_config();

ExperimentConfig config_from_json(const Json& j);
Json json_of(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

Json json_of(const RegistrationParams& p);
RegistrationParams registration_params_from_json(const Json& j);
Json json_of(const RegistrationResult& r);
Json json_of(const CalibResult& r);

ScanScene make_scene(const ExperimentConfig& cfg);
PointCloud make_model_cloud(const ExperimentConfig& cfg);
std::vector<Trajectory> make_trajectories(const ExperimentConfig& cfg);
ScanDataset simulate_dataset(const ExperimentConfig& cfg, std::uint64_t run_seed);

// Builds num_clouds scan passes that sweep the sensor line across the target
// from a mid-range standoff: pass 0 looks straight at the surface, later
// passes tilt/yaw about spread directions so the relative rotation axes stay
// non-parallel. Throws if the resulting orientation set fails the rank check.
std::vector<TrajectorySpec> plan_scan_trajectories(const TargetSpec& target,
                                                   const RigidTransform& target_pose,
                                                   const RigidTransform& hand_eye,
                                                   const SensorModel& sensor,
                                                   int num_clouds, int steps);

// Registers every record of a dataset against the model cloud after a
// rotation-only reconstruction with recon_rotation. Records run in parallel;
// per-record RNG substreams keep the output independent of scheduling.
std::vector<CalibObservation> register_dataset(const ScanDataset& dataset,
                                               const PointCloud& model,
                                               const RegistrationParams& params,
                                               const Rotation3& recon_rotation,
                                               std::uint64_t run_seed,
                                               std::vector<RegistrationResult>* registrations = nullptr);

struct CalibrationRun {
  CalibResult result;
  std::vector<RegistrationResult> registrations;
  Vec3 error = Vec3::Zero();  // signed estimate - ground truth, mm
};

CalibrationRun run_calibration_once(const ExperimentConfig& cfg, std::uint64_t run_seed);

struct RepetitionRow {
  std::uint64_t seed = 0;
  CalibResult result;
  Vec3 error = Vec3::Zero();
};

struct CalibrationReport {
  std::vector<RepetitionRow> repetitions;
};

// Full run: repetitions with derived seeds, artifacts under out_dir
// (result.json, registrations.json, per-cloud PLYs, report.csv).
CalibrationReport run_calibration(const ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir);

struct SweepRow {
  double value = 0.0;
  double dx = 0.0;  // mean |error| per axis over successful repetitions, mm
  double dy = 0.0;
  double dz = 0.0;
  double mean_error = 0.0;
  int failures = 0;
};

struct SweepReport {
  std::string variable;
  int repetitions = 0;
  std::vector<SweepRow> rows;
};

// Calibrates with the hand-eye rotation prior perturbed by the given angle
// about the given axis (sensor frame) while the simulator keeps the truth.
SweepReport run_rotation_perturbation_sweep(const ExperimentConfig& cfg,
                                            const std::vector<double>& angles_deg,
                                            const Vec3& axis = Vec3::UnitZ());

// Calibrates from the first k clouds of each dataset, k in counts. Counts
// below 3 are rejected with a rank-condition error.
SweepReport run_cloud_count_sweep(const ExperimentConfig& cfg,
                                  const std::vector<int>& counts);

void write_calibration_csv(const CalibrationReport& report,
                           const std::filesystem::path& path);
void write_sweep_csv(const SweepReport& report, const std::filesystem::path& path);
void print_calibration_table(std::ostream& os, const CalibrationReport& report);

}  // namespace scancalib
