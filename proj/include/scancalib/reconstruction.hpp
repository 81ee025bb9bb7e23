#pragma once

#include <filesystem>
#include <vector>

#include "scancalib/scanner_sim.hpp"

namespace scancalib {

// Orientation drift allowed between the end-effector poses of one record.
inline constexpr double kOrientationDriftTol = 1e-6;  // rad

enum class ReconMode {
  true_hand_eye,  // full hand-eye transform applied
  rotation_only,  // hand-eye rotation with zero translation
};

struct ReconstructedCloud {
  PointCloud cloud;        // frame "B"
  Rotation3 ee_rotation;   // shared end-effector orientation of the record
  ReconMode mode = ReconMode::rotation_only;
};

// Union of the profiles mapped through (ee pose) * (hand-eye). Poses must
// share one orientation within kOrientationDriftTol.
ReconstructedCloud reconstruct_true(const std::vector<LaserProfile>& profiles,
                                    const std::vector<RigidTransform>& ee_poses,
                                    const RigidTransform& hand_eye);

// Same union but with the hand-eye translation replaced by zero, which only
// needs the (known) hand-eye rotation. The result is the true cloud shifted
// by -(ee rotation) * (hand-eye translation).
ReconstructedCloud reconstruct_rotation_only(const std::vector<LaserProfile>& profiles,
                                             const std::vector<RigidTransform>& ee_poses,
                                             const Rotation3& hand_eye_rotation);

std::vector<RigidTransform> trajectory_poses(const Trajectory& trajectory);

ReconstructedCloud reconstruct_record(const ScanRecord& record,
                                      const RigidTransform& hand_eye, ReconMode mode);

// PLY with "mode" and "ee_rotation" comment lines.
void save_reconstructed(const ReconstructedCloud& recon,
                        const std::filesystem::path& path);
ReconstructedCloud load_reconstructed(const std::filesystem::path& path);

}  // namespace scancalib
