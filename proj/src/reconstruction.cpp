#include "scancalib/reconstruction.hpp"

#include <cstdio>
#include <sstream>

namespace scancalib {

namespace {

ReconstructedCloud reconstruct_impl(const std::vector<LaserProfile>& profiles,
                                    const std::vector<RigidTransform>& ee_poses,
                                    const RigidTransform& hand_eye, ReconMode mode) {
  if (profiles.size() != ee_poses.size()) {
    throw std::invalid_argument("profile count does not match pose count");
  }
  ReconstructedCloud out;
  out.mode = mode;
  out.cloud.frame = "B";
  if (profiles.empty()) {
    return out;
  }
  out.ee_rotation = ee_poses.front().rotation;
  for (const RigidTransform& pose : ee_poses) {
    if (rotation_angle_between(out.ee_rotation, pose.rotation) > kOrientationDriftTol) {
      throw AssumptionViolationError(
          "end-effector orientation changes within one record");
    }
  }
  std::size_t total = 0;
  for (const LaserProfile& p : profiles) total += p.points.size();
  out.cloud.points.reserve(total);
  for (std::size_t j = 0; j < profiles.size(); ++j) {
    const RigidTransform sensor_pose = compose(ee_poses[j], hand_eye);
    for (const CloudPoint& p : profiles[j].points) {
      if (std::abs(p.position.y()) >= kProfilePlaneTol) {
        throw std::invalid_argument("profile point lies outside the sensor plane");
      }
      out.cloud.points.push_back({apply(sensor_pose, p.position), p.intensity});
    }
  }
  return out;
}

}  // namespace

ReconstructedCloud reconstruct_true(const std::vector<LaserProfile>& profiles,
                                    const std::vector<RigidTransform>& ee_poses,
                                    const RigidTransform& hand_eye) {
  return reconstruct_impl(profiles, ee_poses, hand_eye, ReconMode::true_hand_eye);
}

ReconstructedCloud reconstruct_rotation_only(const std::vector<LaserProfile>& profiles,
                                             const std::vector<RigidTransform>& ee_poses,
                                             const Rotation3& hand_eye_rotation) {
  return reconstruct_impl(profiles, ee_poses,
                          RigidTransform::from_rotation(hand_eye_rotation),
                          ReconMode::rotation_only);
}

std::vector<RigidTransform> trajectory_poses(const Trajectory& trajectory) {
  std::vector<RigidTransform> poses;
  poses.reserve(trajectory.ee_positions.size());
  for (const Vec3& p : trajectory.ee_positions) {
    poses.push_back({trajectory.ee_rotation, p});
  }
  return poses;
}

ReconstructedCloud reconstruct_record(const ScanRecord& record,
                                      const RigidTransform& hand_eye, ReconMode mode) {
  const auto poses = trajectory_poses(record.trajectory);
  if (mode == ReconMode::true_hand_eye) {
    return reconstruct_true(record.profiles, poses, hand_eye);
  }
  return reconstruct_rotation_only(record.profiles, poses, hand_eye.rotation);
}

void save_reconstructed(const ReconstructedCloud& recon,
                        const std::filesystem::path& path) {
  std::vector<std::string> comments;
  comments.push_back(std::string("mode ") + (recon.mode == ReconMode::true_hand_eye
                                                 ? "true_hand_eye"
                                                 : "rotation_only"));
  const Eigen::Matrix3d& m = recon.ee_rotation.matrix();
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "ee_rotation %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g",
                m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0),
                m(2, 1), m(2, 2));
  comments.emplace_back(buf);
  save_cloud(recon.cloud, path, comments);
}

ReconstructedCloud load_reconstructed(const std::filesystem::path& path) {
  PlyContents ply = load_ply(path);
  ReconstructedCloud out;
  out.cloud = std::move(ply.cloud);
  bool have_mode = false, have_rotation = false;
  for (const std::string& c : ply.comments) {
    std::istringstream cs(c);
    std::string key;
    cs >> key;
    if (key == "mode") {
      std::string mode;
      cs >> mode;
      if (mode == "true_hand_eye") {
        out.mode = ReconMode::true_hand_eye;
      } else if (mode == "rotation_only") {
        out.mode = ReconMode::rotation_only;
      } else {
        throw std::runtime_error("unknown reconstruction mode '" + mode + "'");
      }
      have_mode = true;
    } else if (key == "ee_rotation") {
      Eigen::Matrix3d m;
      for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
          cs >> m(i, k);
        }
      }
      if (cs.fail()) {
        throw std::runtime_error("malformed ee_rotation comment");
      }
      out.ee_rotation = Rotation3::from_matrix(m);
      have_rotation = true;
    }
  }
  if (!have_mode || !have_rotation) {
    throw std::runtime_error("reconstructed cloud is missing mode/ee_rotation comments");
  }
  return out;
}

}  // namespace scancalib
