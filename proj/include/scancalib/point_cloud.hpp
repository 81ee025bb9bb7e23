#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scancalib/geometry.hpp"

namespace scancalib {

struct CloudPoint {
  Vec3 position = Vec3::Zero();            // millimeters
  std::optional<double> intensity;         // grayscale in [0, 1] when present
};

// One 2D slice measured by the sensor, expressed in the sensor frame.
// Profile points lie in the sensor plane (y = 0).
struct LaserProfile {
  std::vector<CloudPoint> points;
  int sensor_pose_index = 0;
};

inline constexpr double kProfilePlaneTol = 1e-9;

struct PointCloud {
  std::vector<CloudPoint> points;
  std::string frame = "B";

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Maps every point by h and relabels the frame. Intensities are preserved.
PointCloud transform_cloud(const RigidTransform& h, const PointCloud& cloud,
                           std::string new_frame);

// Multiset union. All inputs must share one frame label; requires at least
// one input cloud (the frame of an empty union would be undefined).
PointCloud merge_clouds(const std::vector<PointCloud>& clouds);

// ASCII PLY with x/y/z/intensity properties and the frame label stored as a
// "comment frame <label>" line. Absent intensity is written as 0.
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                const std::vector<std::string>& extra_comments = {});

PointCloud load_cloud(const std::filesystem::path& path);

// Full load including the non-frame comment lines (used by consumers that
// store extra metadata in comments).
struct PlyContents {
  PointCloud cloud;
  std::vector<std::string> comments;  // without the leading "comment "
};

PlyContents load_ply(const std::filesystem::path& path);

}  // namespace scancalib
