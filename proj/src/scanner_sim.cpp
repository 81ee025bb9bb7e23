#include "scancalib/scanner_sim.hpp"

#include <cmath>
#include <fstream>
#include <optional>

#include "scancalib/json_io.hpp"

namespace scancalib {

namespace {

constexpr std::uint64_t kJitterTag = 0x6A69u;  // per-step pose jitter stream
constexpr std::uint64_t kRayTag = 0x7261u;     // per-step ray noise stream

// Moeller-Trumbore; returns the ray parameter t > 0 or nothing.
std::optional<double> ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a,
                                   const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-12) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = o - a;
  const double u = s.dot(p) * inv;
  if (u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < -1e-12 || u + v > 1.0 + 1e-12) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t <= 0.0) return std::nullopt;
  return t;
}

struct Hit {
  double range;
  double intensity;
};

// Target geometry resolved into the base frame once per dataset. Image
// targets live on the z = 1 mm plane of their own frame and carry the pixel
// intensity; meshes reflect with constant intensity 1.
class TargetRaycaster {
 public:
  TargetRaycaster(const TargetModel& target, const RigidTransform& target_pose)
      : to_target_(invert(target_pose)) {
    if (const TriMesh* mesh = std::get_if<TriMesh>(&target)) {
      validate_mesh(*mesh);
      tris_.reserve(mesh->triangles.size());
      for (const auto& t : mesh->triangles) {
        tris_.push_back({apply(target_pose, mesh->vertices[t[0]]),
                         apply(target_pose, mesh->vertices[t[1]]),
                         apply(target_pose, mesh->vertices[t[2]])});
      }
    } else {
      image_ = &std::get<GrayImage>(target);
    }
  }

  std::optional<Hit> first_hit(const Vec3& origin, const Vec3& dir) const {
    if (image_ != nullptr) {
      return image_hit(origin, dir);
    }
    std::optional<Hit> best;
    for (const auto& t : tris_) {
      if (auto hit = ray_triangle(origin, dir, t[0], t[1], t[2])) {
        if (!best || *hit < best->range) {
          best = Hit{*hit, 1.0};
        }
      }
    }
    return best;
  }

 private:
  std::optional<Hit> image_hit(const Vec3& origin, const Vec3& dir) const {
    const Vec3 o = apply(to_target_, origin);
    const Vec3 d = to_target_.rotation * dir;
    if (std::abs(d.z()) < 1e-12) return std::nullopt;
    const double t = (1.0 - o.z()) / d.z();
    if (t <= 0.0) return std::nullopt;
    const Vec3 hit = o + t * d;
    const double s = image_->mm_per_pixel();
    const long u = std::lround(hit.x() / s);
    const long v = std::lround(hit.y() / s);
    if (u < 0 || u >= image_->width || v < 0 || v >= image_->height) {
      return std::nullopt;
    }
    return Hit{t, image_->at(static_cast<int>(u), static_cast<int>(v))};
  }

  RigidTransform to_target_;
  std::vector<std::array<Vec3, 3>> tris_;
  const GrayImage* image_ = nullptr;
};

LaserProfile acquire_profile_impl(const TargetRaycaster& caster,
                                  const RigidTransform& ee_pose,
                                  const RigidTransform& hand_eye,
                                  const SensorModel& sensor,
                                  const RngStream& noise) {
  const RigidTransform sensor_pose = compose(ee_pose, hand_eye);
  const Vec3 x_dir = sensor_pose.rotation * Vec3::UnitX();
  const Vec3 z_dir = sensor_pose.rotation * Vec3::UnitZ();

  LaserProfile profile;
  const int n = sensor.samples_per_profile;
  for (int r = 0; r < n; ++r) {
    const double x = -sensor.fov_width / 2.0 + sensor.fov_width * r / (n - 1);
    const Vec3 origin = sensor_pose.translation + x * x_dir;
    const auto hit = caster.first_hit(origin, z_dir);
    if (!hit || hit->range < sensor.z_near || hit->range > sensor.z_far) {
      continue;
    }
    Rng rng = noise.substream(static_cast<std::uint64_t>(r)).rng();
    const double ex = rng.gaussian() * sensor.sigma_x;
    const double ez = rng.gaussian() * sensor.sigma_z;
    profile.points.push_back({Vec3(x + ex, 0.0, hit->range + ez), hit->intensity});
  }
  return profile;
}

}  // namespace

void validate_sensor(const SensorModel& sensor) {
  if (!(sensor.z_near < sensor.z_far)) {
    throw std::invalid_argument("sensor requires z_near < z_far");
  }
  if (sensor.samples_per_profile < 2) {
    throw std::invalid_argument("sensor requires samples_per_profile >= 2");
  }
  if (sensor.fov_width <= 0.0) {
    throw std::invalid_argument("sensor requires positive fov_width");
  }
  if (sensor.sigma_z < 0.0 || sensor.sigma_x < 0.0 || sensor.ee_jitter < 0.0) {
    throw std::invalid_argument("sensor noise magnitudes must be non-negative");
  }
}

Trajectory interpolate_trajectory(const Vec3& start, const Vec3& end, int n_steps,
                                  const Rotation3& ee_rotation) {
  if (n_steps < 1) {
    throw std::invalid_argument("trajectory needs at least one step");
  }
  Trajectory traj;
  traj.ee_rotation = ee_rotation;
  traj.ee_positions.reserve(static_cast<std::size_t>(n_steps) + 1);
  for (int r = 0; r <= n_steps; ++r) {
    if (r == 0) {
      traj.ee_positions.push_back(start);
    } else if (r == n_steps) {
      traj.ee_positions.push_back(end);
    } else {
      traj.ee_positions.push_back(start + (static_cast<double>(r) / n_steps) * (end - start));
    }
  }
  return traj;
}

LaserProfile acquire_profile(const ScanScene& scene, const RigidTransform& ee_pose,
                             const SensorModel& sensor, const RngStream& noise) {
  validate_sensor(sensor);
  const TargetRaycaster caster(scene.target, scene.target_pose);
  return acquire_profile_impl(caster, ee_pose, scene.hand_eye_true, sensor, noise);
}

ScanDataset acquire_dataset(const ScanScene& scene,
                            const std::vector<Trajectory>& trajectories,
                            const SensorModel& sensor, std::uint64_t seed) {
  if (trajectories.empty()) {
    throw std::invalid_argument("dataset acquisition needs at least one trajectory");
  }
  validate_sensor(sensor);
  const TargetRaycaster caster(scene.target, scene.target_pose);
  const RngStream root(seed);

  ScanDataset ds;
  ds.seed = seed;
  ds.sensor = sensor;
  ds.hand_eye_true = scene.hand_eye_true;
  ds.target_pose = scene.target_pose;
  ds.records.reserve(trajectories.size());
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& traj = trajectories[i];
    const RngStream traj_stream = root.substream(i);
    ScanRecord record;
    record.trajectory = traj;
    record.profiles.reserve(traj.ee_positions.size());
    for (std::size_t j = 0; j < traj.ee_positions.size(); ++j) {
      const RngStream step_stream = traj_stream.substream(j);
      Vec3 true_pos = traj.ee_positions[j];
      if (sensor.ee_jitter > 0.0) {
        Rng jit = step_stream.substream(kJitterTag).rng();
        for (int k = 0; k < 3; ++k) {
          true_pos[k] += jit.uniform(-sensor.ee_jitter, sensor.ee_jitter);
        }
      }
      // Scan from the true (jittered) pose; the commanded pose is what the
      // controller records and what reconstruction will use.
      const RigidTransform true_pose{traj.ee_rotation, true_pos};
      LaserProfile profile = acquire_profile_impl(
          caster, true_pose, scene.hand_eye_true, sensor, step_stream.substream(kRayTag));
      profile.sensor_pose_index = static_cast<int>(j);
      record.profiles.push_back(std::move(profile));
    }
    ds.records.push_back(std::move(record));
  }
  return ds;
}

namespace {

std::string profile_file_name(std::size_t record, std::size_t step) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "record_%02zu_profile_%04zu.ply", record, step);
  return buf;
}

}  // namespace

void save_dataset(const ScanDataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json manifest;
  manifest["seed"] = dataset.seed;
  manifest["sensor"] = json_of(dataset.sensor);
  manifest["hand_eye_true"] = json_of(dataset.hand_eye_true);
  manifest["target_pose"] = json_of(dataset.target_pose);
  manifest["scene_description"] = dataset.scene_description;
  Json records = Json::array();
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const ScanRecord& rec = dataset.records[i];
    Json jrec;
    Json poses = Json::array();
    Json files = Json::array();
    for (std::size_t j = 0; j < rec.trajectory.ee_positions.size(); ++j) {
      poses.push_back(json_of(RigidTransform{rec.trajectory.ee_rotation,
                                             rec.trajectory.ee_positions[j]}));
      const std::string name = profile_file_name(i, j);
      files.push_back(name);
      PointCloud pc;
      pc.frame = "S";
      pc.points = rec.profiles[j].points;
      save_cloud(pc, dir / name);
    }
    jrec["ee_poses"] = std::move(poses);
    jrec["profiles"] = std::move(files);
    records.push_back(std::move(jrec));
  }
  manifest["records"] = std::move(records);
  std::ofstream os(dir / "manifest.json");
  if (!os) {
    throw std::runtime_error("cannot write dataset manifest in '" + dir.string() + "'");
  }
  os << manifest.dump(2) << "\n";
}

ScanDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) {
    throw std::runtime_error("cannot open dataset manifest in '" + dir.string() + "'");
  }
  Json manifest = Json::parse(is);
  ScanDataset ds;
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.sensor = sensor_from_json(manifest.at("sensor"));
  ds.hand_eye_true = transform_from_json(manifest.at("hand_eye_true"));
  ds.target_pose = transform_from_json(manifest.at("target_pose"));
  ds.scene_description = manifest.value("scene_description", "");
  for (const Json& jrec : manifest.at("records")) {
    ScanRecord rec;
    const Json& poses = jrec.at("ee_poses");
    const Json& files = jrec.at("profiles");
    if (poses.size() != files.size()) {
      throw std::runtime_error("dataset record has mismatched pose/profile counts");
    }
    for (std::size_t j = 0; j < poses.size(); ++j) {
      const RigidTransform pose = transform_from_json(poses[j]);
      if (j == 0) {
        rec.trajectory.ee_rotation = pose.rotation;
      } else if (rotation_angle_between(rec.trajectory.ee_rotation, pose.rotation) > 1e-6) {
        throw AssumptionViolationError(
            "dataset record mixes end-effector orientations");
      }
      rec.trajectory.ee_positions.push_back(pose.translation);
      LaserProfile profile;
      profile.sensor_pose_index = static_cast<int>(j);
      profile.points = load_cloud(dir / files[j].get<std::string>()).points;
      rec.profiles.push_back(std::move(profile));
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace scancalib
