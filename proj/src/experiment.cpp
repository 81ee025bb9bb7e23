#include "scancalib/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <thread>

#include "scancalib/reconstruction.hpp"

namespace scancalib {

namespace {

constexpr std::uint64_t kRegistrationTag = 0x5247u;
constexpr std::uint64_t kRepetitionTag = 0x5250u;

constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const unsigned hw = std::thread::hardware_concurrency();
  const std::size_t workers = std::min<std::size_t>(n, hw == 0 ? 1 : hw);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (err) std::rethrow_exception(err);
}

struct Box3 {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  Vec3 center() const { return 0.5 * (lo + hi); }
  double diagonal() const { return (hi - lo).norm(); }
};

Box3 target_bounds(const TargetModel& target) {
  Box3 box;
  if (const TriMesh* mesh = std::get_if<TriMesh>(&target)) {
    box.lo = box.hi = mesh->vertices.front();
    for (const Vec3& v : mesh->vertices) {
      box.lo = box.lo.cwiseMin(v);
      box.hi = box.hi.cwiseMax(v);
    }
  } else {
    const GrayImage& img = std::get<GrayImage>(target);
    const double s = img.mm_per_pixel();
    box.lo = Vec3(0.0, 0.0, 1.0);
    box.hi = Vec3((img.width - 1) * s, (img.height - 1) * s, 1.0);
  }
  return box;
}

}  // namespace

TargetModel make_target(const TargetSpec& spec) {
  switch (spec.kind) {
    case TargetSpec::Kind::step_block:
      return make_step_block(spec.base_w, spec.base_h, spec.steps, spec.step_height);
    case TargetSpec::Kind::wedge:
      return make_wedge(spec.length, spec.width, spec.slope);
    case TargetSpec::Kind::flat_logo:
      return make_flat_logo(spec.image_w, spec.image_h, spec.dpi);
    case TargetSpec::Kind::mesh_file:
      return load_mesh_off(spec.path);
    case TargetSpec::Kind::image_file:
      return load_image_pgm(spec.path);
  }
  throw std::invalid_argument("unknown target kind");
}

std::string describe_target(const TargetSpec& spec) {
  char buf[160];
  switch (spec.kind) {
    case TargetSpec::Kind::step_block:
      std::snprintf(buf, sizeof(buf), "step_block %gx%g mm, %d steps x %g mm",
                    spec.base_w, spec.base_h, spec.steps, spec.step_height);
      break;
    case TargetSpec::Kind::wedge:
      std::snprintf(buf, sizeof(buf), "wedge %gx%g mm, slope %g", spec.length,
                    spec.width, spec.slope);
      break;
    case TargetSpec::Kind::flat_logo:
      std::snprintf(buf, sizeof(buf), "flat_logo %dx%d px at %g dpi", spec.image_w,
                    spec.image_h, spec.dpi);
      break;
    case TargetSpec::Kind::mesh_file:
      std::snprintf(buf, sizeof(buf), "mesh %s", spec.path.c_str());
      break;
    case TargetSpec::Kind::image_file:
      std::snprintf(buf, sizeof(buf), "image %s", spec.path.c_str());
      break;
  }
  return buf;
}

namespace {

TargetSpec target_spec_from_json(const Json& j) {
  TargetSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "step_block") {
    spec.kind = TargetSpec::Kind::step_block;
    spec.base_w = j.value("base_width", spec.base_w);
    spec.base_h = j.value("base_height", spec.base_h);
    spec.steps = j.value("steps", spec.steps);
    spec.step_height = j.value("step_height", spec.step_height);
  } else if (kind == "wedge") {
    spec.kind = TargetSpec::Kind::wedge;
    spec.length = j.value("length", spec.length);
    spec.width = j.value("width", spec.width);
    spec.slope = j.value("slope", spec.slope);
  } else if (kind == "flat_logo") {
    spec.kind = TargetSpec::Kind::flat_logo;
    spec.image_w = j.value("width", spec.image_w);
    spec.image_h = j.value("height", spec.image_h);
    spec.dpi = j.value("dpi", spec.dpi);
  } else if (kind == "mesh_file") {
    spec.kind = TargetSpec::Kind::mesh_file;
    spec.path = j.at("path").get<std::string>();
  } else if (kind == "image_file") {
    spec.kind = TargetSpec::Kind::image_file;
    spec.path = j.at("path").get<std::string>();
  } else {
    throw std::invalid_argument("unknown target kind '" + kind + "'");
  }
  return spec;
}

Json json_of(const TargetSpec& spec) {
  switch (spec.kind) {
    case TargetSpec::Kind::step_block:
      return Json{{"kind", "step_block"},
                  {"base_width", spec.base_w},
                  {"base_height", spec.base_h},
                  {"steps", spec.steps},
                  {"step_height", spec.step_height}};
    case TargetSpec::Kind::wedge:
      return Json{{"kind", "wedge"},
                  {"length", spec.length},
                  {"width", spec.width},
                  {"slope", spec.slope}};
    case TargetSpec::Kind::flat_logo:
      return Json{{"kind", "flat_logo"},
                  {"width", spec.image_w},
                  {"height", spec.image_h},
                  {"dpi", spec.dpi}};
    case TargetSpec::Kind::mesh_file:
      return Json{{"kind", "mesh_file"}, {"path", spec.path}};
    case TargetSpec::Kind::image_file:
      return Json{{"kind", "image_file"}, {"path", spec.path}};
  }
  throw std::invalid_argument("unknown target kind");
}

}  // namespace

Json json_of(const RegistrationParams& p) {
  return Json{{"intensity_threshold", p.intensity_threshold},
              {"sor_k", p.sor_k},
              {"sor_stddev_mult", p.sor_stddev_mult},
              {"coarse", p.coarse == CoarseMode::pca_centroid ? "pca_centroid"
                                                              : "ransac_points"},
              {"icp_max_iters", p.icp_max_iters},
              {"icp_tol", p.icp_tol},
              {"icp_max_corr_dist", p.icp_max_corr_dist},
              {"ransac_iters", p.ransac_iters},
              {"ransac_inlier_dist", p.ransac_inlier_dist}};
}

RegistrationParams registration_params_from_json(const Json& j) {
  RegistrationParams p;
  p.intensity_threshold = j.value("intensity_threshold", p.intensity_threshold);
  p.sor_k = j.value("sor_k", p.sor_k);
  p.sor_stddev_mult = j.value("sor_stddev_mult", p.sor_stddev_mult);
  if (j.contains("coarse")) {
    const std::string mode = j.at("coarse").get<std::string>();
    if (mode == "pca_centroid") {
      p.coarse = CoarseMode::pca_centroid;
    } else if (mode == "ransac_points") {
      p.coarse = CoarseMode::ransac_points;
    } else {
      throw std::invalid_argument("unknown coarse mode '" + mode + "'");
    }
  }
  p.icp_max_iters = j.value("icp_max_iters", p.icp_max_iters);
  p.icp_tol = j.value("icp_tol", p.icp_tol);
  p.icp_max_corr_dist = j.value("icp_max_corr_dist", p.icp_max_corr_dist);
  p.ransac_iters = j.value("ransac_iters", p.ransac_iters);
  p.ransac_inlier_dist = j.value("ransac_inlier_dist", p.ransac_inlier_dist);
  return p;
}

Json json_of(const RegistrationResult& r) {
  return Json{{"transform", json_of(r.transform)},
              {"rms_error", r.rms_error},
              {"inlier_fraction", r.inlier_fraction},
              {"iterations_used", r.iterations_used},
              {"converged", r.converged}};
}

Json json_of(const CalibResult& r) {
  return Json{{"hand_eye_translation", json_of(r.hand_eye_translation)},
              {"target_origin", json_of(r.target_origin)},
              {"residual_norm", r.residual_norm},
              {"per_observation_residuals", r.per_observation_residuals},
              {"condition_number", r.condition_number}};
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.repetitions = j.value("repetitions", cfg.repetitions);
  if (cfg.repetitions < 1) {
    throw std::invalid_argument("repetitions must be >= 1");
  }
  if (j.contains("target")) cfg.target = target_spec_from_json(j.at("target"));
  if (j.contains("target_pose")) cfg.target_pose = transform_from_json(j.at("target_pose"));
  if (j.contains("hand_eye")) cfg.hand_eye = transform_from_json(j.at("hand_eye"));
  if (j.contains("sensor")) cfg.sensor = sensor_from_json(j.at("sensor"));
  if (j.contains("model_cloud")) {
    const Json& mc = j.at("model_cloud");
    cfg.model_samples_per_mm2 = mc.value("samples_per_mm2", cfg.model_samples_per_mm2);
    cfg.model_intensity_min = mc.value("intensity_min", cfg.model_intensity_min);
  }
  if (j.contains("registration")) {
    cfg.registration = registration_params_from_json(j.at("registration"));
  }
  if (j.contains("trajectories")) {
    for (const Json& jt : j.at("trajectories")) {
      TrajectorySpec t;
      t.start = vec3_from_json(jt.at("start"));
      t.end = vec3_from_json(jt.at("end"));
      t.steps = jt.at("steps").get<int>();
      t.ee_rotation = rotation_from_json(jt.at("ee_rotation"));
      cfg.trajectories.push_back(t);
    }
  }
  if (cfg.trajectories.empty()) {
    throw std::invalid_argument("config needs at least one trajectory");
  }
  return cfg;
}

Json json_of(const ExperimentConfig& cfg) {
  Json j;
  j["seed"] = cfg.seed;
  j["repetitions"] = cfg.repetitions;
  j["target"] = json_of(cfg.target);
  j["target_pose"] = json_of(cfg.target_pose);
  j["hand_eye"] = json_of(cfg.hand_eye);
  j["sensor"] = json_of(cfg.sensor);
  j["model_cloud"] = Json{{"samples_per_mm2", cfg.model_samples_per_mm2},
                          {"intensity_min", cfg.model_intensity_min}};
  j["registration"] = json_of(cfg.registration);
  Json jt = Json::array();
  for (const TrajectorySpec& t : cfg.trajectories) {
    jt.push_back(Json{{"start", json_of(t.start)},
                      {"end", json_of(t.end)},
                      {"steps", t.steps},
                      {"ee_rotation", json_of(t.ee_rotation)}});
  }
  j["trajectories"] = std::move(jt);
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot open config '" + path.string() + "'");
  }
  return config_from_json(Json::parse(is));
}

std::vector<TrajectorySpec> plan_scan_trajectories(const TargetSpec& target,
                                                   const RigidTransform& target_pose,
                                                   const RigidTransform& hand_eye,
                                                   const SensorModel& sensor,
                                                   int num_clouds, int steps) {
  if (num_clouds < 1) {
    throw std::invalid_argument("need at least one scan pass");
  }
  validate_sensor(sensor);
  const TargetModel model = make_target(target);
  const Box3 box = target_bounds(model);
  const Vec3 center_b = apply(target_pose, box.center());
  const Vec3 normal = target_pose.rotation * Vec3::UnitZ();
  const Vec3 aim = -normal;  // look against the target surface normal
  Vec3 u0 = target_pose.rotation * Vec3::UnitX();
  u0 = (u0 - u0.dot(aim) * aim).normalized();
  const Vec3 w0 = aim.cross(u0);

  const double standoff = 0.5 * (sensor.z_near + sensor.z_far);
  const double cover = box.diagonal() + 16.0;
  constexpr double kGolden = 2.399963229728653;

  std::vector<TrajectorySpec> plan;
  std::vector<Rotation3> ee_rotations;
  plan.reserve(static_cast<std::size_t>(num_clouds));
  for (int i = 0; i < num_clouds; ++i) {
    Rotation3 tilt;  // identity for the first pass
    if (i > 0) {
      const double phi = kGolden * i;
      const Vec3 tilt_axis = std::cos(phi) * u0 + std::sin(phi) * w0;
      const double tilt_angle = deg2rad(10.0 + 4.0 * ((i - 1) % 3));
      const double yaw = deg2rad(i % 2 == 0 ? 25.0 : -25.0);
      tilt = rot_from_axis_angle(UnitAxis::normalized(tilt_axis), tilt_angle) *
             rot_from_axis_angle(UnitAxis::normalized(aim), yaw);
    }
    Eigen::Matrix3d base;
    base.col(0) = u0;
    base.col(1) = aim.cross(u0);
    base.col(2) = aim;
    const Rotation3 sensor_rot = tilt * Rotation3::from_matrix(base);
    const Rotation3 ee_rot = sensor_rot * hand_eye.rotation.transposed();

    const Vec3 dir = sensor_rot * Vec3::UnitZ();
    Vec3 sweep = sensor_rot * Vec3::UnitY();
    sweep -= sweep.dot(normal) * normal;
    if (sweep.norm() < 1e-6) {
      sweep = w0;
    }
    sweep.normalize();

    const Vec3 sensor_start = center_b - 0.5 * cover * sweep - standoff * dir;
    const Vec3 sensor_end = center_b + 0.5 * cover * sweep - standoff * dir;

    TrajectorySpec spec;
    spec.steps = steps;
    spec.ee_rotation = ee_rot;
    spec.start = sensor_start - ee_rot * hand_eye.translation;
    spec.end = sensor_end - ee_rot * hand_eye.translation;
    plan.push_back(spec);
    ee_rotations.push_back(ee_rot);
  }

  if (num_clouds >= 3) {
    const RankDiagnosis diag = check_rank_conditions(ee_rotations);
    if (diag.verdict != RankVerdict::ok) {
      throw std::logic_error("planned orientations fail the rank conditions: " +
                             to_string(diag.verdict));
    }
  }
  return plan;
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.seed = 1;
  cfg.repetitions = 1;
  cfg.target.kind = TargetSpec::Kind::step_block;
  cfg.target.base_w = 80.0;
  cfg.target.base_h = 80.0;
  cfg.target.steps = 3;
  cfg.target.step_height = 10.0;
  cfg.target_pose = {rot_from_axis_angle(Vec3(0, 0, 1), deg2rad(20.0)),
                     Vec3(420.0, 160.0, 25.0)};
  // Fixture hand-eye: sensor hangs off the flange looking back along -x/-z.
  Eigen::Matrix3d r;
  r << 0.0, 0.0, -1.0,
       0.0, -1.0, 0.0,
       -1.0, 0.0, 0.0;
  cfg.hand_eye = {Rotation3::from_matrix(r), Vec3(907.5, 97.0, 40.0)};
  cfg.sensor = SensorModel{};
  cfg.model_samples_per_mm2 = 2.0;
  cfg.model_intensity_min = 0.5;
  cfg.trajectories = plan_scan_trajectories(cfg.target, cfg.target_pose, cfg.hand_eye,
                                            cfg.sensor, 10, 60);
  return cfg;
}

ScanScene make_scene(const ExperimentConfig& cfg) {
  return {make_target(cfg.target), cfg.target_pose, cfg.hand_eye};
}

PointCloud make_model_cloud(const ExperimentConfig& cfg) {
  const TargetModel target = make_target(cfg.target);
  if (const TriMesh* mesh = std::get_if<TriMesh>(&target)) {
    return mesh_to_model_cloud(*mesh, cfg.model_samples_per_mm2, cfg.seed);
  }
  return image_to_model_cloud(std::get<GrayImage>(target), cfg.model_intensity_min);
}

std::vector<Trajectory> make_trajectories(const ExperimentConfig& cfg) {
  std::vector<Trajectory> out;
  out.reserve(cfg.trajectories.size());
  for (const TrajectorySpec& t : cfg.trajectories) {
    out.push_back(interpolate_trajectory(t.start, t.end, t.steps, t.ee_rotation));
  }
  return out;
}

ScanDataset simulate_dataset(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  ScanDataset ds =
      acquire_dataset(make_scene(cfg), make_trajectories(cfg), cfg.sensor, run_seed);
  ds.scene_description = describe_target(cfg.target);
  return ds;
}

std::vector<CalibObservation> register_dataset(const ScanDataset& dataset,
                                               const PointCloud& model,
                                               const RegistrationParams& params,
                                               const Rotation3& recon_rotation,
                                               std::uint64_t run_seed,
                                               std::vector<RegistrationResult>* registrations) {
  const std::size_t n = dataset.records.size();
  std::vector<CalibObservation> observations(n);
  std::vector<RegistrationResult> regs(n);
  const RngStream root = RngStream(run_seed).substream(kRegistrationTag);
  parallel_for(n, [&](std::size_t i) {
    const ScanRecord& record = dataset.records[i];
    const ReconstructedCloud recon = reconstruct_rotation_only(
        record.profiles, trajectory_poses(record.trajectory), recon_rotation);
    Rng rng = root.substream(i).rng();
    regs[i] = localize_target(recon, model, params, rng);
    observations[i] = {regs[i].transform.translation, record.trajectory.ee_rotation};
  });
  if (registrations != nullptr) {
    *registrations = std::move(regs);
  }
  return observations;
}

CalibrationRun run_calibration_once(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  const ScanDataset ds = simulate_dataset(cfg, run_seed);
  const PointCloud model = make_model_cloud(cfg);
  CalibrationRun run;
  const auto observations = register_dataset(ds, model, cfg.registration,
                                             cfg.hand_eye.rotation, run_seed,
                                             &run.registrations);
  run.result = calibrate(observations);
  run.error = run.result.hand_eye_translation - cfg.hand_eye.translation;
  return run;
}

namespace {

void append_row(std::string& out, const char* label, const double* cols, int n) {
  char buf[64];
  out += label;
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), ",%.6f", cols[i]);
    out += buf;
  }
  out += "\n";
}

}  // namespace

void write_calibration_csv(const CalibrationReport& report,
                           const std::filesystem::path& path) {
  std::string out = "dataset,x,y,z,dx,dy,dz\n";
  const std::size_t n = report.repetitions.size();
  double sums[6] = {0, 0, 0, 0, 0, 0};
  double sq[6] = {0, 0, 0, 0, 0, 0};
  for (std::size_t r = 0; r < n; ++r) {
    const RepetitionRow& row = report.repetitions[r];
    const double cols[6] = {row.result.hand_eye_translation.x(),
                            row.result.hand_eye_translation.y(),
                            row.result.hand_eye_translation.z(),
                            std::abs(row.error.x()),
                            std::abs(row.error.y()),
                            std::abs(row.error.z())};
    for (int i = 0; i < 6; ++i) {
      sums[i] += cols[i];
      sq[i] += cols[i] * cols[i];
    }
    append_row(out, std::to_string(r + 1).c_str(), cols, 6);
  }
  double mean[6], sd[6];
  for (int i = 0; i < 6; ++i) {
    mean[i] = n > 0 ? sums[i] / static_cast<double>(n) : 0.0;
    sd[i] = n > 1 ? std::sqrt(std::max(0.0, (sq[i] - static_cast<double>(n) * mean[i] * mean[i]) /
                                                 static_cast<double>(n - 1)))
                  : 0.0;
  }
  append_row(out, "mean", mean, 6);
  append_row(out, "sd", sd, 6);

  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  os << out;
}

CalibrationReport run_calibration(const ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const PointCloud model = make_model_cloud(cfg);
  CalibrationReport report;
  for (int r = 0; r < cfg.repetitions; ++r) {
    const std::uint64_t seed_r =
        derive_seed(cfg.seed, kRepetitionTag + static_cast<std::uint64_t>(r));
    const ScanDataset ds = simulate_dataset(cfg, seed_r);
    std::vector<RegistrationResult> regs;
    const auto observations = register_dataset(ds, model, cfg.registration,
                                               cfg.hand_eye.rotation, seed_r, &regs);
    RepetitionRow row;
    row.seed = seed_r;
    row.result = calibrate(observations);
    row.error = row.result.hand_eye_translation - cfg.hand_eye.translation;
    report.repetitions.push_back(row);

    if (r == 0) {
      const std::filesystem::path clouds_dir = out_dir / "clouds";
      std::filesystem::create_directories(clouds_dir);
      for (std::size_t i = 0; i < ds.records.size(); ++i) {
        char name[48];
        std::snprintf(name, sizeof(name), "cloud_%02zu.ply", i);
        save_reconstructed(reconstruct_record(ds.records[i], cfg.hand_eye,
                                              ReconMode::rotation_only),
                           clouds_dir / name);
      }
      Json jregs = Json::array();
      for (const RegistrationResult& reg : regs) {
        jregs.push_back(json_of(reg));
      }
      std::ofstream(out_dir / "registrations.json") << jregs.dump(2) << "\n";
      Json jres = json_of(row.result);
      jres["seed"] = seed_r;
      jres["ground_truth_hand_eye"] = json_of(cfg.hand_eye);
      jres["error"] = json_of(row.error);
      std::ofstream(out_dir / "result.json") << jres.dump(2) << "\n";
    }
  }
  write_calibration_csv(report, out_dir / "report.csv");
  return report;
}

namespace {

struct SweepAccumulator {
  Vec3 abs_sum = Vec3::Zero();
  int successes = 0;
  int failures = 0;

  void add(const Vec3& error) {
    abs_sum += error.cwiseAbs();
    ++successes;
  }

  SweepRow finish(double value) const {
    SweepRow row;
    row.value = value;
    row.failures = failures;
    if (successes > 0) {
      const Vec3 mean = abs_sum / successes;
      row.dx = mean.x();
      row.dy = mean.y();
      row.dz = mean.z();
      row.mean_error = (mean.x() + mean.y() + mean.z()) / 3.0;
    } else {
      row.dx = row.dy = row.dz = row.mean_error =
          std::numeric_limits<double>::quiet_NaN();
    }
    return row;
  }
};

}  // namespace

SweepReport run_rotation_perturbation_sweep(const ExperimentConfig& cfg,
                                            const std::vector<double>& angles_deg,
                                            const Vec3& axis) {
  SweepReport report;
  report.variable = "perturbation_deg";
  report.repetitions = cfg.repetitions;
  const PointCloud model = make_model_cloud(cfg);
  const UnitAxis perturb_axis = UnitAxis::normalized(axis);
  std::vector<SweepAccumulator> acc(angles_deg.size());
  for (int r = 0; r < cfg.repetitions; ++r) {
    const std::uint64_t seed_r =
        derive_seed(cfg.seed, kRepetitionTag + static_cast<std::uint64_t>(r));
    const ScanDataset ds = simulate_dataset(cfg, seed_r);
    for (std::size_t a = 0; a < angles_deg.size(); ++a) {
      const Rotation3 recon_rotation =
          cfg.hand_eye.rotation *
          rot_from_axis_angle(perturb_axis, deg2rad(angles_deg[a]));
      try {
        const auto observations = register_dataset(ds, model, cfg.registration,
                                                   recon_rotation, seed_r);
        const CalibResult result = calibrate(observations);
        acc[a].add(result.hand_eye_translation - cfg.hand_eye.translation);
      } catch (const std::exception&) {
        ++acc[a].failures;
      }
    }
  }
  for (std::size_t a = 0; a < angles_deg.size(); ++a) {
    report.rows.push_back(acc[a].finish(angles_deg[a]));
  }
  return report;
}

SweepReport run_cloud_count_sweep(const ExperimentConfig& cfg,
                                  const std::vector<int>& counts) {
  const int m = static_cast<int>(cfg.trajectories.size());
  for (int k : counts) {
    if (k < 3) {
      RankDiagnosis diag;
      diag.verdict = RankVerdict::too_few_clouds;
      diag.numeric_rank = 3 * std::max(k, 0);
      diag.min_relative_axis_angle = std::numeric_limits<double>::quiet_NaN();
      throw SingularSystemError("cloud-count sweep requires at least 3 clouds, got " +
                                    std::to_string(k),
                                diag);
    }
    if (k > m) {
      throw std::invalid_argument("cloud count " + std::to_string(k) +
                                  " exceeds the " + std::to_string(m) +
                                  " configured trajectories");
    }
  }
  SweepReport report;
  report.variable = "cloud_count";
  report.repetitions = cfg.repetitions;
  const PointCloud model = make_model_cloud(cfg);
  std::vector<SweepAccumulator> acc(counts.size());
  for (int r = 0; r < cfg.repetitions; ++r) {
    const std::uint64_t seed_r =
        derive_seed(cfg.seed, kRepetitionTag + static_cast<std::uint64_t>(r));
    const ScanDataset ds = simulate_dataset(cfg, seed_r);
    std::vector<CalibObservation> observations;
    bool registered = false;
    try {
      observations = register_dataset(ds, model, cfg.registration,
                                      cfg.hand_eye.rotation, seed_r);
      registered = true;
    } catch (const std::exception&) {
      for (auto& a : acc) ++a.failures;
    }
    if (!registered) continue;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      try {
        const std::vector<CalibObservation> subset(
            observations.begin(), observations.begin() + counts[c]);
        const CalibResult result = calibrate(subset);
        acc[c].add(result.hand_eye_translation - cfg.hand_eye.translation);
      } catch (const std::exception&) {
        ++acc[c].failures;
      }
    }
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    report.rows.push_back(acc[c].finish(static_cast<double>(counts[c])));
  }
  return report;
}

void write_sweep_csv(const SweepReport& report, const std::filesystem::path& path) {
  std::string out = "value,dx,dy,dz,mean_error,status\n";
  char buf[192];
  for (const SweepRow& row : report.rows) {
    const char* status = row.failures == 0 ? "ok" : "failed";
    if (row.failures == 0) {
      std::snprintf(buf, sizeof(buf), "%g,%.6f,%.6f,%.6f,%.6f,%s\n", row.value, row.dx,
                    row.dy, row.dz, row.mean_error, status);
    } else {
      std::snprintf(buf, sizeof(buf), "%g,%.6f,%.6f,%.6f,%.6f,%s=%d/%d\n", row.value,
                    row.dx, row.dy, row.dz, row.mean_error, status, row.failures,
                    report.repetitions);
    }
    out += buf;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  os << out;
}

void print_calibration_table(std::ostream& os, const CalibrationReport& report) {
  char buf[192];
  os << "dataset          x          y          z         dx         dy         dz\n";
  Vec3 mean_err = Vec3::Zero();
  for (std::size_t r = 0; r < report.repetitions.size(); ++r) {
    const RepetitionRow& row = report.repetitions[r];
    std::snprintf(buf, sizeof(buf), "%7zu %10.3f %10.3f %10.3f %10.3f %10.3f %10.3f\n",
                  r + 1, row.result.hand_eye_translation.x(),
                  row.result.hand_eye_translation.y(),
                  row.result.hand_eye_translation.z(), std::abs(row.error.x()),
                  std::abs(row.error.y()), std::abs(row.error.z()));
    os << buf;
    mean_err += row.error.cwiseAbs();
  }
  if (!report.repetitions.empty()) {
    mean_err /= static_cast<double>(report.repetitions.size());
    std::snprintf(buf, sizeof(buf), "mean per-axis error: %.3f %.3f %.3f mm\n",
                  mean_err.x(), mean_err.y(), mean_err.z());
    os << buf;
  }
}

}  // namespace scancalib
