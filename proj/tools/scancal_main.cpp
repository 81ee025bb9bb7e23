#include "CLI11.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "scancalib/experiment.hpp"
#include "scancalib/reconstruction.hpp"

namespace {

using namespace scancalib;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int repetitions = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "Experiment config JSON (omit for the built-in default scene)");
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--seed", opts.seed, "Override the config seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--repetitions", opts.repetitions,
                  "Override the config repetition count");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg = opts.config_path.empty() ? default_experiment_config()
                                                  : load_config(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.repetitions > 0) cfg.repetitions = opts.repetitions;
  return cfg;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  for (double v : parse_double_list(csv)) out.push_back(static_cast<int>(v));
  return out;
}

int cmd_simulate(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const std::filesystem::path out(opts.out_dir);
  std::filesystem::create_directories(out);
  const ScanDataset ds = simulate_dataset(cfg, cfg.seed);
  save_dataset(ds, out / "dataset");
  save_cloud(make_model_cloud(cfg), out / "model_cloud.ply");
  std::ofstream(out / "config.json") << json_of(cfg).dump(2) << "\n";
  std::size_t points = 0;
  for (const auto& rec : ds.records) {
    for (const auto& prof : rec.profiles) points += prof.points.size();
  }
  std::cout << "simulated " << ds.records.size() << " clouds ("
            << points << " points) into " << (out / "dataset").string() << "\n";
  return 0;
}

int cmd_reconstruct(const std::string& dataset_dir, const CommonOpts& opts,
                    const std::string& mode_name) {
  const std::filesystem::path out(opts.out_dir);
  std::filesystem::create_directories(out);
  const ScanDataset ds = load_dataset(dataset_dir);
  const ReconMode mode = mode_name == "true_hand_eye" ? ReconMode::true_hand_eye
                                                      : ReconMode::rotation_only;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof(name), "cloud_%02zu.ply", i);
    save_reconstructed(reconstruct_record(ds.records[i], ds.hand_eye_true, mode),
                       out / name);
  }
  std::cout << "reconstructed " << ds.records.size() << " clouds (" << mode_name
            << ") into " << out.string() << "\n";
  return 0;
}

int cmd_register(const std::string& clouds_dir, const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const std::filesystem::path out(opts.out_dir);
  std::filesystem::create_directories(out);
  const PointCloud model = make_model_cloud(cfg);

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(clouds_dir)) {
    if (entry.path().extension() == ".ply") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::runtime_error("no .ply clouds found in '" + clouds_dir + "'");
  }

  Json jout = Json::array();
  const RngStream root(cfg.seed);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const ReconstructedCloud recon = load_reconstructed(files[i]);
    Rng rng = root.substream(i).rng();
    const RegistrationResult reg = localize_target(recon, model, cfg.registration, rng);
    Json entry = json_of(reg);
    entry["cloud"] = files[i].filename().string();
    entry["ee_rotation"] = json_of(recon.ee_rotation);
    entry["registered_origin"] = json_of(reg.transform.translation);
    jout.push_back(std::move(entry));
    std::cout << files[i].filename().string() << ": rms " << reg.rms_error
              << " mm, inliers " << reg.inlier_fraction * 100.0 << "%\n";
  }
  std::ofstream(out / "registrations.json") << jout.dump(2) << "\n";
  std::cout << "wrote " << (out / "registrations.json").string() << "\n";
  return 0;
}

int cmd_calibrate(const CommonOpts& opts, const std::string& observations_path) {
  const std::filesystem::path out(opts.out_dir);
  std::filesystem::create_directories(out);
  if (!observations_path.empty()) {
    std::ifstream is(observations_path);
    if (!is) {
      throw std::runtime_error("cannot open '" + observations_path + "'");
    }
    const Json j = Json::parse(is);
    std::vector<CalibObservation> observations;
    for (const Json& entry : j) {
      observations.push_back({vec3_from_json(entry.at("registered_origin")),
                              rotation_from_json(entry.at("ee_rotation"))});
    }
    const CalibResult result = calibrate(observations);
    std::ofstream(out / "result.json") << json_of(result).dump(2) << "\n";
    std::cout << "hand-eye translation: " << result.hand_eye_translation.transpose()
              << " mm (residual " << result.residual_norm << " mm)\n";
    return 0;
  }
  const ExperimentConfig cfg = resolve_config(opts);
  const CalibrationReport report = run_calibration(cfg, out);
  print_calibration_table(std::cout, report);
  std::cout << "report: " << (out / "report.csv").string() << "\n";
  return 0;
}

int cmd_sweep_rot(const CommonOpts& opts, const std::string& angles_csv,
                  const std::string& axis_name) {
  const ExperimentConfig cfg = resolve_config(opts);
  const std::filesystem::path out(opts.out_dir);
  std::filesystem::create_directories(out);
  Vec3 axis = Vec3::UnitZ();
  if (axis_name == "x") axis = Vec3::UnitX();
  else if (axis_name == "y") axis = Vec3::UnitY();
  else if (axis_name != "z") throw std::invalid_argument("axis must be x, y or z");
  const SweepReport report =
      run_rotation_perturbation_sweep(cfg, parse_double_list(angles_csv), axis);
  write_sweep_csv(report, out / "sweep_rotation.csv");
  std::cout << "wrote " << (out / "sweep_rotation.csv").string() << "\n";
  return 0;
}

int cmd_sweep_count(const CommonOpts& opts, const std::string& counts_csv) {
  const ExperimentConfig cfg = resolve_config(opts);
  const std::filesystem::path out(opts.out_dir);
  std::filesystem::create_directories(out);
  const SweepReport report = run_cloud_count_sweep(cfg, parse_int_list(counts_csv));
  write_sweep_csv(report, out / "sweep_cloud_count.csv");
  std::cout << "wrote " << (out / "sweep_cloud_count.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hand-eye translation calibration toolkit for 2D laser profile sensors"};
  app.require_subcommand(1);

  CommonOpts opts;

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate a scan dataset");
  add_common(simulate, opts);

  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "Rebuild point clouds from a dataset");
  std::string dataset_dir = "out/dataset";
  std::string mode = "rotation_only";
  add_common(reconstruct, opts);
  reconstruct->add_option("--dataset", dataset_dir, "Dataset directory");
  reconstruct->add_option("--mode", mode, "rotation_only or true_hand_eye")
      ->check(CLI::IsMember({"rotation_only", "true_hand_eye"}));

  CLI::App* register_cmd =
      app.add_subcommand("register", "Localize the target in reconstructed clouds");
  std::string clouds_dir = "out/clouds";
  add_common(register_cmd, opts);
  register_cmd->add_option("--clouds", clouds_dir, "Directory of reconstructed PLYs");

  CLI::App* calibrate_cmd =
      app.add_subcommand("calibrate", "Run the full calibration pipeline");
  std::string observations_path;
  add_common(calibrate_cmd, opts);
  calibrate_cmd->add_option("--observations", observations_path,
                            "Solve directly from a registrations.json file");

  CLI::App* sweep_rot = app.add_subcommand(
      "sweep-rot", "Calibration drift under rotation-prior perturbation");
  std::string angles_csv = "0,0.5,1,2,5,10";
  std::string axis_name = "z";
  add_common(sweep_rot, opts);
  sweep_rot->add_option("--angles", angles_csv, "Perturbation angles in degrees");
  sweep_rot->add_option("--axis", axis_name, "Perturbation axis (x, y or z)");

  CLI::App* sweep_count =
      app.add_subcommand("sweep-count", "Calibration drift versus cloud count");
  std::string counts_csv = "3,4,5,6,7,8,9,10";
  add_common(sweep_count, opts);
  sweep_count->add_option("--counts", counts_csv, "Cloud counts to evaluate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(opts);
    if (reconstruct->parsed()) return cmd_reconstruct(dataset_dir, opts, mode);
    if (register_cmd->parsed()) return cmd_register(clouds_dir, opts);
    if (calibrate_cmd->parsed()) return cmd_calibrate(opts, observations_path);
    if (sweep_rot->parsed()) return cmd_sweep_rot(opts, angles_csv, axis_name);
    if (sweep_count->parsed()) return cmd_sweep_count(opts, counts_csv);
  } catch (const scancalib::SingularSystemError& e) {
    std::cerr << "rank condition rejected: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
