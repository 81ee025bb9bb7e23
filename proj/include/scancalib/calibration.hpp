#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "scancalib/geometry.hpp"

namespace scancalib {

// One reconstructed-cloud measurement: the registered target origin in the
// base frame and the end-effector orientation the cloud was scanned with.
struct CalibObservation {
  Vec3 registered_origin;  // mm, origin of the registered (shifted) target
  Rotation3 ee_rotation;
};

// Stacked linear system: block row i is [I3 | -R_i], the right-hand side
// stacks the registered origins, and the unknown is
// [target origin in base; hand-eye translation].
struct CalibSystem {
  Eigen::MatrixXd A;  // 3m x 6
  Eigen::VectorXd b;  // 3m
  int m = 0;
  std::vector<Rotation3> rotations;  // diagnostics
};

struct CalibResult {
  Vec3 hand_eye_translation = Vec3::Zero();  // mm
  Vec3 target_origin = Vec3::Zero();         // mm
  double residual_norm = 0.0;                // mm
  std::vector<double> per_observation_residuals;  // mm, one per cloud
  double condition_number = 0.0;
};

enum class RankVerdict {
  ok,
  too_few_clouds,       // m < 3: the 3m x 6 system cannot reach rank 6
  identical_rotations,  // two clouds share one orientation
  parallel_axes,        // all relative rotation axes line up
  near_singular,        // numerically rank-deficient or badly conditioned
};

std::string to_string(RankVerdict verdict);

struct RankDiagnosis {
  RankVerdict verdict = RankVerdict::ok;
  // Smallest angle subtended by any two relative rotation axes (measured
  // against the first orientation); NaN when fewer than two axes exist.
  double min_relative_axis_angle = 0.0;
  int numeric_rank = 0;
};

// Defaults for the observability checks; both are caller-overridable.
inline constexpr double kAxisParallelTol = 1e-3;   // rad
inline constexpr double kRankRelCutoff = 1e-9;     // singular-value cutoff
inline constexpr double kConditionWarn = 1e6;

class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& message, RankDiagnosis diagnosis)
      : std::runtime_error(message), diagnosis_(diagnosis) {}

  const RankDiagnosis& diagnosis() const noexcept { return diagnosis_; }

 private:
  RankDiagnosis diagnosis_;
};

// Builds the stacked system from m >= 1 observations.
CalibSystem build_system(const std::vector<CalibObservation>& observations);

// Observability analysis: at least three clouds with pairwise distinct
// orientations whose relative rotation axes are not all parallel are needed
// for a unique solution. Also reports the numeric rank of the stacked matrix.
RankDiagnosis check_rank_conditions(const std::vector<Rotation3>& rotations,
                                    double axis_parallel_tol = kAxisParallelTol);

// For two distinct orientations the stacked 6x6 matrix always has the
// nullspace direction k * [R1 * a; a], where a is the relative rotation axis.
Eigen::Matrix<double, 6, 1> nullspace_vector_m2(const Rotation3& r1,
                                                const Rotation3& r2, double k = 1.0);

// Least squares via column-pivoted QR. Throws SingularSystemError when the
// numeric rank is below 6.
CalibResult solve_translation(const CalibSystem& system);

// Normal-equations solution x = (A^T A)^-1 A^T b, kept as an independent
// cross-check of the QR path.
Eigen::Matrix<double, 6, 1> solve_normal_equations(const CalibSystem& system);

// check_rank_conditions + build_system + solve_translation.
CalibResult calibrate(const std::vector<CalibObservation>& observations,
                      double axis_parallel_tol = kAxisParallelTol);

}  // namespace scancalib
