#include "scancalib/calibration.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <iostream>
#include <limits>

namespace scancalib {

namespace {

Eigen::MatrixXd stack_matrix(const std::vector<Rotation3>& rotations) {
  const int m = static_cast<int>(rotations.size());
  Eigen::MatrixXd a(3 * m, 6);
  for (int i = 0; i < m; ++i) {
    a.block<3, 3>(3 * i, 0) = Eigen::Matrix3d::Identity();
    a.block<3, 3>(3 * i, 3) = -rotations[static_cast<std::size_t>(i)].matrix();
  }
  return a;
}

struct SvdSummary {
  int rank = 0;
  double condition = std::numeric_limits<double>::infinity();
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

SvdSummary svd_summary(const Eigen::MatrixXd& a) {
  SvdSummary s;
  if (a.rows() == 0) return s;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  s.sigma_max = sv(0);
  s.sigma_min = sv(sv.size() - 1);
  if (s.sigma_max <= 0.0) return s;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > kRankRelCutoff * s.sigma_max) {
      ++s.rank;
    }
  }
  if (s.sigma_min > 0.0) {
    s.condition = s.sigma_max / s.sigma_min;
  }
  return s;
}

}  // namespace

std::string to_string(RankVerdict verdict) {
  switch (verdict) {
    case RankVerdict::ok: return "ok";
    case RankVerdict::too_few_clouds: return "too_few_clouds";
    case RankVerdict::identical_rotations: return "identical_rotations";
    case RankVerdict::parallel_axes: return "parallel_axes";
    case RankVerdict::near_singular: return "near_singular";
  }
  return "unknown";
}

CalibSystem build_system(const std::vector<CalibObservation>& observations) {
  if (observations.empty()) {
    throw std::invalid_argument("cannot build a system from zero observations");
  }
  CalibSystem sys;
  sys.m = static_cast<int>(observations.size());
  sys.rotations.reserve(observations.size());
  for (const CalibObservation& obs : observations) {
    sys.rotations.push_back(obs.ee_rotation);
  }
  sys.A = stack_matrix(sys.rotations);
  sys.b.resize(3 * sys.m);
  for (int i = 0; i < sys.m; ++i) {
    sys.b.segment<3>(3 * i) = observations[static_cast<std::size_t>(i)].registered_origin;
  }
  return sys;
}

RankDiagnosis check_rank_conditions(const std::vector<Rotation3>& rotations,
                                    double axis_parallel_tol) {
  RankDiagnosis diag;
  diag.min_relative_axis_angle = std::numeric_limits<double>::quiet_NaN();
  const std::size_t m = rotations.size();
  const SvdSummary svd = m == 0 ? SvdSummary{} : svd_summary(stack_matrix(rotations));
  diag.numeric_rank = svd.rank;

  if (m < 3) {
    diag.verdict = RankVerdict::too_few_clouds;
    return diag;
  }

  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if ((rotations[i].matrix() - rotations[j].matrix()).norm() < 1e-9) {
        diag.verdict = RankVerdict::identical_rotations;
        return diag;
      }
    }
  }

  // Relative rotation axes, measured against the first orientation.
  std::vector<Vec3> axes;
  axes.reserve(m - 1);
  for (std::size_t i = 1; i < m; ++i) {
    try {
      axes.push_back(axis_of(rotations[0].transposed() * rotations[i]).axis.direction());
    } catch (const DegenerateRotationError&) {
      diag.verdict = RankVerdict::identical_rotations;
      return diag;
    }
  }
  double min_angle = std::numeric_limits<double>::quiet_NaN();
  double max_angle = 0.0;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    for (std::size_t j = i + 1; j < axes.size(); ++j) {
      const double c = std::clamp(std::abs(axes[i].dot(axes[j])), 0.0, 1.0);
      const double angle = std::acos(c);  // folded to [0, pi/2]; parallel -> 0
      if (std::isnan(min_angle) || angle < min_angle) min_angle = angle;
      if (angle > max_angle) max_angle = angle;
    }
  }
  diag.min_relative_axis_angle = min_angle;

  if (axes.size() >= 2 && max_angle < axis_parallel_tol) {
    diag.verdict = RankVerdict::parallel_axes;
    return diag;
  }
  if (diag.numeric_rank < 6 || svd.condition > kConditionWarn) {
    diag.verdict = RankVerdict::near_singular;
    return diag;
  }
  diag.verdict = RankVerdict::ok;
  return diag;
}

Eigen::Matrix<double, 6, 1> nullspace_vector_m2(const Rotation3& r1,
                                                const Rotation3& r2, double k) {
  if (k == 0.0) {
    throw std::invalid_argument("nullspace scale k must be nonzero");
  }
  const Vec3 a = axis_of(r1.transposed() * r2).axis.direction();
  Eigen::Matrix<double, 6, 1> v;
  v.head<3>() = k * (r1 * a);
  v.tail<3>() = k * a;
  return v;
}

CalibResult solve_translation(const CalibSystem& sys) {
  const SvdSummary svd = svd_summary(sys.A);
  if (svd.rank < 6) {
    const RankDiagnosis diag = check_rank_conditions(sys.rotations);
    throw SingularSystemError("system is rank-deficient (numeric rank " +
                                  std::to_string(svd.rank) + ", verdict " +
                                  to_string(diag.verdict) + ")",
                              diag);
  }
  const Eigen::VectorXd x = sys.A.colPivHouseholderQr().solve(sys.b);
  CalibResult result;
  result.target_origin = x.head<3>();
  result.hand_eye_translation = x.tail<3>();
  const Eigen::VectorXd residual = sys.A * x - sys.b;
  result.residual_norm = residual.norm();
  result.per_observation_residuals.reserve(static_cast<std::size_t>(sys.m));
  for (int i = 0; i < sys.m; ++i) {
    result.per_observation_residuals.push_back(residual.segment<3>(3 * i).norm());
  }
  result.condition_number = svd.condition;
  return result;
}

Eigen::Matrix<double, 6, 1> solve_normal_equations(const CalibSystem& sys) {
  const Eigen::Matrix<double, 6, 6> ata = sys.A.transpose() * sys.A;
  const Eigen::Matrix<double, 6, 1> atb = sys.A.transpose() * sys.b;
  return ata.inverse() * atb;
}

CalibResult calibrate(const std::vector<CalibObservation>& observations,
                      double axis_parallel_tol) {
  std::vector<Rotation3> rotations;
  rotations.reserve(observations.size());
  for (const CalibObservation& obs : observations) {
    rotations.push_back(obs.ee_rotation);
  }
  const RankDiagnosis diag = check_rank_conditions(rotations, axis_parallel_tol);
  const bool solvable =
      diag.verdict == RankVerdict::ok ||
      (diag.verdict == RankVerdict::near_singular && diag.numeric_rank == 6);
  if (!solvable) {
    throw SingularSystemError("rank conditions not met: " + to_string(diag.verdict),
                              diag);
  }
  if (diag.verdict == RankVerdict::near_singular) {
    std::cerr << "[scancalib] warning: calibration system is badly conditioned\n";
  }
  return solve_translation(build_system(observations));
}

}  // namespace scancalib
