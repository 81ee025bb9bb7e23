#pragma once

#include <Eigen/Dense>

#include "scancalib/errors.hpp"

namespace scancalib {

using Vec3 = Eigen::Vector3d;

// Rotations with an angle at or below this have no well-defined axis.
inline constexpr double kAngleEps = 1e-8;

// Orthonormality residual above which a rotation matrix is re-projected
// onto the nearest rotation. Keeps long composition chains clean.
inline constexpr double kOrthoTol = 1e-9;

// Unit-length direction vector. Construction rejects non-unit input;
// normalized() builds one from any vector of usable magnitude.
class UnitAxis {
 public:
  explicit UnitAxis(const Vec3& direction);

  static UnitAxis normalized(const Vec3& v);

  const Vec3& direction() const { return d_; }
  double x() const { return d_.x(); }
  double y() const { return d_.y(); }
  double z() const { return d_.z(); }

 private:
  UnitAxis() = default;
  Vec3 d_{Vec3::UnitZ()};
};

// Proper rotation (orthonormal, det +1). from_matrix() validates its input
// and re-projects onto SO(3) when the residual exceeds kOrthoTol; products
// do the same, so chained composition cannot drift.
class Rotation3 {
 public:
  Rotation3() : m_(Eigen::Matrix3d::Identity()) {}

  static Rotation3 identity() { return Rotation3(); }
  static Rotation3 from_matrix(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const { return m_; }

  Rotation3 transposed() const;

  Rotation3 operator*(const Rotation3& rhs) const;
  Vec3 operator*(const Vec3& p) const { return m_ * p; }

 private:
  struct Trusted {};
  Rotation3(const Eigen::Matrix3d& m, Trusted) : m_(m) {}

  Eigen::Matrix3d m_;
};

struct AxisAngle {
  UnitAxis axis;
  double angle;  // radians, in (0, pi]
};

// Rodrigues rotation about a unit axis. The Vec3 overload rejects non-unit
// axes with std::invalid_argument.
Rotation3 rot_from_axis_angle(const UnitAxis& axis, double angle);
Rotation3 rot_from_axis_angle(const Vec3& axis, double angle);

// Inverse of rot_from_axis_angle for angles in (kAngleEps, pi]. Throws
// DegenerateRotationError near the identity. At a half turn the axis sign is
// canonicalized so the first nonzero component is positive.
AxisAngle axis_of(const Rotation3& r);

// Geodesic angle between two rotations, in [0, pi].
double rotation_angle_between(const Rotation3& a, const Rotation3& b);

// Rigid body transform: p -> rotation * p + translation.
struct RigidTransform {
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {Rotation3(), t}; }
  static RigidTransform from_rotation(const Rotation3& r) { return {r, Vec3::Zero()}; }
};

// Matrix-product semantics: compose(a, b) applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

Vec3 apply(const RigidTransform& h, const Vec3& p);

RigidTransform invert(const RigidTransform& h);

}  // namespace scancalib
