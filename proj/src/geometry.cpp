#include "scancalib/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>
#include <numbers>

namespace scancalib {

namespace {

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) *= -1.0;
  }
  return u * v.transpose();
}

double ortho_residual(const Eigen::Matrix3d& m) {
  return (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace

UnitAxis::UnitAxis(const Vec3& direction) {
  if (!direction.allFinite()) {
    throw std::invalid_argument("axis has non-finite components");
  }
  const double n = direction.norm();
  if (std::abs(n - 1.0) > 1e-9) {
    throw std::invalid_argument("axis is not unit length (|norm - 1| > 1e-9)");
  }
  d_ = direction / n;
}

UnitAxis UnitAxis::normalized(const Vec3& v) {
  if (!v.allFinite()) {
    throw std::invalid_argument("axis has non-finite components");
  }
  const double n = v.norm();
  if (n < 1e-12) {
    throw std::invalid_argument("cannot normalize a near-zero vector");
  }
  UnitAxis a;
  a.d_ = v / n;
  return a;
}

Rotation3 Rotation3::from_matrix(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("rotation matrix has non-finite entries");
  }
  const double residual = ortho_residual(m);
  const double det = m.determinant();
  if (residual > 1e-3 || det < 0.5) {
    throw std::invalid_argument("matrix is not a rotation (orthonormality or determinant check failed)");
  }
  Eigen::Matrix3d r = m;
  if (residual > kOrthoTol || std::abs(det - 1.0) > kOrthoTol) {
    r = project_to_so3(m);
  }
  return Rotation3(r, Trusted{});
}

Rotation3 Rotation3::transposed() const {
  return Rotation3(Eigen::Matrix3d(m_.transpose()), Trusted{});
}

Rotation3 Rotation3::operator*(const Rotation3& rhs) const {
  Eigen::Matrix3d p = m_ * rhs.m_;
  if (ortho_residual(p) > kOrthoTol) {
    p = project_to_so3(p);
  }
  return Rotation3(p, Trusted{});
}

Rotation3 rot_from_axis_angle(const UnitAxis& axis, double angle) {
  const Eigen::AngleAxisd aa(angle, axis.direction());
  return Rotation3::from_matrix(aa.toRotationMatrix());
}

Rotation3 rot_from_axis_angle(const Vec3& axis, double angle) {
  return rot_from_axis_angle(UnitAxis(axis), angle);
}

AxisAngle axis_of(const Rotation3& r) {
  Eigen::Quaterniond q(r.matrix());
  if (q.w() < 0.0) {
    q.coeffs() *= -1.0;
  }
  const double vnorm = q.vec().norm();
  const double angle = 2.0 * std::atan2(vnorm, q.w());
  if (angle <= kAngleEps) {
    throw DegenerateRotationError("rotation is too close to identity; axis undefined");
  }
  Vec3 axis = q.vec() / vnorm;
  // At a half turn both axis signs describe the same rotation; pick the one
  // whose first nonzero component is positive.
  if (angle >= std::numbers::pi - 1e-10) {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(axis[i]) > 1e-12) {
        if (axis[i] < 0.0) axis = -axis;
        break;
      }
    }
  }
  return {UnitAxis::normalized(axis), std::min(angle, std::numbers::pi)};
}

double rotation_angle_between(const Rotation3& a, const Rotation3& b) {
  const Eigen::Matrix3d rel = a.matrix().transpose() * b.matrix();
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Vec3 apply(const RigidTransform& h, const Vec3& p) {
  return h.rotation * p + h.translation;
}

RigidTransform invert(const RigidTransform& h) {
  const Rotation3 rt = h.rotation.transposed();
  return {rt, -(rt * h.translation)};
}

}  // namespace scancalib
