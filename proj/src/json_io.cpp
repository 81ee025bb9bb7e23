#include "scancalib/json_io.hpp"

namespace scancalib {

Json json_of(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("expected a 3-element array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Json json_of(const Rotation3& r) {
  const Eigen::Matrix3d& m = r.matrix();
  Json a = Json::array();
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      a.push_back(m(i, k));
    }
  }
  return a;
}

Rotation3 rotation_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 9) {
    throw std::invalid_argument("expected a 9-element row-major rotation array");
  }
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      m(i, k) = j[static_cast<std::size_t>(3 * i + k)].get<double>();
    }
  }
  return Rotation3::from_matrix(m);
}

Json json_of(const RigidTransform& h) {
  return Json{{"rotation", json_of(h.rotation)}, {"translation", json_of(h.translation)}};
}

RigidTransform transform_from_json(const Json& j) {
  return {rotation_from_json(j.at("rotation")), vec3_from_json(j.at("translation"))};
}

Json json_of(const SensorModel& s) {
  return Json{{"fov_width", s.fov_width},
              {"z_near", s.z_near},
              {"z_far", s.z_far},
              {"samples_per_profile", s.samples_per_profile},
              {"sigma_z", s.sigma_z},
              {"sigma_x", s.sigma_x},
              {"ee_jitter", s.ee_jitter}};
}

SensorModel sensor_from_json(const Json& j) {
  SensorModel s;
  s.fov_width = j.value("fov_width", s.fov_width);
  s.z_near = j.value("z_near", s.z_near);
  s.z_far = j.value("z_far", s.z_far);
  s.samples_per_profile = j.value("samples_per_profile", s.samples_per_profile);
  s.sigma_z = j.value("sigma_z", s.sigma_z);
  s.sigma_x = j.value("sigma_x", s.sigma_x);
  s.ee_jitter = j.value("ee_jitter", s.ee_jitter);
  validate_sensor(s);
  return s;
}

}  // namespace scancalib
