#include "scancalib/point_cloud.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace scancalib {

PointCloud transform_cloud(const RigidTransform& h, const PointCloud& cloud,
                           std::string new_frame) {
  if (new_frame.empty()) {
    throw std::invalid_argument("frame label must be nonempty");
  }
  PointCloud out;
  out.frame = std::move(new_frame);
  out.points.reserve(cloud.points.size());
  for (const CloudPoint& p : cloud.points) {
    out.points.push_back({apply(h, p.position), p.intensity});
  }
  return out;
}

PointCloud merge_clouds(const std::vector<PointCloud>& clouds) {
  if (clouds.empty()) {
    throw std::invalid_argument("merge_clouds requires at least one cloud");
  }
  const std::string& frame = clouds.front().frame;
  std::size_t total = 0;
  for (const PointCloud& c : clouds) {
    if (c.frame != frame) {
      throw FrameMismatchError("cannot merge clouds in frames '" + frame +
                               "' and '" + c.frame + "'");
    }
    total += c.points.size();
  }
  PointCloud out;
  out.frame = frame;
  out.points.reserve(total);
  for (const PointCloud& c : clouds) {
    out.points.insert(out.points.end(), c.points.begin(), c.points.end());
  }
  return out;
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                const std::vector<std::string>& extra_comments) {
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  os << "ply\n";
  os << "format ascii 1.0\n";
  os << "comment frame " << cloud.frame << "\n";
  for (const std::string& c : extra_comments) {
    os << "comment " << c << "\n";
  }
  os << "element vertex " << cloud.points.size() << "\n";
  os << "property float x\n";
  os << "property float y\n";
  os << "property float z\n";
  os << "property float intensity\n";
  os << "end_header\n";
  char line[160];
  for (const CloudPoint& p : cloud.points) {
    std::snprintf(line, sizeof(line), "%.9g %.9g %.9g %.9g\n", p.position.x(),
                  p.position.y(), p.position.z(),
                  p.intensity.value_or(0.0));
    os << line;
  }
  if (!os) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

PlyContents load_ply(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  }
  long line_no = 0;
  std::string line;
  auto next_line = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply") {
    throw ParseError("expected 'ply' magic", line_no == 0 ? 1 : line_no);
  }
  if (!next_line() || line != "format ascii 1.0") {
    throw ParseError("expected 'format ascii 1.0'", line_no == 0 ? 2 : line_no);
  }

  PlyContents out;
  out.cloud.frame.clear();
  long vertex_count = -1;
  bool header_done = false;
  while (!header_done) {
    if (!next_line()) {
      throw ParseError("unexpected end of file inside header", line_no);
    }
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") {
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      std::istringstream cs(rest);
      std::string key;
      cs >> key;
      if (key == "frame") {
        cs >> out.cloud.frame;
      } else {
        out.comments.push_back(rest);
      }
    } else if (tok == "element") {
      std::string kind;
      ls >> kind >> vertex_count;
      if (kind != "vertex" || ls.fail() || vertex_count < 0) {
        throw ParseError("unsupported element declaration '" + line + "'", line_no);
      }
    } else if (tok == "property") {
      // Fixed x/y/z/intensity layout; names are not re-checked.
    } else if (tok == "end_header") {
      header_done = true;
    } else {
      throw ParseError("unrecognized header line '" + line + "'", line_no);
    }
  }
  if (vertex_count < 0) {
    throw ParseError("missing 'element vertex' declaration", line_no);
  }
  if (out.cloud.frame.empty()) {
    out.cloud.frame = "B";
  }

  out.cloud.points.reserve(static_cast<std::size_t>(vertex_count));
  for (long i = 0; i < vertex_count; ++i) {
    if (!next_line()) {
      throw ParseError("expected " + std::to_string(vertex_count) +
                           " vertex rows, found " + std::to_string(i),
                       line_no);
    }
    std::istringstream ls(line);
    double x, y, z, intensity;
    ls >> x >> y >> z >> intensity;
    if (ls.fail()) {
      throw ParseError("non-numeric vertex row '" + line + "'", line_no);
    }
    CloudPoint p;
    p.position = Vec3(x, y, z);
    if (!p.position.allFinite() || !std::isfinite(intensity)) {
      throw ParseError("non-finite vertex row", line_no);
    }
    p.intensity = std::clamp(intensity, 0.0, 1.0);
    if (intensity < -1e-9 || intensity > 1.0 + 1e-9) {
      throw ParseError("intensity out of [0, 1]", line_no);
    }
    out.cloud.points.push_back(p);
  }
  return out;
}

PointCloud load_cloud(const std::filesystem::path& path) {
  return load_ply(path).cloud;
}

}  // namespace scancalib
