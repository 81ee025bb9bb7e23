#include "scancalib/targets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scancalib/rng.hpp"

namespace scancalib {

double triangle_area(const TriMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Vec3& a = mesh.vertices[tri[0]];
  const Vec3& b = mesh.vertices[tri[1]];
  const Vec3& c = mesh.vertices[tri[2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

double mesh_surface_area(const TriMesh& mesh) {
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += triangle_area(mesh, t);
  }
  return total;
}

void validate_mesh(const TriMesh& mesh) {
  const int nv = static_cast<int>(mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) {
    if (!v.allFinite()) {
      throw std::invalid_argument("mesh vertex has non-finite coordinates");
    }
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int i : mesh.triangles[t]) {
      if (i < 0 || i >= nv) {
        throw std::invalid_argument("triangle index out of range");
      }
    }
    if (triangle_area(mesh, t) <= 1e-12) {
      throw std::invalid_argument("degenerate triangle (area <= 1e-12 mm^2)");
    }
  }
}

PointCloud image_to_model_cloud(const GrayImage& img, double intensity_min) {
  if (img.dpi <= 0.0) {
    throw std::invalid_argument("image dpi must be positive");
  }
  if (static_cast<std::size_t>(img.width) * img.height != img.pixels.size()) {
    throw std::invalid_argument("pixel buffer size does not match image dimensions");
  }
  const double s = img.mm_per_pixel();
  PointCloud out;
  out.frame = "C";
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const double intensity = img.at(u, v);
      if (intensity >= intensity_min) {
        out.points.push_back({Vec3(u * s, v * s, 1.0), intensity});
      }
    }
  }
  return out;
}

PointCloud mesh_to_model_cloud(const TriMesh& mesh, double samples_per_mm2,
                               std::uint64_t seed) {
  if (samples_per_mm2 <= 0.0) {
    throw std::invalid_argument("samples_per_mm2 must be positive");
  }
  if (mesh.triangles.empty()) {
    throw std::invalid_argument("cannot sample an empty mesh");
  }
  const std::size_t nt = mesh.triangles.size();
  std::vector<double> cum(nt);
  double total = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    total += triangle_area(mesh, t);
    cum[t] = total;
  }
  if (total <= 1e-12) {
    throw std::invalid_argument("mesh has zero surface area");
  }
  const long long n_total = std::llround(total * samples_per_mm2);

  PointCloud out;
  out.frame = "C";
  out.points.reserve(static_cast<std::size_t>(std::max<long long>(n_total, 0)));
  const RngStream root(seed);
  long long emitted_before = 0;
  for (std::size_t t = 0; t < nt; ++t) {
    // Largest-remainder style partition of the fixed total across triangles.
    const long long upto =
        static_cast<long long>(std::floor(cum[t] / total * static_cast<double>(n_total) + 0.5));
    const long long n_t = upto - emitted_before;
    emitted_before = upto;
    if (n_t <= 0) continue;
    Rng rng = root.substream(t).rng();
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3 e1 = mesh.vertices[tri[1]] - a;
    const Vec3 e2 = mesh.vertices[tri[2]] - a;
    for (long long i = 0; i < n_t; ++i) {
      double r1 = rng.uniform();
      double r2 = rng.uniform();
      if (r1 + r2 > 1.0) {
        r1 = 1.0 - r1;
        r2 = 1.0 - r2;
      }
      out.points.push_back({a + r1 * e1 + r2 * e2, 1.0});
    }
  }
  return out;
}

namespace {

void add_rect(TriMesh& mesh, double x0, double x1, double y0, double y1, double z) {
  const int base = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(x0, y0, z);
  mesh.vertices.emplace_back(x1, y0, z);
  mesh.vertices.emplace_back(x1, y1, z);
  mesh.vertices.emplace_back(x0, y1, z);
  mesh.triangles.push_back({base, base + 1, base + 2});
  mesh.triangles.push_back({base, base + 2, base + 3});
}

}  // namespace

TriMesh make_step_block(double base_w, double base_h, int n_steps,
                        double step_height) {
  if (base_w <= 0.0 || base_h <= 0.0 || step_height <= 0.0) {
    throw std::invalid_argument("step_block dimensions must be positive");
  }
  if (n_steps < 1 || n_steps > 6) {
    throw std::invalid_argument("step_block supports 1..6 steps");
  }
  const double y_shrink = 0.15 * base_h;  // per level, keeps the relief asymmetric
  // Level i occupies x in [x_lo(i), w/2], y in [-h/2, y_hi(i)].
  auto x_lo = [&](int i) { return -base_w / 2.0 + i * base_w / (n_steps + 1); };
  auto y_hi = [&](int i) { return base_h / 2.0 - i * y_shrink; };

  TriMesh mesh;
  for (int i = 0; i <= n_steps; ++i) {
    const double z = i * step_height;
    if (i == n_steps) {
      add_rect(mesh, x_lo(i), base_w / 2.0, -base_h / 2.0, y_hi(i), z);
    } else {
      // Exposed part of level i: what the next level does not cover.
      add_rect(mesh, x_lo(i), x_lo(i + 1), -base_h / 2.0, y_hi(i), z);
      add_rect(mesh, x_lo(i + 1), base_w / 2.0, y_hi(i + 1), y_hi(i), z);
    }
  }
  validate_mesh(mesh);
  return mesh;
}

TriMesh make_wedge(double length, double width, double slope) {
  if (length <= 0.0 || width <= 0.0 || slope <= 0.0) {
    throw std::invalid_argument("wedge parameters must be positive");
  }
  TriMesh mesh;
  const double x0 = -length / 2.0, x1 = length / 2.0;
  const double y0 = -width / 2.0, y1 = width / 2.0;
  const double z1 = slope * length;
  mesh.vertices.emplace_back(x0, y0, 0.0);
  mesh.vertices.emplace_back(x1, y0, z1);
  mesh.vertices.emplace_back(x1, y1, z1);
  mesh.vertices.emplace_back(x0, y1, 0.0);
  mesh.triangles.push_back({0, 1, 2});
  mesh.triangles.push_back({0, 2, 3});
  validate_mesh(mesh);
  return mesh;
}

GrayImage make_flat_logo(int width, int height, double dpi) {
  if (width < 8 || height < 8) {
    throw std::invalid_argument("flat_logo needs at least 8x8 pixels");
  }
  if (dpi <= 0.0) {
    throw std::invalid_argument("dpi must be positive");
  }
  GrayImage img;
  img.width = width;
  img.height = height;
  img.dpi = dpi;
  img.pixels.assign(static_cast<std::size_t>(width) * height, 0.05);

  auto fill = [&](double u0, double u1, double v0, double v1) {
    const int ua = static_cast<int>(u0 * width), ub = static_cast<int>(u1 * width);
    const int va = static_cast<int>(v0 * height), vb = static_cast<int>(v1 * height);
    for (int v = va; v < vb; ++v) {
      for (int u = ua; u < ub; ++u) {
        img.pixels[static_cast<std::size_t>(v) * width + u] = 1.0;
      }
    }
  };
  // An F-like glyph plus an off-center dot: bright on dark, no rotational
  // symmetry, structure along both image axes.
  fill(0.15, 0.30, 0.15, 0.85);  // stem
  fill(0.30, 0.80, 0.15, 0.30);  // top arm
  fill(0.30, 0.62, 0.45, 0.58);  // middle arm
  fill(0.68, 0.82, 0.68, 0.82);  // dot
  return img;
}

void save_mesh_off(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  os << "OFF\n";
  os << mesh.vertices.size() << " " << mesh.triangles.size() << " 0\n";
  char line[160];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(line, sizeof(line), "%.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    os << line;
  }
  for (const auto& t : mesh.triangles) {
    os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  }
  if (!os) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

TriMesh load_mesh_off(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  }
  long line_no = 0;
  std::string line;
  auto next_data_line = [&]() -> std::istringstream {
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto pos = line.find_first_not_of(" \t");
      if (pos == std::string::npos || line[pos] == '#') continue;
      return std::istringstream(line);
    }
    throw ParseError("unexpected end of OFF file", line_no);
  };

  {
    auto ls = next_data_line();
    std::string magic;
    ls >> magic;
    if (magic != "OFF") {
      throw ParseError("expected OFF magic", line_no);
    }
  }
  long nv = 0, nf = 0, ne = 0;
  {
    auto ls = next_data_line();
    ls >> nv >> nf >> ne;
    if (ls.fail() || nv < 0 || nf < 0) {
      throw ParseError("malformed OFF count line", line_no);
    }
  }
  TriMesh mesh;
  mesh.vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    auto ls = next_data_line();
    double x, y, z;
    ls >> x >> y >> z;
    if (ls.fail()) {
      throw ParseError("non-numeric OFF vertex", line_no);
    }
    mesh.vertices.emplace_back(x, y, z);
  }
  mesh.triangles.reserve(nf);
  for (long i = 0; i < nf; ++i) {
    auto ls = next_data_line();
    int n, a, b, c;
    ls >> n >> a >> b >> c;
    if (ls.fail() || n != 3) {
      throw ParseError("only triangular OFF faces are supported", line_no);
    }
    mesh.triangles.push_back({a, b, c});
  }
  try {
    validate_mesh(mesh);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid mesh: ") + e.what(), line_no);
  }
  return mesh;
}

void save_image_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  char dpi_line[64];
  std::snprintf(dpi_line, sizeof(dpi_line), "# dpi %.9g\n", img.dpi);
  os << "P2\n" << dpi_line << img.width << " " << img.height << "\n255\n";
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const int g = static_cast<int>(std::lround(std::clamp(img.at(u, v), 0.0, 1.0) * 255.0));
      os << g << (u + 1 == img.width ? "\n" : " ");
    }
  }
  if (!os) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

GrayImage load_image_pgm(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  }
  long line_no = 0;
  double dpi = 25.4;
  std::vector<std::string> data_tokens;
  std::string line;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos) continue;
    if (line[pos] == '#') {
      std::istringstream cs(line.substr(pos + 1));
      std::string key;
      cs >> key;
      if (key == "dpi") {
        cs >> dpi;
        if (cs.fail() || dpi <= 0.0) {
          throw ParseError("invalid dpi comment", line_no);
        }
      }
      continue;
    }
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) data_tokens.push_back(tok);
  }
  if (data_tokens.size() < 4 || data_tokens[0] != "P2") {
    throw ParseError("expected P2 PGM header", 1);
  }
  GrayImage img;
  img.dpi = dpi;
  try {
    img.width = std::stoi(data_tokens[1]);
    img.height = std::stoi(data_tokens[2]);
  } catch (const std::exception&) {
    throw ParseError("malformed PGM dimensions", 1);
  }
  const double maxval = std::stod(data_tokens[3]);
  if (img.width <= 0 || img.height <= 0 || maxval <= 0.0) {
    throw ParseError("invalid PGM dimensions or maxval", 1);
  }
  const std::size_t expected = static_cast<std::size_t>(img.width) * img.height;
  if (data_tokens.size() - 4 != expected) {
    throw ParseError("PGM pixel count mismatch: expected " +
                         std::to_string(expected) + ", found " +
                         std::to_string(data_tokens.size() - 4),
                     line_no);
  }
  img.pixels.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    double g;
    try {
      g = std::stod(data_tokens[4 + i]);
    } catch (const std::exception&) {
      throw ParseError("non-numeric PGM pixel", line_no);
    }
    img.pixels[i] = std::clamp(g / maxval, 0.0, 1.0);
  }
  return img;
}

}  // namespace scancalib
