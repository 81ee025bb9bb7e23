#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "scancalib/point_cloud.hpp"

namespace scancalib {

// Row-major grayscale image with a physical scale given by its DPI.
struct GrayImage {
  int width = 0;
  int height = 0;
  double dpi = 25.4;                 // 25.4 dpi == 1 mm per pixel
  std::vector<double> pixels;        // intensities in [0, 1], row-major

  double at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
  double mm_per_pixel() const { return 25.4 / dpi; }
};

struct TriMesh {
  std::vector<Vec3> vertices;                 // millimeters
  std::vector<std::array<int, 3>> triangles;  // CCW index triples
};

double triangle_area(const TriMesh& mesh, std::size_t t);
double mesh_surface_area(const TriMesh& mesh);

// Checks index ranges and rejects degenerate (area <= 1e-12 mm^2) triangles.
void validate_mesh(const TriMesh& mesh);

// Model cloud from a 2D target: one point per pixel whose intensity reaches
// intensity_min, at (u * mm/px, v * mm/px, 1) carrying the pixel intensity.
// Frame label "C".
PointCloud image_to_model_cloud(const GrayImage& img, double intensity_min);

// Area-weighted uniform surface sampling of a mesh; deterministic given the
// seed (per-triangle substreams). Samples carry constant intensity 1. Frame
// label "C".
PointCloud mesh_to_model_cloud(const TriMesh& mesh, double samples_per_mm2,
                               std::uint64_t seed);

// Built-in synthetic targets.
//
// step_block: relief plate of n_steps+1 horizontal levels (z = 0, h, ..,
// n_steps*h). Each step raises along +x and shrinks along +y, so the surface
// constrains registration in all three axes and has no in-plane symmetry.
// Centered on the origin in x/y. Requires 1 <= n_steps <= 6.
TriMesh make_step_block(double base_w, double base_h, int n_steps,
                        double step_height);

// wedge: inclined rectangular plane, z rising along +x from 0 to
// slope * length. Centered on the origin in x/y.
TriMesh make_wedge(double length, double width, double slope);

// flat_logo: high-contrast binary glyph (bright marks on a dark field) with
// no 180-degree symmetry. Minimum size 8x8.
GrayImage make_flat_logo(int width, int height, double dpi = 25.4);

// ASCII OFF meshes and ASCII PGM (P2) images with a "# dpi <value>" comment.
void save_mesh_off(const TriMesh& mesh, const std::filesystem::path& path);
TriMesh load_mesh_off(const std::filesystem::path& path);
void save_image_pgm(const GrayImage& img, const std::filesystem::path& path);
GrayImage load_image_pgm(const std::filesystem::path& path);

}  // namespace scancalib
