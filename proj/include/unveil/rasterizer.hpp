#pragma once

#include "unveil/core_types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace unveil {

struct RenderOptions {
  bool include_environment = true;
  std::optional<uint16_t> semantic_filter;  // render only this label
  int sh_eval_degree = kMaxShDegree;        // clamped to scene sh_degree
  int tile_size = 16;
  double near_clip = 0.01;
  int threads = 1;
};

// Skip threshold for negligible hits, as in the splatting lineage.
constexpr double kMinBlendWeight = 1.0 / 255.0;
// 3-sigma footprint cutoff: hits with u^2 + v^2 beyond this are discarded.
constexpr double kCutoffRadiusSq = 9.0;
// render() stops compositing a pixel once transmittance falls below this.
constexpr double kMinTransmittance = 1e-4;

struct RenderBuffers {
  int width = 0, height = 0, num_classes = 0;
  std::vector<double> color;       // H*W*3
  std::vector<double> alpha;       // H*W
  std::vector<double> depth;       // H*W, alpha-normalized mean; 0 where alpha=0
  std::vector<double> normal;      // H*W*3, camera space, alpha-weighted
  std::vector<double> semantic;    // H*W*K, pixel-major
  std::vector<double> distortion;  // H*W
  std::vector<double> per_class_distortion;  // K planes of H*W

  void resize(int w, int h, int k);
  size_t npix() const { return size_t(width) * height; }

  double* color_at(int x, int y) { return &color[(size_t(y) * width + x) * 3]; }
  const double* color_at(int x, int y) const { return &color[(size_t(y) * width + x) * 3]; }
  double& alpha_at(int x, int y) { return alpha[size_t(y) * width + x]; }
  double alpha_at(int x, int y) const { return alpha[size_t(y) * width + x]; }
  double& depth_at(int x, int y) { return depth[size_t(y) * width + x]; }
  double depth_at(int x, int y) const { return depth[size_t(y) * width + x]; }
};

// Ray-plane intersection in the splat's local frame. Returns nothing when the
// ray is parallel to the plane, the depth is at or behind near_clip, or the
// hit falls outside the 3-sigma cutoff.
std::optional<Vec3> intersect(const Splat2D& splat, const CameraFrame& camera,
                              double px, double py, double near_clip = 0.01);

// One resolved hit for standalone per-pixel compositing.
struct PixelHit {
  double opacity;   // splat opacity (activated)
  double u, v, z;   // local coordinates and camera depth
  Vec3 color;
  Vec3 normal;
  uint16_t label = 0;
};

struct PixelComposite {
  Vec3 color = Vec3::Zero();
  double alpha = 0;
  double depth = 0;
  Vec3 normal = Vec3::Zero();
  std::vector<double> semantic;             // K
  double distortion = 0;
  std::vector<double> per_class_distortion; // K
};

// Front-to-back compositing of a depth-sorted hit list. Distortion is the
// running-sum form of the pairwise depth spread; per-class accumulators use
// the same global blend weights restricted to same-class pairs.
PixelComposite composite_pixel(std::span<const PixelHit> hits, int num_classes,
                               const std::optional<Vec3>& env_color);

RenderBuffers render(const Scene& scene, const CameraFrame& camera,
                     const RenderOptions& options = {});

// Class-k plane of the per-class distortion buffers; a label outside the
// palette yields a zero map.
std::vector<double> render_per_class_distortion(const Scene& scene,
                                                const CameraFrame& camera,
                                                uint16_t label,
                                                const RenderOptions& options = {});

namespace detail {

// Per-splat data shared by the forward and backward tile loops.
struct SplatView {
  Vec3 center;
  Vec3 t_u, t_v, n;
  double s_u, s_v;
  double opacity;
  Vec3 color;        // SH color clamped to [0,1]
  Vec3 color_raw;    // before clamping (for the backward clamp mask)
  Vec3 view_dir;     // unit, camera center -> splat center
  double center_depth;
  uint16_t label;
};

struct TileGrid {
  int tiles_x = 0, tiles_y = 0, tile_size = 16;
  // Sorted (by center depth, then index) candidate splat ids per tile.
  std::vector<std::vector<uint32_t>> bins;
};

SplatView make_splat_view(const Splat2D& splat, const CameraFrame& camera,
                          int sh_eval_degree);

// Conservative screen bounds via a bounding sphere of the 3-sigma disk.
// Returns false if the splat cannot reach the image.
bool screen_bounds(const SplatView& view, const CameraFrame& camera,
                   double near_clip, double* x0, double* x1, double* y0,
                   double* y1);

TileGrid build_tile_grid(const std::vector<SplatView>& views,
                         const CameraFrame& camera, const RenderOptions& options);

}  // namespace detail

}  // namespace unveil
