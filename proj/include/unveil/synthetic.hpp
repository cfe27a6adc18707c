#pragma once

#include "unveil/core_types.hpp"
#include "unveil/image.hpp"
#include "unveil/ply.hpp"

#include <optional>
#include <string>
#include <vector>

namespace unveil {

struct SynthParams {
  int frames = 30;
  int width = 80;
  int height = 60;
  int boxes = 2;
  uint64_t seed = 7;
  double ground_spacing = 0.16;  // synthetic lidar sample spacing (meters)
};

// Analytic world: textured ground plane, one textured wall, box "vehicles"
// resting on the ground, and a smooth sky. World axes: x right, y down,
// z forward; cameras drive forward along +z.
struct SynthGeometry {
  struct Box {
    Vec3 lo, hi;  // axis-aligned, lo < hi componentwise
    Vec3 base_color;
  };
  std::vector<Box> boxes;
  double ground_y = 1.5;
  double wall_x = 4.0;
  double wall_top_y = -1.8;  // y-down: smaller is higher
  double x_min = -8.0, x_max = 8.0;
  double z_min = -2.0, z_max = 40.0;

  Vec3 ground_color(double x, double z) const;
  Vec3 wall_color(double y, double z) const;
  Vec3 box_color(int box, const Vec3& face_normal) const;
  Vec3 sky_color(const Vec3& dir) const;
};

struct SurfaceHit {
  double t = 0;        // ray parameter (camera depth for z-normalized rays)
  int surface = -1;    // 0 ground, 1 wall, 2+i box i
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
};

std::optional<SurfaceHit> synth_raycast(const SynthGeometry& geom,
                                        const Vec3& origin, const Vec3& dir,
                                        bool include_boxes,
                                        double near = 1e-4);

// True when P is visible from at least one camera: inside the frustum, in
// front of the near plane, and not occluded by any box.
bool synth_observed(const SynthGeometry& geom,
                    const std::vector<CameraFrame>& cameras, const Vec3& point,
                    double near = 0.2);

struct SyntheticDataset {
  SynthParams params;
  SynthGeometry geometry;
  SemanticPalette palette;
  std::vector<CameraFrame> cameras;
  std::vector<Image> gt_full;    // training images (with boxes)
  std::vector<Image> gt_empty;   // ground truth after unveiling
  std::vector<std::vector<uint16_t>> gt_labels;
  std::vector<MaskImage> gt_unobservable;  // completely unobservable region
  std::vector<PointRecord> points;         // synthetic lidar
};

SynthGeometry synth_geometry(const SynthParams& params);
SyntheticDataset generate_synthetic_scene(const SynthParams& params);

// Writes manifest.json, images/, semantic/, points.ply plus the ground-truth
// extras (gt_empty/, gt_masks/) used by evaluation.
void write_synthetic_dataset(const SyntheticDataset& data,
                             const std::string& dir);

}  // namespace unveil
