#pragma once

#include "unveil/image.hpp"
#include "unveil/rasterizer.hpp"

#include <set>
#include <span>

namespace unveil {

struct RemovalSet {
  std::vector<uint32_t> indices;  // sorted, unique
  double radius = 0;              // proximity expansion used to build it
  std::set<uint16_t> labels;      // originating labels
};

struct InpaintMask {
  MaskImage mask;
  double threshold = 0.99;
  int time_index = 0;
};

enum class Region : uint8_t { kObserved = 0, kPartial = 1, kUnobservable = 2 };

// Exactly the splats whose label is in `labels`. Throws if a requested label
// is not flagged removable in the palette.
std::vector<uint32_t> select_removable(const Scene& scene,
                                       const std::set<uint16_t>& labels);

// seed plus every splat whose center lies within `radius` of any seed center.
// Sorted output, independent of splat order.
std::vector<uint32_t> expand_by_proximity(const Scene& scene,
                                          std::span<const uint32_t> seed,
                                          double radius);

struct MaskOptions {
  double threshold = 0.99;   // alpha threshold for unobservable pixels
  bool dilate = true;        // one-pixel dilation to absorb cutoff aliasing
  RenderOptions render;      // environment is always excluded for masking
};

// Mask of the completely unobservable region for one frame: pixels inside the
// removed objects' projection whose post-removal alpha (environment excluded)
// falls below the threshold. The scene is left untouched.
InpaintMask generate_inpaint_mask(const Scene& scene, const RemovalSet& removal,
                                  const CameraFrame& camera,
                                  const MaskOptions& options = {});

// Pixels where the removed splats alone render alpha above the minimum blend
// weight (the full-object mask).
MaskImage object_projection_mask(const Scene& scene, const RemovalSet& removal,
                                 const CameraFrame& camera,
                                 const RenderOptions& options = {});

// Per-pixel {observed, partial, unobservable} decomposition; the three
// regions partition the image.
std::vector<Region> classify_regions(const Scene& scene,
                                     const RemovalSet& removal,
                                     const CameraFrame& camera,
                                     const MaskOptions& options = {});

// Scene copy without the given (sorted) splat indices.
Scene scene_without(const Scene& scene, std::span<const uint32_t> removed);

MaskImage dilate_mask(const MaskImage& mask, int radius);

}  // namespace unveil
