#pragma once

#include "unveil/rasterizer.hpp"

namespace unveil::testing {

// Straight-line per-pixel reference compositor: no tiling, no binning, no
// incremental accumulators. Every splat is tested against every pixel by
// solving the full 3x3 ray-plane system; hits are sorted by camera-space
// center depth (ties by index) and composited with the textbook formulas;
// distortion is the explicit pairwise double sum. Used as the oracle for the
// production renderer.
RenderBuffers reference_render(const Scene& scene, const CameraFrame& camera,
                               const RenderOptions& options = {});

}  // namespace unveil::testing
