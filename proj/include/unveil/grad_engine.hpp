#pragma once

#include "unveil/losses.hpp"
#include "unveil/rasterizer.hpp"

#include <random>

namespace unveil {

// Gradients of the rendered-and-lost objective with respect to every
// learnable parameter. Labels are hard and carry no gradient.
struct SplatGrads {
  size_t num_splats = 0;
  std::vector<double> center;      // 3N
  std::vector<double> rotation;    // 4N, w.r.t. the raw stored quaternion
  std::vector<double> log_scales;  // 2N
  std::vector<double> opacity;     // N, w.r.t. the logit
  std::vector<double> sh;          // kMaxShCoeffs * N
  std::vector<double> environment; // He*We*3
  // Screen-space position gradient magnitude per splat for this frame, plus
  // whether the splat contributed at all (densification statistics).
  std::vector<double> screen_grad;
  std::vector<uint8_t> touched;

  void resize(size_t n, size_t env_size);
  bool finite() const;
};

// Reverse-mode gradients of the composited buffers. `upstream` holds per-pixel
// loss gradients for each buffer; empty vectors mean zero. The render options
// must match the forward pass.
SplatGrads backward(const Scene& scene, const CameraFrame& camera,
                    const RenderBuffers& buffers, const BufferGrads& upstream,
                    const RenderOptions& options = {});

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

struct LrTable {
  double center = 1.6e-4;
  double rotation = 1e-3;
  double log_scales = 5e-3;
  double opacity = 5e-2;
  double sh = 2.5e-3;
  double environment = 1e-2;
};

struct OptimState {
  int64_t step = 0;
  std::vector<double> m_center, v_center;
  std::vector<double> m_rotation, v_rotation;
  std::vector<double> m_log_scales, v_log_scales;
  std::vector<double> m_opacity, v_opacity;
  std::vector<double> m_sh, v_sh;
  std::vector<double> m_env, v_env;
  // Accumulated screen-space gradient norm and frame count per splat.
  std::vector<double> grad_accum;
  std::vector<int> grad_count;

  void init(size_t num_splats, size_t env_size);
  // Remaps per-splat state after densify/prune: entry i of `source_of` names
  // the previous splat whose state the new splat i inherits, or -1 for a
  // freshly created splat (zeroed moments).
  void remap(const std::vector<int32_t>& source_of);
  void reset_densify_stats();
  size_t num_splats() const { return m_opacity.size(); }
};

// One Adam update over all parameter groups. Rotations are renormalized and
// the environment grid is clamped to [0,1] afterwards. When `active` is given,
// splats with active[i] == 0 are left untouched (parameters and moments).
void adam_step(Scene& scene, const SplatGrads& grads, OptimState& state,
               const LrTable& lr, const AdamParams& params = {},
               const std::vector<uint8_t>* active = nullptr);

struct DensifyParams {
  double grad_threshold = 2e-4;      // mean screen-space gradient trigger
  double scale_split_frac = 0.01;    // split when max scale > frac * extent
  double split_scale_divisor = 1.6;
  double prune_floor = 0.005;        // opacity prune during densification
  double scene_extent = 1.0;
  size_t max_splats = 200000;
};

struct DensifyReport {
  // source_of[i] is the previous index of the splat now at i, or -1 if new.
  std::vector<int32_t> source_of;
  int cloned = 0;
  int split = 0;
  int pruned = 0;
};

// Adaptive density control: clones small high-gradient splats, splits large
// ones into two children with scales divided by split_scale_divisor, prunes
// near-transparent splats. Children inherit the parent label verbatim.
// Densification statistics are consumed and reset.
DensifyReport densify(Scene& scene, OptimState& state,
                      const DensifyParams& params, std::mt19937_64& rng);

// Removes exactly the splats with opacity below epsilon. Returns the previous
// index of each surviving splat; the caller remaps any optimizer state.
std::vector<int32_t> prune_low_opacity(Scene& scene, double epsilon);

}  // namespace unveil
