#pragma once

#include "unveil/config.hpp"
#include "unveil/grad_engine.hpp"
#include "unveil/losses.hpp"
#include "unveil/ply.hpp"
#include "unveil/unveiler.hpp"

#include <random>

namespace unveil {

struct TrainConfig {
  int stage1_steps = 2000;
  int stage2_steps = 1000;
  int retrain_steps = 800;
  int densify_interval = 100;
  double densify_grad_threshold = 2e-4;
  double densify_scale_frac = 0.01;
  double split_scale_divisor = 1.6;
  double prune_floor = 0.005;
  double prune_epsilon = 0.3;
  int prune_interval = 100;
  size_t max_splats = 60000;
  double init_opacity = 0.1;

  double lr_center = 1.6e-4;  // scaled by the scene extent
  double lr_center_final_frac = 0.01;
  double lr_rotation = 1e-3;
  double lr_scale = 5e-3;
  double lr_opacity = 5e-2;
  double lr_sh = 2.5e-3;
  double lr_env = 1e-2;
  AdamParams adam;
  LossWeights weights;

  int sh_degree = 3;
  int env_height = 64;
  int env_width = 128;

  double proximity_radius_frac = 0.02;
  double proximity_radius = 0;  // absolute override when > 0
  double reopt_radius = 0;      // unfreeze radius; falls back to proximity
  double alpha_threshold = 0.99;
  int mask_dilation = 1;
  int keyframe_stride = 10;
  double visibility_delta_frac = 0.01;
  size_t min_reference_pixels = 16;

  uint64_t seed = 1;
  RenderOptions render;
};

TrainConfig train_config_from(const Config& config);

struct TrainFrame {
  CameraFrame camera;
  Image image;
  std::vector<uint16_t> labels;  // empty when semantic supervision is off
};

struct TrainLog {
  std::vector<double> loss_curve;
  size_t final_splats = 0;
};

// One splat per point: position copied, color into the SH DC term, isotropic
// scale from the mean distance to the 3 nearest neighbors, identity rotation,
// opacity at the configured initial value, label copied.
Scene init_from_points(const std::vector<PointRecord>& points,
                       const SemanticPalette& palette, const TrainConfig& cfg);

// Stage 1: photometric + semantic + shrinking objectives with adaptive
// density control; geometry losses are disabled.
TrainLog train_stage1(Scene& scene, const std::vector<TrainFrame>& frames,
                      const TrainConfig& cfg);

// Stage 2: full objective, periodic opacity pruning, no densification.
TrainLog train_stage2(Scene& scene, const std::vector<TrainFrame>& frames,
                      const TrainConfig& cfg);

// Deletes the removal set, then optimizes the retrain objective against the
// pseudo-labels while updating only splats within the unfreeze radius of a
// removed center. Everything else is bit-identical afterwards.
TrainLog reoptimize(Scene& scene, const RemovalSet& removal,
                    const std::vector<TrainFrame>& pseudo_frames,
                    const TrainConfig& cfg);

double psnr(const Image& a, const Image& b);  // capped at 99 dB
double masked_psnr(const Image& a, const Image& b, const MaskImage& mask);

struct FrameMetrics {
  int time_index = 0;
  double psnr = 0;
  double ssim = 0;
  double masked_psnr = 0;
  bool has_mask = false;
};

struct MetricsReport {
  std::vector<FrameMetrics> frames;
  double mean_psnr = 0;
  double mean_ssim = 0;
  double mean_masked_psnr = 0;
  size_t masked_frames = 0;
};

MetricsReport evaluate(const Scene& scene,
                       const std::vector<CameraFrame>& cameras,
                       const std::vector<Image>& gt_images,
                       const std::vector<MaskImage>* masks,
                       const RenderOptions& options);

}  // namespace unveil
