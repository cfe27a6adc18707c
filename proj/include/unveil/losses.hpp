#pragma once

#include "unveil/image.hpp"
#include "unveil/rasterizer.hpp"

#include <span>

namespace unveil {

struct LossWeights {
  double lambda_ssim = 0.2;
  double lambda_d = 100.0;
  double lambda_n = 0.05;
  double lambda_ds = 100.0;
  double lambda_s = 0.1;
  double lambda_alpha = 0.001;
};

// Per-pixel loss gradients with respect to each render buffer. Shapes mirror
// RenderBuffers; losses accumulate weighted contributions in place.
struct BufferGrads {
  int width = 0, height = 0, num_classes = 0;
  std::vector<double> color;
  std::vector<double> alpha;
  std::vector<double> depth;
  std::vector<double> normal;
  std::vector<double> semantic;
  std::vector<double> distortion;
  std::vector<double> per_class_distortion;

  void resize_like(const RenderBuffers& buf);
};

struct SsimResult {
  double mean = 0;
  std::vector<double> grad;  // d(mean)/d(first image), empty unless requested
};

// Mean SSIM over all pixels and channels, 11x11 Gaussian window (sigma 1.5),
// zero-padded "same" convolution, C1=0.01^2, C2=0.03^2.
SsimResult ssim(const Image& img, const Image& ref, bool with_grad);

// (1-lambda)*L1 + lambda*(1-SSIM)/2 against the target image.
double loss_rgb(const RenderBuffers& buf, const Image& target,
                double lambda_ssim, BufferGrads* upstream, double weight = 1.0);

// Mean of the per-pixel depth-distortion accumulator.
double loss_depth_distortion(const RenderBuffers& buf, BufferGrads* upstream,
                             double weight = 1.0);

// Alpha-weighted disagreement between rendered splat normals and normals
// estimated from the depth buffer, averaged over pixels with alpha > 0.5.
double loss_normal_consistency(const RenderBuffers& buf,
                               const CameraFrame& camera, BufferGrads* upstream,
                               double weight = 1.0);

// Cross-entropy of the alpha-normalized semantic distribution against target
// label ids; pixels with alpha < 1e-4 are excluded.
double loss_semantic(const RenderBuffers& buf,
                     std::span<const uint16_t> target_labels,
                     BufferGrads* upstream, double weight = 1.0);

// Sum over classes of the mean per-class distortion map.
double loss_semantic_distortion(const RenderBuffers& buf, BufferGrads* upstream,
                                double weight = 1.0);

// Mean splat opacity; gradients go to the opacity logits directly.
double loss_shrink(const Scene& scene, std::vector<double>* opacity_logit_grads,
                   double weight = 1.0);

struct LossBreakdown {
  double rgb = 0;
  double depth_distortion = 0;
  double normal_consistency = 0;
  double semantic = 0;
  double semantic_distortion = 0;
  double shrink = 0;
  double total = 0;
};

// Weighted training objective. Terms with zero weight are skipped entirely,
// so their upstream gradients are exactly zero.
LossBreakdown loss_total(const Scene& scene, const CameraFrame& camera,
                         const RenderBuffers& buf, const Image& target,
                         std::span<const uint16_t> target_labels,
                         const LossWeights& weights, BufferGrads* upstream,
                         std::vector<double>* opacity_logit_grads);

struct RetrainBreakdown {
  double l1 = 0;
  double depth_distortion = 0;
  double normal_consistency = 0;
  double total = 0;
};

// Re-optimization objective: L1 against the pseudo-label plus the weighted
// geometry terms. No SSIM, no semantic terms.
RetrainBreakdown loss_retrain(const RenderBuffers& buf, const Image& pseudo_label,
                              const CameraFrame& camera,
                              const LossWeights& weights, BufferGrads* upstream);

}  // namespace unveil
