#include "unveil/train_loop.hpp"

#include "unveil/spatial.hpp"

#include <cmath>
#include <stdexcept>

namespace unveil {

TrainConfig train_config_from(const Config& c) {
  TrainConfig t;
  t.stage1_steps = c.get_int("train.stage1_steps");
  t.stage2_steps = c.get_int("train.stage2_steps");
  t.retrain_steps = c.get_int("train.retrain_steps");
  t.densify_interval = c.get_int("train.densify_interval");
  t.densify_grad_threshold = c.get_double("train.densify_grad_threshold");
  t.densify_scale_frac = c.get_double("train.densify_scale_frac");
  t.split_scale_divisor = c.get_double("train.split_scale_divisor");
  t.prune_floor = c.get_double("train.prune_floor");
  t.prune_epsilon = c.get_double("train.prune_epsilon");
  t.prune_interval = c.get_int("train.prune_interval");
  t.max_splats = size_t(c.get_int64("train.max_splats"));
  t.init_opacity = c.get_double("train.init_opacity");
  t.lr_center = c.get_double("train.lr_center");
  t.lr_center_final_frac = c.get_double("train.lr_center_final_frac");
  t.lr_rotation = c.get_double("train.lr_rotation");
  t.lr_scale = c.get_double("train.lr_scale");
  t.lr_opacity = c.get_double("train.lr_opacity");
  t.lr_sh = c.get_double("train.lr_sh");
  t.lr_env = c.get_double("train.lr_env");
  t.adam.beta1 = c.get_double("train.adam_beta1");
  t.adam.beta2 = c.get_double("train.adam_beta2");
  t.adam.eps = c.get_double("train.adam_eps");
  t.weights.lambda_ssim = c.get_double("loss.lambda_ssim");
  t.weights.lambda_d = c.get_double("loss.lambda_d");
  t.weights.lambda_n = c.get_double("loss.lambda_n");
  t.weights.lambda_ds = c.get_double("loss.lambda_ds");
  t.weights.lambda_s = c.get_double("loss.lambda_s");
  t.weights.lambda_alpha = c.get_double("loss.lambda_alpha");
  t.sh_degree = c.get_int("scene.sh_degree");
  t.env_height = c.get_int("scene.env_height");
  t.env_width = c.get_int("scene.env_width");
  t.proximity_radius_frac = c.get_double("unveil.proximity_radius_frac");
  t.proximity_radius = c.get_double("unveil.proximity_radius");
  t.reopt_radius = c.get_double("unveil.reopt_radius");
  t.alpha_threshold = c.get_double("unveil.alpha_threshold");
  t.mask_dilation = c.get_int("unveil.mask_dilation");
  t.keyframe_stride = c.get_int("unveil.keyframe_stride");
  t.visibility_delta_frac = c.get_double("unveil.visibility_delta_frac");
  t.min_reference_pixels = size_t(c.get_int64("unveil.min_reference_pixels"));
  t.seed = uint64_t(c.get_int64("train.seed"));
  t.render.tile_size = c.get_int("render.tile_size");
  t.render.near_clip = c.get_double("render.near_clip");
  t.render.threads = c.get_int("run.threads");
  t.render.sh_eval_degree = t.sh_degree;
  return t;
}

Scene init_from_points(const std::vector<PointRecord>& points,
                       const SemanticPalette& palette, const TrainConfig& cfg) {
  if (points.empty())
    throw std::invalid_argument("init_from_points: empty point list");
  constexpr double kShC0 = 0.28209479177387814;

  Scene scene;
  scene.palette = palette;
  scene.sh_degree = cfg.sh_degree;
  scene.environment.resize(cfg.env_height, cfg.env_width, 0.5f);

  std::vector<Vec3> positions(points.size());
  Vec3 lo = points[0].position, hi = points[0].position;
  for (size_t i = 0; i < points.size(); ++i) {
    positions[i] = points[i].position;
    lo = lo.cwiseMin(positions[i]);
    hi = hi.cwiseMax(positions[i]);
  }
  const double diag = (hi - lo).norm();

  std::unique_ptr<SpatialGrid> grid;
  if (points.size() > 1) {
    double cell = std::max(diag / std::cbrt(double(points.size())), 1e-6);
    grid = std::make_unique<SpatialGrid>(positions, cell);
  }

  const float opacity_logit = float(logit(cfg.init_opacity));
  scene.splats.reserve(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const PointRecord& p = points[i];
    Splat2D s;
    s.center = p.position.cast<float>();
    s.rotation = Eigen::Vector4f(1.f, 0.f, 0.f, 0.f);
    double scale = 0.1 * std::max(diag, 1.0);
    if (grid) {
      std::vector<double> nn = grid->knn_distances(p.position, 3, int64_t(i));
      if (!nn.empty()) {
        double mean = 0;
        for (double d : nn) mean += d;
        scale = std::max(mean / double(nn.size()), 1e-6);
      }
    }
    s.log_scales = Eigen::Vector2f::Constant(float(std::log(scale)));
    s.opacity_logit = opacity_logit;
    s.label = p.label;
    for (int c = 0; c < 3; ++c)
      s.set_sh_coeff(0, c, (p.color[c] - 0.5) / kShC0);
    scene.splats.push_back(s);
  }
  scene.validate();
  return scene;
}

namespace {

struct StepContext {
  LrTable lr;
  LossWeights weights;
};

// One render/loss/backward/update cycle on a single frame.
LossBreakdown train_step(Scene& scene, const TrainFrame& frame,
                         const TrainConfig& cfg, const StepContext& ctx,
                         OptimState& state,
                         const std::vector<uint8_t>* active = nullptr,
                         bool freeze_environment = false,
                         bool retrain_objective = false) {
  RenderBuffers buf = render(scene, frame.camera, cfg.render);
  BufferGrads upstream;
  upstream.resize_like(buf);
  std::vector<double> shrink_grads;
  LossBreakdown breakdown;
  if (retrain_objective) {
    RetrainBreakdown rb =
        loss_retrain(buf, frame.image, frame.camera, ctx.weights, &upstream);
    breakdown.rgb = rb.l1;
    breakdown.depth_distortion = rb.depth_distortion;
    breakdown.normal_consistency = rb.normal_consistency;
    breakdown.total = rb.total;
  } else {
    breakdown = loss_total(scene, frame.camera, buf, frame.image, frame.labels,
                           ctx.weights, &upstream, &shrink_grads);
  }
  SplatGrads grads = backward(scene, frame.camera, buf, upstream, cfg.render);
  if (!shrink_grads.empty())
    for (size_t i = 0; i < shrink_grads.size(); ++i)
      grads.opacity[i] += shrink_grads[i];
  if (freeze_environment)
    std::fill(grads.environment.begin(), grads.environment.end(), 0.0);
  adam_step(scene, grads, state, ctx.lr, cfg.adam, active);
  return breakdown;
}

double center_lr(const TrainConfig& cfg, double extent, int step, int horizon) {
  double frac = horizon > 0 ? std::clamp(double(step) / horizon, 0.0, 1.0) : 1.0;
  return cfg.lr_center * extent * std::pow(cfg.lr_center_final_frac, frac);
}

LrTable make_lr(const TrainConfig& cfg, double center) {
  LrTable lr;
  lr.center = center;
  lr.rotation = cfg.lr_rotation;
  lr.log_scales = cfg.lr_scale;
  lr.opacity = cfg.lr_opacity;
  lr.sh = cfg.lr_sh;
  lr.environment = cfg.lr_env;
  return lr;
}

}  // namespace

TrainLog train_stage1(Scene& scene, const std::vector<TrainFrame>& frames,
                      const TrainConfig& cfg) {
  if (frames.empty()) throw std::invalid_argument("train_stage1: no frames");
  TrainLog log;
  const double extent = std::max(scene_bounds(scene).diagonal(), 1e-6);
  OptimState state;
  state.init(scene.splats.size(), scene.environment.data.size());
  std::mt19937_64 rng(cfg.seed);

  StepContext ctx;
  ctx.weights = cfg.weights;
  ctx.weights.lambda_d = 0;   // geometry terms are stage-2 only
  ctx.weights.lambda_n = 0;
  ctx.weights.lambda_ds = 0;

  DensifyParams dp;
  dp.grad_threshold = cfg.densify_grad_threshold;
  dp.scale_split_frac = cfg.densify_scale_frac;
  dp.split_scale_divisor = cfg.split_scale_divisor;
  dp.prune_floor = cfg.prune_floor;
  dp.scene_extent = extent;
  dp.max_splats = cfg.max_splats;

  for (int step = 0; step < cfg.stage1_steps; ++step) {
    ctx.lr = make_lr(cfg, center_lr(cfg, extent, step, cfg.stage1_steps));
    const TrainFrame& frame = frames[size_t(step) % frames.size()];
    LossBreakdown b = train_step(scene, frame, cfg, ctx, state);
    log.loss_curve.push_back(b.total);
    if (cfg.densify_interval > 0 && step > 0 &&
        step % cfg.densify_interval == 0) {
      densify(scene, state, dp, rng);
    }
  }
  log.final_splats = scene.splats.size();
  return log;
}

TrainLog train_stage2(Scene& scene, const std::vector<TrainFrame>& frames,
                      const TrainConfig& cfg) {
  if (frames.empty()) throw std::invalid_argument("train_stage2: no frames");
  TrainLog log;
  const double extent = std::max(scene_bounds(scene).diagonal(), 1e-6);
  OptimState state;
  state.init(scene.splats.size(), scene.environment.data.size());

  StepContext ctx;
  ctx.weights = cfg.weights;
  ctx.lr = make_lr(cfg, center_lr(cfg, extent, cfg.stage1_steps, cfg.stage1_steps));

  for (int step = 0; step < cfg.stage2_steps; ++step) {
    const TrainFrame& frame = frames[size_t(step) % frames.size()];
    LossBreakdown b = train_step(scene, frame, cfg, ctx, state);
    log.loss_curve.push_back(b.total);
    if (cfg.prune_interval > 0 && step > 0 && step % cfg.prune_interval == 0) {
      std::vector<int32_t> kept = prune_low_opacity(scene, cfg.prune_epsilon);
      state.remap(kept);
    }
  }
  log.final_splats = scene.splats.size();
  return log;
}

TrainLog reoptimize(Scene& scene, const RemovalSet& removal,
                    const std::vector<TrainFrame>& pseudo_frames,
                    const TrainConfig& cfg) {
  if (pseudo_frames.empty())
    throw std::invalid_argument("reoptimize: no pseudo-label frames");
  TrainLog log;

  // Unfreeze radius is measured from the removed splat centers, captured
  // before deletion.
  std::vector<Vec3> removed_centers;
  removed_centers.reserve(removal.indices.size());
  for (uint32_t i : removal.indices)
    removed_centers.push_back(scene.splats[i].center_d());

  const double extent = std::max(scene_bounds(scene).diagonal(), 1e-6);
  double radius = cfg.reopt_radius > 0 ? cfg.reopt_radius
                  : (cfg.proximity_radius > 0 ? cfg.proximity_radius
                                              : cfg.proximity_radius_frac * extent);

  scene = scene_without(scene, removal.indices);

  std::vector<uint8_t> active(scene.splats.size(), 0);
  if (!removed_centers.empty() && !scene.splats.empty()) {
    std::vector<Vec3> centers(scene.splats.size());
    for (size_t i = 0; i < scene.splats.size(); ++i)
      centers[i] = scene.splats[i].center_d();
    SpatialGrid grid(centers, std::max(radius, 1e-6));
    for (const Vec3& rc : removed_centers)
      for (uint32_t i : grid.radius_query(rc, radius)) active[i] = 1;
  }

  OptimState state;
  state.init(scene.splats.size(), scene.environment.data.size());

  StepContext ctx;
  ctx.weights = cfg.weights;
  ctx.lr = make_lr(cfg, cfg.lr_center * extent);

  for (int step = 0; step < cfg.retrain_steps; ++step) {
    const TrainFrame& frame = pseudo_frames[size_t(step) % pseudo_frames.size()];
    LossBreakdown b = train_step(scene, frame, cfg, ctx, state, &active,
                                 /*freeze_environment=*/true,
                                 /*retrain_objective=*/true);
    log.loss_curve.push_back(b.total);
  }
  log.final_splats = scene.splats.size();
  return log;
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= double(a.data.size());
  if (mse <= 0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double masked_psnr(const Image& a, const Image& b, const MaskImage& mask) {
  if (!a.same_shape(b)) throw std::invalid_argument("masked_psnr: shape mismatch");
  double mse = 0;
  size_t count = 0;
  for (size_t p = 0; p < mask.data.size(); ++p) {
    if (!mask.data[p]) continue;
    for (int c = 0; c < a.channels; ++c) {
      double d = a.data[p * a.channels + c] - b.data[p * a.channels + c];
      mse += d * d;
      ++count;
    }
  }
  if (count == 0) return 99.0;
  mse /= double(count);
  if (mse <= 0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

MetricsReport evaluate(const Scene& scene,
                       const std::vector<CameraFrame>& cameras,
                       const std::vector<Image>& gt_images,
                       const std::vector<MaskImage>* masks,
                       const RenderOptions& options) {
  if (cameras.size() != gt_images.size())
    throw std::invalid_argument("evaluate: frame/image count mismatch");
  if (masks && masks->size() != cameras.size())
    throw std::invalid_argument("evaluate: mask count mismatch");
  MetricsReport report;
  for (size_t i = 0; i < cameras.size(); ++i) {
    RenderBuffers buf = render(scene, cameras[i], options);
    Image rendered;
    rendered.width = buf.width;
    rendered.height = buf.height;
    rendered.channels = 3;
    rendered.data = buf.color;
    if (!rendered.same_shape(gt_images[i]))
      throw std::invalid_argument("evaluate: image shape mismatch");
    FrameMetrics m;
    m.time_index = cameras[i].time_index;
    m.psnr = psnr(rendered, gt_images[i]);
    m.ssim = ssim(rendered, gt_images[i], false).mean;
    if (masks) {
      const MaskImage& mask = (*masks)[i];
      if (mask.count() > 0) {
        m.masked_psnr = masked_psnr(rendered, gt_images[i], mask);
        m.has_mask = true;
        report.mean_masked_psnr += m.masked_psnr;
        report.masked_frames += 1;
      }
    }
    report.mean_psnr += m.psnr;
    report.mean_ssim += m.ssim;
    report.frames.push_back(m);
  }
  report.mean_psnr /= double(report.frames.size());
  report.mean_ssim /= double(report.frames.size());
  if (report.masked_frames > 0)
    report.mean_masked_psnr /= double(report.masked_frames);
  return report;
}

}  // namespace unveil
