#include "unveil/rasterizer.hpp"

#include "unveil/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unveil {

void RenderBuffers::resize(int w, int h, int k) {
  width = w;
  height = h;
  num_classes = k;
  size_t n = size_t(w) * h;
  color.assign(n * 3, 0.0);
  alpha.assign(n, 0.0);
  depth.assign(n, 0.0);
  normal.assign(n * 3, 0.0);
  semantic.assign(n * size_t(k), 0.0);
  distortion.assign(n, 0.0);
  per_class_distortion.assign(n * size_t(k), 0.0);
}

std::optional<Vec3> intersect(const Splat2D& splat, const CameraFrame& camera,
                              double px, double py, double near_clip) {
  TangentFrame f = tangent_frame(splat);
  Vec3 o = camera.camera_center();
  Vec3 d = camera.ray_dir(px, py);
  double denom = d.dot(f.n);
  if (std::abs(denom) < 1e-9) return std::nullopt;
  Vec3 m = splat.center_d() - o;
  double z = m.dot(f.n) / denom;
  if (z <= near_clip) return std::nullopt;
  Vec3 w = o + z * d - splat.center_d();
  double u = w.dot(f.t_u) / splat.scale_u();
  double v = w.dot(f.t_v) / splat.scale_v();
  if (u * u + v * v > kCutoffRadiusSq) return std::nullopt;
  return Vec3(u, v, z);
}

PixelComposite composite_pixel(std::span<const PixelHit> hits, int num_classes,
                               const std::optional<Vec3>& env_color) {
  PixelComposite out;
  out.semantic.assign(num_classes, 0.0);
  out.per_class_distortion.assign(num_classes, 0.0);
  std::vector<double> class_w(num_classes, 0.0);
  std::vector<double> class_wz(num_classes, 0.0);

  double transmittance = 1.0;
  double acc_w = 0.0, acc_wz = 0.0, acc_depth = 0.0;
  for (const PixelHit& h : hits) {
    double a = h.opacity * gaussian_weight(h.u, h.v);
    if (a < kMinBlendWeight) continue;
    double w = a * transmittance;
    out.color += w * h.color;
    out.normal += w * h.normal;
    acc_depth += w * h.z;
    if (h.label < num_classes) {
      out.semantic[h.label] += w;
      out.per_class_distortion[h.label] +=
          w * (h.z * class_w[h.label] - class_wz[h.label]);
      class_w[h.label] += w;
      class_wz[h.label] += w * h.z;
    }
    out.distortion += w * (h.z * acc_w - acc_wz);
    acc_w += w;
    acc_wz += w * h.z;
    transmittance *= (1.0 - a);
  }
  out.alpha = acc_w;
  out.depth = acc_depth / std::max(acc_w, 1e-8);
  if (env_color) out.color += (1.0 - acc_w) * (*env_color);
  return out;
}

namespace detail {

SplatView make_splat_view(const Splat2D& splat, const CameraFrame& camera,
                          int sh_eval_degree) {
  SplatView v;
  v.center = splat.center_d();
  TangentFrame f = tangent_frame(splat);
  v.t_u = f.t_u;
  v.t_v = f.t_v;
  v.n = f.n;
  v.s_u = splat.scale_u();
  v.s_v = splat.scale_v();
  v.opacity = splat.opacity();
  v.view_dir = (v.center - camera.camera_center()).normalized();
  v.color_raw = sh_color(splat, v.view_dir, sh_eval_degree);
  v.color = v.color_raw.cwiseMax(0.0).cwiseMin(1.0);
  v.center_depth = camera.world_to_cam(v.center).z();
  v.label = splat.label;
  return v;
}

bool screen_bounds(const SplatView& view, const CameraFrame& camera,
                   double near_clip, double* x0, double* x1, double* y0,
                   double* y1) {
  const double r = 3.0 * std::max(view.s_u, view.s_v);
  Vec3 c = camera.world_to_cam(view.center);
  if (c.z() + r <= near_clip) return false;
  const double z_lo = std::max(near_clip, c.z() - r);
  const double z_hi = c.z() + r;
  auto range = [&](double center, double focal, double principal, double* lo,
                   double* hi) {
    double a = center - r, b = center + r;
    double vals[4] = {a / z_lo, a / z_hi, b / z_lo, b / z_hi};
    *lo = focal * *std::min_element(vals, vals + 4) + principal;
    *hi = focal * *std::max_element(vals, vals + 4) + principal;
  };
  range(c.x(), camera.fx, camera.cx, x0, x1);
  range(c.y(), camera.fy, camera.cy, y0, y1);
  return *x1 >= 0 && *x0 < camera.width && *y1 >= 0 && *y0 < camera.height;
}

TileGrid build_tile_grid(const std::vector<SplatView>& views,
                         const CameraFrame& camera,
                         const RenderOptions& options) {
  TileGrid grid;
  grid.tile_size = std::max(1, options.tile_size);
  grid.tiles_x = (camera.width + grid.tile_size - 1) / grid.tile_size;
  grid.tiles_y = (camera.height + grid.tile_size - 1) / grid.tile_size;
  grid.bins.assign(size_t(grid.tiles_x) * grid.tiles_y, {});

  for (uint32_t i = 0; i < views.size(); ++i) {
    const SplatView& v = views[i];
    if (options.semantic_filter && v.label != *options.semantic_filter) continue;
    double x0, x1, y0, y1;
    if (!screen_bounds(v, camera, options.near_clip, &x0, &x1, &y0, &y1)) continue;
    int tx0 = std::clamp(int(std::floor(x0)) / grid.tile_size, 0, grid.tiles_x - 1);
    int tx1 = std::clamp(int(std::floor(x1)) / grid.tile_size, 0, grid.tiles_x - 1);
    int ty0 = std::clamp(int(std::floor(y0)) / grid.tile_size, 0, grid.tiles_y - 1);
    int ty1 = std::clamp(int(std::floor(y1)) / grid.tile_size, 0, grid.tiles_y - 1);
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        grid.bins[size_t(ty) * grid.tiles_x + tx].push_back(i);
  }
  // Front-to-back order by center depth; index breaks ties deterministically.
  for (auto& bin : grid.bins) {
    std::stable_sort(bin.begin(), bin.end(), [&](uint32_t a, uint32_t b) {
      if (views[a].center_depth != views[b].center_depth)
        return views[a].center_depth < views[b].center_depth;
      return a < b;
    });
  }
  return grid;
}

}  // namespace detail

RenderBuffers render(const Scene& scene, const CameraFrame& camera,
                     const RenderOptions& options) {
  if (camera.width <= 0 || camera.height <= 0)
    throw std::invalid_argument("render: zero-sized image");
  const int K = scene.palette.num_classes();
  const int sh_deg = std::min(options.sh_eval_degree, scene.sh_degree);

  RenderBuffers buf;
  buf.resize(camera.width, camera.height, K);

  std::vector<detail::SplatView> views(scene.splats.size());
  for (size_t i = 0; i < scene.splats.size(); ++i)
    views[i] = detail::make_splat_view(scene.splats[i], camera, sh_deg);

  detail::TileGrid grid = detail::build_tile_grid(views, camera, options);
  const int n_tiles = grid.tiles_x * grid.tiles_y;

  parallel_for(n_tiles, options.threads, [&](int tile) {
    const int tx = tile % grid.tiles_x, ty = tile / grid.tiles_x;
    const int px0 = tx * grid.tile_size;
    const int py0 = ty * grid.tile_size;
    const int px1 = std::min(px0 + grid.tile_size, camera.width);
    const int py1 = std::min(py0 + grid.tile_size, camera.height);
    const auto& bin = grid.bins[tile];

    std::vector<double> class_w(K), class_wz(K);
    for (int py = py0; py < py1; ++py) {
      for (int px = px0; px < px1; ++px) {
        const double pcx = px + 0.5, pcy = py + 0.5;
        Vec3 o = camera.camera_center();
        Vec3 d = camera.ray_dir(pcx, pcy);
        std::fill(class_w.begin(), class_w.end(), 0.0);
        std::fill(class_wz.begin(), class_wz.end(), 0.0);

        double transmittance = 1.0;
        double acc_w = 0.0, acc_wz = 0.0, acc_depth = 0.0;
        Vec3 acc_color = Vec3::Zero(), acc_normal = Vec3::Zero();
        double acc_dist = 0.0;
        const size_t pix = size_t(py) * camera.width + px;
        double* sem = &buf.semantic[pix * K];

        for (uint32_t idx : bin) {
          if (transmittance < kMinTransmittance) break;
          const detail::SplatView& sv = views[idx];
          double denom = d.dot(sv.n);
          if (std::abs(denom) < 1e-9) continue;
          Vec3 m = sv.center - o;
          double z = m.dot(sv.n) / denom;
          if (z <= options.near_clip) continue;
          Vec3 w3 = o + z * d - sv.center;
          double u = w3.dot(sv.t_u) / sv.s_u;
          double v = w3.dot(sv.t_v) / sv.s_v;
          double r2 = u * u + v * v;
          if (r2 > kCutoffRadiusSq) continue;
          double a = sv.opacity * std::exp(-0.5 * r2);
          if (a < kMinBlendWeight) continue;

          double w = a * transmittance;
          acc_color += w * sv.color;
          // Flip the splat normal to face the camera along this ray.
          Vec3 n_face = (denom > 0) ? Vec3(-sv.n) : sv.n;
          acc_normal += w * n_face;
          acc_depth += w * z;
          if (sv.label < K) {
            sem[sv.label] += w;
            buf.per_class_distortion[size_t(sv.label) * buf.npix() + pix] +=
                w * (z * class_w[sv.label] - class_wz[sv.label]);
            class_w[sv.label] += w;
            class_wz[sv.label] += w * z;
          }
          acc_dist += w * (z * acc_w - acc_wz);
          acc_w += w;
          acc_wz += w * z;
          transmittance *= (1.0 - a);
        }

        if (options.include_environment)
          acc_color += (1.0 - acc_w) * scene.environment.sample(d);

        double* cp = buf.color_at(px, py);
        cp[0] = acc_color.x();
        cp[1] = acc_color.y();
        cp[2] = acc_color.z();
        buf.alpha[pix] = acc_w;
        buf.depth[pix] = acc_depth / std::max(acc_w, 1e-8);
        Vec3 n_cam = camera.rotation * acc_normal;  // buffer is camera space
        buf.normal[pix * 3 + 0] = n_cam.x();
        buf.normal[pix * 3 + 1] = n_cam.y();
        buf.normal[pix * 3 + 2] = n_cam.z();
        buf.distortion[pix] = acc_dist;
      }
    }
  });
  return buf;
}

std::vector<double> render_per_class_distortion(const Scene& scene,
                                                const CameraFrame& camera,
                                                uint16_t label,
                                                const RenderOptions& options) {
  RenderBuffers buf = render(scene, camera, options);
  size_t n = buf.npix();
  std::vector<double> map(n, 0.0);
  if (label < buf.num_classes)
    std::copy_n(buf.per_class_distortion.begin() + size_t(label) * n, n,
                map.begin());
  return map;
}

}  // namespace unveil
