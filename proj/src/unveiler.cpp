#include "unveil/unveiler.hpp"

#include "unveil/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unveil {

SpatialGrid::SpatialGrid(const std::vector<Vec3>& points, double cell_size)
    : points_(points), cell_(std::max(cell_size, 1e-9)) {
  for (uint32_t i = 0; i < points.size(); ++i)
    cells_[key_of(points[i])].push_back(i);
}

SpatialGrid::CellKey SpatialGrid::key_of(const Vec3& p) const {
  return CellKey{int64_t(std::floor(p.x() / cell_)),
                 int64_t(std::floor(p.y() / cell_)),
                 int64_t(std::floor(p.z() / cell_))};
}

std::vector<uint32_t> SpatialGrid::radius_query(const Vec3& query,
                                                double radius) const {
  std::vector<uint32_t> out;
  const double r2 = radius * radius;
  const int span = int(std::ceil(radius / cell_));
  CellKey c = key_of(query);
  for (int dx = -span; dx <= span; ++dx)
    for (int dy = -span; dy <= span; ++dy)
      for (int dz = -span; dz <= span; ++dz) {
        auto it = cells_.find(CellKey{c.x + dx, c.y + dy, c.z + dz});
        if (it == cells_.end()) continue;
        for (uint32_t i : it->second)
          if ((points_[i] - query).squaredNorm() <= r2) out.push_back(i);
      }
  return out;
}

std::vector<double> SpatialGrid::knn_distances(const Vec3& query, int k,
                                               int64_t exclude_index) const {
  std::vector<double> best;
  double radius = cell_;
  for (int attempt = 0; attempt < 40; ++attempt) {
    std::vector<uint32_t> cand = radius_query(query, radius);
    best.clear();
    for (uint32_t i : cand) {
      if (int64_t(i) == exclude_index) continue;
      best.push_back((points_[i] - query).norm());
    }
    std::sort(best.begin(), best.end());
    if (int(best.size()) >= k) {
      best.resize(k);
      // Candidates beyond `radius` may still be closer than the k-th found;
      // accept only when the k-th distance fits inside the searched ball.
      if (best.back() <= radius) return best;
    }
    radius *= 2.0;
  }
  if (int(best.size()) > k) best.resize(k);
  return best;
}

std::vector<uint32_t> select_removable(const Scene& scene,
                                       const std::set<uint16_t>& labels) {
  for (uint16_t l : labels)
    if (!scene.palette.is_removable(l))
      throw std::invalid_argument("select_removable: label " +
                                  std::to_string(l) + " is not removable");
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < scene.splats.size(); ++i)
    if (labels.count(scene.splats[i].label)) out.push_back(i);
  return out;
}

std::vector<uint32_t> expand_by_proximity(const Scene& scene,
                                          std::span<const uint32_t> seed,
                                          double radius) {
  if (radius < 0) throw std::invalid_argument("expand_by_proximity: radius < 0");
  std::vector<uint8_t> in_set(scene.splats.size(), 0);
  for (uint32_t i : seed) in_set[i] = 1;
  if (radius > 0 && !seed.empty()) {
    std::vector<Vec3> centers(scene.splats.size());
    for (size_t i = 0; i < scene.splats.size(); ++i)
      centers[i] = scene.splats[i].center_d();
    SpatialGrid grid(centers, radius);
    for (uint32_t s : seed)
      for (uint32_t i : grid.radius_query(centers[s], radius)) in_set[i] = 1;
  }
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < in_set.size(); ++i)
    if (in_set[i]) out.push_back(i);
  return out;
}

Scene scene_without(const Scene& scene, std::span<const uint32_t> removed) {
  std::vector<uint8_t> gone(scene.splats.size(), 0);
  for (uint32_t i : removed) gone[i] = 1;
  Scene out;
  out.environment = scene.environment;
  out.palette = scene.palette;
  out.sh_degree = scene.sh_degree;
  out.splats.reserve(scene.splats.size() - removed.size());
  for (size_t i = 0; i < scene.splats.size(); ++i)
    if (!gone[i]) out.splats.push_back(scene.splats[i]);
  return out;
}

MaskImage dilate_mask(const MaskImage& mask, int radius) {
  if (radius <= 0) return mask;
  MaskImage out = MaskImage::zeros(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          int nx = x + dx, ny = y + dy;
          if (nx >= 0 && nx < mask.width && ny >= 0 && ny < mask.height)
            out.at(nx, ny) = 1;
        }
    }
  return out;
}

MaskImage object_projection_mask(const Scene& scene, const RemovalSet& removal,
                                 const CameraFrame& camera,
                                 const RenderOptions& options) {
  Scene only_removed;
  only_removed.environment = scene.environment;
  only_removed.palette = scene.palette;
  only_removed.sh_degree = scene.sh_degree;
  for (uint32_t i : removal.indices) only_removed.splats.push_back(scene.splats[i]);

  RenderOptions opt = options;
  opt.include_environment = false;
  RenderBuffers buf = render(only_removed, camera, opt);
  MaskImage out = MaskImage::zeros(camera.width, camera.height);
  for (size_t p = 0; p < buf.npix(); ++p)
    out.data[p] = buf.alpha[p] > kMinBlendWeight ? 1 : 0;
  return out;
}

InpaintMask generate_inpaint_mask(const Scene& scene, const RemovalSet& removal,
                                  const CameraFrame& camera,
                                  const MaskOptions& options) {
  if (options.threshold <= 0 || options.threshold > 1)
    throw std::invalid_argument("generate_inpaint_mask: threshold out of (0,1]");
  Scene remaining = scene_without(scene, removal.indices);
  RenderOptions opt = options.render;
  opt.include_environment = false;  // sky alpha must be allowed to stay low
  RenderBuffers buf = render(remaining, camera, opt);

  MaskImage low_alpha = MaskImage::zeros(camera.width, camera.height);
  for (size_t p = 0; p < buf.npix(); ++p)
    low_alpha.data[p] = buf.alpha[p] < options.threshold ? 1 : 0;
  if (options.dilate) low_alpha = dilate_mask(low_alpha, 1);

  // Restrict to the removed objects' own projection so that pixels that never
  // had coverage (sky) are not flagged for inpainting.
  MaskImage projection = object_projection_mask(scene, removal, camera, options.render);
  InpaintMask out;
  out.threshold = options.threshold;
  out.time_index = camera.time_index;
  out.mask = MaskImage::zeros(camera.width, camera.height);
  for (size_t p = 0; p < out.mask.data.size(); ++p)
    out.mask.data[p] = (low_alpha.data[p] && projection.data[p]) ? 1 : 0;
  return out;
}

std::vector<Region> classify_regions(const Scene& scene,
                                     const RemovalSet& removal,
                                     const CameraFrame& camera,
                                     const MaskOptions& options) {
  MaskImage projection = object_projection_mask(scene, removal, camera, options.render);
  InpaintMask inpaint = generate_inpaint_mask(scene, removal, camera, options);
  std::vector<Region> out(projection.data.size(), Region::kObserved);
  for (size_t p = 0; p < out.size(); ++p) {
    if (inpaint.mask.data[p])
      out[p] = Region::kUnobservable;
    else if (projection.data[p])
      out[p] = Region::kPartial;
  }
  return out;
}

}  // namespace unveil
