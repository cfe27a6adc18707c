#include "unveil/synthetic.hpp"

#include "unveil/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <random>

namespace unveil {

namespace fs = std::filesystem;

Vec3 SynthGeometry::ground_color(double x, double z) const {
  return Vec3(0.42 + 0.12 * std::sin(0.50 * x + 0.8) + 0.06 * std::sin(0.23 * z),
              0.40 + 0.10 * std::sin(0.41 * x - 0.3) + 0.06 * std::sin(0.19 * z + 1.0),
              0.38 + 0.08 * std::sin(0.30 * x) + 0.05 * std::sin(0.29 * z + 2.0));
}

Vec3 SynthGeometry::wall_color(double y, double z) const {
  return Vec3(0.55 + 0.10 * std::sin(0.70 * z) + 0.05 * std::sin(2.1 * y),
              0.50 + 0.08 * std::sin(0.60 * z + 1.0) + 0.04 * std::sin(1.7 * y),
              0.45 + 0.06 * std::sin(0.50 * z + 2.0));
}

Vec3 SynthGeometry::box_color(int box, const Vec3& face_normal) const {
  const Vec3& base = boxes[size_t(box)].base_color;
  double shade = 1.0;
  if (face_normal.y() < -0.5) shade = 1.15;      // top face (y-down world)
  else if (std::abs(face_normal.x()) > 0.5) shade = 0.92;
  else if (face_normal.z() < -0.5) shade = 1.02; // face toward the camera
  else if (face_normal.z() > 0.5) shade = 0.85;
  return (base * shade).cwiseMax(0.0).cwiseMin(1.0);
}

Vec3 SynthGeometry::sky_color(const Vec3& dir) const {
  double elev = std::clamp(-dir.normalized().y(), -1.0, 1.0);
  return Vec3(std::clamp(0.55 - 0.06 * elev, 0.0, 1.0),
              std::clamp(0.65 - 0.03 * elev, 0.0, 1.0),
              std::clamp(0.85 + 0.08 * elev, 0.0, 1.0));
}

std::optional<SurfaceHit> synth_raycast(const SynthGeometry& geom,
                                        const Vec3& origin, const Vec3& dir,
                                        bool include_boxes, double near) {
  SurfaceHit best;
  best.t = std::numeric_limits<double>::infinity();

  // Ground plane y = ground_y.
  if (std::abs(dir.y()) > 1e-12) {
    double t = (geom.ground_y - origin.y()) / dir.y();
    if (t > near && t < best.t) {
      Vec3 p = origin + t * dir;
      if (p.x() >= geom.x_min && p.x() <= geom.x_max && p.z() >= geom.z_min &&
          p.z() <= geom.z_max) {
        best = {t, 0, p, Vec3(0, -1, 0)};
      }
    }
  }
  // Wall plane x = wall_x.
  if (std::abs(dir.x()) > 1e-12) {
    double t = (geom.wall_x - origin.x()) / dir.x();
    if (t > near && t < best.t) {
      Vec3 p = origin + t * dir;
      if (p.y() >= geom.wall_top_y && p.y() <= geom.ground_y &&
          p.z() >= geom.z_min && p.z() <= geom.z_max) {
        best = {t, 1, p, Vec3(-1, 0, 0)};
      }
    }
  }
  if (include_boxes) {
    for (size_t b = 0; b < geom.boxes.size(); ++b) {
      const auto& box = geom.boxes[b];
      double t0 = near, t1 = best.t;
      int axis = -1;
      bool far_side = false;
      bool ok = true;
      for (int a = 0; a < 3 && ok; ++a) {
        double lo = box.lo[a], hi = box.hi[a];
        double o = origin[a], d = dir[a];
        if (std::abs(d) < 1e-12) {
          ok = o >= lo && o <= hi;
          continue;
        }
        double ta = (lo - o) / d, tb = (hi - o) / d;
        bool swapped = ta > tb;
        if (swapped) std::swap(ta, tb);
        if (ta > t0) {
          t0 = ta;
          axis = a;
          far_side = swapped;  // entered through the hi face
        }
        t1 = std::min(t1, tb);
        ok = t0 <= t1;
      }
      if (ok && axis >= 0 && t0 < best.t && t0 > near) {
        Vec3 n = Vec3::Zero();
        n[axis] = far_side ? 1.0 : -1.0;
        best = {t0, 2 + int(b), origin + t0 * dir, n};
      }
    }
  }
  if (!std::isfinite(best.t)) return std::nullopt;
  return best;
}

bool synth_observed(const SynthGeometry& geom,
                    const std::vector<CameraFrame>& cameras, const Vec3& point,
                    double near) {
  for (const CameraFrame& cam : cameras) {
    Vec3 proj = cam.project(point);
    if (proj.z() <= near) continue;
    if (proj.x() < 0 || proj.x() >= cam.width || proj.y() < 0 ||
        proj.y() >= cam.height)
      continue;
    // Occlusion by any box strictly before the point.
    Vec3 o = cam.camera_center();
    Vec3 d = point - o;
    auto hit = synth_raycast(geom, o, d, true, 1e-6);
    if (hit && hit->surface >= 2 && hit->t < 1.0 - 1e-6) continue;
    return true;
  }
  return false;
}

SynthGeometry synth_geometry(const SynthParams& params) {
  SynthGeometry geom;
  geom.z_max = params.frames * 0.35 + 22.0;
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec3 palette_colors[4] = {Vec3(0.70, 0.22, 0.20), Vec3(0.22, 0.30, 0.65),
                                  Vec3(0.75, 0.62, 0.22), Vec3(0.25, 0.55, 0.30)};
  for (int i = 0; i < params.boxes; ++i) {
    double zc = 7.0 + 5.0 * i + (unit(rng) - 0.5);
    double xc = 2.2 + 0.4 * (unit(rng) - 0.5);
    double w = 1.2 + 0.3 * (unit(rng) - 0.5);
    double h = 1.0 + 0.2 * (unit(rng) - 0.5);
    double l = 1.6 + 0.4 * (unit(rng) - 0.5);
    SynthGeometry::Box box;
    box.lo = Vec3(xc - w / 2, geom.ground_y - h, zc - l / 2);
    box.hi = Vec3(xc + w / 2, geom.ground_y, zc + l / 2);
    box.base_color = palette_colors[i % 4];
    geom.boxes.push_back(box);
  }
  return geom;
}

namespace {

CameraFrame make_camera(const SynthParams& params, int index) {
  CameraFrame cam;
  cam.width = params.width;
  cam.height = params.height;
  cam.fx = cam.fy = 0.9 * params.width;
  cam.cx = params.width / 2.0;
  cam.cy = params.height / 2.0;
  cam.rotation = Mat3::Identity();
  Vec3 position(0.0, 0.0, 0.35 * index);
  cam.translation = -cam.rotation * position;
  cam.time_index = index;
  return cam;
}

struct ShadedSample {
  Vec3 color;
  uint16_t label;
};

ShadedSample shade(const SynthGeometry& geom, const SurfaceHit& hit) {
  if (hit.surface == 0)
    return {geom.ground_color(hit.point.x(), hit.point.z()), 0};
  if (hit.surface == 1)
    return {geom.wall_color(hit.point.y(), hit.point.z()), 1};
  return {geom.box_color(hit.surface - 2, hit.normal), 2};
}

}  // namespace

SyntheticDataset generate_synthetic_scene(const SynthParams& params) {
  SyntheticDataset data;
  data.params = params;
  data.geometry = synth_geometry(params);
  const SynthGeometry& geom = data.geometry;

  data.palette.entries = {{0, "road", false}, {1, "building", false},
                          {2, "vehicle", true}};

  for (int i = 0; i < params.frames; ++i)
    data.cameras.push_back(make_camera(params, i));

  // Sky label id: sky pixels carry the background class of the nearest
  // structure; with no dedicated sky class, use the building label so CE
  // supervision stays in range. Pixels without any surface get label 1.
  const uint16_t kSkyLabel = 1;

  for (const CameraFrame& cam : data.cameras) {
    Image full = Image::zeros(cam.width, cam.height, 3);
    Image empty = Image::zeros(cam.width, cam.height, 3);
    std::vector<uint16_t> labels(full.npix(), kSkyLabel);
    Vec3 origin = cam.camera_center();
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        Vec3 dir = cam.ray_dir(x + 0.5, y + 0.5);
        auto hit_full = synth_raycast(geom, origin, dir, true);
        auto hit_empty = synth_raycast(geom, origin, dir, false);
        Vec3 cf = hit_full ? shade(geom, *hit_full).color : geom.sky_color(dir);
        Vec3 ce = hit_empty ? shade(geom, *hit_empty).color : geom.sky_color(dir);
        for (int c = 0; c < 3; ++c) {
          full.at(x, y, c) = std::clamp(cf[c], 0.0, 1.0);
          empty.at(x, y, c) = std::clamp(ce[c], 0.0, 1.0);
        }
        if (hit_full) labels[size_t(y) * cam.width + x] = shade(geom, *hit_full).label;
      }
    }
    data.gt_full.push_back(std::move(full));
    data.gt_empty.push_back(std::move(empty));
    data.gt_labels.push_back(std::move(labels));
  }

  // Completely unobservable region per frame: box pixels whose revealed
  // surface point is seen by no camera.
  for (const CameraFrame& cam : data.cameras) {
    MaskImage mask = MaskImage::zeros(cam.width, cam.height);
    Vec3 origin = cam.camera_center();
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        Vec3 dir = cam.ray_dir(x + 0.5, y + 0.5);
        auto hit_full = synth_raycast(geom, origin, dir, true);
        if (!hit_full || hit_full->surface < 2) continue;
        auto hit_empty = synth_raycast(geom, origin, dir, false);
        if (!hit_empty) continue;
        if (!synth_observed(geom, data.cameras, hit_empty->point))
          mask.at(x, y) = 1;
      }
    }
    data.gt_unobservable.push_back(std::move(mask));
  }

  // Synthetic lidar: jittered surface samples kept only when some camera
  // actually observes them.
  std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  const double s = params.ground_spacing;
  auto push_if_observed = [&](const Vec3& p, const Vec3& color, uint16_t label) {
    if (synth_observed(geom, data.cameras, p))
      data.points.push_back({p, color.cwiseMax(0.0).cwiseMin(1.0), label});
  };
  for (double x = geom.x_min; x <= geom.x_max; x += s) {
    for (double z = geom.z_min; z <= geom.z_max; z += s) {
      Vec3 p(x + jitter(rng) * s, geom.ground_y, z + jitter(rng) * s);
      bool inside_box = false;
      for (const auto& box : geom.boxes)
        if (p.x() >= box.lo.x() && p.x() <= box.hi.x() && p.z() >= box.lo.z() &&
            p.z() <= box.hi.z())
          inside_box = true;
      if (inside_box) continue;  // the lidar never sees under a vehicle
      push_if_observed(p, geom.ground_color(p.x(), p.z()), 0);
    }
  }
  for (double y = geom.wall_top_y; y <= geom.ground_y; y += s) {
    for (double z = geom.z_min; z <= geom.z_max; z += s) {
      Vec3 p(geom.wall_x, y + jitter(rng) * s, z + jitter(rng) * s);
      push_if_observed(p, geom.wall_color(p.y(), p.z()), 1);
    }
  }
  const double bs = s * 0.8;
  for (size_t b = 0; b < geom.boxes.size(); ++b) {
    const auto& box = geom.boxes[b];
    Vec3 size = box.hi - box.lo;
    for (int axis = 0; axis < 3; ++axis) {
      for (int side = 0; side < 2; ++side) {
        if (axis == 1 && side == 1) continue;  // bottom face rests on the ground
        int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        Vec3 n = Vec3::Zero();
        n[axis] = side == 0 ? -1.0 : 1.0;
        for (double u = 0; u <= size[a1]; u += bs) {
          for (double v = 0; v <= size[a2]; v += bs) {
            Vec3 p = box.lo;
            p[axis] = side == 0 ? box.lo[axis] : box.hi[axis];
            p[a1] += std::min(u + jitter(rng) * bs * 0.5, size[a1]);
            p[a2] += std::min(v + jitter(rng) * bs * 0.5, size[a2]);
            push_if_observed(p, geom.box_color(int(b), n), 2);
          }
        }
      }
    }
  }
  return data;
}

void write_synthetic_dataset(const SyntheticDataset& data,
                             const std::string& dir) {
  fs::create_directories(dir + "/images");
  fs::create_directories(dir + "/semantic");
  fs::create_directories(dir + "/gt_empty");
  fs::create_directories(dir + "/gt_masks");

  DatasetManifest manifest;
  manifest.root = dir;
  manifest.palette = data.palette;
  manifest.points_path = "points.ply";
  char name[64];
  for (size_t i = 0; i < data.cameras.size(); ++i) {
    std::snprintf(name, sizeof name, "frame_%05d.png",
                  data.cameras[i].time_index);
    DatasetFrameRecord rec;
    rec.image_path = std::string("images/") + name;
    rec.semantic_path = std::string("semantic/") + name;
    rec.camera = data.cameras[i];
    save_png(dir + "/" + rec.image_path, data.gt_full[i]);
    save_label_map(dir + "/" + rec.semantic_path, data.gt_labels[i],
                   data.cameras[i].width, data.cameras[i].height);
    save_png(dir + "/gt_empty/" + name, data.gt_empty[i]);
    save_mask_png(dir + "/gt_masks/" + name, data.gt_unobservable[i]);
    manifest.frames.push_back(std::move(rec));
  }
  save_ply(dir + "/points.ply", data.points);
  save_manifest(manifest, dir + "/manifest.json");
}

}  // namespace unveil
