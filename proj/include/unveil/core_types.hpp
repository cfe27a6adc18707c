#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace unveil {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

constexpr int kMaxShDegree = 3;
constexpr int kMaxShBases = (kMaxShDegree + 1) * (kMaxShDegree + 1);  // 16
constexpr int kMaxShCoeffs = 3 * kMaxShBases;

inline int sh_num_bases(int degree) { return (degree + 1) * (degree + 1); }

// Real SH basis values for a unit direction, in the usual splatting order
// (l asc, m asc within l, signs folded into the constants). Writes
// sh_num_bases(degree) entries.
void sh_basis(const Vec3& dir, int degree, double* out);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Rotation matrix of a unit quaternion (w, x, y, z). Columns are the rotated
// world axes.
Mat3 quat_to_matrix(const Vec4& q);

// dR/dq_k for k in {w,x,y,z}, evaluated at a unit quaternion.
std::array<Mat3, 4> quat_to_matrix_jacobian(const Vec4& q);

// One planar Gaussian primitive. Parameters are stored as float32 so that
// checkpoints round-trip bit-exactly; all math promotes to double on read.
struct Splat2D {
  Eigen::Vector3f center = Eigen::Vector3f::Zero();
  Eigen::Vector4f rotation = Eigen::Vector4f(1.f, 0.f, 0.f, 0.f);  // (w,x,y,z)
  Eigen::Vector2f log_scales = Eigen::Vector2f::Zero();
  float opacity_logit = 0.f;
  uint16_t label = 0;  // immutable semantic class id
  std::array<float, kMaxShCoeffs> sh{};  // [basis][channel] interleaved

  Vec3 center_d() const { return center.cast<double>(); }
  Vec4 rotation_normalized() const {
    Vec4 q = rotation.cast<double>();
    return q / q.norm();
  }
  double scale_u() const { return std::exp(double(log_scales[0])); }
  double scale_v() const { return std::exp(double(log_scales[1])); }
  double opacity() const { return sigmoid(double(opacity_logit)); }

  double sh_coeff(int basis, int channel) const { return sh[basis * 3 + channel]; }
  void set_sh_coeff(int basis, int channel, double v) { sh[basis * 3 + channel] = float(v); }
};

struct TangentFrame {
  Vec3 t_u;
  Vec3 t_v;
  Vec3 n;  // t_u x t_v
};

TangentFrame tangent_frame(const Splat2D& splat);

// World point of local plane coordinate (u, v):
// center + s_u * t_u * u + s_v * t_v * v.
Vec3 splat_point(const Splat2D& splat, double u, double v);

inline double gaussian_weight(double u, double v) {
  return std::exp(-0.5 * (u * u + v * v));
}

// View-dependent color from the splat's SH coefficients, without clamping.
Vec3 sh_color(const Splat2D& splat, const Vec3& view_dir, int degree);

// Pinhole camera with a rigid world-to-camera transform. Pixel (ix, iy)
// samples through its center (ix + 0.5, iy + 0.5).
struct CameraFrame {
  double fx = 1, fy = 1, cx = 0, cy = 0;
  Mat3 rotation = Mat3::Identity();   // world -> camera
  Vec3 translation = Vec3::Zero();
  int width = 0, height = 0;
  int time_index = 0;

  Vec3 camera_center() const { return -rotation.transpose() * translation; }

  // Unnormalized world-space ray direction through pixel-center coordinates;
  // parameterized so that the ray parameter equals camera-space depth.
  Vec3 ray_dir(double px, double py) const {
    Vec3 d_cam((px - cx) / fx, (py - cy) / fy, 1.0);
    return rotation.transpose() * d_cam;
  }

  Vec3 world_to_cam(const Vec3& p) const { return rotation * p + translation; }

  // Projects a world point to (pixel x, pixel y, camera depth).
  Vec3 project(const Vec3& p) const {
    Vec3 c = world_to_cam(p);
    return Vec3(fx * c.x() / c.z() + cx, fy * c.y() / c.z() + cy, c.z());
  }

  // Throws std::invalid_argument if the rotation is not orthonormal
  // within 1e-6 or the image size is not positive.
  void validate() const;
};

struct PaletteEntry {
  uint16_t id = 0;
  std::string name;
  bool removable = false;
};

// Dense label table; ids must be exactly 0..K-1.
struct SemanticPalette {
  std::vector<PaletteEntry> entries;

  int num_classes() const { return int(entries.size()); }
  bool contains(uint16_t id) const { return id < entries.size(); }
  bool is_removable(uint16_t id) const {
    return contains(id) && entries[id].removable;
  }
  void validate() const;  // throws on non-dense ids
};

// Learnable equirectangular background color grid. Queried by world-space
// ray direction; bilinear, wrapping in azimuth and clamping in elevation.
struct EnvironmentModel {
  int height = 64;
  int width = 128;
  std::vector<float> data;  // height*width*3, row-major, values in [0,1]

  void resize(int h, int w, float fill = 0.5f);

  struct Footprint {
    int idx[4];     // texel indices (row*width+col)
    double w[4];    // bilinear weights, sum to 1
  };
  Footprint footprint(const Vec3& dir) const;

  Vec3 sample(const Vec3& dir) const;
  Vec3 texel(int idx) const {
    return Vec3(data[idx * 3], data[idx * 3 + 1], data[idx * 3 + 2]);
  }
};

struct Scene {
  std::vector<Splat2D> splats;
  EnvironmentModel environment;
  SemanticPalette palette;
  int sh_degree = 3;

  void validate() const;  // every splat label must exist in the palette
};

// Axis-aligned bounds of the splat centers; diagonal length is used as the
// scene extent for learning rates and proximity defaults.
struct SceneBounds {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  double diagonal() const { return (hi - lo).norm(); }
};
SceneBounds scene_bounds(const Scene& scene);

}  // namespace unveil
