#include "unveil/core_types.hpp"

#include <cmath>
#include <stdexcept>

namespace unveil {

namespace {

constexpr double kShC0 = 0.28209479177387814;
constexpr double kShC1 = 0.4886025119029199;
constexpr double kShC2[5] = {1.0925484305920792, -1.0925484305920792,
                             0.31539156525252005, -1.0925484305920792,
                             0.5462742152960396};
constexpr double kShC3[7] = {-0.5900435899266435, 2.890611442640554,
                             -0.4570457994644658, 0.3731763325901154,
                             -0.4570457994644658, 1.445305721320277,
                             -0.5900435899266435};

}  // namespace

void sh_basis(const Vec3& dir, int degree, double* out) {
  out[0] = kShC0;
  if (degree < 1) return;
  const double x = dir.x(), y = dir.y(), z = dir.z();
  out[1] = -kShC1 * y;
  out[2] = kShC1 * z;
  out[3] = -kShC1 * x;
  if (degree < 2) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, yz = y * z, xz = x * z;
  out[4] = kShC2[0] * xy;
  out[5] = kShC2[1] * yz;
  out[6] = kShC2[2] * (2.0 * zz - xx - yy);
  out[7] = kShC2[3] * xz;
  out[8] = kShC2[4] * (xx - yy);
  if (degree < 3) return;
  out[9] = kShC3[0] * y * (3.0 * xx - yy);
  out[10] = kShC3[1] * xy * z;
  out[11] = kShC3[2] * y * (4.0 * zz - xx - yy);
  out[12] = kShC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
  out[13] = kShC3[4] * x * (4.0 * zz - xx - yy);
  out[14] = kShC3[5] * z * (xx - yy);
  out[15] = kShC3[6] * x * (xx - 3.0 * yy);
}

Mat3 quat_to_matrix(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

std::array<Mat3, 4> quat_to_matrix_jacobian(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Mat3, 4> d;
  d[0] << 0, -z, y,
          z, 0, -x,
          -y, x, 0;
  d[1] << 0, y, z,
          y, -2 * x, -w,
          z, w, -2 * x;
  d[2] << -2 * y, x, w,
          x, 0, z,
          -w, z, -2 * y;
  d[3] << -2 * z, -w, x,
          w, -2 * z, y,
          x, y, 0;
  for (auto& m : d) m *= 2.0;
  return d;
}

TangentFrame tangent_frame(const Splat2D& splat) {
  Mat3 r = quat_to_matrix(splat.rotation_normalized());
  return TangentFrame{r.col(0), r.col(1), r.col(2)};
}

Vec3 splat_point(const Splat2D& splat, double u, double v) {
  TangentFrame f = tangent_frame(splat);
  return splat.center_d() + splat.scale_u() * f.t_u * u + splat.scale_v() * f.t_v * v;
}

Vec3 sh_color(const Splat2D& splat, const Vec3& view_dir, int degree) {
  double basis[kMaxShBases];
  sh_basis(view_dir, degree, basis);
  Vec3 c = Vec3::Zero();
  const int n = sh_num_bases(degree);
  for (int m = 0; m < n; ++m) {
    c.x() += basis[m] * splat.sh_coeff(m, 0);
    c.y() += basis[m] * splat.sh_coeff(m, 1);
    c.z() += basis[m] * splat.sh_coeff(m, 2);
  }
  return c + Vec3::Constant(0.5);
}

void CameraFrame::validate() const {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("camera: image size must be positive");
  Mat3 gram = rotation * rotation.transpose();
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw std::invalid_argument("camera: rotation is not orthonormal");
  if (fx <= 0 || fy <= 0)
    throw std::invalid_argument("camera: focal lengths must be positive");
}

void SemanticPalette::validate() const {
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].id != i)
      throw std::invalid_argument("palette: label ids must be dense 0..K-1");
  }
}

void EnvironmentModel::resize(int h, int w, float fill) {
  height = h;
  width = w;
  data.assign(size_t(h) * w * 3, fill);
}

EnvironmentModel::Footprint EnvironmentModel::footprint(const Vec3& dir) const {
  Vec3 d = dir.normalized();
  const double az = std::atan2(d.y(), d.x());                      // (-pi, pi]
  const double el = std::acos(std::clamp(d.z(), -1.0, 1.0));       // [0, pi]
  double u = (az / (2.0 * M_PI) + 0.5) * width - 0.5;
  double v = (el / M_PI) * height - 0.5;
  double fu = u - std::floor(u);
  double fv = v - std::floor(v);
  int u0 = int(std::floor(u));
  int v0 = int(std::floor(v));
  auto wrap = [&](int c) { return ((c % width) + width) % width; };
  auto clampr = [&](int r) { return std::clamp(r, 0, height - 1); };
  int c0 = wrap(u0), c1 = wrap(u0 + 1);
  int r0 = clampr(v0), r1 = clampr(v0 + 1);
  Footprint f;
  f.idx[0] = r0 * width + c0;
  f.idx[1] = r0 * width + c1;
  f.idx[2] = r1 * width + c0;
  f.idx[3] = r1 * width + c1;
  f.w[0] = (1 - fu) * (1 - fv);
  f.w[1] = fu * (1 - fv);
  f.w[2] = (1 - fu) * fv;
  f.w[3] = fu * fv;
  return f;
}

Vec3 EnvironmentModel::sample(const Vec3& dir) const {
  Footprint f = footprint(dir);
  Vec3 c = Vec3::Zero();
  for (int i = 0; i < 4; ++i) c += f.w[i] * texel(f.idx[i]);
  return c;
}

void Scene::validate() const {
  palette.validate();
  for (const Splat2D& s : splats) {
    if (!palette.contains(s.label))
      throw std::invalid_argument("scene: splat label not in palette");
  }
}

SceneBounds scene_bounds(const Scene& scene) {
  SceneBounds b;
  if (scene.splats.empty()) return b;
  b.lo = b.hi = scene.splats[0].center_d();
  for (const Splat2D& s : scene.splats) {
    b.lo = b.lo.cwiseMin(s.center_d());
    b.hi = b.hi.cwiseMax(s.center_d());
  }
  return b;
}

}  // namespace unveil
