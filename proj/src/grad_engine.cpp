#include "unveil/grad_engine.hpp"

#include "unveil/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unveil {

void SplatGrads::resize(size_t n, size_t env_size) {
  num_splats = n;
  center.assign(3 * n, 0.0);
  rotation.assign(4 * n, 0.0);
  log_scales.assign(2 * n, 0.0);
  opacity.assign(n, 0.0);
  sh.assign(size_t(kMaxShCoeffs) * n, 0.0);
  environment.assign(env_size, 0.0);
  screen_grad.assign(n, 0.0);
  touched.assign(n, 0);
}

bool SplatGrads::finite() const {
  auto ok = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return ok(center) && ok(rotation) && ok(log_scales) && ok(opacity) && ok(sh) &&
         ok(environment);
}

namespace {

// SH basis derivatives w.r.t. the (unit) direction. Mirrors sh_basis.
void sh_basis_grad(const Vec3& dir, int degree, Vec3* out) {
  constexpr double c1 = 0.4886025119029199;
  constexpr double c2[5] = {1.0925484305920792, -1.0925484305920792,
                            0.31539156525252005, -1.0925484305920792,
                            0.5462742152960396};
  constexpr double c3[7] = {-0.5900435899266435, 2.890611442640554,
                            -0.4570457994644658, 0.3731763325901154,
                            -0.4570457994644658, 1.445305721320277,
                            -0.5900435899266435};
  const double x = dir.x(), y = dir.y(), z = dir.z();
  out[0] = Vec3::Zero();
  if (degree < 1) return;
  out[1] = Vec3(0, -c1, 0);
  out[2] = Vec3(0, 0, c1);
  out[3] = Vec3(-c1, 0, 0);
  if (degree < 2) return;
  out[4] = c2[0] * Vec3(y, x, 0);
  out[5] = c2[1] * Vec3(0, z, y);
  out[6] = c2[2] * Vec3(-2 * x, -2 * y, 4 * z);
  out[7] = c2[3] * Vec3(z, 0, x);
  out[8] = c2[4] * Vec3(2 * x, -2 * y, 0);
  if (degree < 3) return;
  out[9] = c3[0] * Vec3(6 * x * y, 3 * x * x - 3 * y * y, 0);
  out[10] = c3[1] * Vec3(y * z, x * z, x * y);
  out[11] = c3[2] * Vec3(-2 * x * y, 4 * z * z - x * x - 3 * y * y, 8 * y * z);
  out[12] = c3[3] * Vec3(-6 * x * z, -6 * y * z, 6 * z * z - 3 * x * x - 3 * y * y);
  out[13] = c3[4] * Vec3(4 * z * z - 3 * x * x - y * y, -2 * x * y, 8 * x * z);
  out[14] = c3[5] * Vec3(2 * x * z, -2 * y * z, x * x - y * y);
  out[15] = c3[6] * Vec3(3 * x * x - 3 * y * y, -6 * x * y, 0);
}

// Tile-local gradient slots in intermediate (frame) coordinates; converted to
// raw parameter gradients once per splat after all tiles are merged.
struct RawGrad {
  Vec3 d_center = Vec3::Zero();
  Vec3 d_tu = Vec3::Zero(), d_tv = Vec3::Zero(), d_n = Vec3::Zero();
  double d_su = 0, d_sv = 0;
  double d_alpha = 0;          // w.r.t. activated opacity
  Vec3 d_color = Vec3::Zero(); // w.r.t. clamped color
  bool touched = false;
};

struct ScratchHit {
  uint32_t cand;
  double a, u, v, z, w, t_before;
  double acc_w_before, acc_wz_before;
  double class_w_before, class_wz_before;
  double d_omega;
  int flip;  // +1 if the stored normal was used as-is, -1 if negated
};

}  // namespace

SplatGrads backward(const Scene& scene, const CameraFrame& camera,
                    const RenderBuffers& buffers, const BufferGrads& upstream,
                    const RenderOptions& options) {
  if (buffers.width != camera.width || buffers.height != camera.height)
    throw std::invalid_argument("backward: buffer/camera shape mismatch");
  auto check = [&](const std::vector<double>& g, size_t want, const char* name) {
    if (!g.empty() && g.size() != want)
      throw std::invalid_argument(std::string("backward: upstream shape mismatch: ") + name);
  };
  const size_t n = buffers.npix();
  const int K = buffers.num_classes;
  check(upstream.color, n * 3, "color");
  check(upstream.alpha, n, "alpha");
  check(upstream.depth, n, "depth");
  check(upstream.normal, n * 3, "normal");
  check(upstream.semantic, n * size_t(K), "semantic");
  check(upstream.distortion, n, "distortion");
  check(upstream.per_class_distortion, n * size_t(K), "per_class_distortion");

  const int sh_deg = std::min(options.sh_eval_degree, scene.sh_degree);
  const size_t num = scene.splats.size();
  SplatGrads grads;
  grads.resize(num, scene.environment.data.size());

  std::vector<detail::SplatView> views(num);
  for (size_t i = 0; i < num; ++i)
    views[i] = detail::make_splat_view(scene.splats[i], camera, sh_deg);
  detail::TileGrid grid = detail::build_tile_grid(views, camera, options);
  const int n_tiles = grid.tiles_x * grid.tiles_y;

  std::vector<std::vector<RawGrad>> tile_grads(n_tiles);
  std::vector<std::vector<std::pair<int, Vec3>>> tile_env(n_tiles);

  const bool has_c = !upstream.color.empty();
  const bool has_a = !upstream.alpha.empty();
  const bool has_d = !upstream.depth.empty();
  const bool has_n = !upstream.normal.empty();
  const bool has_s = !upstream.semantic.empty();
  const bool has_dist = !upstream.distortion.empty();
  const bool has_pcd = !upstream.per_class_distortion.empty();

  parallel_for(n_tiles, options.threads, [&](int tile) {
    const auto& bin = grid.bins[tile];
    auto& local = tile_grads[tile];
    local.assign(bin.size(), RawGrad{});
    auto& env_local = tile_env[tile];

    const int tx = tile % grid.tiles_x, ty = tile / grid.tiles_x;
    const int px0 = tx * grid.tile_size, py0 = ty * grid.tile_size;
    const int px1 = std::min(px0 + grid.tile_size, camera.width);
    const int py1 = std::min(py0 + grid.tile_size, camera.height);

    const Vec3 o = camera.camera_center();
    std::vector<ScratchHit> hits;
    std::vector<double> class_w(K), class_wz(K);

    for (int py = py0; py < py1; ++py) {
      for (int px = px0; px < px1; ++px) {
        const size_t pix = size_t(py) * camera.width + px;
        Vec3 d = camera.ray_dir(px + 0.5, py + 0.5);

        // Forward replay, keeping per-hit prefixes.
        hits.clear();
        std::fill(class_w.begin(), class_w.end(), 0.0);
        std::fill(class_wz.begin(), class_wz.end(), 0.0);
        double transmittance = 1.0, acc_w = 0.0, acc_wz = 0.0;
        for (uint32_t ci = 0; ci < bin.size(); ++ci) {
          if (transmittance < kMinTransmittance) break;
          const detail::SplatView& sv = views[bin[ci]];
          double denom = d.dot(sv.n);
          if (std::abs(denom) < 1e-9) continue;
          double z = (sv.center - o).dot(sv.n) / denom;
          if (z <= options.near_clip) continue;
          Vec3 w3 = o + z * d - sv.center;
          double u = w3.dot(sv.t_u) / sv.s_u;
          double v = w3.dot(sv.t_v) / sv.s_v;
          double r2 = u * u + v * v;
          if (r2 > kCutoffRadiusSq) continue;
          double a = sv.opacity * std::exp(-0.5 * r2);
          if (a < kMinBlendWeight) continue;
          double w = a * transmittance;
          ScratchHit h;
          h.cand = ci;
          h.a = a;
          h.u = u;
          h.v = v;
          h.z = z;
          h.w = w;
          h.t_before = transmittance;
          h.acc_w_before = acc_w;
          h.acc_wz_before = acc_wz;
          h.flip = (denom > 0) ? -1 : 1;
          if (sv.label < K) {
            h.class_w_before = class_w[sv.label];
            h.class_wz_before = class_wz[sv.label];
            class_w[sv.label] += w;
            class_wz[sv.label] += w * z;
          } else {
            h.class_w_before = h.class_wz_before = 0;
          }
          hits.push_back(h);
          acc_w += w;
          acc_wz += w * z;
          transmittance *= (1.0 - a);
        }

        const double A_final = acc_w, B_final = acc_wz;
        const double denomA = std::max(A_final, 1e-8);

        Vec3 gc = Vec3::Zero();
        if (has_c)
          gc = Vec3(upstream.color[pix * 3], upstream.color[pix * 3 + 1],
                    upstream.color[pix * 3 + 2]);
        const double ga = has_a ? upstream.alpha[pix] : 0.0;
        const double gd = has_d ? upstream.depth[pix] : 0.0;
        Vec3 gn_world = Vec3::Zero();
        if (has_n) {
          Vec3 gn(upstream.normal[pix * 3], upstream.normal[pix * 3 + 1],
                  upstream.normal[pix * 3 + 2]);
          gn_world = camera.rotation.transpose() * gn;
        }
        const double gdist = has_dist ? upstream.distortion[pix] : 0.0;

        Vec3 env_color = Vec3::Zero();
        if (options.include_environment) {
          env_color = scene.environment.sample(d);
          if (has_c && gc != Vec3::Zero()) {
            EnvironmentModel::Footprint fp = scene.environment.footprint(d);
            const double s = 1.0 - A_final;
            for (int j = 0; j < 4; ++j)
              env_local.emplace_back(fp.idx[j], gc * (s * fp.w[j]));
          }
        }

        if (hits.empty()) continue;

        // dL/d(omega_k) for every hit.
        for (ScratchHit& h : hits) {
          const detail::SplatView& sv = views[bin[h.cand]];
          double g = ga;
          if (has_c)
            g += gc.dot(sv.color) -
                 (options.include_environment ? gc.dot(env_color) : 0.0);
          if (has_d)
            g += gd * (h.z / denomA -
                       (A_final > 1e-8 ? B_final / (denomA * denomA) : 0.0));
          if (has_n) g += gn_world.dot(double(h.flip) * sv.n);
          if (has_s && sv.label < K) g += upstream.semantic[pix * K + sv.label];
          const double acc_w_after = h.acc_w_before + h.w;
          const double acc_wz_after = h.acc_wz_before + h.w * h.z;
          if (has_dist)
            g += gdist * ((h.z * h.acc_w_before - h.acc_wz_before) +
                          (B_final - acc_wz_after) - h.z * (A_final - acc_w_after));
          if (has_pcd && sv.label < K) {
            const double gk = upstream.per_class_distortion[size_t(sv.label) * n + pix];
            const double cw_after = h.class_w_before + h.w;
            const double cwz_after = h.class_wz_before + h.w * h.z;
            g += gk * ((h.z * h.class_w_before - h.class_wz_before) +
                       (class_wz[sv.label] - cwz_after) -
                       h.z * (class_w[sv.label] - cw_after));
          }
          h.d_omega = g;
        }

        // Reverse sweep: dL/da_k = T_k (dL/domega_k - P_k).
        double p_acc = 0.0;
        for (int k = int(hits.size()) - 1; k >= 0; --k) {
          ScratchHit& h = hits[k];
          const detail::SplatView& sv = views[bin[h.cand]];
          RawGrad& rg = local[h.cand];
          rg.touched = true;

          double d_a = h.t_before * (h.d_omega - p_acc);
          p_acc = h.d_omega * h.a + (1.0 - h.a) * p_acc;

          // dL/dz from the depth and distortion paths.
          double d_z = 0.0;
          if (has_d) d_z += gd * h.w / denomA;
          const double acc_w_after = h.acc_w_before + h.w;
          if (has_dist)
            d_z += gdist * h.w * (h.acc_w_before - (A_final - acc_w_after));
          if (has_pcd && sv.label < K) {
            const double gk = upstream.per_class_distortion[size_t(sv.label) * n + pix];
            const double cw_after = h.class_w_before + h.w;
            d_z += gk * h.w * (h.class_w_before - (class_w[sv.label] - cw_after));
          }

          rg.d_alpha += d_a * std::exp(-0.5 * (h.u * h.u + h.v * h.v));
          const double gu = -d_a * h.a * h.u;
          const double gv = -d_a * h.a * h.v;

          if (has_c) rg.d_color += h.w * gc;
          if (has_n) rg.d_n += h.w * double(h.flip) * gn_world;

          // Intersection chain.
          const double denom = d.dot(sv.n);
          Vec3 w3 = o + h.z * d - sv.center;
          Vec3 d_w3 = gu * sv.t_u / sv.s_u + gv * sv.t_v / sv.s_v;
          double gz_tot = d_z + d_w3.dot(d);
          rg.d_center += -d_w3 + gz_tot * sv.n / denom;
          rg.d_n += gz_tot * (-w3) / denom;
          rg.d_tu += gu * w3 / sv.s_u;
          rg.d_tv += gv * w3 / sv.s_v;
          rg.d_su += -gu * h.u / sv.s_u;
          rg.d_sv += -gv * h.v / sv.s_v;
        }
      }
    }
  });

  // Deterministic reduction in tile order into per-splat accumulators.
  std::vector<RawGrad> acc(num);
  for (int tile = 0; tile < n_tiles; ++tile) {
    const auto& bin = grid.bins[tile];
    const auto& local = tile_grads[tile];
    for (size_t ci = 0; ci < bin.size(); ++ci) {
      const RawGrad& src = local[ci];
      if (!src.touched) continue;
      RawGrad& dst = acc[bin[ci]];
      dst.d_center += src.d_center;
      dst.d_tu += src.d_tu;
      dst.d_tv += src.d_tv;
      dst.d_n += src.d_n;
      dst.d_su += src.d_su;
      dst.d_sv += src.d_sv;
      dst.d_alpha += src.d_alpha;
      dst.d_color += src.d_color;
      dst.touched = true;
    }
    for (const auto& [idx, g] : tile_env[tile]) {
      grads.environment[idx * 3 + 0] += g.x();
      grads.environment[idx * 3 + 1] += g.y();
      grads.environment[idx * 3 + 2] += g.z();
    }
  }

  // Convert frame-space accumulators to raw parameter gradients.
  const Vec3 cam_center = camera.camera_center();
  double basis[kMaxShBases];
  Vec3 dbasis[kMaxShBases];
  const int n_bases = sh_num_bases(sh_deg);
  for (size_t i = 0; i < num; ++i) {
    const RawGrad& a = acc[i];
    if (!a.touched) continue;
    const Splat2D& sp = scene.splats[i];
    const detail::SplatView& sv = views[i];
    grads.touched[i] = 1;

    // Color clamp mask, then SH coefficients and the view-direction path.
    Vec3 d_raw = a.d_color;
    for (int c = 0; c < 3; ++c)
      if (sv.color_raw[c] < 0.0 || sv.color_raw[c] > 1.0) d_raw[c] = 0.0;
    sh_basis(sv.view_dir, sh_deg, basis);
    sh_basis_grad(sv.view_dir, sh_deg, dbasis);
    Vec3 d_dir = Vec3::Zero();
    for (int m = 0; m < n_bases; ++m) {
      double s = 0;
      for (int c = 0; c < 3; ++c) {
        grads.sh[i * kMaxShCoeffs + m * 3 + c] = basis[m] * d_raw[c];
        s += sp.sh_coeff(m, c) * d_raw[c];
      }
      d_dir += s * dbasis[m];
    }
    Vec3 delta = sv.center - cam_center;
    double len = delta.norm();
    Vec3 d_center = a.d_center;
    if (len > 1e-12)
      d_center += (d_dir - sv.view_dir * sv.view_dir.dot(d_dir)) / len;

    grads.center[i * 3 + 0] = d_center.x();
    grads.center[i * 3 + 1] = d_center.y();
    grads.center[i * 3 + 2] = d_center.z();

    grads.log_scales[i * 2 + 0] = a.d_su * sv.s_u;
    grads.log_scales[i * 2 + 1] = a.d_sv * sv.s_v;

    const double op = sv.opacity;
    grads.opacity[i] = a.d_alpha * op * (1.0 - op);

    // Rotation: columns of R are (t_u, t_v, n); chain through quaternion
    // normalization of the raw storage.
    Vec4 q_raw = sp.rotation.cast<double>();
    double qn = q_raw.norm();
    Vec4 q_hat = q_raw / qn;
    auto jac = quat_to_matrix_jacobian(q_hat);
    Vec4 d_qhat;
    for (int k = 0; k < 4; ++k)
      d_qhat[k] = a.d_tu.dot(jac[k].col(0)) + a.d_tv.dot(jac[k].col(1)) +
                  a.d_n.dot(jac[k].col(2));
    Vec4 d_qraw = (d_qhat - q_hat * q_hat.dot(d_qhat)) / qn;
    for (int k = 0; k < 4; ++k) grads.rotation[i * 4 + k] = d_qraw[k];

    // Screen-space magnitude of the center gradient for density control.
    Vec3 g_cam = camera.rotation * d_center;
    double zc = std::max(sv.center_depth, options.near_clip);
    grads.screen_grad[i] = std::hypot(g_cam.x() * zc / camera.fx,
                                      g_cam.y() * zc / camera.fy);
  }
  return grads;
}

void OptimState::init(size_t num_splats, size_t env_size) {
  step = 0;
  m_center.assign(3 * num_splats, 0.0);
  v_center.assign(3 * num_splats, 0.0);
  m_rotation.assign(4 * num_splats, 0.0);
  v_rotation.assign(4 * num_splats, 0.0);
  m_log_scales.assign(2 * num_splats, 0.0);
  v_log_scales.assign(2 * num_splats, 0.0);
  m_opacity.assign(num_splats, 0.0);
  v_opacity.assign(num_splats, 0.0);
  m_sh.assign(size_t(kMaxShCoeffs) * num_splats, 0.0);
  v_sh.assign(size_t(kMaxShCoeffs) * num_splats, 0.0);
  m_env.assign(env_size, 0.0);
  v_env.assign(env_size, 0.0);
  grad_accum.assign(num_splats, 0.0);
  grad_count.assign(num_splats, 0);
}

void OptimState::remap(const std::vector<int32_t>& source_of) {
  auto remap_vec = [&](std::vector<double>& v, int stride) {
    std::vector<double> out(source_of.size() * stride, 0.0);
    for (size_t i = 0; i < source_of.size(); ++i) {
      int32_t s = source_of[i];
      if (s < 0) continue;
      for (int j = 0; j < stride; ++j) out[i * stride + j] = v[size_t(s) * stride + j];
    }
    v = std::move(out);
  };
  remap_vec(m_center, 3);
  remap_vec(v_center, 3);
  remap_vec(m_rotation, 4);
  remap_vec(v_rotation, 4);
  remap_vec(m_log_scales, 2);
  remap_vec(v_log_scales, 2);
  remap_vec(m_opacity, 1);
  remap_vec(v_opacity, 1);
  remap_vec(m_sh, kMaxShCoeffs);
  remap_vec(v_sh, kMaxShCoeffs);
  remap_vec(grad_accum, 1);
  std::vector<int> counts(source_of.size(), 0);
  for (size_t i = 0; i < source_of.size(); ++i)
    if (source_of[i] >= 0) counts[i] = grad_count[source_of[i]];
  grad_count = std::move(counts);
}

void OptimState::reset_densify_stats() {
  std::fill(grad_accum.begin(), grad_accum.end(), 0.0);
  std::fill(grad_count.begin(), grad_count.end(), 0);
}

namespace {

inline void adam_update(double& m, double& v, float& p, double g, double lr,
                        const AdamParams& ap, double bc1, double bc2) {
  m = ap.beta1 * m + (1 - ap.beta1) * g;
  v = ap.beta2 * v + (1 - ap.beta2) * g * g;
  double mh = m / bc1, vh = v / bc2;
  p = float(double(p) - lr * mh / (std::sqrt(vh) + ap.eps));
}

}  // namespace

void adam_step(Scene& scene, const SplatGrads& grads, OptimState& state,
               const LrTable& lr, const AdamParams& params,
               const std::vector<uint8_t>* active) {
  const size_t n = scene.splats.size();
  if (grads.num_splats != n || state.num_splats() != n)
    throw std::invalid_argument("adam_step: size mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(params.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(params.beta2, double(state.step));

  for (size_t i = 0; i < n; ++i) {
    if (active && !(*active)[i]) continue;
    Splat2D& s = scene.splats[i];
    for (int j = 0; j < 3; ++j)
      adam_update(state.m_center[i * 3 + j], state.v_center[i * 3 + j],
                  s.center[j], grads.center[i * 3 + j], lr.center, params, bc1, bc2);
    for (int j = 0; j < 4; ++j)
      adam_update(state.m_rotation[i * 4 + j], state.v_rotation[i * 4 + j],
                  s.rotation[j], grads.rotation[i * 4 + j], lr.rotation, params,
                  bc1, bc2);
    for (int j = 0; j < 2; ++j)
      adam_update(state.m_log_scales[i * 2 + j], state.v_log_scales[i * 2 + j],
                  s.log_scales[j], grads.log_scales[i * 2 + j], lr.log_scales,
                  params, bc1, bc2);
    adam_update(state.m_opacity[i], state.v_opacity[i], s.opacity_logit,
                grads.opacity[i], lr.opacity, params, bc1, bc2);
    for (int j = 0; j < kMaxShCoeffs; ++j)
      adam_update(state.m_sh[i * kMaxShCoeffs + j], state.v_sh[i * kMaxShCoeffs + j],
                  s.sh[j], grads.sh[i * kMaxShCoeffs + j], lr.sh, params, bc1, bc2);
    float norm = s.rotation.norm();
    if (norm > 1e-12f)
      s.rotation /= norm;
    else
      s.rotation = Eigen::Vector4f(1.f, 0.f, 0.f, 0.f);
  }

  if (!grads.environment.empty() &&
      grads.environment.size() == scene.environment.data.size()) {
    for (size_t i = 0; i < grads.environment.size(); ++i) {
      adam_update(state.m_env[i], state.v_env[i], scene.environment.data[i],
                  grads.environment[i], lr.environment, params, bc1, bc2);
      scene.environment.data[i] = std::clamp(scene.environment.data[i], 0.f, 1.f);
    }
  }

  // Fold this frame's densification statistics into the running totals.
  for (size_t i = 0; i < n; ++i) {
    if (active && !(*active)[i]) continue;
    if (grads.touched[i]) {
      state.grad_accum[i] += grads.screen_grad[i];
      state.grad_count[i] += 1;
    }
  }
}

DensifyReport densify(Scene& scene, OptimState& state,
                      const DensifyParams& params, std::mt19937_64& rng) {
  DensifyReport report;
  std::vector<Splat2D> out;
  out.reserve(scene.splats.size() + scene.splats.size() / 4);
  std::normal_distribution<double> normal01(0.0, 1.0);

  for (size_t i = 0; i < scene.splats.size(); ++i) {
    const Splat2D& s = scene.splats[i];
    if (s.opacity() < params.prune_floor) {
      ++report.pruned;
      continue;
    }
    const double mean_grad =
        state.grad_count[i] > 0 ? state.grad_accum[i] / state.grad_count[i] : 0.0;
    const bool over = mean_grad > params.grad_threshold &&
                      out.size() + 2 <= params.max_splats;
    if (!over) {
      out.push_back(s);
      report.source_of.push_back(int32_t(i));
      continue;
    }
    const double s_max = std::max(s.scale_u(), s.scale_v());
    if (s_max > params.scale_split_frac * params.scene_extent) {
      // Split into two children sampled from the parent's footprint.
      TangentFrame f = tangent_frame(s);
      const double ls = float(std::log(params.split_scale_divisor));
      for (int child = 0; child < 2; ++child) {
        Splat2D c = s;
        Vec3 offset = s.scale_u() * f.t_u * normal01(rng) +
                      s.scale_v() * f.t_v * normal01(rng);
        c.center = (s.center_d() + offset).cast<float>();
        c.log_scales[0] = float(c.log_scales[0] - ls);
        c.log_scales[1] = float(c.log_scales[1] - ls);
        out.push_back(c);
        report.source_of.push_back(-1);
      }
      ++report.split;
    } else {
      out.push_back(s);
      report.source_of.push_back(int32_t(i));
      out.push_back(s);
      report.source_of.push_back(-1);
      ++report.cloned;
    }
  }
  scene.splats = std::move(out);
  state.remap(report.source_of);
  state.reset_densify_stats();
  return report;
}

std::vector<int32_t> prune_low_opacity(Scene& scene, double epsilon) {
  std::vector<int32_t> kept;
  std::vector<Splat2D> out;
  for (size_t i = 0; i < scene.splats.size(); ++i) {
    if (scene.splats[i].opacity() < epsilon) continue;
    out.push_back(scene.splats[i]);
    kept.push_back(int32_t(i));
  }
  scene.splats = std::move(out);
  return kept;
}

}  // namespace unveil
