#include "unveil/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace unveil {

void BufferGrads::resize_like(const RenderBuffers& buf) {
  width = buf.width;
  height = buf.height;
  num_classes = buf.num_classes;
  color.assign(buf.color.size(), 0.0);
  alpha.assign(buf.alpha.size(), 0.0);
  depth.assign(buf.depth.size(), 0.0);
  normal.assign(buf.normal.size(), 0.0);
  semantic.assign(buf.semantic.size(), 0.0);
  distortion.assign(buf.distortion.size(), 0.0);
  per_class_distortion.assign(buf.per_class_distortion.size(), 0.0);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

const std::array<double, kSsimWindow>& ssim_kernel() {
  static const std::array<double, kSsimWindow> k = [] {
    std::array<double, kSsimWindow> w{};
    double sum = 0;
    for (int i = 0; i < kSsimWindow; ++i) {
      double d = i - kSsimWindow / 2;
      w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
      sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
  }();
  return k;
}

// Separable zero-padded "same" convolution with the symmetric SSIM kernel.
void conv_same(const std::vector<double>& src, int w, int h,
               std::vector<double>& tmp, std::vector<double>& dst) {
  const auto& k = ssim_kernel();
  const int half = kSsimWindow / 2;
  tmp.assign(src.size(), 0.0);
  dst.assign(src.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    const double* row = &src[size_t(y) * w];
    double* out = &tmp[size_t(y) * w];
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      int lo = std::max(0, x - half), hi = std::min(w - 1, x + half);
      for (int i = lo; i <= hi; ++i) acc += row[i] * k[i - x + half];
      out[x] = acc;
    }
  }
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      double acc = 0;
      int lo = std::max(0, y - half), hi = std::min(h - 1, y + half);
      for (int i = lo; i <= hi; ++i) acc += tmp[size_t(i) * w + x] * k[i - y + half];
      dst[size_t(y) * w + x] = acc;
    }
  }
}

}  // namespace

SsimResult ssim(const Image& img, const Image& ref, bool with_grad) {
  if (!img.same_shape(ref)) throw std::invalid_argument("ssim: shape mismatch");
  const int w = img.width, h = img.height, C = img.channels;
  const size_t n = img.npix();
  SsimResult out;
  if (with_grad) out.grad.assign(img.data.size(), 0.0);

  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  std::vector<double> mu1, mu2, s11, s22, s12, tmp;
  std::vector<double> g_mu1(n), g_s11(n), g_s12(n), c_mu1, c_s11, c_s12;

  double total = 0;
  for (int c = 0; c < C; ++c) {
    for (size_t p = 0; p < n; ++p) {
      x[p] = img.data[p * C + c];
      y[p] = ref.data[p * C + c];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    conv_same(x, w, h, tmp, mu1);
    conv_same(y, w, h, tmp, mu2);
    conv_same(xx, w, h, tmp, s11);
    conv_same(yy, w, h, tmp, s22);
    conv_same(xy, w, h, tmp, s12);

    for (size_t p = 0; p < n; ++p) {
      double m1 = mu1[p], m2 = mu2[p];
      double a1 = 2 * m1 * m2 + kSsimC1;
      double a2 = 2 * (s12[p] - m1 * m2) + kSsimC2;
      double b1 = m1 * m1 + m2 * m2 + kSsimC1;
      double b2 = (s11[p] - m1 * m1) + (s22[p] - m2 * m2) + kSsimC2;
      double s = (a1 * a2) / (b1 * b2);
      total += s;
      if (with_grad) {
        g_mu1[p] = 2 * m2 * (a2 - a1) / (b1 * b2) -
                   2 * m1 * s * (1.0 / b1 - 1.0 / b2);
        g_s11[p] = -s / b2;
        g_s12[p] = 2 * a1 / (b1 * b2);
      }
    }
    if (with_grad) {
      conv_same(g_mu1, w, h, tmp, c_mu1);
      conv_same(g_s11, w, h, tmp, c_s11);
      conv_same(g_s12, w, h, tmp, c_s12);
      const double inv = 1.0 / (double(n) * C);
      for (size_t p = 0; p < n; ++p)
        out.grad[p * C + c] = inv * (c_mu1[p] + c_s11[p] * 2 * x[p] + c_s12[p] * y[p]);
    }
  }
  out.mean = total / (double(n) * C);
  return out;
}

double loss_rgb(const RenderBuffers& buf, const Image& target,
                double lambda_ssim, BufferGrads* upstream, double weight) {
  if (target.width != buf.width || target.height != buf.height ||
      target.channels != 3)
    throw std::invalid_argument("loss_rgb: shape mismatch");
  const size_t elems = buf.color.size();

  double l1 = 0;
  for (size_t i = 0; i < elems; ++i) l1 += std::abs(buf.color[i] - target.data[i]);
  l1 /= double(elems);

  double dssim = 0;
  SsimResult sr;
  if (lambda_ssim != 0.0) {
    Image rendered;
    rendered.width = buf.width;
    rendered.height = buf.height;
    rendered.channels = 3;
    rendered.data = buf.color;
    sr = ssim(rendered, target, upstream != nullptr);
    dssim = (1.0 - sr.mean) / 2.0;
  }
  double value = (1.0 - lambda_ssim) * l1 + lambda_ssim * dssim;

  if (upstream) {
    const double wl1 = weight * (1.0 - lambda_ssim) / double(elems);
    for (size_t i = 0; i < elems; ++i) {
      double d = buf.color[i] - target.data[i];
      double g = (d > 0) ? wl1 : (d < 0 ? -wl1 : 0.0);
      if (lambda_ssim != 0.0) g -= weight * lambda_ssim * 0.5 * sr.grad[i];
      upstream->color[i] += g;
    }
  }
  return value;
}

double loss_depth_distortion(const RenderBuffers& buf, BufferGrads* upstream,
                             double weight) {
  const size_t n = buf.npix();
  double sum = 0;
  for (double v : buf.distortion) sum += v;
  if (upstream) {
    const double g = weight / double(n);
    for (size_t i = 0; i < n; ++i) upstream->distortion[i] += g;
  }
  return sum / double(n);
}

double loss_normal_consistency(const RenderBuffers& buf,
                               const CameraFrame& camera, BufferGrads* upstream,
                               double weight) {
  const int w = buf.width, h = buf.height;
  auto ray = [&](int px, int py) {
    return Vec3((px + 0.5 - camera.cx) / camera.fx,
                (py + 0.5 - camera.cy) / camera.fy, 1.0);
  };
  struct Term {
    int px, py;
    Vec3 n_est;
    Vec3 g_tx, g_ty;  // dL/d(tangent) before the 1/count scale
  };
  std::vector<Term> terms;
  double sum = 0;
  size_t count = 0;
  for (int py = 1; py < h - 1; ++py) {
    for (int px = 1; px < w - 1; ++px) {
      size_t pix = size_t(py) * w + px;
      if (buf.alpha[pix] <= 0.5) continue;
      Vec3 p_e = buf.depth_at(px + 1, py) * ray(px + 1, py);
      Vec3 p_w = buf.depth_at(px - 1, py) * ray(px - 1, py);
      Vec3 p_s = buf.depth_at(px, py + 1) * ray(px, py + 1);
      Vec3 p_n = buf.depth_at(px, py - 1) * ray(px, py - 1);
      Vec3 tx = p_e - p_w, ty = p_s - p_n;
      Vec3 c = ty.cross(tx);  // oriented toward the camera for front surfaces
      double len = c.norm();
      if (len < 1e-12) continue;
      Vec3 n_est = c / len;
      Vec3 nb(buf.normal[pix * 3], buf.normal[pix * 3 + 1], buf.normal[pix * 3 + 2]);
      sum += buf.alpha[pix] - nb.dot(n_est);
      ++count;
      if (upstream) {
        Vec3 g_c = -(nb - n_est * n_est.dot(nb)) / len;
        terms.push_back({px, py, n_est, g_c.cross(ty), tx.cross(g_c)});
      }
    }
  }
  if (count == 0) return 0.0;
  double value = sum / double(count);

  if (upstream) {
    const double inv = weight / double(count);
    for (const Term& t : terms) {
      size_t pix = size_t(t.py) * w + t.px;
      upstream->alpha[pix] += inv;
      upstream->normal[pix * 3 + 0] -= inv * t.n_est.x();
      upstream->normal[pix * 3 + 1] -= inv * t.n_est.y();
      upstream->normal[pix * 3 + 2] -= inv * t.n_est.z();
      auto add_depth = [&](int qx, int qy, const Vec3& g_p) {
        upstream->depth[size_t(qy) * w + qx] += inv * g_p.dot(ray(qx, qy));
      };
      add_depth(t.px + 1, t.py, t.g_tx);
      add_depth(t.px - 1, t.py, -t.g_tx);
      add_depth(t.px, t.py + 1, t.g_ty);
      add_depth(t.px, t.py - 1, -t.g_ty);
    }
  }
  return value;
}

double loss_semantic(const RenderBuffers& buf,
                     std::span<const uint16_t> target_labels,
                     BufferGrads* upstream, double weight) {
  const size_t n = buf.npix();
  const int K = buf.num_classes;
  if (target_labels.size() != n)
    throw std::invalid_argument("loss_semantic: label map shape mismatch");
  constexpr double kEps = 1e-12;

  double sum = 0;
  size_t included = 0;
  for (size_t p = 0; p < n; ++p) {
    if (buf.alpha[p] < 1e-4) continue;
    uint16_t t = target_labels[p];
    if (t >= K) throw std::out_of_range("loss_semantic: label id out of range");
    const double* b = &buf.semantic[p * K];
    double s = 0;
    for (int k = 0; k < K; ++k) s += b[k];
    sum += -std::log(std::max(b[t], kEps) / std::max(s, kEps));
    ++included;
  }
  if (included == 0) return 0.0;
  double value = sum / double(included);

  if (upstream) {
    const double inv = weight / double(included);
    for (size_t p = 0; p < n; ++p) {
      if (buf.alpha[p] < 1e-4) continue;
      uint16_t t = target_labels[p];
      const double* b = &buf.semantic[p * K];
      double s = 0;
      for (int k = 0; k < K; ++k) s += b[k];
      double* g = &upstream->semantic[p * K];
      if (s > kEps)
        for (int k = 0; k < K; ++k) g[k] += inv / s;
      if (b[t] > kEps) g[t] -= inv / b[t];
    }
  }
  return value;
}

double loss_semantic_distortion(const RenderBuffers& buf, BufferGrads* upstream,
                                double weight) {
  const size_t n = buf.npix();
  double value = 0;
  for (double v : buf.per_class_distortion) value += v;
  value /= double(n);
  if (upstream) {
    const double g = weight / double(n);
    for (size_t i = 0; i < buf.per_class_distortion.size(); ++i)
      upstream->per_class_distortion[i] += g;
  }
  return value;
}

double loss_shrink(const Scene& scene, std::vector<double>* opacity_logit_grads,
                   double weight) {
  const size_t n = scene.splats.size();
  if (n == 0) return 0.0;
  double sum = 0;
  for (const Splat2D& s : scene.splats) sum += s.opacity();
  if (opacity_logit_grads) {
    opacity_logit_grads->resize(n, 0.0);
    const double inv = weight / double(n);
    for (size_t i = 0; i < n; ++i) {
      double a = scene.splats[i].opacity();
      (*opacity_logit_grads)[i] += inv * a * (1.0 - a);
    }
  }
  return sum / double(n);
}

LossBreakdown loss_total(const Scene& scene, const CameraFrame& camera,
                         const RenderBuffers& buf, const Image& target,
                         std::span<const uint16_t> target_labels,
                         const LossWeights& weights, BufferGrads* upstream,
                         std::vector<double>* opacity_logit_grads) {
  LossBreakdown out;
  out.rgb = loss_rgb(buf, target, weights.lambda_ssim, upstream, 1.0);
  if (weights.lambda_d != 0)
    out.depth_distortion = loss_depth_distortion(buf, upstream, weights.lambda_d);
  if (weights.lambda_n != 0)
    out.normal_consistency =
        loss_normal_consistency(buf, camera, upstream, weights.lambda_n);
  if (weights.lambda_s != 0)
    out.semantic = loss_semantic(buf, target_labels, upstream, weights.lambda_s);
  if (weights.lambda_ds != 0)
    out.semantic_distortion =
        loss_semantic_distortion(buf, upstream, weights.lambda_ds);
  if (weights.lambda_alpha != 0)
    out.shrink = loss_shrink(scene, opacity_logit_grads, weights.lambda_alpha);
  out.total = out.rgb + weights.lambda_d * out.depth_distortion +
              weights.lambda_n * out.normal_consistency +
              weights.lambda_s * out.semantic +
              weights.lambda_ds * out.semantic_distortion +
              weights.lambda_alpha * out.shrink;
  return out;
}

RetrainBreakdown loss_retrain(const RenderBuffers& buf, const Image& pseudo_label,
                              const CameraFrame& camera,
                              const LossWeights& weights, BufferGrads* upstream) {
  RetrainBreakdown out;
  out.l1 = loss_rgb(buf, pseudo_label, 0.0, upstream, 1.0);
  if (weights.lambda_d != 0)
    out.depth_distortion = loss_depth_distortion(buf, upstream, weights.lambda_d);
  if (weights.lambda_n != 0)
    out.normal_consistency =
        loss_normal_consistency(buf, camera, upstream, weights.lambda_n);
  out.total = out.l1 + weights.lambda_d * out.depth_distortion +
              weights.lambda_n * out.normal_consistency;
  return out;
}

}  // namespace unveil
