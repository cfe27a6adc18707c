#include "unveil/time_reversal.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace unveil {

namespace fs = std::filesystem;

std::vector<int> select_keyframes(const std::vector<int>& time_indices,
                                  int stride) {
  if (time_indices.empty())
    throw std::invalid_argument("select_keyframes: empty frame list");
  if (stride < 1) throw std::invalid_argument("select_keyframes: stride < 1");
  std::vector<int> out;
  for (size_t i = 0; i < time_indices.size(); i += size_t(stride))
    out.push_back(time_indices[i]);
  if (out.back() != time_indices.back()) out.push_back(time_indices.back());
  return out;
}

MaskImage visibility_mask(const CameraFrame& target_cam,
                          const CameraFrame& ref_cam,
                          const std::vector<double>& target_depth,
                          const std::vector<double>& target_alpha,
                          const std::vector<double>& ref_depth,
                          const std::vector<double>& ref_alpha,
                          const MaskImage& target_mask, double delta_frac) {
  MaskImage out = MaskImage::zeros(target_cam.width, target_cam.height);
  const Vec3 origin = target_cam.camera_center();
  for (int y = 0; y < target_cam.height; ++y) {
    for (int x = 0; x < target_cam.width; ++x) {
      const size_t pix = size_t(y) * target_cam.width + x;
      if (!target_mask.data[pix]) continue;
      if (target_alpha[pix] < 0.5) continue;  // no usable depth
      Vec3 point = origin + target_depth[pix] * target_cam.ray_dir(x + 0.5, y + 0.5);
      Vec3 proj = ref_cam.project(point);
      if (proj.z() <= 0) continue;
      int rx = int(std::floor(proj.x()));
      int ry = int(std::floor(proj.y()));
      if (rx < 0 || rx >= ref_cam.width || ry < 0 || ry >= ref_cam.height)
        continue;
      const size_t rpix = size_t(ry) * ref_cam.width + rx;
      if (ref_alpha[rpix] < 0.5) continue;
      if (std::abs(ref_depth[rpix] - proj.z()) <= delta_frac * proj.z())
        out.data[pix] = 1;
    }
  }
  return out;
}

namespace {

MaskImage mask_minus(const MaskImage& a, const MaskImage& b) {
  MaskImage out = a;
  for (size_t i = 0; i < out.data.size(); ++i)
    if (b.data[i]) out.data[i] = 0;
  return out;
}

int frame_position(const std::vector<FrameData>& frames, int time) {
  for (size_t i = 0; i < frames.size(); ++i)
    if (frames[i].camera.time_index == time) return int(i);
  throw std::logic_error("schedule: unknown time index");
}

// Splits a frame's mask against a later reference frame into jobs. Appends an
// unconditional job for the invisible residue and a reference job for the
// visible region; tiny reference regions fold into the unconditional job.
void push_split_jobs(const std::vector<FrameData>& frames, int target_time,
                     int ref_time, const ScheduleParams& params,
                     std::vector<InpaintJob>& jobs) {
  const FrameData& target = frames[frame_position(frames, target_time)];
  const FrameData& ref = frames[frame_position(frames, ref_time)];
  MaskImage visible = visibility_mask(
      target.camera, ref.camera, target.depth, target.alpha, ref.depth,
      ref.alpha, target.mask, params.visibility_delta_frac);
  if (visible.count() < params.min_reference_pixels) {
    if (target.mask.count() > 0)
      jobs.push_back({InpaintJob::Mode::kUnconditional, target_time, -1,
                      target.mask});
    return;
  }
  MaskImage residue = mask_minus(target.mask, visible);
  if (residue.count() > 0)
    jobs.push_back({InpaintJob::Mode::kUnconditional, target_time, -1, residue});
  jobs.push_back({InpaintJob::Mode::kReference, target_time, ref_time, visible});
}

}  // namespace

Schedule build_schedule(const std::vector<FrameData>& frames,
                        const ScheduleParams& params) {
  if (frames.empty()) throw std::invalid_argument("build_schedule: no frames");
  for (size_t i = 1; i < frames.size(); ++i)
    if (frames[i].camera.time_index <= frames[i - 1].camera.time_index)
      throw std::invalid_argument("build_schedule: time indices must increase");

  std::vector<int> times;
  for (const FrameData& f : frames) times.push_back(f.camera.time_index);

  Schedule schedule;
  schedule.keyframe_stride = params.keyframe_stride;
  schedule.keyframes = select_keyframes(times, params.keyframe_stride);
  const std::vector<int>& kf = schedule.keyframes;

  // Keyframe chain, latest first.
  const int last_kf = kf.back();
  const FrameData& last = frames[frame_position(frames, last_kf)];
  if (last.mask.count() > 0)
    schedule.jobs.push_back({InpaintJob::Mode::kUnconditional, last_kf, -1,
                             last.mask});
  for (int i = int(kf.size()) - 2; i >= 0; --i)
    push_split_jobs(frames, kf[i], kf[i + 1], params, schedule.jobs);

  // Intermediate frames, latest first, each guided by the nearest later
  // keyframe.
  std::set<int> kf_set(kf.begin(), kf.end());
  for (int i = int(frames.size()) - 1; i >= 0; --i) {
    const int t = times[i];
    if (kf_set.count(t)) continue;
    auto it = kf_set.upper_bound(t);
    if (it == kf_set.end())
      throw std::logic_error("build_schedule: frame after last keyframe");
    push_split_jobs(frames, t, *it, params, schedule.jobs);
  }

  // Reference outputs must be fully produced before they are consumed.
  {
    std::map<int, size_t> remaining;
    for (const InpaintJob& j : schedule.jobs) remaining[j.target_time] += 1;
    for (const InpaintJob& j : schedule.jobs) {
      if (j.mode == InpaintJob::Mode::kReference) {
        if (j.reference_time <= j.target_time)
          throw std::logic_error("build_schedule: reference is not later than target");
        if (remaining.count(j.reference_time) && remaining[j.reference_time] > 0)
          throw std::logic_error("build_schedule: reference consumed before produced");
      }
      remaining[j.target_time] -= 1;
    }
  }
  return schedule;
}

Image oracle_inpaint(const Image& image, const MaskImage& mask,
                     const Image& gt_empty_render) {
  if (!image.same_shape(gt_empty_render) || mask.width != image.width ||
      mask.height != image.height)
    throw std::invalid_argument("oracle_inpaint: shape mismatch");
  Image out = image;
  for (size_t p = 0; p < mask.data.size(); ++p) {
    if (!mask.data[p]) continue;
    for (int c = 0; c < image.channels; ++c)
      out.data[p * image.channels + c] = gt_empty_render.data[p * image.channels + c];
  }
  return out;
}

Image OracleInpainter::inpaint(const InpaintJob& job, const Image& target,
                               const MaskImage& mask, const Image*) {
  auto it = gt_.find(job.target_time);
  if (it == gt_.end())
    throw std::runtime_error("oracle inpainter: no ground truth for frame " +
                             std::to_string(job.target_time));
  return oracle_inpaint(target, mask, it->second);
}

PseudoLabels run_schedule(const Schedule& schedule,
                          const std::vector<FrameData>& frames,
                          InpainterBackend& backend,
                          const std::optional<std::string>& store_dir) {
  PseudoLabels out;
  out.images.reserve(frames.size());
  for (const FrameData& f : frames) out.images.push_back(f.render);
  out.provenance.assign(frames.size(),
                        std::vector<uint8_t>(frames.empty() ? 0 : frames[0].render.npix(), 0));
  for (size_t i = 0; i < frames.size(); ++i)
    out.provenance[i].assign(frames[i].render.npix(), 0);

  size_t first_pending = 0;
  std::string journal_path;
  if (store_dir) {
    fs::create_directories(*store_dir);
    journal_path = *store_dir + "/journal.txt";
    std::ifstream journal(journal_path);
    size_t done = 0;
    size_t job_index;
    while (journal >> job_index) {
      if (job_index != done)
        throw std::runtime_error("schedule store: journal out of order");
      ++done;
    }
    first_pending = std::min(done, schedule.jobs.size());
    // Reload the persisted canvases touched by completed jobs.
    for (size_t j = 0; j < first_pending; ++j) {
      const InpaintJob& job = schedule.jobs[j];
      int pos = frame_position(frames, job.target_time);
      char name[64];
      std::snprintf(name, sizeof name, "/canvas_%05d.png", job.target_time);
      out.images[pos] = load_png(*store_dir + name);
      std::snprintf(name, sizeof name, "/provenance_%05d.png", job.target_time);
      int w = 0, h = 0;
      std::vector<uint16_t> prov = load_label_map(*store_dir + name, &w, &h);
      out.provenance[pos].assign(prov.begin(), prov.end());
    }
  }

  for (size_t j = first_pending; j < schedule.jobs.size(); ++j) {
    const InpaintJob& job = schedule.jobs[j];
    const int pos = frame_position(frames, job.target_time);
    const Image& canvas = out.images[pos];
    const Image* reference = nullptr;
    if (job.mode == InpaintJob::Mode::kReference)
      reference = &out.images[frame_position(frames, job.reference_time)];

    Image result;
    try {
      result = backend.inpaint(job, canvas, job.mask, reference);
    } catch (const std::exception& e) {
      throw ScheduleError(j, "inpaint job " + std::to_string(j) + " (frame " +
                                 std::to_string(job.target_time) +
                                 ") failed: " + e.what());
    }
    if (result.width != canvas.width || result.height != canvas.height ||
        result.channels != canvas.channels)
      throw ScheduleError(j, "inpaint job " + std::to_string(j) +
                                 ": backend returned wrong dimensions");

    // Compose: the backend owns only the masked pixels.
    Image composed = canvas;
    std::vector<uint8_t>& prov = out.provenance[pos];
    const uint8_t tag = job.mode == InpaintJob::Mode::kUnconditional ? 1 : 2;
    for (size_t p = 0; p < job.mask.data.size(); ++p) {
      if (!job.mask.data[p]) continue;
      for (int c = 0; c < canvas.channels; ++c)
        composed.data[p * canvas.channels + c] = result.data[p * canvas.channels + c];
      prov[p] = tag;
    }
    out.images[pos] = std::move(composed);

    if (store_dir) {
      char name[64];
      std::snprintf(name, sizeof name, "/canvas_%05d.png", job.target_time);
      save_png(*store_dir + name, out.images[pos]);
      std::snprintf(name, sizeof name, "/provenance_%05d.png", job.target_time);
      std::vector<uint16_t> prov16(prov.begin(), prov.end());
      save_label_map(*store_dir + name, prov16, canvas.width, canvas.height);
      std::ofstream journal(journal_path, std::ios::app);
      journal << j << "\n";
    }
  }
  return out;
}

}  // namespace unveil
