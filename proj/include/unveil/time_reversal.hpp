#pragma once

#include "unveil/core_types.hpp"
#include "unveil/image.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace unveil {

// Everything the scheduler needs about one frame, rendered from the
// post-removal scene. Frames are kept sorted by strictly increasing
// time_index.
struct FrameData {
  CameraFrame camera;
  Image render;               // post-removal color render
  std::vector<double> depth;  // post-removal expected depth (meters)
  std::vector<double> alpha;  // post-removal accumulated alpha
  MaskImage mask;             // completely-unobservable inpaint mask
};

struct InpaintJob {
  enum class Mode { kUnconditional, kReference };
  Mode mode = Mode::kUnconditional;
  int target_time = 0;
  int reference_time = -1;  // strictly later than target_time in reference mode
  MaskImage mask;           // the region this job fills
};

struct Schedule {
  std::vector<InpaintJob> jobs;  // topologically ordered
  int keyframe_stride = 10;
  std::vector<int> keyframes;    // ascending time indices
};

struct ScheduleParams {
  int keyframe_stride = 10;
  double visibility_delta_frac = 0.01;  // depth agreement tolerance
  // Reference regions smaller than this are folded into the unconditional job.
  size_t min_reference_pixels = 16;
};

// Every stride-th frame of the ordered list plus always the last frame.
std::vector<int> select_keyframes(const std::vector<int>& time_indices,
                                  int stride);

// Masked target pixels that reproject into the reference view with agreeing
// depth. Pixels without target depth (alpha below 0.5) are not visible.
MaskImage visibility_mask(const CameraFrame& target_cam,
                          const CameraFrame& ref_cam,
                          const std::vector<double>& target_depth,
                          const std::vector<double>& target_alpha,
                          const std::vector<double>& ref_depth,
                          const std::vector<double>& ref_alpha,
                          const MaskImage& target_mask, double delta_frac);

// Builds the reverse-time job list: the last keyframe is inpainted
// unconditionally, earlier keyframes split their mask into a reference region
// (guided by the next later keyframe) and an unconditional residue, and
// intermediate frames reference the nearest later keyframe.
Schedule build_schedule(const std::vector<FrameData>& frames,
                        const ScheduleParams& params);

class InpainterBackend {
 public:
  virtual ~InpainterBackend() = default;
  virtual bool supports_reference() const = 0;
  // Fills the masked pixels of `target`; pixels outside the mask must come
  // back unchanged. `reference` is non-null only for reference jobs.
  virtual Image inpaint(const InpaintJob& job, const Image& target,
                        const MaskImage& mask, const Image* reference) = 0;
};

struct PseudoLabels {
  std::vector<Image> images;                    // one per frame
  std::vector<std::vector<uint8_t>> provenance; // 0 render, 1 uncond, 2 reference
};

struct ScheduleError : std::runtime_error {
  ScheduleError(size_t job, const std::string& what)
      : std::runtime_error(what), job_index(job) {}
  size_t job_index;
};

// Executes the schedule in order, compositing each job's output into the
// frame canvas. With a store directory, completed jobs are journaled and
// their canvases persisted, so an interrupted run resumes where it stopped
// and a completed run replays as a no-op.
PseudoLabels run_schedule(const Schedule& schedule,
                          const std::vector<FrameData>& frames,
                          InpainterBackend& backend,
                          const std::optional<std::string>& store_dir = {});

// Masked pixels replaced by the ground-truth render; others untouched.
Image oracle_inpaint(const Image& image, const MaskImage& mask,
                     const Image& gt_empty_render);

class OracleInpainter : public InpainterBackend {
 public:
  explicit OracleInpainter(std::map<int, Image> gt_by_time)
      : gt_(std::move(gt_by_time)) {}
  bool supports_reference() const override { return true; }
  Image inpaint(const InpaintJob& job, const Image& target,
                const MaskImage& mask, const Image* reference) override;

 private:
  std::map<int, Image> gt_;
};

class IdentityInpainter : public InpainterBackend {
 public:
  bool supports_reference() const override { return true; }
  Image inpaint(const InpaintJob&, const Image& target, const MaskImage&,
                const Image*) override {
    return target;
  }
};

struct RemoteInpaintConfig {
  std::string endpoint = "http://127.0.0.1:9310";
  int timeout_ms = 10000;
  int attempts = 3;
  int backoff_ms = 100;  // doubled per retry
};

struct RemoteInpaintError : std::runtime_error {
  enum class Kind { kTransport, kHttpStatus, kMalformedPayload };
  RemoteInpaintError(Kind k, const std::string& what)
      : std::runtime_error(what), kind(k) {}
  Kind kind;
};

// HTTP client for external inpainting servers: POST /inpaint with a JSON
// envelope carrying base64 PNG payloads. Transport failures and 5xx are
// retried with exponential backoff; the outside-mask invariant is enforced
// locally by recompositing.
class RemoteInpainter : public InpainterBackend {
 public:
  explicit RemoteInpainter(RemoteInpaintConfig config)
      : config_(std::move(config)) {}
  bool supports_reference() const override { return true; }
  Image inpaint(const InpaintJob& job, const Image& target,
                const MaskImage& mask, const Image* reference) override;

 private:
  RemoteInpaintConfig config_;
};

// Applies the UNVEIL_INPAINT_ENDPOINT environment override if set.
RemoteInpaintConfig with_env_override(RemoteInpaintConfig config);

}  // namespace unveil
