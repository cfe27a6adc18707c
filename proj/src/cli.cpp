#include "unveil/cli.hpp"

#include "unveil/checkpoint.hpp"
#include "unveil/config.hpp"
#include "unveil/dataset.hpp"
#include "unveil/synthetic.hpp"
#include "unveil/time_reversal.hpp"
#include "unveil/train_loop.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace unveil {

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Config file (ini-style)");
  cmd->add_option("--set", args.sets, "Override a config key, e.g. train.seed=3");
  cmd->add_option("--threads", args.threads, "Worker thread count");
}

Config resolve_config(const CommonArgs& args) {
  Config cfg = args.config_path.empty() ? Config::defaults()
                                        : Config::load(args.config_path);
  for (const std::string& kv : args.sets) cfg.set_kv(kv);
  if (args.threads > 0) cfg.set("run.threads", std::to_string(args.threads));
  return cfg;
}

std::vector<TrainFrame> dataset_to_frames(const Dataset& data) {
  std::vector<TrainFrame> frames;
  for (size_t i = 0; i < data.images.size(); ++i)
    frames.push_back({data.manifest.frames[i].camera, data.images[i],
                      data.labels[i]});
  return frames;
}

SynthParams synth_params_from(const Config& cfg) {
  SynthParams p;
  p.frames = cfg.get_int("synth.frames");
  p.width = cfg.get_int("synth.width");
  p.height = cfg.get_int("synth.height");
  p.boxes = cfg.get_int("synth.boxes");
  p.seed = uint64_t(cfg.get_int64("synth.seed"));
  p.ground_spacing = cfg.get_double("synth.ground_spacing");
  return p;
}

std::string frame_name(int time_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05d.png", time_index);
  return buf;
}

std::set<uint16_t> resolve_labels(const SemanticPalette& palette,
                                  const std::vector<std::string>& tokens) {
  std::set<uint16_t> out;
  if (tokens.empty()) {
    for (const PaletteEntry& e : palette.entries)
      if (e.removable) out.insert(e.id);
    if (out.empty())
      throw std::runtime_error("no removable labels in the palette");
    return out;
  }
  for (const std::string& t : tokens) {
    bool found = false;
    for (const PaletteEntry& e : palette.entries) {
      if (e.name == t || std::to_string(e.id) == t) {
        out.insert(e.id);
        found = true;
        break;
      }
    }
    if (!found) throw std::runtime_error("unknown label '" + t + "'");
  }
  return out;
}

RemovalSet build_removal(const Scene& scene, const std::set<uint16_t>& labels,
                         const TrainConfig& tc) {
  const double extent = std::max(scene_bounds(scene).diagonal(), 1e-6);
  const double radius = tc.proximity_radius > 0
                            ? tc.proximity_radius
                            : tc.proximity_radius_frac * extent;
  RemovalSet removal;
  removal.labels = labels;
  removal.radius = radius;
  std::vector<uint32_t> seed = select_removable(scene, labels);
  removal.indices = expand_by_proximity(scene, seed, radius);
  return removal;
}

int run_synth(const CommonArgs& common, const std::string& out_dir,
              long long seed_flag) {
  Config cfg = resolve_config(common);
  if (seed_flag >= 0) cfg.set("synth.seed", std::to_string(seed_flag));
  SyntheticDataset data = generate_synthetic_scene(synth_params_from(cfg));
  write_synthetic_dataset(data, out_dir);
  cfg.save(out_dir + "/config.ini");
  std::cout << "wrote synthetic dataset with " << data.cameras.size()
            << " frames, " << data.points.size() << " points to " << out_dir
            << "\n";
  return 0;
}

int run_reconstruct(const CommonArgs& common, const std::string& dataset_dir,
                    const std::string& out_dir) {
  Config cfg = resolve_config(common);
  TrainConfig tc = train_config_from(cfg);
  Dataset data = load_dataset(dataset_dir + "/manifest.json");
  std::vector<TrainFrame> frames = dataset_to_frames(data);

  Scene scene = init_from_points(data.points, data.manifest.palette, tc);
  std::cout << "initialized " << scene.splats.size() << " splats\n";
  TrainLog log1 = train_stage1(scene, frames, tc);
  std::cout << "stage 1 done: " << log1.final_splats << " splats, last loss "
            << (log1.loss_curve.empty() ? 0.0 : log1.loss_curve.back()) << "\n";
  TrainLog log2 = train_stage2(scene, frames, tc);
  std::cout << "stage 2 done: " << log2.final_splats << " splats, last loss "
            << (log2.loss_curve.empty() ? 0.0 : log2.loss_curve.back()) << "\n";

  fs::create_directories(out_dir);
  checkpoint_store(scene, out_dir + "/scene.uspl");
  cfg.save(out_dir + "/config.ini");
  std::ofstream curve(out_dir + "/train_log.txt");
  for (size_t i = 0; i < log1.loss_curve.size(); ++i)
    curve << "stage=1 step=" << i << " loss=" << log1.loss_curve[i] << "\n";
  for (size_t i = 0; i < log2.loss_curve.size(); ++i)
    curve << "stage=2 step=" << i << " loss=" << log2.loss_curve[i] << "\n";
  std::cout << "checkpoint written to " << out_dir << "/scene.uspl\n";
  return 0;
}

int run_unveil(const CommonArgs& common, const std::string& dataset_dir,
               const std::string& checkpoint_path, const std::string& out_dir,
               const std::string& backend_name,
               const std::vector<std::string>& label_tokens) {
  Config cfg = resolve_config(common);
  TrainConfig tc = train_config_from(cfg);
  Dataset data = load_dataset(dataset_dir + "/manifest.json");
  Scene scene = checkpoint_load(checkpoint_path);

  std::set<uint16_t> labels = resolve_labels(scene.palette, label_tokens);
  RemovalSet removal = build_removal(scene, labels, tc);
  std::cout << "removing " << removal.indices.size() << " splats (radius "
            << removal.radius << ")\n";

  // Post-removal renders feed both the masks and the pseudo-label canvases.
  Scene remaining = scene_without(scene, removal.indices);
  std::vector<FrameData> frame_data;
  MaskOptions mask_opt;
  mask_opt.threshold = tc.alpha_threshold;
  mask_opt.dilate = tc.mask_dilation > 0;
  mask_opt.render = tc.render;
  fs::create_directories(out_dir + "/masks");
  for (size_t i = 0; i < data.manifest.frames.size(); ++i) {
    const CameraFrame& cam = data.manifest.frames[i].camera;
    RenderBuffers buf = render(remaining, cam, tc.render);
    FrameData fd;
    fd.camera = cam;
    fd.render.width = buf.width;
    fd.render.height = buf.height;
    fd.render.channels = 3;
    fd.render.data = buf.color;
    fd.depth = buf.depth;
    fd.alpha = buf.alpha;
    fd.mask = generate_inpaint_mask(scene, removal, cam, mask_opt).mask;
    save_mask_png(out_dir + "/masks/" + frame_name(cam.time_index), fd.mask);
    frame_data.push_back(std::move(fd));
  }

  ScheduleParams sp;
  sp.keyframe_stride = tc.keyframe_stride;
  sp.visibility_delta_frac = tc.visibility_delta_frac;
  sp.min_reference_pixels = tc.min_reference_pixels;
  Schedule schedule = build_schedule(frame_data, sp);
  std::cout << "schedule: " << schedule.jobs.size() << " jobs over "
            << schedule.keyframes.size() << " keyframes\n";

  std::unique_ptr<InpainterBackend> backend;
  if (backend_name == "oracle") {
    std::map<int, Image> gt;
    for (const auto& rec : data.manifest.frames) {
      std::string path =
          dataset_dir + "/gt_empty/" + frame_name(rec.camera.time_index);
      if (!fs::exists(path))
        throw std::runtime_error(
            "oracle backend needs ground-truth empty renders at " + path);
      gt[rec.camera.time_index] = load_png(path);
    }
    backend = std::make_unique<OracleInpainter>(std::move(gt));
  } else if (backend_name == "identity") {
    backend = std::make_unique<IdentityInpainter>();
  } else if (backend_name == "remote") {
    RemoteInpaintConfig rc;
    rc.endpoint = cfg.get_str("inpaint.endpoint");
    rc.timeout_ms = cfg.get_int("inpaint.timeout_ms");
    rc.attempts = cfg.get_int("inpaint.attempts");
    rc.backoff_ms = cfg.get_int("inpaint.backoff_ms");
    backend = std::make_unique<RemoteInpainter>(with_env_override(rc));
  } else {
    throw std::runtime_error("unknown backend '" + backend_name +
                             "' (expected oracle, identity, or remote)");
  }

  PseudoLabels pseudo =
      run_schedule(schedule, frame_data, *backend, out_dir + "/inpaint_store");

  fs::create_directories(out_dir + "/pseudo");
  fs::create_directories(out_dir + "/provenance");
  std::vector<TrainFrame> pseudo_frames;
  for (size_t i = 0; i < frame_data.size(); ++i) {
    const CameraFrame& cam = frame_data[i].camera;
    save_png(out_dir + "/pseudo/" + frame_name(cam.time_index), pseudo.images[i]);
    std::vector<uint16_t> prov(pseudo.provenance[i].begin(),
                               pseudo.provenance[i].end());
    save_label_map(out_dir + "/provenance/" + frame_name(cam.time_index), prov,
                   cam.width, cam.height);
    pseudo_frames.push_back({cam, pseudo.images[i], {}});
  }

  TrainLog rlog = reoptimize(scene, removal, pseudo_frames, tc);
  std::cout << "re-optimization done: " << rlog.final_splats
            << " splats, last loss "
            << (rlog.loss_curve.empty() ? 0.0 : rlog.loss_curve.back()) << "\n";
  checkpoint_store(scene, out_dir + "/unveiled.uspl");
  cfg.save(out_dir + "/config.ini");
  std::cout << "unveiled checkpoint written to " << out_dir << "/unveiled.uspl\n";
  return 0;
}

int run_render(const CommonArgs& common, const std::string& checkpoint_path,
               const std::string& dataset_dir, const std::string& out_dir) {
  Config cfg = resolve_config(common);
  TrainConfig tc = train_config_from(cfg);
  const double depth_scale = cfg.get_double("run.depth_scale");
  Scene scene = checkpoint_load(checkpoint_path);
  DatasetManifest manifest = load_manifest(dataset_dir + "/manifest.json");

  fs::create_directories(out_dir + "/color");
  fs::create_directories(out_dir + "/alpha");
  fs::create_directories(out_dir + "/depth");
  fs::create_directories(out_dir + "/normal");
  fs::create_directories(out_dir + "/semantic");
  for (const auto& rec : manifest.frames) {
    const CameraFrame& cam = rec.camera;
    RenderBuffers buf = render(scene, cam, tc.render);
    const std::string name = frame_name(cam.time_index);

    Image color;
    color.width = buf.width;
    color.height = buf.height;
    color.channels = 3;
    color.data = buf.color;
    save_png(out_dir + "/color/" + name, color);

    Image alpha = Image::zeros(buf.width, buf.height, 1);
    alpha.data = buf.alpha;
    save_png(out_dir + "/alpha/" + name, alpha);

    Image depth = Image::zeros(buf.width, buf.height, 1);
    for (size_t p = 0; p < buf.depth.size(); ++p)
      depth.data[p] = std::clamp(buf.depth[p] * depth_scale / 65535.0, 0.0, 1.0);
    save_png16(out_dir + "/depth/" + name, depth);

    Image normal = Image::zeros(buf.width, buf.height, 3);
    for (size_t i = 0; i < buf.normal.size(); ++i)
      normal.data[i] = std::clamp(buf.normal[i] * 0.5 + 0.5, 0.0, 1.0);
    save_png(out_dir + "/normal/" + name, normal);

    std::vector<uint16_t> sem(buf.npix(), 255);
    for (size_t p = 0; p < buf.npix(); ++p) {
      if (buf.alpha[p] < 1e-4) continue;
      int best = 0;
      for (int k = 1; k < buf.num_classes; ++k)
        if (buf.semantic[p * buf.num_classes + k] >
            buf.semantic[p * buf.num_classes + best])
          best = k;
      sem[p] = uint16_t(best);
    }
    save_label_map(out_dir + "/semantic/" + name, sem, buf.width, buf.height);
  }
  std::cout << "rendered " << manifest.frames.size() << " frames to " << out_dir
            << "\n";
  return 0;
}

int run_eval(const CommonArgs& common, const std::string& checkpoint_path,
             const std::string& dataset_dir, const std::string& gt_kind,
             bool with_masks, const std::string& out_path) {
  Config cfg = resolve_config(common);
  TrainConfig tc = train_config_from(cfg);
  Scene scene = checkpoint_load(checkpoint_path);
  DatasetManifest manifest = load_manifest(dataset_dir + "/manifest.json");

  std::vector<CameraFrame> cameras;
  std::vector<Image> gt;
  std::vector<MaskImage> masks;
  for (const auto& rec : manifest.frames) {
    cameras.push_back(rec.camera);
    const std::string name = frame_name(rec.camera.time_index);
    if (gt_kind == "full") {
      gt.push_back(load_png(manifest.root + "/" + rec.image_path));
    } else if (gt_kind == "empty") {
      gt.push_back(load_png(dataset_dir + "/gt_empty/" + name));
    } else {
      throw std::runtime_error("unknown --gt kind '" + gt_kind + "'");
    }
    if (with_masks)
      masks.push_back(load_mask_png(dataset_dir + "/gt_masks/" + name));
  }

  MetricsReport report =
      evaluate(scene, cameras, gt, with_masks ? &masks : nullptr, tc.render);

  std::ostringstream out;
  for (const FrameMetrics& m : report.frames) {
    out << "frame=" << m.time_index << " psnr=" << m.psnr << " ssim=" << m.ssim;
    if (m.has_mask) out << " masked_psnr=" << m.masked_psnr;
    out << "\n";
  }
  out << "mean psnr=" << report.mean_psnr << " ssim=" << report.mean_ssim;
  if (report.masked_frames > 0)
    out << " masked_psnr=" << report.mean_masked_psnr;
  out << "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << out.str();
  } else {
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot write " + out_path);
    f << out.str();
    std::cout << "metrics written to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Semantic 2D Gaussian splatting with object removal and "
               "inpainting-guided re-optimization"};
  app.require_subcommand(1);

  CommonArgs synth_common, rec_common, unv_common, ren_common, eval_common;
  std::string synth_out, rec_dataset, rec_out;
  long long synth_seed = -1;
  std::string unv_dataset, unv_checkpoint, unv_out, unv_backend = "oracle";
  std::vector<std::string> unv_labels;
  std::string ren_checkpoint, ren_dataset, ren_out;
  std::string eval_checkpoint, eval_dataset, eval_gt = "full", eval_out;
  bool eval_masks = false;

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--seed", synth_seed, "Override synth.seed");
  add_common(synth, synth_common);

  CLI::App* rec = app.add_subcommand("reconstruct",
                                     "Two-stage reconstruction to a checkpoint");
  rec->add_option("--dataset", rec_dataset, "Dataset directory")->required();
  rec->add_option("--out", rec_out, "Output directory")->required();
  add_common(rec, rec_common);

  CLI::App* unv = app.add_subcommand(
      "unveil", "Remove labeled objects, inpaint, and re-optimize");
  unv->add_option("--dataset", unv_dataset, "Dataset directory")->required();
  unv->add_option("--checkpoint", unv_checkpoint, "Scene checkpoint")->required();
  unv->add_option("--out", unv_out, "Output directory")->required();
  unv->add_option("--backend", unv_backend, "oracle | identity | remote");
  unv->add_option("--labels", unv_labels, "Labels to remove (names or ids)");
  add_common(unv, unv_common);

  CLI::App* ren = app.add_subcommand("render", "Render a checkpoint");
  ren->add_option("--checkpoint", ren_checkpoint, "Scene checkpoint")->required();
  ren->add_option("--dataset", ren_dataset, "Dataset directory (cameras)")
      ->required();
  ren->add_option("--out", ren_out, "Output directory")->required();
  add_common(ren, ren_common);

  CLI::App* ev = app.add_subcommand("eval", "Metrics against ground truth");
  ev->add_option("--checkpoint", eval_checkpoint, "Scene checkpoint")->required();
  ev->add_option("--dataset", eval_dataset, "Dataset directory")->required();
  ev->add_option("--gt", eval_gt, "full | empty");
  ev->add_flag("--masks", eval_masks, "Also report masked-region PSNR");
  ev->add_option("--out", eval_out, "Metrics output file (default stdout)");
  add_common(ev, eval_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) return run_synth(synth_common, synth_out, synth_seed);
    if (rec->parsed()) return run_reconstruct(rec_common, rec_dataset, rec_out);
    if (unv->parsed())
      return run_unveil(unv_common, unv_dataset, unv_checkpoint, unv_out,
                        unv_backend, unv_labels);
    if (ren->parsed())
      return run_render(ren_common, ren_checkpoint, ren_dataset, ren_out);
    if (ev->parsed())
      return run_eval(eval_common, eval_checkpoint, eval_dataset, eval_gt,
                      eval_masks, eval_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}

}  // namespace unveil
