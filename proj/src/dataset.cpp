#include "unveil/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace unveil {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json camera_to_json(const CameraFrame& cam) {
  json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["time_index"] = cam.time_index;
  std::vector<double> m(16, 0.0);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m[r * 4 + c] = cam.rotation(r, c);
    m[r * 4 + 3] = cam.translation[r];
  }
  m[15] = 1.0;
  j["world_to_camera"] = m;
  return j;
}

CameraFrame camera_from_json(const json& j) {
  CameraFrame cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.time_index = j.at("time_index").get<int>();
  auto m = j.at("world_to_camera").get<std::vector<double>>();
  if (m.size() != 16)
    throw std::runtime_error("manifest: world_to_camera must have 16 entries");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) cam.rotation(r, c) = m[r * 4 + c];
    cam.translation[r] = m[r * 4 + 3];
  }
  cam.validate();
  return cam;
}

}  // namespace

DatasetManifest load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("manifest: cannot open " + manifest_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("manifest: parse error in " + manifest_path + ": " +
                             e.what());
  }

  DatasetManifest m;
  m.root = fs::path(manifest_path).parent_path().string();
  if (m.root.empty()) m.root = ".";

  for (const json& e : j.at("palette")) {
    PaletteEntry entry;
    entry.id = e.at("id").get<uint16_t>();
    entry.name = e.at("name").get<std::string>();
    entry.removable = e.at("removable").get<bool>();
    m.palette.entries.push_back(std::move(entry));
  }
  m.palette.validate();

  m.points_path = j.at("points").get<std::string>();
  for (const json& f : j.at("frames")) {
    DatasetFrameRecord rec;
    rec.image_path = f.at("image").get<std::string>();
    rec.semantic_path = f.at("semantic").get<std::string>();
    rec.camera = camera_from_json(f.at("camera"));
    m.frames.push_back(std::move(rec));
  }
  if (m.frames.empty()) throw std::runtime_error("manifest: no frames");
  for (size_t i = 1; i < m.frames.size(); ++i)
    if (m.frames[i].camera.time_index <= m.frames[i - 1].camera.time_index)
      throw std::runtime_error(
          "manifest: frame time indices must be unique and increasing");
  return m;
}

void save_manifest(const DatasetManifest& manifest,
                   const std::string& manifest_path) {
  json j;
  j["palette"] = json::array();
  for (const PaletteEntry& e : manifest.palette.entries)
    j["palette"].push_back(
        {{"id", e.id}, {"name", e.name}, {"removable", e.removable}});
  j["points"] = manifest.points_path;
  j["frames"] = json::array();
  for (const DatasetFrameRecord& f : manifest.frames) {
    json rec;
    rec["image"] = f.image_path;
    rec["semantic"] = f.semantic_path;
    rec["camera"] = camera_to_json(f.camera);
    j["frames"].push_back(rec);
  }
  std::string tmp = manifest_path + ".tmp";
  std::ofstream out(tmp);
  if (!out) throw std::runtime_error("manifest: cannot write " + manifest_path);
  out << j.dump(2) << "\n";
  out.close();
  fs::rename(tmp, manifest_path);
}

Dataset load_dataset(const std::string& manifest_path) {
  Dataset d;
  d.manifest = load_manifest(manifest_path);
  const std::string& root = d.manifest.root;
  const int K = d.manifest.palette.num_classes();

  auto resolve = [&](const std::string& rel) {
    std::string full = root + "/" + rel;
    if (!fs::exists(full))
      throw std::runtime_error("dataset: missing file " + full);
    return full;
  };

  for (const DatasetFrameRecord& f : d.manifest.frames) {
    Image im = load_png(resolve(f.image_path));
    if (im.channels != 3)
      throw std::runtime_error("dataset: image must be RGB: " + f.image_path);
    if (im.width != f.camera.width || im.height != f.camera.height)
      throw std::runtime_error("dataset: image size mismatch vs camera: " +
                               f.image_path);
    int lw = 0, lh = 0;
    std::vector<uint16_t> labels = load_label_map(resolve(f.semantic_path), &lw, &lh);
    if (lw != im.width || lh != im.height)
      throw std::runtime_error("dataset: semantic map size mismatch: " +
                               f.semantic_path);
    for (uint16_t l : labels)
      if (l >= K)
        throw std::runtime_error("dataset: unknown label id " +
                                 std::to_string(l) + " in " + f.semantic_path);
    d.images.push_back(std::move(im));
    d.labels.push_back(std::move(labels));
  }

  d.points = load_ply(resolve(d.manifest.points_path));
  for (const PointRecord& p : d.points)
    if (p.label >= K)
      throw std::runtime_error("dataset: unknown label id " +
                               std::to_string(p.label) + " in " +
                               d.manifest.points_path);
  return d;
}

}  // namespace unveil
