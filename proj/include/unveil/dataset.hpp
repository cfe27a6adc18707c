#pragma once

#include "unveil/core_types.hpp"
#include "unveil/image.hpp"
#include "unveil/ply.hpp"

#include <string>
#include <vector>

namespace unveil {

struct DatasetFrameRecord {
  std::string image_path;     // relative to the manifest directory
  std::string semantic_path;
  CameraFrame camera;
};

struct DatasetManifest {
  std::string root;  // directory containing the manifest
  std::vector<DatasetFrameRecord> frames;  // sorted by time_index
  std::string points_path;
  SemanticPalette palette;
};

// Fully loaded training inputs.
struct Dataset {
  DatasetManifest manifest;
  std::vector<Image> images;                  // RGB, [0,1]
  std::vector<std::vector<uint16_t>> labels;  // per-pixel ids
  std::vector<PointRecord> points;
};

DatasetManifest load_manifest(const std::string& manifest_path);
void save_manifest(const DatasetManifest& manifest,
                   const std::string& manifest_path);

// Loads and validates everything the manifest references. Any missing file,
// dimension mismatch, or unknown label id fails the whole load with the
// offending path in the message.
Dataset load_dataset(const std::string& manifest_path);

}  // namespace unveil
