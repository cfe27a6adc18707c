#pragma once

#include "unveil/core_types.hpp"

#include <string>
#include <vector>

namespace unveil {

struct PointRecord {
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Zero();  // [0,1]
  uint16_t label = 0;
};

// ASCII PLY with x,y,z float, red,green,blue uchar, label ushort properties.
void save_ply(const std::string& path, const std::vector<PointRecord>& points);
std::vector<PointRecord> load_ply(const std::string& path);

}  // namespace unveil
