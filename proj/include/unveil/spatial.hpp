#pragma once

#include "unveil/core_types.hpp"

#include <unordered_map>
#include <vector>

namespace unveil {

// Uniform hash grid over 3D points for radius and k-nearest queries.
class SpatialGrid {
 public:
  SpatialGrid(const std::vector<Vec3>& points, double cell_size);

  // Indices of points within `radius` of `query` (inclusive).
  std::vector<uint32_t> radius_query(const Vec3& query, double radius) const;

  // Distances to the k nearest points, excluding `exclude_index` when >= 0.
  // Returns fewer than k when the point set is too small.
  std::vector<double> knn_distances(const Vec3& query, int k,
                                    int64_t exclude_index = -1) const;

 private:
  struct CellKey {
    int64_t x, y, z;
    bool operator==(const CellKey& o) const {
      return x == o.x && y == o.y && z == o.z;
    }
  };
  struct CellHash {
    size_t operator()(const CellKey& k) const {
      return size_t(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
    }
  };
  CellKey key_of(const Vec3& p) const;

  const std::vector<Vec3>& points_;
  double cell_;
  std::unordered_map<CellKey, std::vector<uint32_t>, CellHash> cells_;
};

}  // namespace unveil
