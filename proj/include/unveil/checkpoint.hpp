#pragma once

#include "unveil/core_types.hpp"

#include <string>

namespace unveil {

// Binary scene checkpoint, little-endian:
//   magic "USPL", version u32, splat count u64, sh_degree u8,
//   palette block (u32 count, then per entry: u16 id, u8 removable,
//     u16 name length, name bytes),
//   environment grid (u32 height, u32 width, f32 data[h*w*3]),
//   per-splat records: center f32x3, rotation f32x4, log-scales f32x2,
//     opacity logit f32, label u16, SH coefficients f32x3x(deg+1)^2
//     (basis-major, RGB interleaved).
// Round-trips bit-exactly.
constexpr uint32_t kCheckpointVersion = 1;

void checkpoint_store(const Scene& scene, const std::string& path);
Scene checkpoint_load(const std::string& path);

}  // namespace unveil
