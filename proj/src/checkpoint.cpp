#include "unveil/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace unveil {

namespace {

constexpr char kMagic[4] = {'U', 'S', 'P', 'L'};

struct Writer {
  std::vector<uint8_t> bytes;
  void raw(const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  void u8(uint8_t v) { raw(&v, 1); }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
};

struct Reader {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;
  void raw(void* p, size_t n) {
    if (pos + n > bytes.size())
      throw std::runtime_error("checkpoint: truncated file");
    std::memcpy(p, bytes.data() + pos, n);
    pos += n;
  }
  uint8_t u8() { uint8_t v; raw(&v, 1); return v; }
  uint16_t u16() { uint16_t v; raw(&v, 2); return v; }
  uint32_t u32() { uint32_t v; raw(&v, 4); return v; }
  uint64_t u64() { uint64_t v; raw(&v, 8); return v; }
  float f32() { float v; raw(&v, 4); return v; }
};

}  // namespace

void checkpoint_store(const Scene& scene, const std::string& path) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(scene.splats.size());
  if (scene.sh_degree < 0 || scene.sh_degree > kMaxShDegree)
    throw std::invalid_argument("checkpoint: sh_degree out of range");
  w.u8(uint8_t(scene.sh_degree));

  w.u32(uint32_t(scene.palette.entries.size()));
  for (const PaletteEntry& e : scene.palette.entries) {
    w.u16(e.id);
    w.u8(e.removable ? 1 : 0);
    if (e.name.size() > 65535)
      throw std::invalid_argument("checkpoint: palette name too long");
    w.u16(uint16_t(e.name.size()));
    w.raw(e.name.data(), e.name.size());
  }

  w.u32(uint32_t(scene.environment.height));
  w.u32(uint32_t(scene.environment.width));
  const size_t env_n = size_t(scene.environment.height) * scene.environment.width * 3;
  if (scene.environment.data.size() != env_n)
    throw std::invalid_argument("checkpoint: environment grid size mismatch");
  for (float v : scene.environment.data) w.f32(v);

  const int n_coeffs = 3 * sh_num_bases(scene.sh_degree);
  for (const Splat2D& s : scene.splats) {
    for (int i = 0; i < 3; ++i) w.f32(s.center[i]);
    for (int i = 0; i < 4; ++i) w.f32(s.rotation[i]);
    for (int i = 0; i < 2; ++i) w.f32(s.log_scales[i]);
    w.f32(s.opacity_logit);
    w.u16(s.label);
    for (int i = 0; i < n_coeffs; ++i) w.f32(s.sh[i]);
  }

  std::string tmp = path + ".tmp";
  std::ofstream out(tmp, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(reinterpret_cast<const char*>(w.bytes.data()),
            std::streamsize(w.bytes.size()));
  out.close();
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
  std::filesystem::rename(tmp, path);
}

Scene checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::vector<uint8_t> bytes(size_t(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!in) throw std::runtime_error("checkpoint: read failed for " + path);

  Reader r{bytes};
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic (corrupt header)");
  uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  uint64_t count = r.u64();
  uint8_t sh_degree = r.u8();
  if (sh_degree > kMaxShDegree)
    throw std::runtime_error("checkpoint: sh_degree out of range");

  Scene scene;
  scene.sh_degree = sh_degree;
  uint32_t palette_n = r.u32();
  for (uint32_t i = 0; i < palette_n; ++i) {
    PaletteEntry e;
    e.id = r.u16();
    e.removable = r.u8() != 0;
    uint16_t len = r.u16();
    e.name.resize(len);
    r.raw(e.name.data(), len);
    scene.palette.entries.push_back(std::move(e));
  }
  scene.palette.validate();

  uint32_t env_h = r.u32();
  uint32_t env_w = r.u32();
  if (env_h > 1 << 14 || env_w > 1 << 14)
    throw std::runtime_error("checkpoint: environment grid too large");
  scene.environment.height = int(env_h);
  scene.environment.width = int(env_w);
  scene.environment.data.resize(size_t(env_h) * env_w * 3);
  for (float& v : scene.environment.data) v = r.f32();

  const int n_coeffs = 3 * sh_num_bases(scene.sh_degree);
  const size_t record = 4 * (3 + 4 + 2 + 1 + size_t(n_coeffs)) + 2;
  if (bytes.size() - r.pos != count * record)
    throw std::runtime_error("checkpoint: record length mismatch (truncated or corrupt)");

  scene.splats.resize(count);
  for (uint64_t i = 0; i < count; ++i) {
    Splat2D& s = scene.splats[i];
    for (int j = 0; j < 3; ++j) s.center[j] = r.f32();
    for (int j = 0; j < 4; ++j) s.rotation[j] = r.f32();
    for (int j = 0; j < 2; ++j) s.log_scales[j] = r.f32();
    s.opacity_logit = r.f32();
    s.label = r.u16();
    for (int j = 0; j < n_coeffs; ++j) s.sh[j] = r.f32();
  }
  scene.validate();
  return scene;
}

}  // namespace unveil
