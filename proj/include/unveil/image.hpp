#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace unveil {

// Float image in [0,1], pixel-major interleaved channels.
struct Image {
  int width = 0, height = 0, channels = 1;
  std::vector<double> data;

  static Image zeros(int w, int h, int c) {
    Image im;
    im.width = w;
    im.height = h;
    im.channels = c;
    im.data.assign(size_t(w) * h * c, 0.0);
    return im;
  }
  double& at(int x, int y, int c) {
    return data[(size_t(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(size_t(y) * width + x) * channels + c];
  }
  size_t npix() const { return size_t(width) * height; }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

struct MaskImage {
  int width = 0, height = 0;
  std::vector<uint8_t> data;  // 0 or 1

  static MaskImage zeros(int w, int h) {
    MaskImage m;
    m.width = w;
    m.height = h;
    m.data.assign(size_t(w) * h, 0);
    return m;
  }
  uint8_t& at(int x, int y) { return data[size_t(y) * width + x]; }
  uint8_t at(int x, int y) const { return data[size_t(y) * width + x]; }
  size_t count() const {
    size_t n = 0;
    for (uint8_t v : data) n += (v != 0);
    return n;
  }
};

// PNG I/O. 8-bit gray/RGB and 16-bit gray are supported; writes are atomic
// (temp file + rename). Images quantize with round(v * maxval).
Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& image);      // 8-bit
void save_png16(const std::string& path, const Image& gray);     // 16-bit, 1ch

// Label maps are 8-bit gray PNGs whose pixel value is the label id.
std::vector<uint16_t> load_label_map(const std::string& path, int* width,
                                     int* height);
void save_label_map(const std::string& path,
                    const std::vector<uint16_t>& labels, int width, int height);

MaskImage image_to_mask(const Image& im);          // nonzero -> 1
Image mask_to_image(const MaskImage& mask);        // 1 -> 1.0
void save_mask_png(const std::string& path, const MaskImage& mask);  // 0/255
MaskImage load_mask_png(const std::string& path);

// In-memory PNG encode/decode for the wire protocol (8-bit only).
std::vector<uint8_t> encode_png(const Image& image);
Image decode_png(const std::vector<uint8_t>& bytes);

std::string base64_encode(const uint8_t* data, size_t len);
std::vector<uint8_t> base64_decode(const std::string& text);

}  // namespace unveil
