#include "unveil/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <stdexcept>

namespace unveil {

namespace {

struct MemReader {
  const std::vector<uint8_t>* bytes;
  size_t offset = 0;
};

void mem_read(png_structp png, png_bytep out, png_size_t len) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->offset + len > r->bytes->size())
    png_error(png, "unexpected end of PNG stream");
  std::memcpy(out, r->bytes->data() + r->offset, len);
  r->offset += len;
}

void mem_write(png_structp png, png_bytep data, png_size_t len) {
  auto* v = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
  v->insert(v->end(), data, data + len);
}

void mem_flush(png_structp) {}

Image read_png_struct(png_structp png, png_infop info) {
  png_read_info(png, info);
  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  bit_depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3)
    throw std::runtime_error("png: unsupported channel count");

  Image im = Image::zeros(int(width), int(height), channels);
  const size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<uint8_t> row(rowbytes);
  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        size_t i = size_t(x) * channels + c;
        double v = bit_depth == 16
                       ? double((unsigned(row[i * 2]) << 8) | row[i * 2 + 1])
                       : double(row[i]);
        im.at(int(x), int(y), c) = v / scale;
      }
    }
  }
  png_read_end(png, nullptr);
  return im;
}

Image load_png_impl(const std::vector<uint8_t>* mem, const std::string& path) {
  FILE* fp = nullptr;
  MemReader reader{mem, 0};
  if (!mem) {
    fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("png: cannot open " + path);
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (fp) std::fclose(fp);
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: allocation failure");
  }
  Image out;
  try {
    if (setjmp(png_jmpbuf(png)))
      throw std::runtime_error("png: decode error" +
                               (path.empty() ? "" : " in " + path));
    if (mem)
      png_set_read_fn(png, &reader, mem_read);
    else
      png_init_io(png, fp);
    out = read_png_struct(png, info);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    if (fp) std::fclose(fp);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (fp) std::fclose(fp);
  return out;
}

void write_png_impl(const Image& image, int bit_depth,
                    std::vector<uint8_t>* mem, const std::string& path) {
  if (image.width <= 0 || image.height <= 0)
    throw std::invalid_argument("png: empty image");
  if (image.channels != 1 && image.channels != 3)
    throw std::invalid_argument("png: unsupported channel count");
  if (bit_depth == 16 && image.channels != 1)
    throw std::invalid_argument("png: 16-bit output is single channel only");

  std::string tmp = path + ".tmp";
  FILE* fp = nullptr;
  if (!mem) {
    fp = std::fopen(tmp.c_str(), "wb");
    if (!fp) throw std::runtime_error("png: cannot write " + path);
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (fp) std::fclose(fp);
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: allocation failure");
  }
  try {
    if (setjmp(png_jmpbuf(png))) throw std::runtime_error("png: encode error");
    if (mem)
      png_set_write_fn(png, mem, mem_write, mem_flush);
    else
      png_init_io(png, fp);
    const int color_type =
        image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, image.width, image.height, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const double scale = bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<uint8_t> row(size_t(image.width) * image.channels *
                             (bit_depth / 8));
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        for (int c = 0; c < image.channels; ++c) {
          double v = std::clamp(image.at(x, y, c), 0.0, 1.0);
          unsigned q = unsigned(std::lround(v * scale));
          size_t i = size_t(x) * image.channels + c;
          if (bit_depth == 16) {
            row[i * 2] = uint8_t(q >> 8);
            row[i * 2 + 1] = uint8_t(q & 0xff);
          } else {
            row[i] = uint8_t(q);
          }
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    if (fp) {
      std::fclose(fp);
      std::remove(tmp.c_str());
    }
    throw;
  }
  png_destroy_write_struct(&png, &info);
  if (fp) {
    std::fclose(fp);
    std::filesystem::rename(tmp, path);
  }
}

}  // namespace

Image load_png(const std::string& path) { return load_png_impl(nullptr, path); }

void save_png(const std::string& path, const Image& image) {
  write_png_impl(image, 8, nullptr, path);
}

void save_png16(const std::string& path, const Image& gray) {
  write_png_impl(gray, 16, nullptr, path);
}

std::vector<uint16_t> load_label_map(const std::string& path, int* width,
                                     int* height) {
  Image im = load_png(path);
  if (im.channels != 1)
    throw std::runtime_error("label map must be single channel: " + path);
  std::vector<uint16_t> labels(im.npix());
  for (size_t p = 0; p < labels.size(); ++p)
    labels[p] = uint16_t(std::lround(im.data[p] * 255.0));
  if (width) *width = im.width;
  if (height) *height = im.height;
  return labels;
}

void save_label_map(const std::string& path,
                    const std::vector<uint16_t>& labels, int width, int height) {
  Image im = Image::zeros(width, height, 1);
  for (size_t p = 0; p < labels.size(); ++p) im.data[p] = labels[p] / 255.0;
  save_png(path, im);
}

MaskImage image_to_mask(const Image& im) {
  MaskImage m = MaskImage::zeros(im.width, im.height);
  for (size_t p = 0; p < m.data.size(); ++p)
    m.data[p] = im.data[p * im.channels] > 0.5 ? 1 : 0;
  return m;
}

Image mask_to_image(const MaskImage& mask) {
  Image im = Image::zeros(mask.width, mask.height, 1);
  for (size_t p = 0; p < mask.data.size(); ++p)
    im.data[p] = mask.data[p] ? 1.0 : 0.0;
  return im;
}

void save_mask_png(const std::string& path, const MaskImage& mask) {
  save_png(path, mask_to_image(mask));
}

MaskImage load_mask_png(const std::string& path) {
  return image_to_mask(load_png(path));
}

std::vector<uint8_t> encode_png(const Image& image) {
  std::vector<uint8_t> out;
  write_png_impl(image, 8, &out, "");
  return out;
}

Image decode_png(const std::vector<uint8_t>& bytes) {
  return load_png_impl(&bytes, "");
}

namespace {
constexpr char kB64[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const uint8_t* data, size_t len) {
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (size_t i = 0; i < len; i += 3) {
    uint32_t v = uint32_t(data[i]) << 16;
    if (i + 1 < len) v |= uint32_t(data[i + 1]) << 8;
    if (i + 2 < len) v |= uint32_t(data[i + 2]);
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(i + 1 < len ? kB64[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < len ? kB64[v & 63] : '=');
  }
  return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<uint8_t> out;
  uint32_t accum = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    int v = value(c);
    if (v < 0) throw std::invalid_argument("base64: invalid character");
    accum = (accum << 6) | uint32_t(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(uint8_t((accum >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace unveil
