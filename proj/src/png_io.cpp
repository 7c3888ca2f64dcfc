#include "crackseg/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

namespace crackseg {
namespace {

// Decoded pixel buffer before conversion into crackseg types.
struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;  // after palette expansion, alpha kept
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint16_t> samples;
};

struct ReadCursor {
  std::span<const std::uint8_t> data;
  std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->data.size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, cur->data.data() + cur->offset, length);
  cur->offset += length;
}

void write_callback(png_structp png, png_bytep in, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + length);
}

void flush_callback(png_structp) {}

[[noreturn]] void error_callback(png_structp, png_const_charp msg) { throw IoError(std::string("PNG: ") + msg); }
void warning_callback(png_structp, png_const_charp) {}

DecodedPng decode_raw(std::span<const std::uint8_t> bytes, bool allow_expand_low_depth) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw IoError("PNG: missing PNG signature");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, error_callback, warning_callback);
  if (!png) throw IoError("PNG: cannot allocate read struct");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  if (!info) throw IoError("PNG: cannot allocate info struct");

  ReadCursor cursor{bytes, 0};
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);

  DecodedPng out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);

  if (out.color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    out.bit_depth = 8;
  } else if (out.bit_depth < 8) {
    if (!allow_expand_low_depth) {
      throw IoError("PNG: unsupported bit depth " + std::to_string(out.bit_depth));
    }
    png_set_expand_gray_1_2_4_to_8(png);
    out.bit_depth = 8;
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (out.bit_depth == 16) png_set_swap(png);  // host order on little-endian
  png_read_update_info(png, info);

  out.channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> buffer(rowbytes * static_cast<std::size_t>(out.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (out.bit_depth == 16) {
    for (int y = 0; y < out.height; ++y) {
      const auto* row = reinterpret_cast<const std::uint16_t*>(rows[static_cast<std::size_t>(y)]);
      std::memcpy(out.samples.data() + static_cast<std::size_t>(y) * out.width * out.channels, row,
                  static_cast<std::size_t>(out.width) * out.channels * sizeof(std::uint16_t));
    }
  } else {
    for (int y = 0; y < out.height; ++y) {
      const auto* row = rows[static_cast<std::size_t>(y)];
      for (int i = 0; i < out.width * out.channels; ++i) {
        out.samples[static_cast<std::size_t>(y) * out.width * out.channels + i] = row[i];
      }
    }
  }
  return out;
}

Bytes encode_raw(int width, int height, int color_type, int bit_depth, const std::vector<std::uint8_t>& rowdata) {
  Bytes out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, error_callback, warning_callback);
  if (!png) throw IoError("PNG: cannot allocate write struct");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  if (!info) throw IoError("PNG: cannot allocate info struct");

  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rowdata.data() + rowbytes * y));
  }
  png_write_end(png, nullptr);
  return out;
}

std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> png) {
  const DecodedPng raw = decode_raw(png, true);
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  const bool has_alpha = raw.channels == 2 || raw.channels == 4;
  const int colour = has_alpha ? raw.channels - 1 : raw.channels;
  std::vector<Plane> planes(static_cast<std::size_t>(colour), Plane(raw.height, raw.width));
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const std::size_t base = (static_cast<std::size_t>(y) * raw.width + x) * raw.channels;
      for (int c = 0; c < colour; ++c) {
        planes[static_cast<std::size_t>(c)](y, x) = raw.samples[base + c] / scale;
      }
    }
  }
  return RasterImage(std::move(planes));
}

RasterImage load_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

Bytes encode_image(const RasterImage& image) {
  const int w = image.width(), h = image.height(), ch = image.channels();
  std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        data[(static_cast<std::size_t>(y) * w + x) * ch + c] = to_u8(image.channel(c)(y, x));
      }
    }
  }
  return encode_raw(w, h, ch == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, 8, data);
}

void save_image(const RasterImage& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_image(image));
}

BinaryMask decode_mask(std::span<const std::uint8_t> png) {
  const DecodedPng raw = decode_raw(png, false);
  if (raw.color_type != PNG_COLOR_TYPE_GRAY || raw.bit_depth != 8) {
    throw IoError("mask PNG must be 8-bit grayscale (got color type " + std::to_string(raw.color_type) +
                  ", bit depth " + std::to_string(raw.bit_depth) + ")");
  }
  MaskPlane values(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const auto v = raw.samples[static_cast<std::size_t>(y) * raw.width + x];
      if (v != 0 && v != 255) {
        std::ostringstream os;
        os << "mask PNG: non-binary value " << v << " at (x=" << x << ", y=" << y << ")";
        throw IoError(os.str());
      }
      values(y, x) = v == 255 ? 1 : 0;
    }
  }
  return BinaryMask(std::move(values));
}

BinaryMask load_mask(const std::filesystem::path& path) { return decode_mask(read_file(path)); }

Bytes encode_mask(const BinaryMask& mask) {
  std::vector<std::uint8_t> data(static_cast<std::size_t>(mask.width()) * mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      data[static_cast<std::size_t>(y) * mask.width() + x] = mask(y, x) ? 255 : 0;
    }
  }
  return encode_raw(mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, 8, data);
}

void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  write_file_atomic(path, encode_mask(mask));
}

ProbabilityMap decode_probability_map(std::span<const std::uint8_t> png) {
  const RasterImage img = decode_image(png);
  return ProbabilityMap(img.luma().max(0.0).min(1.0).eval());
}

ProbabilityMap load_probability_map(const std::filesystem::path& path) {
  return decode_probability_map(read_file(path));
}

Bytes encode_probability_map(const ProbabilityMap& map) {
  const int w = map.width(), h = map.height();
  std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto v = static_cast<std::uint16_t>(std::lround(map(y, x) * 65535.0));
      // PNG stores 16-bit samples big-endian.
      data[(static_cast<std::size_t>(y) * w + x) * 2] = static_cast<std::uint8_t>(v >> 8);
      data[(static_cast<std::size_t>(y) * w + x) * 2 + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
  }
  return encode_raw(w, h, PNG_COLOR_TYPE_GRAY, 16, data);
}

void save_probability_map(const ProbabilityMap& map, const std::filesystem::path& path) {
  write_file_atomic(path, encode_probability_map(map));
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::random_device rd;
  const fs::path tmp = path.string() + ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

}  // namespace crackseg
