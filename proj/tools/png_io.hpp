#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <png.h>

#include "mrf/errors.hpp"

namespace mrfcli {

/// Minimal 8-bit RGB PNG writer with fixed settings so output bytes are
/// deterministic for identical pixel data.
inline void write_png_rgb8(const std::string& path, int width, int height,
                           const std::vector<unsigned char>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw mrf::DimensionError("png: pixel buffer size mismatch");

  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw mrf::IoError("png: cannot open for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw mrf::IoError("png: initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw mrf::IoError("png: write failed: " + path);
  }

  png_init_io(png, fp);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y)
    row_ptrs[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * width * 3);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace mrfcli
