/* Copyright 2026 The collage_forge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <png.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "collage_forge/core_model.hpp"
#include "collage_forge/errors.hpp"

namespace cforge {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Packed 8-bit RGB image, row-major.
class Image {
 public:
  Image() = default;
  Image(std::int32_t width, std::int32_t height, Rgb fill = {})
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw Error(ErrorKind::kInvalidArgument, "image dimensions must be >= 1");
    }
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      pixels_[i] = fill.r;
      pixels_[i + 1] = fill.g;
      pixels_[i + 2] = fill.b;
    }
  }

  std::int32_t width() const { return width_; }
  std::int32_t height() const { return height_; }
  const std::vector<std::uint8_t>& bytes() const { return pixels_; }
  std::vector<std::uint8_t>& bytes() { return pixels_; }

  Rgb at(std::int32_t x, std::int32_t y) const {
    const auto* p = row(y) + std::size_t{3} * x;
    return {p[0], p[1], p[2]};
  }
  void set(std::int32_t x, std::int32_t y, Rgb c) {
    auto* p = row(y) + std::size_t{3} * x;
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  const std::uint8_t* row(std::int32_t y) const {
    return pixels_.data() + std::size_t{3} * width_ * y;
  }
  std::uint8_t* row(std::int32_t y) {
    return pixels_.data() + std::size_t{3} * width_ * y;
  }

  void fill_rect(const Rect& r, Rgb c) {
    for (std::int32_t y = r.y; y < r.bottom(); ++y) {
      for (std::int32_t x = r.x; x < r.right(); ++x) set(x, y, c);
    }
  }

  /// Copies `src_rect` of `src` verbatim so its top-left lands at (dx, dy).
  void paste(const Image& src, const Rect& src_rect, std::int32_t dx,
             std::int32_t dy) {
    const std::size_t n = std::size_t{3} * src_rect.w;
    for (std::int32_t r = 0; r < src_rect.h; ++r) {
      std::memcpy(row(dy + r) + std::size_t{3} * dx,
                  src.row(src_rect.y + r) + std::size_t{3} * src_rect.x, n);
    }
  }

  Image crop(const Rect& r) const {
    Image out(r.w, r.h);
    out.paste(*this, r, 0, 0);
    return out;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::int32_t width_ = 0;
  std::int32_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

inline Image read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorKind::kIo,
                "cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<std::int32_t>(img.width),
            static_cast<std::int32_t>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.bytes().data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorKind::kIo, "cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

/// Writes 8-bit RGB PNG. Output bytes depend only on the pixels.
inline void write_png(const std::filesystem::path& path, const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  img.flags = PNG_IMAGE_FLAG_FAST;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.bytes().data(), 0,
                               nullptr)) {
    throw Error(ErrorKind::kIo,
                "cannot write PNG " + path.string() + ": " + img.message);
  }
}

}  // namespace cforge
