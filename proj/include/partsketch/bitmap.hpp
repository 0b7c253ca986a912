/* Copyright 2026 The Partsketch Authors.

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

#ifndef PARTSKETCH_BITMAP_HPP_
#define PARTSKETCH_BITMAP_HPP_

#include <array>
#include <cstdint>
#include <vector>

namespace partsketch::raster {

using Rgb = std::array<std::uint8_t, 3>;

struct Bitmap {
  enum class Channels { kGray = 1, kRgb = 3 };

  int width = 0;
  int height = 0;
  Channels channels = Channels::kGray;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved channels

  Bitmap() = default;
  Bitmap(int w, int h, Channels ch, std::uint8_t fill = 255);

  int channel_count() const { return static_cast<int>(channels); }
  std::uint8_t* at(int x, int y) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * channel_count();
  }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * channel_count();
  }
  Rgb rgb(int x, int y) const;
  bool operator==(const Bitmap&) const = default;
};

}  // namespace partsketch::raster

#endif  // PARTSKETCH_BITMAP_HPP_
