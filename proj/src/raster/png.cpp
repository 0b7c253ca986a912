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

#include <zlib.h>

#include <cstring>
#include <stdexcept>

#include "partsketch/raster.hpp"

namespace partsketch::raster {
namespace {

constexpr unsigned char kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32(std::string& out, std::uint32_t v) {
  out += static_cast<char>((v >> 24) & 0xff);
  out += static_cast<char>((v >> 16) & 0xff);
  out += static_cast<char>((v >> 8) & 0xff);
  out += static_cast<char>(v & 0xff);
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  if (pos + 4 > in.size()) throw std::runtime_error("truncated PNG");
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + 3]));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()))));
}

}  // namespace

std::string encode_png(const Bitmap& bitmap) {
  const int channels = bitmap.channel_count();
  const std::size_t stride = static_cast<std::size_t>(bitmap.width) * channels;
  std::string raw;
  raw.reserve((stride + 1) * bitmap.height);
  for (int y = 0; y < bitmap.height; ++y) {
    raw += '\0';
    raw.append(reinterpret_cast<const char*>(bitmap.at(0, y)), stride);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
                reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw std::runtime_error("deflate failed");
  }
  packed.resize(packed_size);

  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(bitmap.width));
  put_u32(ihdr, static_cast<std::uint32_t>(bitmap.height));
  ihdr += static_cast<char>(8);                      // bit depth
  ihdr += static_cast<char>(channels == 1 ? 0 : 2);  // gray / truecolor
  ihdr += std::string(3, '\0');                      // deflate, filter 0, no interlace

  std::string out(reinterpret_cast<const char*>(kSignature), sizeof(kSignature));
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", "");
  return out;
}

Bitmap decode_png(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) {
    throw std::runtime_error("not a PNG");
  }
  std::size_t pos = 8;
  int width = 0, height = 0, color_type = -1;
  std::string idat;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = get_u32(bytes, pos);
    const std::string type = bytes.substr(pos + 4, 4);
    if (pos + 12 + len > bytes.size()) throw std::runtime_error("truncated PNG chunk");
    const std::string data = bytes.substr(pos + 8, len);
    if (type == "IHDR") {
      width = static_cast<int>(get_u32(data, 0));
      height = static_cast<int>(get_u32(data, 4));
      if (data[8] != 8 || data[12] != 0) throw std::runtime_error("unsupported PNG layout");
      color_type = data[9];
    } else if (type == "IDAT") {
      idat += data;
    } else if (type == "IEND") {
      break;
    }
    pos += 12 + len;
  }
  if (color_type != 0 && color_type != 2) throw std::runtime_error("unsupported PNG color type");
  Bitmap out(width, height, color_type == 0 ? Bitmap::Channels::kGray : Bitmap::Channels::kRgb);
  const std::size_t stride = static_cast<std::size_t>(width) * out.channel_count();
  uLongf raw_size = static_cast<uLongf>((stride + 1) * height);
  std::string raw(raw_size, '\0');
  if (uncompress(reinterpret_cast<Bytef*>(raw.data()), &raw_size,
                 reinterpret_cast<const Bytef*>(idat.data()),
                 static_cast<uLong>(idat.size())) != Z_OK ||
      raw_size != raw.size()) {
    throw std::runtime_error("inflate failed");
  }
  for (int y = 0; y < height; ++y) {
    const std::size_t row = y * (stride + 1);
    if (raw[row] != 0) throw std::runtime_error("unsupported PNG filter");
    std::memcpy(out.at(0, y), raw.data() + row + 1, stride);
  }
  return out;
}

}  // namespace partsketch::raster
