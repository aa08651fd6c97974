/* Copyright 2026 The RoomRank Authors. All Rights Reserved.

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
#ifndef ROOMRANK_WAV_HPP_
#define ROOMRANK_WAV_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "roomrank/audio.hpp"
#include "roomrank/errors.hpp"

namespace roomrank {

enum class WavEncoding { kPcm16, kFloat32 };

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void append_u32le(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 16) & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 24) & 0xff));
}

inline void append_u16le(std::vector<unsigned char>& v, std::uint16_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
}

inline void append_tag(std::vector<unsigned char>& v, const char* tag) {
  v.insert(v.end(), tag, tag + 4);
}

}  // namespace detail

// Reads a PCM16 or IEEE float32 RIFF/WAVE file with 1 or 2 channels. Stereo
// is mixed down by per-sample average; integer samples are scaled to [-1, 1]
// by dividing by 32768. Chunks other than fmt/data are skipped.
inline AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open WAV file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavFormatError("malformed WAV: missing RIFF/WAVE header in " + path.string());
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t chunk_len = detail::read_u32le(bytes.data() + pos + 4);
    pos += 8;
    if (pos + chunk_len > bytes.size()) {
      throw WavFormatError("malformed WAV: truncated chunk in " + path.string());
    }
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw WavFormatError("malformed WAV: short fmt chunk");
      const unsigned char* p = bytes.data() + pos;
      format = detail::read_u16le(p);
      channels = detail::read_u16le(p + 2);
      rate = detail::read_u32le(p + 4);
      bits = detail::read_u16le(p + 14);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data = bytes.data() + pos;
      data_len = chunk_len;
      break;  // fmt must precede data in the files we accept
    }
    pos += chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw WavFormatError("malformed WAV: no fmt chunk in " + path.string());
  if (data == nullptr) throw WavFormatError("malformed WAV: no data chunk in " + path.string());
  if (rate == 0) throw WavFormatError("malformed WAV: zero sample rate");
  if (channels != 1 && channels != 2) {
    throw WavFormatError("unsupported WAV encoding: " + std::to_string(channels) + " channels");
  }
  const bool pcm16 = (format == 1 && bits == 16);
  const bool f32 = (format == 3 && bits == 32);
  if (!pcm16 && !f32) {
    throw WavFormatError("unsupported WAV encoding: format " + std::to_string(format) + "/" +
                         std::to_string(bits) + " bits");
  }

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_size = bytes_per_sample * channels;
  const std::size_t n_frames = data_len / frame_size;
  if (n_frames == 0) throw WavFormatError("malformed WAV: zero-length data in " + path.string());

  AudioBuffer out;
  out.sample_rate = static_cast<int>(rate);
  out.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_size + c * bytes_per_sample;
      if (pcm16) {
        std::int16_t q;
        std::memcpy(&q, p, 2);
        acc += q / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        if (!std::isfinite(v)) throw WavFormatError("malformed WAV: non-finite sample");
        acc += v;
      }
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

// Writes a mono WAV file. PCM16 clips samples to [-1, 1] before quantizing;
// float32 stores the values as-is (modulo the double->float rounding).
inline void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer,
                      WavEncoding encoding = WavEncoding::kFloat32) {
  validate(buffer);

  const std::size_t n = buffer.samples.size();
  const std::uint16_t bits = (encoding == WavEncoding::kPcm16) ? 16 : 32;
  const std::uint16_t fmt = (encoding == WavEncoding::kPcm16) ? 1 : 3;
  const std::uint32_t data_len = static_cast<std::uint32_t>(n * bits / 8);

  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  detail::append_tag(out, "RIFF");
  detail::append_u32le(out, 36 + data_len);
  detail::append_tag(out, "WAVE");
  detail::append_tag(out, "fmt ");
  detail::append_u32le(out, 16);
  detail::append_u16le(out, fmt);
  detail::append_u16le(out, 1);  // mono
  detail::append_u32le(out, static_cast<std::uint32_t>(buffer.sample_rate));
  detail::append_u32le(out, static_cast<std::uint32_t>(buffer.sample_rate) * bits / 8);
  detail::append_u16le(out, static_cast<std::uint16_t>(bits / 8));
  detail::append_u16le(out, bits);
  detail::append_tag(out, "data");
  detail::append_u32le(out, data_len);

  if (encoding == WavEncoding::kPcm16) {
    for (double s : buffer.samples) {
      const double clipped = std::clamp(s, -1.0, 1.0);
      const long q = std::lround(clipped * 32768.0);
      const std::int16_t v = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
      detail::append_u16le(out, static_cast<std::uint16_t>(v));
    }
  } else {
    for (double s : buffer.samples) {
      const float v = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      detail::append_u32le(out, u);
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write WAV file: " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace roomrank

#endif  // ROOMRANK_WAV_HPP_
