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
#ifndef ROOMRANK_CORPUS_HPP_
#define ROOMRANK_CORPUS_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "roomrank/errors.hpp"
#include "roomrank/rir.hpp"
#include "roomrank/rng.hpp"
#include "roomrank/wav.hpp"

namespace roomrank {

inline constexpr int kPointsPerRoom = 100;
inline constexpr std::uint64_t kStreamRoom = 1;
inline constexpr std::uint64_t kStreamPoint = 2;

struct CorpusEntry {
  std::string ir_path;  // relative to the corpus root
  std::string room_id;
  std::string point_id;
  std::string room_class;  // small | medium | large
  RoomSpec spec;
  std::uint64_t seed = 0;  // substream seed for this entry's placement draws
  std::optional<double> rt60_est;
};

struct CorpusManifest {
  std::uint64_t seed = 0;
  int sample_rate = kPipelineRate;
  std::vector<CorpusEntry> entries;
};

namespace detail {

struct ClassRange {
  const char* name;
  double lo, hi;
};

inline constexpr std::array<ClassRange, 3> kRoomClasses{{
    {"small", 1.0, 10.0},
    {"medium", 10.0, 30.0},
    {"large", 30.0, 50.0},
}};

inline std::string zero_padded(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, value);
  return buf;
}

inline std::string format_rt60(const std::optional<double>& rt60) {
  if (!rt60) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *rt60);
  return buf;
}

}  // namespace detail

inline const char* room_class_for_dims(double length, double width) {
  const double side = std::max(length, width);
  if (side < 10.0) return "small";
  if (side < 30.0) return "medium";
  return "large";
}

// Draws one room per index: class round-robins small/medium/large, floor
// sides uniform within the class range, height uniform in 2-5 m, per-surface
// absorption uniform in [0.1, 0.9). Positions come from per-point substreams
// so every entry is independent of generation schedule.
inline RoomSpec sample_room_geometry(std::uint64_t corpus_seed, int room_index, int fs) {
  const auto& cls = detail::kRoomClasses[static_cast<std::size_t>(room_index % 3)];
  Rng rng(substream_seed(corpus_seed, kStreamRoom, static_cast<std::uint64_t>(room_index)));
  RoomSpec spec;
  spec.length = rng.uniform(cls.lo, cls.hi);
  spec.width = rng.uniform(cls.lo, cls.hi);
  spec.height = rng.uniform(2.0, 5.0);
  for (auto& a : spec.absorption) a = rng.uniform(0.1, 0.9);
  spec.sample_rate = fs;
  spec.max_order = kDefaultMaxOrder;
  return spec;
}

inline void sample_positions(RoomSpec& spec, std::uint64_t entry_seed) {
  Rng rng(entry_seed);
  const auto draw_point = [&rng, &spec] {
    std::array<double, 3> p;
    for (int axis = 0; axis < 3; ++axis) p[static_cast<std::size_t>(axis)] = rng.uniform(0.1, spec.dim(axis) - 0.1);
    return p;
  };
  spec.source_pos = draw_point();
  spec.mic_pos = draw_point();
  // Keep a minimal physical separation; coincident points have no geometry.
  for (int tries = 0; tries < 64; ++tries) {
    double d_sq = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      const double d = spec.source_pos[static_cast<std::size_t>(axis)] - spec.mic_pos[static_cast<std::size_t>(axis)];
      d_sq += d * d;
    }
    if (d_sq >= 0.05 * 0.05) break;
    spec.mic_pos = draw_point();
  }
}

inline void write_corpus_manifest(const CorpusManifest& manifest,
                                  const std::filesystem::path& path) {
  nlohmann::json j;
  j["version"] = 1;
  j["seed"] = manifest.seed;
  j["sample_rate"] = manifest.sample_rate;
  j["count"] = manifest.entries.size();
  j["entries"] = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json je;
    je["ir_path"] = e.ir_path;
    je["room_id"] = e.room_id;
    je["point_id"] = e.point_id;
    je["room_class"] = e.room_class;
    je["dims"] = {e.spec.length, e.spec.width, e.spec.height};
    je["absorptions"] = e.spec.absorption;
    je["positions"] = {{"source", e.spec.source_pos}, {"mic", e.spec.mic_pos}};
    je["max_order"] = e.spec.max_order;
    je["seed"] = e.seed;
    if (e.rt60_est) {
      je["rt60_est"] = *e.rt60_est;
    } else {
      je["rt60_est"] = nullptr;
    }
    j["entries"].push_back(std::move(je));
  }
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw IoError("cannot write manifest: " + path.string());
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed: " + path.string());
}

inline void write_corpus_summary(const CorpusManifest& manifest,
                                 const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw IoError("cannot write summary: " + path.string());
  f << "ir_path,room_id,point_id,room_class,rt60_est\n";
  for (const auto& e : manifest.entries) {
    f << e.ir_path << ',' << e.room_id << ',' << e.point_id << ',' << e.room_class << ','
      << detail::format_rt60(e.rt60_est) << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

// Renders `count` impulse responses (100 points per room, final room
// partial) under out_dir/irs and writes manifest.json plus summary.csv.
// Deterministic: every random draw comes from a substream keyed by
// (seed, room index, point index).
inline CorpusManifest sample_corpus(int count, std::uint64_t seed, int fs,
                                    const std::filesystem::path& out_dir) {
  if (count < 1) throw InvalidArgument("corpus count must be at least 1");
  if (fs <= 0) throw InvalidArgument("corpus sample rate must be positive");

  std::filesystem::create_directories(out_dir / "irs");

  CorpusManifest manifest;
  manifest.seed = seed;
  manifest.sample_rate = fs;
  manifest.entries.reserve(static_cast<std::size_t>(count));

  const int n_rooms = (count + kPointsPerRoom - 1) / kPointsPerRoom;
  for (int r = 0; r < n_rooms; ++r) {
    const RoomSpec room = sample_room_geometry(seed, r, fs);
    const int n_points = std::min(kPointsPerRoom, count - r * kPointsPerRoom);
    for (int p = 0; p < n_points; ++p) {
      CorpusEntry entry;
      entry.spec = room;
      entry.seed = substream_seed(seed, kStreamPoint, static_cast<std::uint64_t>(r),
                                  static_cast<std::uint64_t>(p));
      sample_positions(entry.spec, entry.seed);
      entry.room_id = detail::zero_padded("room_", r, 5);
      entry.point_id = detail::zero_padded("point_", p, 3);
      entry.room_class = detail::kRoomClasses[static_cast<std::size_t>(r % 3)].name;
      entry.ir_path = "irs/" + entry.room_id + "_" + entry.point_id + ".wav";

      ImpulseResponse ir = simulate_rir(entry.spec);
      ir.room_id = entry.room_id;
      ir.point_id = entry.point_id;
      try {
        entry.rt60_est = estimate_rt60(ir);
      } catch (const Error&) {
        entry.rt60_est = std::nullopt;  // too dead to fit a decay slope
      }
      write_wav(out_dir / entry.ir_path, ir.h, WavEncoding::kFloat32);
      manifest.entries.push_back(std::move(entry));
    }
  }

  write_corpus_manifest(manifest, out_dir / "manifest.json");
  write_corpus_summary(manifest, out_dir / "summary.csv");
  return manifest;
}

inline CorpusManifest load_corpus_manifest(const std::filesystem::path& corpus_dir) {
  const std::filesystem::path path =
      std::filesystem::is_directory(corpus_dir) ? corpus_dir / "manifest.json" : corpus_dir;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open manifest: " + path.string());

  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("cannot parse manifest " + path.string() + ": " + e.what());
  }

  CorpusManifest manifest;
  try {
    manifest.seed = j.at("seed").get<std::uint64_t>();
    manifest.sample_rate = j.at("sample_rate").get<int>();
    for (const auto& je : j.at("entries")) {
      CorpusEntry e;
      e.ir_path = je.at("ir_path").get<std::string>();
      e.room_id = je.at("room_id").get<std::string>();
      e.point_id = je.at("point_id").get<std::string>();
      e.room_class = je.at("room_class").get<std::string>();
      const auto dims = je.at("dims").get<std::array<double, 3>>();
      e.spec.length = dims[0];
      e.spec.width = dims[1];
      e.spec.height = dims[2];
      e.spec.absorption = je.at("absorptions").get<std::array<double, 6>>();
      e.spec.source_pos = je.at("positions").at("source").get<std::array<double, 3>>();
      e.spec.mic_pos = je.at("positions").at("mic").get<std::array<double, 3>>();
      e.spec.max_order = je.value("max_order", kDefaultMaxOrder);
      e.spec.sample_rate = manifest.sample_rate;
      e.seed = je.at("seed").get<std::uint64_t>();
      if (je.contains("rt60_est") && !je.at("rt60_est").is_null()) {
        e.rt60_est = je.at("rt60_est").get<double>();
      }
      manifest.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("manifest " + path.string() + " missing fields: " + e.what());
  }
  return manifest;
}

inline ImpulseResponse load_corpus_ir(const std::filesystem::path& corpus_root,
                                      const CorpusEntry& entry) {
  ImpulseResponse ir;
  ir.h = read_wav(corpus_root / entry.ir_path);
  if (ir.h.sample_rate != entry.spec.sample_rate) {
    throw DatasetError("IR sample rate mismatch in " + entry.ir_path);
  }
  ir.room_id = entry.room_id;
  ir.point_id = entry.point_id;
  ir.spec = entry.spec;
  return ir;
}

inline std::map<std::string, int> count_by_class(const CorpusManifest& manifest) {
  std::map<std::string, int> counts;
  for (const auto& e : manifest.entries) counts[e.room_class] += 1;
  return counts;
}

}  // namespace roomrank

#endif  // ROOMRANK_CORPUS_HPP_
