// Copyright 2026 The LSOC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Desirability cache. Text format, one or more blocks per file:
//
//   lsoc-desirability 1
//   fingerprint <16 hex digits>
//   subsystem <central agent id>
//   component <index>
//   states <n>
//   <index> <Z as hexfloat> <log Z as hexfloat>     (n lines)
//   end
//
// Hexfloats round-trip bit-exactly. log Z is authoritative since Z underflows
// on obstacle states.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lsoc/discrete.hpp"
#include "lsoc/errors.hpp"

namespace lsoc::harness {

inline constexpr int kCacheVersion = 1;

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

struct CacheBlock {
  int subsystem = 0;
  std::size_t component = 0;
  DesirabilityTable table;
};

inline void write_cache(const std::string& path, std::uint64_t fingerprint,
                        const std::vector<CacheBlock>& blocks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write cache " + path);
  for (const auto& b : blocks) {
    out << "lsoc-desirability " << kCacheVersion << "\n"
        << "fingerprint " << hex64(fingerprint) << "\n"
        << "subsystem " << b.subsystem << "\n"
        << "component " << b.component << "\n"
        << "states " << b.table.size() << "\n";
    for (std::size_t s = 0; s < b.table.size(); ++s) {
      out << s << ' ' << hexfloat(b.table.value(s)) << ' ' << hexfloat(b.table.log_value(s)) << "\n";
    }
    out << "end\n";
  }
  if (!out) throw IoError("write failed for cache " + path);
}

// Refuses caches written for a different scenario.
inline std::vector<CacheBlock> read_cache(const std::string& path, std::uint64_t expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read cache " + path);
  std::vector<CacheBlock> blocks;
  std::string word;
  auto expect = [&](const std::string& key) {
    if (!(in >> word) || word != key) throw IoError("malformed cache " + path + ": expected '" + key + "'");
  };
  while (in >> word) {
    if (word != "lsoc-desirability") throw IoError("malformed cache " + path + ": bad header");
    int version = 0;
    if (!(in >> version) || version != kCacheVersion) {
      throw IoError("cache " + path + ": unsupported format version");
    }
    expect("fingerprint");
    std::string fp;
    in >> fp;
    if (fp != hex64(expected_fingerprint)) {
      throw IoError("cache " + path + " was written for a different scenario (fingerprint " + fp +
                    ", expected " + hex64(expected_fingerprint) + ")");
    }
    CacheBlock b;
    expect("subsystem");
    in >> b.subsystem;
    expect("component");
    in >> b.component;
    expect("states");
    std::size_t n = 0;
    in >> n;
    if (!in) throw IoError("malformed cache " + path);
    std::vector<double> log_z(n);
    for (std::size_t s = 0; s < n; ++s) {
      std::size_t idx = 0;
      std::string z, lz;
      if (!(in >> idx >> z >> lz) || idx != s) throw IoError("malformed cache record in " + path);
      log_z[s] = std::strtod(lz.c_str(), nullptr);
    }
    expect("end");
    b.table = DesirabilityTable(std::move(log_z));
    blocks.push_back(std::move(b));
  }
  return blocks;
}

}  // namespace lsoc::harness
