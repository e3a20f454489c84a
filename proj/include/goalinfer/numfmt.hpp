// Copyright 2026 The goalinfer Authors.
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

#ifndef GOALINFER_NUMFMT_HPP_
#define GOALINFER_NUMFMT_HPP_

#include <charconv>
#include <cstdlib>
#include <string>

#include "goalinfer/error.hpp"

namespace goalinfer {

// Shortest representation that parses back to the same double; identical
// bytes on every run, which the deterministic text outputs rely on.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw DataError("cannot parse number in " + what + ": '" + s + "'");
  }
  return v;
}

inline int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError("cannot parse integer in " + what + ": '" + s + "'");
  }
  return v;
}

}  // namespace goalinfer

#endif  // GOALINFER_NUMFMT_HPP_
