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

#ifndef GOALINFER_DTW_HPP_
#define GOALINFER_DTW_HPP_

#include <algorithm>
#include <utility>
#include <vector>

#include "goalinfer/error.hpp"
#include "goalinfer/vec3.hpp"

namespace goalinfer {

struct DtwResult {
  double cost = 0.0;
  double normalized_cost = 0.0;  // cost / alignment path length
  std::vector<std::pair<int, int>> path;  // (0,0) .. (n-1, m-1), monotone
};

// Classic dynamic-programming alignment with steps {(1,0),(0,1),(1,1)} and
// Euclidean local cost. Path ties prefer the diagonal.
inline DtwResult dtw(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) throw DataError("dtw: empty input sequence");

  std::vector<double> table(n * m);
  auto at = [&table, m](std::size_t i, std::size_t j) -> double& {
    return table[i * m + j];
  };

  at(0, 0) = distance(a[0], b[0]);
  for (std::size_t i = 1; i < n; ++i)
    at(i, 0) = at(i - 1, 0) + distance(a[i], b[0]);
  for (std::size_t j = 1; j < m; ++j)
    at(0, j) = at(0, j - 1) + distance(a[0], b[j]);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 1; j < m; ++j) {
      double best = std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
      at(i, j) = best + distance(a[i], b[j]);
    }
  }

  DtwResult result;
  result.cost = at(n - 1, m - 1);
  std::size_t i = n - 1, j = m - 1;
  result.path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      double diag = at(i - 1, j - 1), up = at(i - 1, j), left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    result.path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }
  std::reverse(result.path.begin(), result.path.end());
  result.normalized_cost =
      result.cost / static_cast<double>(result.path.size());
  return result;
}

}  // namespace goalinfer

#endif  // GOALINFER_DTW_HPP_
