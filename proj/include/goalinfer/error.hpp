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

#ifndef GOALINFER_ERROR_HPP_
#define GOALINFER_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace goalinfer {

// Error classes map onto CLI exit codes: usage=1, data=2, numeric=3.
enum class Errc { usage = 1, data = 2, numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const { return code_; }
  int exit_code() const { return static_cast<int>(code_); }

 private:
  Errc code_;
};

inline Error UsageError(const std::string& message) {
  return Error(Errc::usage, message);
}
inline Error DataError(const std::string& message) {
  return Error(Errc::data, message);
}
inline Error NumericError(const std::string& message) {
  return Error(Errc::numeric, message);
}

}  // namespace goalinfer

#endif  // GOALINFER_ERROR_HPP_
