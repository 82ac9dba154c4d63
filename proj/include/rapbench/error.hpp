/* Copyright 2026 The rapbench Authors. All Rights Reserved.

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

#ifndef RAPBENCH_ERROR_HPP_
#define RAPBENCH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace rapbench {

// Mirrors the rb_status codes of the C API (rapbench.h).
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kOutOfRange = 2,
  kIo = 3,
  kParse = 4,
  kFormat = 5,
  kFailedPrecondition = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace rapbench

#endif  // RAPBENCH_ERROR_HPP_
