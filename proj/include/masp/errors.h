// Copyright 2026 The MASP Authors. All rights reserved.
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

#ifndef MASP_ERRORS_H_
#define MASP_ERRORS_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace masp {

// A caller broke a documented precondition (wrong dimension, illegal state).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what)
      : std::logic_error(what) {}
};

// A non-finite value showed up in a loss or gradient.
class NumericFault : public std::runtime_error {
 public:
  explicit NumericFault(const std::string& what) : std::runtime_error(what) {}
};

// Malformed config or checkpoint input.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

#define MASP_CHECK(cond, msg)                                        \
  do {                                                               \
    if (!(cond)) {                                                   \
      throw ::masp::ContractViolation(std::string(__func__) + ": " + \
                                      std::string(msg));             \
    }                                                                \
  } while (false)

#define MASP_CHECK_EQ(a, b, what)                                         \
  do {                                                                    \
    if (!((a) == (b))) {                                                  \
      throw ::masp::ContractViolation(                                    \
          std::string(__func__) + ": " + std::string(what) + " mismatch (" + \
          std::to_string(a) + " vs " + std::to_string(b) + ")");          \
    }                                                                     \
  } while (false)

}  // namespace masp

#endif  // MASP_ERRORS_H_
