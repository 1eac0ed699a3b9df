// Copyright 2026 The CCL-Derain Authors.
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

#ifndef CCL_DERAIN_ERRORS_HPP_
#define CCL_DERAIN_ERRORS_HPP_

#include <iostream>
#include <stdexcept>
#include <string>

namespace ccl_derain {

// Bad or unknown configuration values, missing directories.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed user input: wrong channel count, empty images.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyDatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an API contract (e.g. mismatched patch locations).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN/Inf showed up in a loss or a network output.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BackendUnavailableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void log_warning(const std::string& msg) {
  std::cerr << "[ccl_derain] warning: " << msg << '\n';
}

}  // namespace ccl_derain

#endif  // CCL_DERAIN_ERRORS_HPP_
