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

#ifndef CCL_DERAIN_CLI_HPP_
#define CCL_DERAIN_CLI_HPP_

namespace ccl_derain {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `ccl_derain` binary:
///   train | eval | infer | ablate | make-toy-data
/// Returns 0 on success, 2 on configuration/usage/input errors and 1 on
/// runtime failures.
int run_cli(int argc, char** argv);

}  // namespace ccl_derain

#endif  // CCL_DERAIN_CLI_HPP_
