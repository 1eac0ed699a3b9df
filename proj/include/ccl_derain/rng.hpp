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

#ifndef CCL_DERAIN_RNG_HPP_
#define CCL_DERAIN_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <ATen/CPUGeneratorImpl.h>
#include <ATen/core/Generator.h>

namespace ccl_derain {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Root of all randomness in a run.
///
/// Every consumer asks for a child seed keyed by a purpose string (and
/// optionally a few integers such as epoch or step). Children are pure
/// functions of (root, purpose, keys), so adding a new consumer never shifts
/// the stream seen by an existing one.
class SeedTree {
 public:
  explicit SeedTree(std::uint64_t root) : root_(root) {}

  std::uint64_t root() const { return root_; }

  std::uint64_t child(std::string_view purpose,
                      std::initializer_list<std::int64_t> keys = {}) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
    for (unsigned char c : purpose) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    std::uint64_t s = splitmix64(root_ ^ splitmix64(h));
    for (std::int64_t k : keys) s = splitmix64(s ^ static_cast<std::uint64_t>(k));
    return s;
  }

  SeedTree subtree(std::string_view purpose,
                   std::initializer_list<std::int64_t> keys = {}) const {
    return SeedTree(child(purpose, keys));
  }

  std::mt19937_64 engine(std::string_view purpose,
                         std::initializer_list<std::int64_t> keys = {}) const {
    return std::mt19937_64(child(purpose, keys));
  }

  at::Generator torch_generator(std::string_view purpose,
                                std::initializer_list<std::int64_t> keys = {}) const {
    return at::make_generator<at::CPUGeneratorImpl>(child(purpose, keys));
  }

 private:
  std::uint64_t root_;
};

}  // namespace ccl_derain

#endif  // CCL_DERAIN_RNG_HPP_
