// Copyright 2026 The ATSC Prompts Authors.
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

// Seeded randomness with a pinned algorithm.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard.  The standard library distributions and std::shuffle are not, so
// every derived quantity (bounded integers, uniform reals, normals, shuffles)
// is computed here from raw engine output.  Any implementation that follows
// the same recipe reproduces the same subsets and masks.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace atsc {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound) by rejection on the top of the 64-bit range.
  std::uint64_t uniform_index(std::uint64_t bound);

  // Uniform double in [0, 1) from the top 53 bits.
  double uniform01();

  // Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  // Fisher-Yates from the back: for i = n-1 .. 1, swap(i, uniform_index(i+1)).
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Permutation of 0..n-1 produced by Rng(seed).shuffle.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// SplitMix64 finalizer over (base, stream); used to give every sentence,
// epoch or worker its own independent stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace atsc
