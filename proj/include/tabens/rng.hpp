// Copyright 2026 The tabens Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TABENS_RNG_HPP_
#define TABENS_RNG_HPP_

#include <cstddef>
#include <cstdint>

#include "tabens/numkernel.hpp"

namespace tabens {

// Counter-based generator: output i is splitmix64(key + (i + 1) * golden).
// Streams depend only on integer arithmetic, so a given seed yields the same
// sequence on every platform. Distinct purposes (init, dropout, shuffling)
// should use fork() rather than sharing one stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller.
  double gaussian();

  // Independent stream keyed by (this key, stream_id). Does not advance *this.
  Rng fork(std::uint64_t stream_id) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// i.i.d. N(0, sigma^2) entries. sigma == 0 yields exact zeros and consumes no
// draws. Throws std::invalid_argument for negative sigma.
Matrix sample_gaussian(Rng& rng, std::size_t rows, std::size_t cols, double sigma);

// i.i.d. U[-b, b] with b = sqrt(6 / cols); cols is the fan-in.
Matrix kaiming_uniform(Rng& rng, std::size_t rows, std::size_t cols);

}  // namespace tabens

#endif  // TABENS_RNG_HPP_
