// Copyright 2026 The MACKRL-CK Authors
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

#include <doctest.h>

#include <set>

#include "mackrl/rng.hpp"

using namespace mackrl;

TEST_CASE("streams are pure functions of (key, counter)") {
  RngStream a = RngStream::from({1, 2, 3});
  RngStream b = RngStream::from({1, 2, 3});
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c = RngStream::from({1, 2, 4});
  RngStream d = RngStream::from({1, 2, 3});
  int diff = 0;
  for (int i = 0; i < 16; ++i) diff += c.next_u64() != d.next_u64();
  CHECK(diff > 12);
}

TEST_CASE("uniforms live in [0,1) and next_below respects the range") {
  RngStream s = RngStream::from({7});
  for (int i = 0; i < 1000; ++i) {
    const double u = s.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 3000; ++i) {
    const std::uint64_t v = s.next_below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK(s.next_below(1) == 0);
}

TEST_CASE("shared seeds key streams by timestep and node") {
  const SharedSeed seed{42, 7};
  RngStream s1 = seed.stream(3, 5);
  RngStream s2 = seed.stream(3, 5);
  CHECK(s1.next_u64() == s2.next_u64());

  RngStream s3 = seed.stream(3, 6);
  RngStream s4 = seed.stream(4, 5);
  RngStream s5 = seed.stream(3, 5);
  const std::uint64_t base = s5.next_u64();
  CHECK(s3.next_u64() != base);
  CHECK(s4.next_u64() != base);
}

TEST_CASE("normals have roughly standard moments") {
  RngStream s = RngStream::from({99});
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = s.next_normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}
