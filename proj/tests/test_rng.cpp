#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "risbf/rng.hpp"

using risbf::Philox;

TEST_CASE("same seed and stream reproduce the sequence") {
  Philox a(123, 7), b(123, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different streams and seeds give different sequences") {
  Philox a(123, 0), b(123, 1), c(124, 0);
  bool stream_differs = false, seed_differs = false;
  Philox a2(123, 0);
  for (int i = 0; i < 64; ++i) {
    const uint64_t va = a.next_u64();
    if (va != b.next_u64()) stream_differs = true;
    if (a2.next_u64() != c.next_u64()) seed_differs = true;
  }
  CHECK(stream_differs);
  CHECK(seed_differs);
}

TEST_CASE("uniform doubles stay in [0, 1) with the right mean") {
  Philox rng(42);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 100000 - 0.5) < 0.005);
}

TEST_CASE("normal moments") {
  Philox rng(7);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum_sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.02);
}

TEST_CASE("complex normal has unit power split evenly") {
  Philox rng(9);
  double power = 0.0, re = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto z = rng.cnormal();
    power += std::norm(z);
    re += z.real() * z.real();
  }
  CHECK(std::abs(power / n - 1.0) < 0.02);
  CHECK(std::abs(re / n - 0.5) < 0.01);
}

TEST_CASE("purpose tags map to disjoint streams") {
  auto a = risbf::make_stream(1, risbf::StreamPurpose::kDatasetSample, 5);
  auto b = risbf::make_stream(1, risbf::StreamPurpose::kNetworkInit, 5);
  std::set<uint64_t> seen;
  bool differ = false;
  for (int i = 0; i < 32; ++i) {
    if (a.next_u64() != b.next_u64()) differ = true;
  }
  CHECK(differ);
}
