#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "lcmt/rng.hpp"

namespace {

// Independent replay of the documented stream formula; kept separate from
// the library on purpose.
std::uint64_t oracle_mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t oracle_out(std::uint64_t seed, std::uint64_t stream, std::uint64_t i) {
  const std::uint64_t key = oracle_mix(seed ^ oracle_mix(stream + kGamma));
  return oracle_mix(key + i * kGamma);
}

}  // namespace

TEST_CASE("rng: stream replays the documented counter formula") {
  lcmt::CounterRng rng(12345, 42);
  for (std::uint64_t i = 1; i <= 100; ++i)
    REQUIRE(rng.next_u64() == oracle_out(12345, 42, i));
}

TEST_CASE("rng: streams differ by seed and stream id") {
  lcmt::CounterRng a(1, 0), b(2, 0), c(1, 1);
  REQUIRE(a.next_u64() != b.next_u64());
  lcmt::CounterRng a2(1, 0);
  REQUIRE(a2.next_u64() != c.next_u64());
}

TEST_CASE("rng: unit draws live in [0,1) and are roughly uniform") {
  lcmt::CounterRng rng(7, 0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  REQUIRE(sum / n == Catch::Approx(0.5).margin(0.005));
}

TEST_CASE("rng: bernoulli edge probabilities are forced") {
  lcmt::CounterRng rng(3, 3);
  for (int i = 0; i < 100; ++i) REQUIRE_FALSE(rng.bernoulli(0.0));
  for (int i = 0; i < 100; ++i) REQUIRE(rng.bernoulli(1.0));
}

TEST_CASE("rng: bounded draws respect the bound") {
  lcmt::CounterRng rng(9, 1);
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 5000; ++i) {
    const auto v = rng.bounded(5);
    REQUIRE(v < 5);
    ++seen[static_cast<std::size_t>(v)];
  }
  for (int k = 0; k < 5; ++k) REQUIRE(seen[static_cast<std::size_t>(k)] > 800);
}

TEST_CASE("rng: shuffle replays the documented Fisher-Yates pass") {
  lcmt::CounterRng rng(11, 5);
  std::vector<int> v{0, 1, 2, 3, 4, 5};
  rng.shuffle(v);

  // oracle: same formula, descending pass with j = bounded(i)
  std::vector<int> w{0, 1, 2, 3, 4, 5};
  std::uint64_t counter = 0;
  const std::uint64_t key = oracle_mix(11 ^ oracle_mix(5 + kGamma));
  auto next = [&] { return oracle_mix(key + (++counter) * kGamma); };
  for (std::size_t i = w.size(); i > 1; --i) {
    using u128 = unsigned __int128;
    const auto j = static_cast<std::size_t>((static_cast<u128>(next()) * i) >> 64);
    std::swap(w[i - 1], w[j]);
  }
  REQUIRE(v == w);
}
