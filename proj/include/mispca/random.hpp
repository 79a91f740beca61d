#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mispca {

using Engine = std::mt19937_64;

/// Engine seeded from an ordered key such as (seed, condition, replication).
/// Distinct keys give independent streams; equal keys give equal streams.
inline Engine make_engine(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  words.reserve(key.size() * 2);
  for (std::uint64_t k : key) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

}  // namespace mispca
