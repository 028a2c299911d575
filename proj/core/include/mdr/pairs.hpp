#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mdr {

using Label = std::int64_t;

/// Unordered pair of batch indices with i < j.
struct Pair {
  std::size_t i = 0;
  std::size_t j = 0;
  bool positive = false;

  friend bool operator==(const Pair&, const Pair&) = default;
};

using PairSet = std::vector<Pair>;

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

using TripletSet = std::vector<Triplet>;

}  // namespace mdr
