#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mdr/mdr.hpp"
#include "mdr/numerics/adam.hpp"
#include "mdr/numerics/params.hpp"

namespace mdr {

/// Binary, little-endian, versioned snapshot of a training run:
///
///   "MDRCKPT\0" u32 version
///   str config_ini, u64 seed, i64 step
///   u64 n_params, then per parameter: str name, u8 decay, tensor
///   i64 adam_step, u64 n_moments, then per entry: str name, tensor m, tensor v
///   f64 gamma, f64 mu_star, f64 sigma_star, u8 initialized
///   str sampler_rng_state
///
/// str = u64 length + bytes; tensor = u64 rank, u64 dims..., f64 values.
/// Doubles are stored as raw bits, so a round trip is bit-exact.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string config_ini;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  ParamStore params;
  AdamState adam;
  DistanceStats stats;
  std::string sampler_rng_state;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mdr
