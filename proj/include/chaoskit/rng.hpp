#pragma once

#include <cstdint>

namespace chaoskit::rng {

/// One round of the splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Inverse of the standard normal CDF (Wichura's PPND16), accurate to ~1e-15.
double inverse_normal_cdf(double p);

// Stateless counter-based streams.  Every draw is keyed by
// (master seed, replica, step, particle, component), so trajectories are
// bit-identical for a fixed seed no matter how work is scheduled, and
// permuting particle indices permutes the noise streams with them.

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t replica,
                         std::uint64_t step, std::uint64_t particle,
                         std::uint64_t component);

/// Uniform in the open interval (0,1) at the given counter.
double uniform_at(std::uint64_t seed, std::uint64_t replica, std::uint64_t step,
                  std::uint64_t particle, std::uint64_t component);

/// Standard normal at the given counter.
double normal_at(std::uint64_t seed, std::uint64_t replica, std::uint64_t step,
                 std::uint64_t particle, std::uint64_t component);

}  // namespace chaoskit::rng
