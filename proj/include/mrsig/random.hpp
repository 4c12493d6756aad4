#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace mrsig {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Seed for the `index`-th child stream of `master` (per tree, per resample, per participant).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Uniform integer in [0, n). Unlike std::uniform_int_distribution the draw sequence is
/// fixed by this library, so saved seeds reproduce across standard libraries.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Uniform double in [0, 1) from the top 53 bits.
double uniform_unit(Rng& rng);

/// Runs body(i) for i in [0, n) over the hardware threads. Results must not depend
/// on the schedule; callers write into pre-sized slots indexed by i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mrsig
