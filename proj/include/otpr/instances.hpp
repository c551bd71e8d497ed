#pragma once

// Instance generation and ingestion: synthetic unit-square geometry,
// MNIST-style IDX3 image pairs, and a lossless binary instance cache.
// All generation is seeded and byte-reproducible across platforms: the
// generator is mt19937_64 with splitmix64-derived stream seeds (one stream
// per point set) and uniforms taken as 53-bit mantissa draws.

#include <cstdint>
#include <string>

#include "otpr/core.hpp"
#include "otpr/ot.hpp"

namespace otpr {

std::uint64_t splitmix64(std::uint64_t x);

// n points per side, i.i.d. uniform in the unit square; costs are the
// Euclidean distances divided by sqrt(2) so they lie in [0,1]
// (norm_factor = sqrt(2)).
AssignmentInstance gen_uniform_square(Index n, std::uint64_t seed);

// Samples 2n distinct images from an IDX3 file (seeded, without
// replacement), splits them into A and B, normalizes each image to total
// intensity 1, and uses L1 distance / 2 as the cost (norm_factor = 2).
AssignmentInstance load_mnist_pair(const std::string& images_path, Index n,
                                   std::uint64_t seed);

// Uniform masses 1/n on both sides of a balanced instance.
OTInstance assignment_to_ot(const AssignmentInstance& inst);

// Random OT instance with rational masses (integer weights in [1, 50]
// divided by their total) and uniform costs.
OTInstance gen_random_ot_rational(Index n_a, Index n_b, std::uint64_t seed);

// Binary instance cache; round-trips losslessly (bit-exact doubles).
void save_instance(const AssignmentInstance& inst, const std::string& path);
AssignmentInstance load_instance(const std::string& path);

}  // namespace otpr
