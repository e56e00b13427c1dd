#pragma once

#include <cstdint>
#include <random>

#include "lgilab/linalg.hpp"

namespace lgilab {

using Rng = std::mt19937_64;

// Derives an independent stream seed from a base seed and a tag so that
// different consumers of one user seed never share a stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

Vector gaussian_vector(Index n, double stddev, Rng& rng);
Matrix gaussian_matrix(Index rows, Index cols, double stddev, Rng& rng);
Vector random_unit_vector(Index n, Rng& rng);

}  // namespace lgilab
