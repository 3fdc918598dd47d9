#pragma once

#include <random>

namespace signmap {

// Selects between the plain-loop reference path and the OpenMP path of a
// data-parallel kernel. Both produce bitwise-identical results.
enum class Exec { serial, parallel };

using Rng = std::mt19937_64;

}  // namespace signmap
