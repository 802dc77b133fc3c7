#pragma once

#include <cstddef>
#include <functional>

namespace phonon {

// Every parallel kernel also runs serially; the serial path is the reference used in tests.
enum class Exec { serial, parallel };

// Worker bound from PHONONLAB_WORKERS, falling back to the OpenMP default.
int worker_count();

// Runs body(i) for i in [0, n). Iterations must be independent.
void for_each_index(std::size_t n, Exec exec, const std::function<void(std::size_t)>& body);

}  // namespace phonon
