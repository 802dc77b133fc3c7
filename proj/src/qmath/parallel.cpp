#include "phonon/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>

#include <omp.h>

namespace phonon {

int worker_count() {
  if (const char* env = std::getenv("PHONONLAB_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

void for_each_index(std::size_t n, Exec exec, const std::function<void(std::size_t)>& body) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace phonon
