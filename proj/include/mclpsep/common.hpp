#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

namespace mclpsep {

inline constexpr double kPi = 3.14159265358979323846;

using cpx = std::complex<double>;

// Invalid user-facing configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values or a failed factorization inside an iteration; the CLI
// maps this to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

unsigned default_workers();

// Runs fn(i) for i in [0, n). Work items must be independent and keyed by
// index, so the result does not depend on the schedule. workers == 0 picks
// the hardware default; workers == 1 runs inline.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace mclpsep
