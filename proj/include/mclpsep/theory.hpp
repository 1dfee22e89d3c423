#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mclpsep::theory {

struct SuiteResult {
  std::string name;
  int n_instances = 0;
  int n_passed = 0;
  bool pass = false;
  std::string note;
};

struct TheoryReport {
  std::vector<SuiteResult> suites;
  uint64_t seed = 0;
  bool all_pass() const {
    for (const auto& s : suites)
      if (!s.pass) return false;
    return true;
  }
  std::string to_json() const;
};

// Single-source constrained equalizers: random coprime channel triples
// (N = 3, integer coefficients, degree <= 4), d = 1, every reference swept.
// Passes when an equalizer is found and the exact identity holds with the
// constant equal to the reference channel's value at infinity.
SuiteResult run_single_source_equalizer_suite(uint64_t seed, int n_instances);

// Two-source constrained equalizers: random N = 4, K = 2 integer matrices
// whose reduced matrices have constant minor gcds, every reference swept.
SuiteResult run_multi_source_equalizer_suite(uint64_t seed, int n_instances);

// Minor-gcd equivalence: constant K-minor gcd if and only if an exact
// unconstrained equalizer exists. Half the instances carry a planted
// common factor. Any counterexample fails the suite.
SuiteResult run_minor_gcd_equivalence_suite(uint64_t seed, int n_instances);

// Quarter-turn manifold phases on channels with matching zero-lag
// coefficients: the equalized constants must carry exactly the reference
// phase with a reference-independent magnitude, and a perturbed zero-lag
// negative control must break the magnitude match.
SuiteResult run_phase_consistency_suite(uint64_t seed, int n_instances);

TheoryReport run_all_suites(uint64_t seed, int single_source = 100,
                            int multi_source = 50, int equivalence = 50,
                            int phase = 12);

}  // namespace mclpsep::theory
