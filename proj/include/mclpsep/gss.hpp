#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mclpsep/geometry.hpp"
#include "mclpsep/stft.hpp"

namespace mclpsep {

// Per-frequency geometric source separation state. W is the K x N demixing
// matrix, A the N x K steering matrix of the picked directions, R_in the
// empirical N x N input autocorrelation (time average of Y Y^H).
struct GssState {
  Eigen::MatrixXcd W;
  Eigen::MatrixXcd A;
  Eigen::MatrixXcd R_in;
  double gamma = 0.5;

  Eigen::MatrixXcd output_correlation() const { return W * R_in * W.adjoint(); }
  void validate() const;
};

// (gamma/2) |R_S - diag R_S|_F^2 + (1/2) |W A - I|_F^2 with R_S = W R_in W^H.
double gss_cost(const GssState& state);

// Gradient of gss_cost with respect to W:
//   2 gamma (R_S - diag R_S) W R_in + (W A - I) A^H.
// Central differences of the cost in Re/Im of an entry equal the real and
// imaginary parts of the corresponding entry.
Eigen::MatrixXcd gss_gradient(const GssState& state);

struct GssParams {
  double gamma = 0.5;
  int max_steps = 500;
  double grad_tol = 1e-6;
  double step_scale = 0.1;  // step = step_scale / |R_in|_F

  void validate() const;
};

struct GssResult {
  std::vector<Eigen::MatrixXcd> demixing;     // per-bin K x N matrices
  std::vector<ComplexSpectrogram> sources;    // K separated spectrograms
  std::vector<Eigen::MatrixXcd> steering;     // per-bin N x K matrices
  bool step_underflow_warning = false;
};

// Per-bin gradient descent from the delay-and-sum initializer W0 = A^H / N
// until the gradient norm falls below grad_tol or max_steps is reached.
// After 10 consecutive steps without improvement the step is halved and the
// best iterate restored; on step underflow the best iterate is returned with
// a warning. The best (lowest-cost) iterate is always the one returned.
// The input correlation is normalized per bin before descending, so a global
// input gain does not change the demixing matrices.
GssResult gss_solve(const std::vector<ComplexSpectrogram>& inputs,
                    const std::vector<Direction>& directions,
                    const GssParams& params, const ArrayGeometry& geom,
                    unsigned workers = 0);

}  // namespace mclpsep
