#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mclpsep/stft.hpp"

namespace mclpsep {

struct MclpParams {
  int d = 2;              // prediction delay in frames
  int L = 30;             // taps per channel
  int M = 50;             // weight-update period in iterations
  double alpha = 0.05;    // shrinkage threshold scale
  double lambda = 0.5;    // relaxation, in (0, 1)
  double epsilon = 0.0;   // weight-update constant; 0 picks 1e-3 * median|y_r|
  int max_iters = 2000;
  double rel_tol = 1e-7;  // early exit on relative weight change per block
  // Optional processing band for dereverb_all_refs; bins outside are passed
  // through untouched. 0/0 means all bins.
  double band_lo_hz = 0.0;
  double band_hi_hz = 0.0;
  bool record_objective = false;

  void validate() const;
};

struct MclpSolution {
  Eigen::MatrixXcd weights;   // n_channels x taps, prediction filters u_i(l)
  Eigen::VectorXcd residual;  // dereverbed band (shrunk residual)
  Eigen::VectorXcd residual_raw;  // y_r - X u, before the final shrink
  int reference = 0;
  int bin = 0;
  int iterations = 0;
  std::vector<double> objective;  // weighted-l1 value per update block
};

// Complex magnitude shrinkage: 0 when |z| <= t, else z * (1 - t/|z|).
cpx soft(cpx z, double t);

// S x (N*L) horizontal concatenation of per-channel Toeplitz blocks with
// entries y_i(s - d - l); out-of-range samples are zero. Rejects bands with
// S <= d (nothing to predict from).
Eigen::MatrixXcd build_data_matrix(const std::vector<Eigen::VectorXcd>& bands,
                                   const MclpParams& params);

// Per-band weighted-l1 linear prediction solved with relaxed
// Douglas-Rachford splitting:
//   z~ = 2 soft(z, alpha w) - z
//   u~ = (I + X^H X)^(-1) (u + X^H (y_r - z~))
//   z  = (1 - lambda) z + lambda (2 (y_r - X u~) - z~)
//   u  = (1 - 2 lambda) u + 2 lambda u~
// starting from u = 0, z = y_r, w = 1, with w_i = eps / (eps + |z_i|) every
// M iterations. The returned residual is the final shrunk z.
// Bands are normalized internally by their pooled RMS so alpha and epsilon
// act on unit-scale data; outputs are scaled back and weights are unchanged
// by the normalization.
MclpSolution solve_band(const std::vector<Eigen::VectorXcd>& bands,
                        int reference, const MclpParams& params);

struct MclpTrace {
  int bin = 0;
  int reference = 0;
  int iterations = 0;
  std::vector<double> objective;
};

// Runs solve_band for every (bin, reference) pair; output channel r holds
// the residuals for reference r. Bins are independent and the result is
// identical under any worker count. The Cholesky factor of (I + X^H X) is
// shared across references at a bin (X does not depend on the reference).
// With record_objective set and a trace sink given, per-(bin, reference)
// objective traces are collected in (bin, reference) order.
std::vector<ComplexSpectrogram> dereverb_all_refs(
    const std::vector<ComplexSpectrogram>& channels, const MclpParams& params,
    unsigned workers = 0, std::vector<MclpTrace>* traces = nullptr);

// Variant computing only the listed reference channels (same math); used
// when a single dereverbed reference signal is needed.
std::vector<ComplexSpectrogram> dereverb_refs(
    const std::vector<ComplexSpectrogram>& channels, const MclpParams& params,
    const std::vector<int>& references, unsigned workers = 0,
    std::vector<MclpTrace>* traces = nullptr);

}  // namespace mclpsep
