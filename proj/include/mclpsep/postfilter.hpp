#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mclpsep/geometry.hpp"
#include "mclpsep/gss.hpp"
#include "mclpsep/stft.hpp"

namespace mclpsep {

struct PostfilterParams {
  double alpha = 1.0;  // threshold multiplier on the noise deviation
  void validate() const;
};

// Residual-noise variance estimate for one separated cell:
//   (1/(N-1)) sum_n |W_n| |Yhat_n - a_n * S|^2
// Requires at least two channels.
double estimate_variance(const Eigen::VectorXcd& Yhat,
                         const Eigen::VectorXcd& W_row,
                         const Eigen::VectorXcd& a, cpx S);

// Cell-wise shrinkage of the separated spectrogram by alpha times the noise
// deviation. A contraction per cell: magnitudes never grow, phases are kept
// where the output is nonzero. Rejects negative variances.
ComplexSpectrogram apply_postfilter(const ComplexSpectrogram& S,
                                    const Eigen::MatrixXd& variances,
                                    const PostfilterParams& params);

// Variance grid for one separated source from the demixing state. Cells
// whose demixing row is numerically zero pass through with zero variance.
Eigen::MatrixXd postfilter_variances(
    const std::vector<ComplexSpectrogram>& mic_inputs, const GssResult& gss,
    int source, const std::vector<Direction>& directions,
    const ArrayGeometry& geom);

// Linear combination model Y_n = c_n * gamma + u_n * Z_n with |c_n| = 1 and
// circular unit-variance complex Gaussian Z_n.
struct UmvuModel {
  Eigen::VectorXcd c;  // unit-modulus constants
  Eigen::VectorXcd u;  // complex noise scales, all nonzero

  double beta() const;  // (sum |u_n|^-2)^-1, the estimator variance
  void validate() const;
};

// Minimum-variance unbiased combiner weights w_n = conj(c_n) beta |u_n|^-2;
// they satisfy sum w_n c_n = 1.
Eigen::VectorXcd umvu_weights(const UmvuModel& model);

// Unbiased estimate of the combiner variance from one observation vector:
// (1/(N-1)) sum |w_n| |Y_n - c_n * gamma_hat|^2 with gamma_hat = sum w_n Y_n.
double umvu_variance_estimate(const UmvuModel& model,
                              const Eigen::VectorXcd& Y);

}  // namespace mclpsep
