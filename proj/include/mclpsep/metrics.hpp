#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mclpsep/simulate.hpp"
#include "mclpsep/stft.hpp"

namespace mclpsep {

// Cross-microphone variance of fitted subband filters, normalized per cell
// by the total filter power. Cells with zero total power are undefined and
// excluded from statistics.
struct VarianceField {
  Eigen::MatrixXd v_hat;                      // taps x bins
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
  StftConfig config;

  Eigen::MatrixXd db() const;  // 10 log10, undefined cells set to NaN
};

VarianceField assumption_field(const std::vector<SubbandFilter>& per_mic,
                               const StftConfig& cfg);

struct SirResult {
  std::vector<double> db;       // capped at 99 dB
  std::vector<bool> defined;    // false for silent references
};

// Signal-to-interference ratio of each estimate against per-source
// references: the estimate is decomposed onto the span of short-filtered
// references (distortion_taps shifts per source); SIR is the energy of the
// target-subspace component over the remaining interference component.
SirResult sir(const std::vector<std::vector<double>>& estimates,
              const std::vector<std::vector<double>>& references,
              int distortion_taps = 64);

// Same decomposition for a single estimate against an arbitrary reference
// set; target selects which reference is the wanted signal. NaN for a
// silent target reference.
double sir_one(const std::vector<double>& estimate,
               const std::vector<std::vector<double>>& references, int target,
               int distortion_taps = 64);

// Temporal spread statistic of band envelopes: energy-weighted mean of the
// positive part of the envelope autocorrelation over lags 1..max_lag.
// Reverberant spectrograms smear envelopes in time and score higher.
double envelope_autocorr_width(const ComplexSpectrogram& spec,
                               int max_lag = 40);

}  // namespace mclpsep
