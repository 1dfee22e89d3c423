#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mclpsep/common.hpp"

namespace mclpsep {

// Self-inverting STFT: the same square-root Hann window is applied at
// analysis and synthesis, scaled so the squared windows overlap-add to 1.
// The hop must divide the window length with at least 2x overlap.
struct StftConfig {
  int window_length = 1024;  // 64 ms at 16 kHz
  int hop = 256;             // 16 ms at 16 kHz
  int sample_rate = 16000;

  int fft_size() const { return window_length; }
  int bins() const { return window_length / 2 + 1; }
  double bin_hz(int bin) const {
    return double(bin) * sample_rate / window_length;
  }
  // Normalized frequency in radians/sample for a bin.
  double omega(int bin) const { return 2.0 * kPi * bin / window_length; }
  int bin_of_hz(double hz) const;
  void validate() const;  // throws ConfigError
};

struct ComplexSpectrogram {
  Eigen::MatrixXcd data;  // frames x bins (non-negative frequencies only)
  StftConfig config;
  long signal_length = 0;  // original sample count, 0 when unknown

  long frames() const { return data.rows(); }
  int bins() const { return int(data.cols()); }
};

// Analysis/synthesis window, normalized so sum_m w^2(n - m*hop) == 1.
std::vector<double> sqrt_hann_window(int window_length, int hop);

// Frame s covers padded samples [s*hop, s*hop + window_length); the signal
// is zero-padded by half a window on both ends. Rejects signals shorter
// than one window.
ComplexSpectrogram analyze(const std::vector<double>& signal,
                           const StftConfig& cfg);

// Overlap-add inverse. The accumulated squared-window weight is divided
// out, so analyze -> synthesize reproduces the input exactly (up to
// round-off) over its full extent.
std::vector<double> synthesize(const ComplexSpectrogram& spec);

}  // namespace mclpsep
