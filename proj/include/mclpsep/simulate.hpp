#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "mclpsep/geometry.hpp"
#include "mclpsep/stft.hpp"

namespace mclpsep {

// Distance-compensated impulse response: the direct path sits at tap 0.
struct Dcir {
  std::vector<double> taps;
  int length() const { return int(taps.size()); }
  void validate() const;
};

// Exponentially decaying noise tail behind a deterministic direct tap.
// tap[0] = direct_gain, or the shared enforce value when given; taps t >= 1
// are i.i.d. zero-mean Gaussian with envelope exp(-decay * t).
Dcir synth_dcir(uint64_t seed, int length, double decay, double direct_gain,
                std::optional<double> enforce_assumption1_gain = {});

// One DCIR per microphone with the leading shared_head taps identical
// across microphones and independent tails. Sharing the whole first head
// (rather than tap 0 alone) is what makes the fitted zero-lag subband
// coefficients agree across microphones.
std::vector<Dcir> synth_dcir_set(uint64_t seed, int n_mics, int length,
                                 double decay, double direct_gain,
                                 int shared_head);

struct SceneSource {
  std::vector<double> signal;
  Direction theta;
};

struct SceneConfig {
  std::vector<SceneSource> sources;       // K entries, equal lengths
  std::vector<std::vector<Dcir>> dcirs;   // [mic][source]
  ArrayGeometry geometry;
  bool assumption1 = false;  // declares tap-0 equality across microphones

  int n_sources() const { return int(sources.size()); }
  void validate() const;
};

// y_i = sum_k fractional_delay(x_k, tau_ik) * h_ik. All channels share one
// length: max source length + max DCIR length - 1.
std::vector<std::vector<double>> render_mixture(const SceneConfig& scene);

// Band-limited delay by a 64-tap Hann-windowed sinc; exact for integer
// delays. Rejects |delay| >= signal length.
std::vector<double> fractional_delay(const std::vector<double>& x,
                                     double delay, long out_len);

std::vector<double> fft_convolve(const std::vector<double>& x,
                                 const std::vector<double>& h);

struct SubbandFilter {
  Eigen::MatrixXcd taps;           // n_taps x bins
  Eigen::VectorXd residual_ratio;  // per-bin residual energy / target energy
  int n_taps() const { return int(taps.rows()); }
};

// Least-squares fit of per-bin cross-frame filters approximating
// time-domain convolution with h, driven by a white-noise probe.
SubbandFilter fit_subband_filters(const Dcir& h, const StftConfig& cfg,
                                  int taps, double probe_seconds = 30.0,
                                  uint64_t probe_seed = 0x5eedf17ull);

// Same fit for several impulse responses sharing one probe; entry i equals
// fit_subband_filters(hs[i], ...) exactly.
std::vector<SubbandFilter> fit_subband_filters_multi(
    const std::vector<Dcir>& hs, const StftConfig& cfg, int taps,
    double probe_seconds = 30.0, uint64_t probe_seed = 0x5eedf17ull);

// Sparse time-frequency burst signal: narrowband bursts with random
// on/off runs, synthesized from a sparse spectrogram. Used as a test and
// demo source with controllable sparsity.
std::vector<double> sparse_bursts_signal(uint64_t seed, long n_samples,
                                         const StftConfig& cfg,
                                         double band_lo_hz, double band_hi_hz,
                                         double density, double rms = 0.1);

}  // namespace mclpsep
