#include "mclpsep/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace mclpsep {

namespace {

// FFTW plan creation is not thread-safe; execution is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

struct RealFft {
  int n;
  std::vector<double> real;
  std::vector<cpx> spec;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  explicit RealFft(int size) : n(size), real(size), spec(size / 2 + 1) {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fwd = fftw_plan_dft_r2c_1d(n, real.data(),
                               reinterpret_cast<fftw_complex*>(spec.data()),
                               FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spec.data()),
                               real.data(), FFTW_ESTIMATE);
    if (!fwd || !inv) throw NumericalError("fftw plan creation failed");
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void forward() { fftw_execute(fwd); }
  void inverse() { fftw_execute(inv); }  // unnormalized, clobbers spec
};

}  // namespace

int StftConfig::bin_of_hz(double hz) const {
  int b = int(std::lround(hz * window_length / sample_rate));
  return std::clamp(b, 0, bins() - 1);
}

void StftConfig::validate() const {
  if (window_length < 4) throw ConfigError("stft: window_length must be >= 4");
  if (hop < 1) throw ConfigError("stft: hop must be positive");
  if (window_length % hop != 0)
    throw ConfigError("stft: hop must divide window_length");
  if (window_length / hop < 2)
    throw ConfigError("stft: need at least 2x overlap (hop <= window/2)");
  if (sample_rate < 1) throw ConfigError("stft: sample_rate must be positive");
}

std::vector<double> sqrt_hann_window(int window_length, int hop) {
  // Periodic Hann summed over the hop lattice gives window/(2*hop); the
  // 2*hop/window factor makes the squared windows overlap-add to 1.
  const double scale = 2.0 * hop / window_length;
  std::vector<double> w(window_length);
  for (int n = 0; n < window_length; ++n) {
    double hann = 0.5 * (1.0 - std::cos(2.0 * kPi * n / window_length));
    w[n] = std::sqrt(scale * hann);
  }
  return w;
}

ComplexSpectrogram analyze(const std::vector<double>& signal,
                           const StftConfig& cfg) {
  cfg.validate();
  const int W = cfg.window_length;
  const int H = cfg.hop;
  if (long(signal.size()) < W)
    throw ConfigError("stft: signal shorter than one window");
  for (double v : signal)
    if (!std::isfinite(v)) throw NumericalError("stft: non-finite sample");

  const long len = long(signal.size());
  const long frames = len / H + 1;
  const long buffer_len = (frames - 1) * H + W;
  const long pad_front = W / 2;

  std::vector<double> padded(buffer_len, 0.0);
  for (long i = 0; i < len; ++i) padded[pad_front + i] = signal[i];

  const std::vector<double> w = sqrt_hann_window(W, H);
  ComplexSpectrogram out;
  out.config = cfg;
  out.signal_length = len;
  out.data.resize(frames, cfg.bins());

  RealFft fft(W);
  for (long s = 0; s < frames; ++s) {
    const double* frame = padded.data() + s * H;
    for (int n = 0; n < W; ++n) fft.real[n] = w[n] * frame[n];
    fft.forward();
    for (int b = 0; b < cfg.bins(); ++b) out.data(s, b) = fft.spec[b];
  }
  return out;
}

std::vector<double> synthesize(const ComplexSpectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  if (spec.bins() != cfg.bins())
    throw ConfigError("stft: spectrogram bin count inconsistent with config");
  if (spec.frames() < 1) throw ConfigError("stft: empty spectrogram");

  const int W = cfg.window_length;
  const int H = cfg.hop;
  const long frames = spec.frames();
  const long buffer_len = (frames - 1) * H + W;
  const long pad_front = W / 2;
  const long out_len =
      spec.signal_length > 0 ? spec.signal_length : (frames - 1) * H;
  if (out_len + pad_front > buffer_len)
    throw ConfigError("stft: signal_length inconsistent with frame count");

  const std::vector<double> w = sqrt_hann_window(W, H);
  std::vector<double> acc(buffer_len, 0.0);
  std::vector<double> wsum(buffer_len, 0.0);

  RealFft fft(W);
  const double inv_n = 1.0 / W;
  for (long s = 0; s < frames; ++s) {
    for (int b = 0; b < cfg.bins(); ++b) fft.spec[b] = spec.data(s, b);
    fft.inverse();
    double* dst = acc.data() + s * H;
    double* wdst = wsum.data() + s * H;
    for (int n = 0; n < W; ++n) {
      dst[n] += w[n] * fft.real[n] * inv_n;
      wdst[n] += w[n] * w[n];
    }
  }

  std::vector<double> out(out_len, 0.0);
  for (long i = 0; i < out_len; ++i) {
    double m = wsum[pad_front + i];
    out[i] = m > 1e-12 ? acc[pad_front + i] / m : 0.0;
  }
  return out;
}

}  // namespace mclpsep
