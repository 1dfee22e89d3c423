#include "mclpsep/simulate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

namespace mclpsep {

namespace {

constexpr int kSincTaps = 64;

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

double sinc(double t) {
  if (std::abs(t) < 1e-12) return 1.0;
  return std::sin(kPi * t) / (kPi * t);
}

long next_pow2(long n) {
  long p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void Dcir::validate() const {
  if (taps.empty()) throw ConfigError("dcir: empty impulse response");
  if (taps[0] == 0.0) throw ConfigError("dcir: direct-path tap must be nonzero");
  for (double t : taps)
    if (!std::isfinite(t)) throw NumericalError("dcir: non-finite tap");
}

Dcir synth_dcir(uint64_t seed, int length, double decay, double direct_gain,
                std::optional<double> enforce_assumption1_gain) {
  if (length < 1) throw ConfigError("synth_dcir: length must be >= 1");
  if (decay <= 0) throw ConfigError("synth_dcir: decay must be positive");
  Dcir h;
  h.taps.resize(length);
  h.taps[0] = enforce_assumption1_gain.value_or(direct_gain);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 1; t < length; ++t)
    h.taps[t] = gauss(rng) * std::exp(-decay * t);
  h.validate();
  return h;
}

std::vector<Dcir> synth_dcir_set(uint64_t seed, int n_mics, int length,
                                 double decay, double direct_gain,
                                 int shared_head) {
  if (n_mics < 1) throw ConfigError("synth_dcir_set: need at least one microphone");
  shared_head = std::clamp(shared_head, 1, length);
  Dcir head = synth_dcir(seed, length, decay, direct_gain);
  std::vector<Dcir> out(n_mics);
  for (int i = 0; i < n_mics; ++i) {
    out[i] = head;
    std::mt19937_64 rng(seed + 1000003ull * (i + 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int t = shared_head; t < length; ++t)
      out[i].taps[t] = gauss(rng) * std::exp(-decay * t);
  }
  return out;
}

std::vector<double> fractional_delay(const std::vector<double>& x,
                                     double delay, long out_len) {
  if (!std::isfinite(delay)) throw ConfigError("fractional_delay: non-finite delay");
  if (std::abs(delay) >= double(x.size()))
    throw ConfigError("fractional_delay: delay exceeds signal length");
  const long shift = long(std::floor(delay));
  const double frac = delay - double(shift);
  const int center = kSincTaps / 2 - 1;

  double kernel[kSincTaps];
  for (int j = 0; j < kSincTaps; ++j) {
    double t = double(j - center) - frac;
    double win = std::abs(t) < double(kSincTaps / 2)
                     ? 0.5 * (1.0 + std::cos(kPi * t / (kSincTaps / 2)))
                     : 0.0;
    kernel[j] = sinc(t) * win;
  }

  std::vector<double> y(out_len, 0.0);
  const long n_in = long(x.size());
  for (long n = 0; n < out_len; ++n) {
    double acc = 0.0;
    for (int j = 0; j < kSincTaps; ++j) {
      long m = n - shift - j + center;
      if (m >= 0 && m < n_in) acc += x[m] * kernel[j];
    }
    y[n] = acc;
  }
  return y;
}

std::vector<double> fft_convolve(const std::vector<double>& x,
                                 const std::vector<double>& h) {
  if (x.empty() || h.empty()) return {};
  const long out_len = long(x.size()) + long(h.size()) - 1;
  const long n = next_pow2(out_len);
  std::vector<double> a(n, 0.0), b(n, 0.0);
  std::copy(x.begin(), x.end(), a.begin());
  std::copy(h.begin(), h.end(), b.begin());

  std::vector<cpx> fa(n / 2 + 1), fb(n / 2 + 1);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_plan pa = fftw_plan_dft_r2c_1d(
        int(n), a.data(), reinterpret_cast<fftw_complex*>(fa.data()),
        FFTW_ESTIMATE);
    fftw_plan pb = fftw_plan_dft_r2c_1d(
        int(n), b.data(), reinterpret_cast<fftw_complex*>(fb.data()),
        FFTW_ESTIMATE);
    if (!pa || !pb) throw NumericalError("fftw plan creation failed");
    fftw_execute(pa);
    fftw_execute(pb);
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
  }
  for (long i = 0; i < n / 2 + 1; ++i) fa[i] *= fb[i];
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_plan pi = fftw_plan_dft_c2r_1d(
        int(n), reinterpret_cast<fftw_complex*>(fa.data()), a.data(),
        FFTW_ESTIMATE);
    if (!pi) throw NumericalError("fftw plan creation failed");
    fftw_execute(pi);
    fftw_destroy_plan(pi);
  }
  std::vector<double> y(out_len);
  const double inv_n = 1.0 / double(n);
  for (long i = 0; i < out_len; ++i) y[i] = a[i] * inv_n;
  return y;
}

void SceneConfig::validate() const {
  geometry.validate();
  if (sources.empty()) return;  // silent scene is allowed
  if (n_sources() >= geometry.n_mics())
    throw ConfigError("scene: need more microphones than sources");
  std::size_t len = sources[0].signal.size();
  for (const auto& s : sources)
    if (s.signal.size() != len)
      throw ConfigError("scene: sources must have equal lengths");
  if (dcirs.size() != std::size_t(geometry.n_mics()))
    throw ConfigError("scene: need one DCIR row per microphone");
  for (const auto& row : dcirs) {
    if (row.size() != sources.size())
      throw ConfigError("scene: need one DCIR per (microphone, source) pair");
    for (const auto& h : row) h.validate();
  }
  if (assumption1) {
    for (std::size_t k = 0; k < sources.size(); ++k)
      for (const auto& row : dcirs)
        if (row[k].taps[0] != dcirs[0][k].taps[0])
          throw ConfigError("scene: assumption1 set but direct taps differ");
  }
}

std::vector<std::vector<double>> render_mixture(const SceneConfig& scene) {
  scene.validate();
  const int n_mics = scene.geometry.n_mics();
  if (scene.sources.empty())
    return std::vector<std::vector<double>>(n_mics);

  long base_len = 0;
  long max_h = 1;
  for (const auto& s : scene.sources)
    base_len = std::max(base_len, long(s.signal.size()));
  for (const auto& row : scene.dcirs)
    for (const auto& h : row) max_h = std::max(max_h, long(h.length()));
  const long out_len = base_len + max_h - 1;

  std::vector<std::vector<double>> mixture(n_mics,
                                           std::vector<double>(out_len, 0.0));
  for (int i = 0; i < n_mics; ++i) {
    for (int k = 0; k < scene.n_sources(); ++k) {
      double tau = delay_samples(scene.geometry, i, scene.sources[k].theta);
      std::vector<double> delayed =
          fractional_delay(scene.sources[k].signal, tau, base_len);
      std::vector<double> y = fft_convolve(delayed, scene.dcirs[i][k].taps);
      for (std::size_t n = 0; n < y.size() && long(n) < out_len; ++n)
        mixture[i][n] += y[n];
    }
  }
  return mixture;
}

SubbandFilter fit_subband_filters(const Dcir& h, const StftConfig& cfg,
                                  int taps, double probe_seconds,
                                  uint64_t probe_seed) {
  return fit_subband_filters_multi({h}, cfg, taps, probe_seconds,
                                   probe_seed)[0];
}

std::vector<SubbandFilter> fit_subband_filters_multi(
    const std::vector<Dcir>& hs, const StftConfig& cfg, int taps,
    double probe_seconds, uint64_t probe_seed) {
  cfg.validate();
  if (taps < 1) throw ConfigError("fit_subband_filters: need at least one tap");
  if (hs.empty()) return {};
  for (const auto& h : hs) h.validate();

  const long probe_len = std::max<long>(
      long(probe_seconds * cfg.sample_rate), 4L * cfg.window_length);
  std::vector<double> probe(probe_len);
  std::mt19937_64 rng(probe_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& v : probe) v = gauss(rng);

  ComplexSpectrogram X = analyze(probe, cfg);
  std::vector<ComplexSpectrogram> Y;
  Y.reserve(hs.size());
  long frames = X.frames();
  for (const auto& h : hs) {
    std::vector<double> y = fft_convolve(probe, h.taps);
    y.resize(probe_len);  // keep the frame lattice aligned with the probe
    Y.push_back(analyze(y, cfg));
    frames = std::min(frames, Y.back().frames());
  }

  const int L = taps;
  const long s0 = L - 1;
  if (frames <= s0 + L)
    throw ConfigError("fit_subband_filters: probe too short for tap count");

  std::vector<SubbandFilter> out(hs.size());
  for (auto& f : out) {
    f.taps = Eigen::MatrixXcd::Zero(L, cfg.bins());
    f.residual_ratio = Eigen::VectorXd::Zero(cfg.bins());
  }

  const long rows = frames - s0;
  Eigen::MatrixXcd D(rows, L);
  for (int bin = 0; bin < cfg.bins(); ++bin) {
    for (long s = s0; s < frames; ++s)
      for (int l = 0; l < L; ++l) D(s - s0, l) = X.data(s - l, bin);
    Eigen::MatrixXcd G = D.adjoint() * D;
    // ridge keeps near-singular normal equations solvable; never fails silently
    G += 1e-8 * G.trace().real() * Eigen::MatrixXcd::Identity(L, L);
    Eigen::LDLT<Eigen::MatrixXcd> solver(G);
    if (solver.info() != Eigen::Success)
      throw NumericalError("fit_subband_filters: factorization failed at bin " +
                           std::to_string(bin));
    for (std::size_t m = 0; m < hs.size(); ++m) {
      Eigen::VectorXcd y(rows);
      for (long s = s0; s < frames; ++s) y(s - s0) = Y[m].data(s, bin);
      double energy = y.squaredNorm();
      if (energy == 0.0) continue;  // zero target: zero taps, zero residual
      Eigen::VectorXcd coeff = solver.solve(D.adjoint() * y);
      out[m].taps.col(bin) = coeff;
      out[m].residual_ratio(bin) = (D * coeff - y).squaredNorm() / energy;
    }
  }
  return out;
}

std::vector<double> sparse_bursts_signal(uint64_t seed, long n_samples,
                                         const StftConfig& cfg,
                                         double band_lo_hz, double band_hi_hz,
                                         double density, double rms) {
  cfg.validate();
  if (n_samples < cfg.window_length)
    throw ConfigError("sparse_bursts_signal: need at least one window");
  if (density <= 0 || density > 1)
    throw ConfigError("sparse_bursts_signal: density must be in (0, 1]");

  const long frames = n_samples / cfg.hop + 1;
  ComplexSpectrogram spec;
  spec.config = cfg;
  spec.signal_length = n_samples;
  spec.data = Eigen::MatrixXcd::Zero(frames, cfg.bins());

  const int lo = cfg.bin_of_hz(band_lo_hz);
  const int hi = cfg.bin_of_hz(band_hi_hz);
  const double mean_run = 4.0;
  const double p_off = 1.0 / mean_run;
  const double p_on = density * p_off / std::max(1e-9, 1.0 - density);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int b = std::min(lo, hi); b <= std::max(lo, hi); ++b) {
    bool on = false;
    double level = 0.0;
    for (long s = 0; s < frames; ++s) {
      if (!on && uni(rng) < p_on) {
        on = true;
        level = 0.5 + uni(rng);
      } else if (on && uni(rng) < p_off) {
        on = false;
      }
      if (on) {
        double mag = level * (0.75 + 0.5 * uni(rng));
        double phase = 2.0 * kPi * uni(rng);
        spec.data(s, b) = std::polar(mag, phase);
      }
    }
  }

  std::vector<double> x = synthesize(spec);
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= double(x.size());
  if (power > 0) {
    double scale = rms / std::sqrt(power);
    for (double& v : x) v *= scale;
  }
  return x;
}

}  // namespace mclpsep
