// Acceptance suite: one criterion per function, one pass/fail line each.
// Exits nonzero when any criterion fails. Optional argument --only N runs a
// single criterion.

#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "mclpsep/metrics.hpp"
#include "mclpsep/pipeline.hpp"
#include "mclpsep/postfilter.hpp"
#include "mclpsep/theory.hpp"

using namespace mclpsep;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

cpx crandn(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  return {gauss(rng), gauss(rng)};
}

double deg_error(double a_rad, double truth_rad) {
  double d = std::abs(a_rad - truth_rad) * 180.0 / kPi;
  d = std::fmod(d, 360.0);
  return std::min(d, 360.0 - d);
}

// ---------------------------------------------------------------- 1
Outcome criterion_stft_round_trip() {
  auto t0 = Clock::now();
  StftConfig cfg;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(16000);
    for (auto& v : x) v = gauss(rng);
    std::vector<double> y = synthesize(analyze(x, cfg));
    double peak = 0.0, err = 0.0;
    for (long n = 0; n < 16000; ++n) peak = std::max(peak, std::abs(x[n]));
    for (long n = cfg.window_length; n < 16000 - cfg.window_length; ++n)
      err = std::max(err, std::abs(y[n] - x[n]));
    worst = std::max(worst, err / peak);
  }
  double elapsed = seconds_since(t0);
  std::ostringstream ss;
  ss << "max rel err " << worst << ", " << elapsed << " s";
  return {worst <= 1e-10 && elapsed < 1.0, ss.str()};
}

// ---------------------------------------------------------------- 2
Outcome criterion_single_source_theory() {
  auto t0 = Clock::now();
  theory::SuiteResult suite = theory::run_single_source_equalizer_suite(1, 100);
  double elapsed = seconds_since(t0);
  std::ostringstream ss;
  ss << suite.n_passed << "/" << suite.n_instances << " instances, " << elapsed
     << " s";
  return {suite.pass && elapsed < 30.0, ss.str()};
}

// ---------------------------------------------------------------- 3
Outcome criterion_multi_source_theory() {
  auto t0 = Clock::now();
  theory::SuiteResult multi = theory::run_multi_source_equalizer_suite(1, 50);
  theory::SuiteResult phase = theory::run_phase_consistency_suite(1, 12);
  double elapsed = seconds_since(t0);
  std::ostringstream ss;
  ss << "equalizers " << multi.n_passed << "/" << multi.n_instances
     << ", phase+control " << phase.n_passed << "/" << phase.n_instances
     << ", " << elapsed << " s";
  return {multi.pass && phase.pass && elapsed < 120.0, ss.str()};
}

// ---------------------------------------------------------------- 4
Outcome criterion_minor_gcd_equivalence() {
  theory::SuiteResult suite = theory::run_minor_gcd_equivalence_suite(1, 50);
  std::ostringstream ss;
  ss << suite.n_passed << "/" << suite.n_instances << " instances";
  if (!suite.note.empty()) ss << " (" << suite.note << ")";
  return {suite.pass, ss.str()};
}

// ---------------------------------------------------------------- 5
Outcome criterion_gss_gradient() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 2, N = 5;
    GssState s;
    s.gamma = 0.7;
    s.W.resize(K, N);
    s.A.resize(N, K);
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < N; ++j) s.W(i, j) = crandn(rng);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < K; ++j) s.A(i, j) = crandn(rng);
    Eigen::MatrixXcd B(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) B(i, j) = crandn(rng);
    s.R_in = B * B.adjoint() / double(N);

    const double step = 1e-5;
    Eigen::MatrixXcd fd(K, N);
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < N; ++j) {
        GssState plus = s, minus = s;
        plus.W(i, j) += step;
        minus.W(i, j) -= step;
        double d_re = (gss_cost(plus) - gss_cost(minus)) / (2 * step);
        plus = s;
        minus = s;
        plus.W(i, j) += cpx(0, step);
        minus.W(i, j) -= cpx(0, step);
        double d_im = (gss_cost(plus) - gss_cost(minus)) / (2 * step);
        fd(i, j) = cpx(d_re, d_im);
      }
    Eigen::MatrixXcd analytic = gss_gradient(s);
    worst = std::max(worst, (fd - analytic).norm() / analytic.norm());
  }
  std::ostringstream ss;
  ss << "max rel err " << worst << " over 100 states";
  return {worst <= 1e-5, ss.str()};
}

// ---------------------------------------------------------------- 6
Outcome criterion_umvu_monte_carlo() {
  std::mt19937_64 rng(6);
  const int N = 6;
  UmvuModel model;
  model.c.resize(N);
  model.u.resize(N);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int n = 0; n < N; ++n) {
    model.c(n) = std::polar(1.0, 2.0 * kPi * uni(rng));
    model.u(n) = std::polar(0.6 + 0.9 * uni(rng), 2.0 * kPi * uni(rng));
  }
  const cpx gamma(1.0, 0.5);
  const double beta = model.beta();
  Eigen::VectorXcd w = umvu_weights(model);

  const int draws = 100000;
  cpx mean(0, 0);
  double var = 0.0, stat_mean = 0.0;
  Eigen::VectorXcd y(N);
  std::vector<cpx> estimates(draws);
  for (int t = 0; t < draws; ++t) {
    for (int n = 0; n < N; ++n) y(n) = model.c(n) * gamma + model.u(n) * crandn(rng);
    estimates[t] = (w.array() * y.array()).sum();
    mean += estimates[t];
    stat_mean += umvu_variance_estimate(model, y);
  }
  mean /= double(draws);
  for (const cpx& e : estimates) var += std::norm(e - mean);
  var /= double(draws);
  stat_mean /= double(draws);

  double mean_err = std::abs(mean - gamma) / std::abs(gamma);
  double var_err = std::abs(var - beta) / beta;
  double stat_err = std::abs(stat_mean - beta) / beta;
  std::ostringstream ss;
  ss << "mean err " << mean_err * 100 << "%, var err " << var_err * 100
     << "%, statistic err " << stat_err * 100 << "%";
  return {mean_err <= 0.01 && var_err <= 0.03 && stat_err <= 0.02, ss.str()};
}

// ---------------------------------------------------------------- 7
Outcome criterion_assumption_field() {
  StftConfig cfg;
  const int n_mics = 8;
  auto set = synth_dcir_set(7, n_mics, 4096, 1.5e-3, 25.0, cfg.window_length);
  auto fits = fit_subband_filters_multi(set, cfg, 16, 30.0);
  VarianceField field = assumption_field(fits, cfg);

  int satisfied = 0, counted = 0;
  for (int b = 0; b < cfg.bins(); ++b) {
    if (!field.defined(0, b)) continue;
    double later = 0.0;
    int later_n = 0;
    for (int s = 1; s < field.v_hat.rows(); ++s)
      if (field.defined(s, b)) {
        later += field.v_hat(s, b);
        ++later_n;
      }
    if (later_n == 0) continue;
    ++counted;
    if (field.v_hat(0, b) <= (later / later_n) * 1e-2) ++satisfied;  // 20 dB
  }
  double fraction = counted > 0 ? double(satisfied) / counted : 0.0;
  std::ostringstream ss;
  ss << satisfied << "/" << counted << " bins at 20 dB ("
     << fraction * 100.0 << "%)";
  return {fraction >= 0.90, ss.str()};
}

// shared scene builder for the experiment analogs
SceneConfig experiment_scene(uint64_t seed, int n_mics,
                             const std::vector<double>& thetas,
                             double duration_s, const StftConfig& cfg,
                             int dcir_len, double decay, double direct_gain) {
  SceneConfig scene;
  scene.geometry = circular_array(n_mics, 0.05, 343.0, cfg.sample_rate);
  long n = long(duration_s * cfg.sample_rate);
  int k = 0;
  for (double t : thetas) {
    SceneSource s;
    s.theta = Direction(t);
    s.signal =
        sparse_bursts_signal(seed + 31 * (++k), n, cfg, 300, 5000, 0.08);
    scene.sources.push_back(std::move(s));
  }
  scene.dcirs.resize(n_mics);
  for (std::size_t src = 0; src < thetas.size(); ++src) {
    auto set = synth_dcir_set(seed ^ (0xace + 131 * src), n_mics, dcir_len,
                              decay, direct_gain, cfg.window_length);
    for (int i = 0; i < n_mics; ++i) scene.dcirs[i].push_back(set[i]);
  }
  scene.assumption1 = true;
  return scene;
}

// ---------------------------------------------------------------- 8
Outcome criterion_doa_sharpening() {
  auto t0 = Clock::now();
  StftConfig stft;  // paper framing: 64 ms window, 16 ms hop, 16 kHz
  PipelineConfig cfg;
  cfg.stft = stft;
  cfg.n_sources = 1;
  cfg.doa.n_sources = 1;
  cfg.doa.frame_stride = 2;
  cfg.mclp.d = 2;
  cfg.mclp.L = 12;
  cfg.mclp.max_iters = 300;
  cfg.mclp.band_lo_hz = 300;
  cfg.mclp.band_hi_hz = 4000;
  cfg.validate();

  const int seeds = 10;
  int peak_ok = 0, width_ok = 0;
  double mean_width_with = 0.0, mean_width_without = 0.0;
  for (int seed = 0; seed < seeds; ++seed) {
    SceneConfig scene = experiment_scene(4000 + seed, 8, {kPi / 2}, 10.0, stft,
                                         3072, 8e-4, 10.0);
    auto mics = render_mixture(scene);

    DoaSpectrum with = doa_of_signals(mics, scene.geometry, cfg);
    PipelineConfig raw = cfg;
    raw.skip_mclp = true;
    DoaSpectrum without = doa_of_signals(mics, scene.geometry, raw);

    if (!with.peaks.empty() &&
        deg_error(with.peaks[0].theta, kPi / 2) <= 2.0)
      ++peak_ok;
    double w_with = mainlobe_halfwidth_deg(with);
    double w_without = mainlobe_halfwidth_deg(without);
    mean_width_with += w_with / seeds;
    mean_width_without += w_without / seeds;
    if (w_with < w_without) ++width_ok;
  }
  double elapsed = seconds_since(t0);
  std::ostringstream ss;
  ss << "peaks within 2 deg " << peak_ok << "/" << seeds << ", narrower "
     << width_ok << "/" << seeds << " (mean width " << mean_width_with
     << " vs " << mean_width_without << " deg), " << elapsed << " s";
  return {peak_ok == seeds && width_ok == seeds && elapsed < 600.0, ss.str()};
}

// ---------------------------------------------------------------- 9
Outcome criterion_sir_ordering() {
  auto t0 = Clock::now();
  StftConfig stft;
  PipelineConfig cfg;
  cfg.stft = stft;
  cfg.n_sources = 2;
  cfg.doa.n_sources = 2;
  cfg.doa.frame_stride = 2;
  cfg.mclp.d = 2;
  cfg.mclp.L = 10;
  cfg.mclp.max_iters = 250;
  cfg.gss.max_steps = 300;
  cfg.validate();

  const int seeds = 5;
  const std::vector<double> truths = {kPi / 2, 1.75 * kPi};
  double mean_g = 0, mean_gp = 0, mean_lpg = 0, mean_lpgp = 0;

  for (int seed = 0; seed < seeds; ++seed) {
    SceneConfig scene = experiment_scene(7000 + seed, 8, truths, 6.0, stft,
                                         2048, 1.2e-3, 16.0);
    auto mics = render_mixture(scene);

    std::vector<std::vector<std::vector<double>>> solos(2);
    for (int k = 0; k < 2; ++k) {
      SceneConfig solo = scene;
      solo.sources = {scene.sources[k]};
      for (int i = 0; i < 8; ++i) solo.dcirs[i] = {scene.dcirs[i][k]};
      solos[k] = render_mixture(solo);
    }
    std::vector<std::vector<double>> refs_raw(2), refs_lp(2);
    for (int k = 0; k < 2; ++k) {
      refs_raw[k] = solos[k][0];
      refs_lp[k] = dereverb_reference(solos[k], cfg, 0);
    }

    auto run_variant = [&](bool lp, bool post) {
      PipelineConfig v = cfg;
      v.skip_mclp = !lp;
      v.skip_postfilter = !post;
      SeparationOutput sep = separate(mics, scene.geometry, v);
      const auto& refs = lp ? refs_lp : refs_raw;
      // best-permutation pairing of the two outputs
      SirResult direct = sir({sep.sources[0], sep.sources[1]}, refs);
      SirResult swapped = sir({sep.sources[1], sep.sources[0]}, refs);
      auto total = [](const SirResult& r) {
        double t = 0;
        for (std::size_t k = 0; k < r.db.size(); ++k)
          t += r.defined[k] ? r.db[k] : -99.0;
        return t;
      };
      const SirResult& best =
          total(direct) >= total(swapped) ? direct : swapped;
      return 0.5 * (best.db[0] + best.db[1]);
    };

    mean_g += run_variant(false, false) / seeds;
    mean_gp += run_variant(false, true) / seeds;
    mean_lpg += run_variant(true, false) / seeds;
    mean_lpgp += run_variant(true, true) / seeds;
  }
  double elapsed = seconds_since(t0);
  std::ostringstream ss;
  ss << "G " << mean_g << " dB, G+P " << mean_gp << " dB, LP+G " << mean_lpg
     << " dB, LP+G+P " << mean_lpgp << " dB, " << elapsed << " s";
  bool pass = mean_lpg > mean_g && mean_lpgp > mean_gp &&
              mean_lpgp - mean_gp >= 3.0;
  return {pass, ss.str()};
}

// ---------------------------------------------------------------- 10
Outcome criterion_mclp_recovery() {
  std::mt19937_64 rng(10);
  MclpParams params;
  params.d = 1;
  params.L = 3;
  params.alpha = 0.05;
  params.lambda = 0.5;
  params.M = 50;
  params.max_iters = 1500;
  params.rel_tol = 1e-9;

  const int trials = 100;
  const int N = 3;
  const long S = 400;
  int recovered = 0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<Eigen::VectorXcd> bands(N, Eigen::VectorXcd::Zero(S));
    for (int i = 1; i < N; ++i)
      for (long s = 0; s < S; ++s) bands[i](s) = crandn(rng);
    Eigen::MatrixXcd u(N, params.L);
    for (int i = 0; i < N; ++i)
      for (int l = 0; l < params.L; ++l) u(i, l) = 0.25 * crandn(rng);
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(S);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (long s = 0; s < S; ++s)
      if (uni(rng) < 0.01) x(s) = crandn(rng) * 3.0;
    for (long s = 0; s < S; ++s) {
      cpx acc = x(s);
      for (int i = 0; i < N; ++i)
        for (int l = 0; l < params.L; ++l) {
          long lag = s - params.d - l;
          if (lag >= 0) acc += bands[i](lag) * u(i, l);
        }
      bands[0](s) = acc;
    }
    MclpSolution sol = solve_band(bands, 0, params);
    if ((sol.residual - x).norm() <= 0.05 * x.norm()) ++recovered;
  }
  std::ostringstream ss;
  ss << recovered << "/" << trials << " recovered at 5%";
  return {recovered >= 95, ss.str()};
}

struct Criterion {
  int number;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "stft round trip", criterion_stft_round_trip},
    {2, "single-source equalizer theory", criterion_single_source_theory},
    {3, "two-source equalizer and phase theory", criterion_multi_source_theory},
    {4, "minor-gcd equivalence", criterion_minor_gcd_equivalence},
    {5, "gss gradient vs finite differences", criterion_gss_gradient},
    {6, "combiner monte carlo", criterion_umvu_monte_carlo},
    {7, "zero-lag variance field", criterion_assumption_field},
    {8, "doa sharpening", criterion_doa_sharpening},
    {9, "sir ordering", criterion_sir_ordering},
    {10, "prediction residual recovery", criterion_mclp_recovery},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc - 1; ++i)
    if (std::strcmp(argv[i], "--only") == 0) only = std::atoi(argv[i + 1]);

  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.number != only) continue;
    auto t0 = Clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    double elapsed = seconds_since(t0);
    std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion "
              << c.number << ": " << c.name << " — " << outcome.detail << " ["
              << elapsed << " s]" << std::endl;
    if (!outcome.pass) ++failures;
  }
  if (failures > 0)
    std::cout << failures << " criterion(s) failed" << std::endl;
  else if (only == 0)
    std::cout << "all criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
