#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mclpsep/doa.hpp"
#include "mclpsep/simulate.hpp"

using namespace mclpsep;

namespace {

cpx crandn(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  return {gauss(rng), gauss(rng)};
}

double deg_error(double a_rad, double truth_rad) {
  double d = std::abs(a_rad - truth_rad) * 180.0 / kPi;
  d = std::fmod(d, 360.0);
  return std::min(d, 360.0 - d);
}

// plane-wave spectrograms: a_theta(omega) x(s, omega) plus isotropic noise
std::vector<ComplexSpectrogram> plane_wave_channels(
    const ArrayGeometry& geom, double theta, long frames, double noise_level,
    uint64_t seed) {
  StftConfig cfg;
  std::mt19937_64 rng(seed);
  const int N = geom.n_mics();
  std::vector<ComplexSpectrogram> out(N);
  for (auto& ch : out) {
    ch.config = cfg;
    ch.data = Eigen::MatrixXcd::Zero(frames, cfg.bins());
  }
  const int lo = cfg.bin_of_hz(300), hi = cfg.bin_of_hz(4000);
  for (int b = lo; b <= hi; ++b) {
    Eigen::VectorXcd a = manifold(geom, Direction(theta), cfg.omega(b)).entries;
    for (long s = 0; s < frames; ++s) {
      cpx x = crandn(rng);
      for (int i = 0; i < N; ++i)
        out[i].data(s, b) = a(i) * x + noise_level * crandn(rng);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("covariance update blends the outer product") {
  std::mt19937_64 rng(5);
  Eigen::VectorXcd v(3);
  for (int i = 0; i < 3; ++i) v(i) = crandn(rng);

  CovarianceTracker no_memory(3, 0.0);
  no_memory.update(v);
  CHECK((no_memory.R - v * v.adjoint()).norm() < 1e-14);

  CovarianceTracker frozen(3, 1.0);
  Eigen::MatrixXcd before = frozen.R;
  frozen.update(v);
  CHECK((frozen.R - before).norm() == 0.0);

  CovarianceTracker t(3, 0.9);
  for (int k = 0; k < 200; ++k) t.update(v);
  Eigen::MatrixXcd limit = v * v.adjoint();
  CHECK((t.R - limit).norm() <= 1e-6 * limit.norm());
}

TEST_CASE("covariance stays Hermitian positive semidefinite") {
  std::mt19937_64 rng(7);
  CovarianceTracker t(4, 0.8);
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXcd v(4);
    for (int i = 0; i < 4; ++i) v(i) = crandn(rng);
    t.update(v);
    CHECK((t.R - t.R.adjoint()).norm() <= 1e-12 * std::max(1.0, t.R.norm()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(t.R);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("noise projector of a degenerate spectrum is still a projector") {
  NoiseProjector p = noise_projector(Eigen::MatrixXcd::Identity(3, 3), 1);
  CHECK((p.P * p.P - p.P).norm() < 1e-10);
  CHECK((p.P - p.P.adjoint()).norm() < 1e-10);
  CHECK(std::abs(p.P.trace().real() - 2.0) < 1e-10);
  CHECK(p.boundary_warning);  // equal eigenvalues across the split
}

TEST_CASE("noise projector selects the small-eigenvalue span") {
  Eigen::MatrixXcd R = Eigen::Vector3d(5.0, 1.0, 0.1).asDiagonal();
  NoiseProjector p = noise_projector(R, 1);
  Eigen::Vector3cd e1(1, 0, 0), e2(0, 1, 0), e3(0, 0, 1);
  CHECK((p.P * e1).norm() < 1e-12);
  CHECK((p.P * e2 - e2).norm() < 1e-12);
  CHECK((p.P * e3 - e3).norm() < 1e-12);
  CHECK(!p.boundary_warning);
}

TEST_CASE("noise projector nulls the signal manifold") {
  ArrayGeometry geom = circular_array(6, 0.05);
  Eigen::VectorXcd a = manifold(geom, Direction(1.0), 1.5).entries;
  Eigen::MatrixXcd R =
      a * a.adjoint() + 0.01 * Eigen::MatrixXcd::Identity(6, 6);
  NoiseProjector p = noise_projector(R, 1);
  CHECK((p.P * a).norm() <= 1e-6 * a.norm());
}

TEST_CASE("projector is idempotent and Hermitian on random covariances") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXcd B(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) B(i, j) = crandn(rng);
    Eigen::MatrixXcd R = B * B.adjoint();
    NoiseProjector p = noise_projector(R, 2);
    CHECK((p.P * p.P - p.P).norm() <= 1e-10);
    CHECK((p.P - p.P.adjoint()).norm() <= 1e-10);
    CHECK(std::abs(p.P.trace().real() - 3.0) <= 1e-10);
  }
}

TEST_CASE("doa function peaks at the manifold direction") {
  ArrayGeometry geom = circular_array(8, 0.05);
  const double theta0 = kPi / 2;
  std::vector<Eigen::MatrixXcd> projectors;
  std::vector<double> omegas;
  for (double omega : {0.6, 0.9, 1.2, 1.5}) {
    Eigen::VectorXcd a = manifold(geom, Direction(theta0), omega).entries;
    Eigen::MatrixXcd R =
        a * a.adjoint() + 1e-4 * Eigen::MatrixXcd::Identity(8, 8);
    projectors.push_back(noise_projector(R, 1).P);
    omegas.push_back(omega);
  }
  std::vector<double> grid(360);
  for (int t = 0; t < 360; ++t) grid[t] = 2.0 * kPi * t / 360.0;
  std::vector<double> d = doa_function(projectors, omegas, geom, grid);
  int argmax = int(std::max_element(d.begin(), d.end()) - d.begin());
  CHECK(deg_error(grid[argmax], theta0) <= 1.0);
}

TEST_CASE("isotropic noise gives a flat wideband spectrum") {
  ArrayGeometry geom = circular_array(8, 0.05);
  StftConfig cfg;
  std::mt19937_64 rng(13);
  std::vector<ComplexSpectrogram> channels(8);
  for (auto& ch : channels) {
    ch.config = cfg;
    ch.data.resize(250, cfg.bins());
  }
  for (long s = 0; s < 250; ++s)
    for (int b = 0; b < cfg.bins(); ++b)
      for (auto& ch : channels) ch.data(s, b) = crandn(rng);

  DoaParams params;
  params.n_sources = 1;
  params.frame_stride = 8;
  DoaSpectrum spec = wideband_music(channels, geom, params);
  double hi = *std::max_element(spec.averaged.begin(), spec.averaged.end());
  double lo = *std::min_element(spec.averaged.begin(), spec.averaged.end());
  CHECK(hi / lo <= 1.05);
}

TEST_CASE("single plane wave is located within a degree") {
  ArrayGeometry geom = circular_array(8, 0.05);
  auto channels = plane_wave_channels(geom, kPi / 2, 120, 0.0, 17);
  DoaParams params;
  params.n_sources = 1;
  params.frame_stride = 4;
  DoaSpectrum spec = wideband_music(channels, geom, params);
  REQUIRE(!spec.peaks.empty());
  CHECK(deg_error(spec.peaks[0].theta, kPi / 2) <= 1.0);
}

TEST_CASE("two plane waves give two peaks near the truth") {
  ArrayGeometry geom = circular_array(8, 0.05);
  StftConfig cfg;
  std::mt19937_64 rng(19);
  const double t1 = kPi / 2, t2 = 1.75 * kPi;
  std::vector<ComplexSpectrogram> channels(8);
  for (auto& ch : channels) {
    ch.config = cfg;
    ch.data = Eigen::MatrixXcd::Zero(160, cfg.bins());
  }
  const int lo = cfg.bin_of_hz(300), hi = cfg.bin_of_hz(4000);
  for (int b = lo; b <= hi; ++b) {
    Eigen::VectorXcd a1 = manifold(geom, Direction(t1), cfg.omega(b)).entries;
    Eigen::VectorXcd a2 = manifold(geom, Direction(t2), cfg.omega(b)).entries;
    for (long s = 0; s < 160; ++s) {
      cpx x1 = crandn(rng), x2 = crandn(rng);
      for (int i = 0; i < 8; ++i)
        channels[i].data(s, b) =
            a1(i) * x1 + a2(i) * x2 + 0.01 * crandn(rng);
    }
  }
  DoaParams params;
  params.n_sources = 2;
  params.frame_stride = 4;
  DoaSpectrum spec = wideband_music(channels, geom, params);
  REQUIRE(spec.peaks.size() == 2);
  double e1 = std::min(deg_error(spec.peaks[0].theta, t1),
                       deg_error(spec.peaks[1].theta, t1));
  double e2 = std::min(deg_error(spec.peaks[0].theta, t2),
                       deg_error(spec.peaks[1].theta, t2));
  CHECK(e1 <= 2.0);
  CHECK(e2 <= 2.0);
}

TEST_CASE("peak picking ranks prominences and respects separation") {
  std::vector<double> grid(360);
  for (int t = 0; t < 360; ++t) grid[t] = 2.0 * kPi * t / 360.0;

  // single lobe: its argmax
  std::vector<double> single(360);
  for (int t = 0; t < 360; ++t)
    single[t] = std::exp(std::cos(grid[t] - 1.0) * 4.0);
  bool shortfall = true;
  auto peaks = pick_peaks(grid, single, 1, 10.0, &shortfall);
  REQUIRE(peaks.size() == 1);
  CHECK(!shortfall);
  CHECK(deg_error(peaks[0].theta, 1.0) <= 0.5);

  // two circular bumps at 30 and 200 degrees
  std::vector<double> two(360);
  const double c1 = 30.0 * kPi / 180.0, c2 = 200.0 * kPi / 180.0;
  for (int t = 0; t < 360; ++t)
    two[t] = std::exp(std::cos(grid[t] - c1) * 14.0) +
             0.8 * std::exp(std::cos(grid[t] - c2) * 14.0);
  peaks = pick_peaks(grid, two, 2, 10.0, &shortfall);
  REQUIRE(peaks.size() == 2);
  CHECK(!shortfall);
  CHECK(deg_error(peaks[0].theta, c1) <= 1.0);  // taller bump ranks first
  CHECK(deg_error(peaks[1].theta, c2) <= 1.0);

  // flat spectrum: nothing to pick
  std::vector<double> flat(360, 1.0);
  peaks = pick_peaks(grid, flat, 2, 10.0, &shortfall);
  CHECK(peaks.empty());
  CHECK(shortfall);
}

TEST_CASE("averaging over frames stabilizes the estimate") {
  ArrayGeometry geom = circular_array(8, 0.05);
  const double theta0 = kPi / 2;
  std::vector<double> single_frame_err, averaged_err;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto channels = plane_wave_channels(geom, theta0, 40, 0.7, 100 + seed);
    DoaParams params;
    params.n_sources = 1;
    params.frame_stride = 1;
    params.keep_frame_values = true;
    DoaSpectrum spec = wideband_music(channels, geom, params);

    Eigen::Index mid = spec.frame_values.rows() / 2;
    Eigen::Index arg_single;
    spec.frame_values.row(mid).maxCoeff(&arg_single);
    single_frame_err.push_back(deg_error(spec.grid[arg_single], theta0));
    int arg_avg = int(std::max_element(spec.averaged.begin(),
                                       spec.averaged.end()) -
                      spec.averaged.begin());
    averaged_err.push_back(deg_error(spec.grid[arg_avg], theta0));
  }
  auto variance = [](const std::vector<double>& v) {
    double m = 0, s = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s += (x - m) * (x - m);
    return s / v.size();
  };
  CHECK(variance(averaged_err) <= variance(single_frame_err));
}

TEST_CASE("rejects inconsistent inputs") {
  CHECK_THROWS_AS(CovarianceTracker(3, 1.5), ConfigError);
  CHECK_THROWS_AS(noise_projector(Eigen::MatrixXcd::Identity(3, 3), 3),
                  ConfigError);
  CHECK_THROWS_AS(noise_projector(Eigen::MatrixXcd::Identity(3, 3), 0),
                  ConfigError);
  DoaParams bad;
  bad.eta = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  DoaParams band;
  band.band_lo_hz = 5000;
  band.band_hi_hz = 300;
  CHECK_THROWS_AS(band.validate(), ConfigError);
}
