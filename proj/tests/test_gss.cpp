#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mclpsep/gss.hpp"
#include "mclpsep/metrics.hpp"

using namespace mclpsep;

namespace {

cpx crandn(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  return {gauss(rng), gauss(rng)};
}

GssState random_state(std::mt19937_64& rng, int K, int N, double gamma) {
  GssState s;
  s.gamma = gamma;
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
  return s;
}

// independent straight-line evaluation of the separation cost
double cost_by_hand(const GssState& s) {
  const long K = s.W.rows(), N = s.W.cols();
  Eigen::MatrixXcd R_S = s.W * s.R_in * s.W.adjoint();
  double off = 0.0;
  for (long i = 0; i < K; ++i)
    for (long j = 0; j < K; ++j)
      if (i != j) off += std::norm(R_S(i, j));
  double geo = 0.0;
  for (long i = 0; i < K; ++i)
    for (long j = 0; j < K; ++j) {
      cpx v = -(i == j ? cpx(1, 0) : cpx(0, 0));
      for (long n = 0; n < N; ++n) v += s.W(i, n) * s.A(n, j);
      geo += std::norm(v);
    }
  return 0.5 * s.gamma * off + 0.5 * geo;
}

Eigen::MatrixXcd fd_gradient(const GssState& s, double step) {
  Eigen::MatrixXcd g(s.W.rows(), s.W.cols());
  for (long i = 0; i < s.W.rows(); ++i)
    for (long j = 0; j < s.W.cols(); ++j) {
      GssState plus = s, minus = s;
      plus.W(i, j) += step;
      minus.W(i, j) -= step;
      double d_re = (gss_cost(plus) - gss_cost(minus)) / (2 * step);
      plus = s;
      minus = s;
      plus.W(i, j) += cpx(0, step);
      minus.W(i, j) -= cpx(0, step);
      double d_im = (gss_cost(plus) - gss_cost(minus)) / (2 * step);
      g(i, j) = cpx(d_re, d_im);
    }
  return g;
}

}  // namespace

TEST_CASE("cost vanishes at the pseudo-inverse on uncorrelated sources") {
  std::mt19937_64 rng(3);
  const int N = 6, K = 2;
  Eigen::MatrixXcd A(N, K);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < K; ++j) A(i, j) = crandn(rng);
  Eigen::MatrixXcd D = Eigen::Vector2d(1.0, 2.5).asDiagonal();
  GssState s;
  s.gamma = 0.8;
  s.A = A;
  s.R_in = A * D * A.adjoint();
  s.W = (A.adjoint() * A).inverse() * A.adjoint();
  CHECK(gss_cost(s) <= 1e-8);
  CHECK(gss_gradient(s).norm() <= 1e-8);
}

TEST_CASE("zero gamma leaves the geometric penalty only") {
  std::mt19937_64 rng(5);
  GssState s = random_state(rng, 2, 5, 0.0);
  Eigen::MatrixXcd geo = s.W * s.A - Eigen::MatrixXcd::Identity(2, 2);
  CHECK(gss_cost(s) == doctest::Approx(0.5 * geo.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("cost matches an independent reimplementation") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    GssState s = random_state(rng, 2, 5, 0.6);
    CHECK(gss_cost(s) == doctest::Approx(cost_by_hand(s)).epsilon(1e-12));
  }
}

TEST_CASE("quadratic-only gradient is the displacement") {
  std::mt19937_64 rng(9);
  const int K = 3;
  GssState s;
  s.gamma = 0.0;
  s.A = Eigen::MatrixXcd::Identity(K, K);
  s.R_in = Eigen::MatrixXcd::Identity(K, K);
  Eigen::MatrixXcd delta(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) delta(i, j) = 0.1 * crandn(rng);
  s.W = Eigen::MatrixXcd::Identity(K, K) + delta;
  CHECK((gss_gradient(s) - delta).norm() <= 1e-12);
}

TEST_CASE("identity demixing of uncorrelated inputs is a fixed point") {
  const int K = 3;
  GssState s;
  s.gamma = 0.9;
  s.A = Eigen::MatrixXcd::Identity(K, K);
  s.R_in = Eigen::Vector3d(1.0, 2.0, 0.5).asDiagonal();
  s.W = Eigen::MatrixXcd::Identity(K, K);
  CHECK(gss_cost(s) <= 1e-14);
  CHECK(gss_gradient(s).norm() <= 1e-14);
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int t = 0; t < 25; ++t) {
    GssState s = random_state(rng, 2, 5, 0.7);
    Eigen::MatrixXcd fd = fd_gradient(s, 1e-5);
    Eigen::MatrixXcd analytic = gss_gradient(s);
    worst = std::max(worst, (fd - analytic).norm() / analytic.norm());
  }
  CHECK(worst <= 1e-5);
}

namespace {

// anechoic uncorrelated mixtures for the solver-level tests
struct AnechoicScene {
  std::vector<ComplexSpectrogram> mixture;
  std::vector<ComplexSpectrogram> sources;
  std::vector<Direction> directions;
  ArrayGeometry geom;
};

AnechoicScene make_anechoic(std::mt19937_64& rng, int N, long frames,
                            std::vector<double> thetas) {
  AnechoicScene sc;
  sc.geom = circular_array(N, 0.05);
  StftConfig cfg;
  const int K = int(thetas.size());
  for (double t : thetas) sc.directions.push_back(Direction(t));
  sc.sources.resize(K);
  for (auto& s : sc.sources) {
    s.config = cfg;
    s.data = Eigen::MatrixXcd::Zero(frames, cfg.bins());
  }
  sc.mixture.resize(N);
  for (auto& ch : sc.mixture) {
    ch.config = cfg;
    ch.data = Eigen::MatrixXcd::Zero(frames, cfg.bins());
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int lo = cfg.bin_of_hz(200), hi = cfg.bin_of_hz(6000);
  for (int b = lo; b <= hi; ++b) {
    std::vector<Eigen::VectorXcd> a;
    for (int k = 0; k < K; ++k)
      a.push_back(manifold(sc.geom, sc.directions[k], cfg.omega(b)).entries);
    for (long s = 0; s < frames; ++s)
      for (int k = 0; k < K; ++k) {
        cpx x = uni(rng) < 0.35 ? crandn(rng) : cpx(0, 0);
        sc.sources[k].data(s, b) = x;
        for (int i = 0; i < N; ++i) sc.mixture[i].data(s, b) += a[k](i) * x;
      }
  }
  return sc;
}

}  // namespace

TEST_CASE("anechoic two-source mixture separates cleanly") {
  std::mt19937_64 rng(13);
  AnechoicScene sc = make_anechoic(rng, 8, 220, {kPi / 2, 1.75 * kPi});
  GssParams params;
  params.gamma = 0.5;
  GssResult res = gss_solve(sc.mixture, sc.directions, params, sc.geom);

  std::vector<std::vector<double>> estimates, references;
  for (int k = 0; k < 2; ++k) {
    estimates.push_back(synthesize(res.sources[k]));
    references.push_back(synthesize(sc.sources[k]));
  }
  SirResult sir_out = sir(estimates, references, 16);
  REQUIRE(sir_out.defined[0]);
  REQUIRE(sir_out.defined[1]);
  CHECK(sir_out.db[0] >= 30.0);
  CHECK(sir_out.db[1] >= 30.0);
}

TEST_CASE("single source converges to a distortionless beamformer") {
  std::mt19937_64 rng(17);
  AnechoicScene sc = make_anechoic(rng, 6, 150, {1.0});
  GssParams params;
  params.gamma = 0.5;
  GssResult res = gss_solve(sc.mixture, sc.directions, params, sc.geom);
  const StftConfig cfg = sc.mixture[0].config;
  for (int b = cfg.bin_of_hz(300); b <= cfg.bin_of_hz(4000); b += 10) {
    cpx wa = (res.demixing[b] * res.steering[b])(0, 0);
    CHECK(std::abs(wa - cpx(1, 0)) <= 1e-4);
  }
}

TEST_CASE("global input scaling keeps the distortionless constraint") {
  std::mt19937_64 rng(19);
  AnechoicScene sc = make_anechoic(rng, 6, 150, {0.5, 3.5});
  GssParams params;
  GssResult base = gss_solve(sc.mixture, sc.directions, params, sc.geom);

  std::vector<ComplexSpectrogram> scaled = sc.mixture;
  for (auto& ch : scaled) ch.data *= 10.0;
  GssResult big = gss_solve(scaled, sc.directions, params, sc.geom);

  const StftConfig cfg = sc.mixture[0].config;
  for (int b = cfg.bin_of_hz(300); b <= cfg.bin_of_hz(4000); b += 25) {
    Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(2, 2);
    double geo_base = (base.demixing[b] * base.steering[b] - I).squaredNorm();
    double geo_big = (big.demixing[b] * big.steering[b] - I).squaredNorm();
    CHECK(std::abs(geo_base - geo_big) <= 1e-9);
    CHECK((base.demixing[b] - big.demixing[b]).norm() <= 1e-9);
  }
}

TEST_CASE("pathological step sizes fall back to the best iterate") {
  std::mt19937_64 rng(23);
  AnechoicScene sc = make_anechoic(rng, 4, 60, {1.0, 4.0});
  GssParams params;
  params.step_scale = 1e30;  // forces repeated halving until underflow
  params.max_steps = 500;
  GssResult res = gss_solve(sc.mixture, sc.directions, params, sc.geom);
  CHECK(res.step_underflow_warning);
  for (const auto& W : res.demixing) CHECK(W.allFinite());
}

TEST_CASE("rejects invalid setups") {
  std::mt19937_64 rng(29);
  AnechoicScene sc = make_anechoic(rng, 4, 60, {1.0, 4.0});
  GssParams params;
  std::vector<Direction> dup = {Direction(1.0), Direction(1.0)};
  CHECK_THROWS_AS(gss_solve(sc.mixture, dup, params, sc.geom), ConfigError);
  std::vector<Direction> too_many = {Direction(0.5), Direction(1.5),
                                     Direction(2.5), Direction(3.5)};
  CHECK_THROWS_AS(gss_solve(sc.mixture, too_many, params, sc.geom),
                  ConfigError);
}
