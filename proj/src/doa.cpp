#include "mclpsep/doa.hpp"

#include <algorithm>
#include <cmath>

#include "mclpsep/common.hpp"

namespace mclpsep {

CovarianceTracker::CovarianceTracker(int n_mics, double eta_)
    : R(Eigen::MatrixXcd::Zero(n_mics, n_mics)), eta(eta_) {
  if (eta < 0.0 || eta > 1.0)
    throw ConfigError("covariance tracker: eta must be in [0, 1]");
}

void CovarianceTracker::update(const Eigen::VectorXcd& frame) {
  if (frame.size() != R.rows())
    throw ConfigError("covariance tracker: frame length mismatch");
  R = eta * R;
  R.noalias() += (1.0 - eta) * frame * frame.adjoint();
  // keep the accumulated state exactly Hermitian
  R = 0.5 * (R + R.adjoint()).eval();
}

NoiseProjector noise_projector(const Eigen::MatrixXcd& R, int n_sources) {
  const int N = int(R.rows());
  if (R.cols() != N) throw ConfigError("noise_projector: matrix must be square");
  if (n_sources < 1 || n_sources >= N)
    throw ConfigError("noise_projector: need 1 <= K < N");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
  if (es.info() != Eigen::Success)
    throw NumericalError("noise_projector: eigendecomposition failed");
  const auto& vals = es.eigenvalues();  // ascending
  const int noise_dim = N - n_sources;

  NoiseProjector out;
  Eigen::MatrixXcd En = es.eigenvectors().leftCols(noise_dim);
  out.P = En * En.adjoint();
  double vmax = std::max(std::abs(vals(N - 1)), 1e-300);
  double gap = vals(noise_dim) - vals(noise_dim - 1);
  out.boundary_warning = gap <= 1e-9 * vmax;  // subspace split ill-defined
  return out;
}

void DoaParams::validate() const {
  if (eta < 0.0 || eta > 1.0) throw ConfigError("doa: eta must be in [0, 1]");
  if (grid_step_deg <= 0.0 || grid_step_deg > 90.0)
    throw ConfigError("doa: grid step must be in (0, 90] degrees");
  if (band_hi_hz < band_lo_hz || band_lo_hz < 0)
    throw ConfigError("doa: invalid frequency band");
  if (frame_stride < 1) throw ConfigError("doa: frame_stride must be >= 1");
  if (n_sources < 1) throw ConfigError("doa: n_sources must be >= 1");
  if (ceiling <= 0) throw ConfigError("doa: ceiling must be positive");
  if (min_peak_separation_deg < 0)
    throw ConfigError("doa: peak separation must be >= 0");
}

std::vector<double> doa_function(const std::vector<Eigen::MatrixXcd>& projectors,
                                 const std::vector<double>& omegas,
                                 const ArrayGeometry& geom,
                                 const std::vector<double>& grid,
                                 double ceiling) {
  if (projectors.size() != omegas.size())
    throw ConfigError("doa_function: projector/omega count mismatch");
  if (grid.empty()) throw ConfigError("doa_function: empty direction grid");
  std::vector<double> values(grid.size(), 0.0);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    double denom = 0.0;
    for (std::size_t j = 0; j < projectors.size(); ++j) {
      Eigen::VectorXcd a = manifold(geom, Direction(grid[t]), omegas[j]).entries;
      denom += std::real(a.dot(projectors[j] * a));
    }
    values[t] = denom > 1.0 / ceiling ? 1.0 / denom : ceiling;
  }
  return values;
}

namespace {

double circular_distance_deg(double a, double b) {
  double d = std::abs(a - b);
  d = std::fmod(d, 360.0);
  return std::min(d, 360.0 - d);
}

}  // namespace

std::vector<Direction> pick_peaks(const std::vector<double>& grid,
                                  const std::vector<double>& values,
                                  int n_peaks, double min_separation_deg,
                                  bool* shortfall) {
  if (grid.size() != values.size() || grid.empty())
    throw ConfigError("pick_peaks: grid/value size mismatch");
  if (n_peaks < 1) throw ConfigError("pick_peaks: need n_peaks >= 1");
  const int n = int(grid.size());

  struct Peak {
    int index;
    double prominence;
  };
  std::vector<Peak> peaks;
  for (int i = 0; i < n; ++i) {
    double prev = values[(i + n - 1) % n];
    double next = values[(i + 1) % n];
    if (!(values[i] > prev && values[i] > next)) continue;
    // circular prominence: walk both ways until a higher sample appears
    double left_min = values[i], right_min = values[i];
    bool left_bounded = false, right_bounded = false;
    for (int step = 1; step < n; ++step) {
      double v = values[(i + n - step) % n];
      if (v > values[i]) { left_bounded = true; break; }
      left_min = std::min(left_min, v);
    }
    for (int step = 1; step < n; ++step) {
      double v = values[(i + step) % n];
      if (v > values[i]) { right_bounded = true; break; }
      right_min = std::min(right_min, v);
    }
    double base;
    if (left_bounded && right_bounded) base = std::max(left_min, right_min);
    else if (left_bounded) base = left_min;
    else if (right_bounded) base = right_min;
    else base = std::min(left_min, right_min);  // global maximum
    peaks.push_back({i, values[i] - base});
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    return a.prominence > b.prominence;
  });

  std::vector<Direction> picked;
  for (const Peak& p : peaks) {
    if (int(picked.size()) >= n_peaks) break;
    double deg = grid[p.index] * 180.0 / kPi;
    bool clashes = false;
    for (const Direction& d : picked)
      if (circular_distance_deg(deg, d.theta * 180.0 / kPi) < min_separation_deg)
        clashes = true;
    if (!clashes) picked.push_back(Direction(grid[p.index]));
  }
  if (shortfall) *shortfall = int(picked.size()) < n_peaks;
  return picked;
}

DoaSpectrum wideband_music(const std::vector<ComplexSpectrogram>& channels,
                           const ArrayGeometry& geom, const DoaParams& params,
                           unsigned workers) {
  params.validate();
  geom.validate();
  if (channels.size() != std::size_t(geom.n_mics()))
    throw ConfigError("wideband_music: channel count must match geometry");
  const int N = geom.n_mics();
  if (params.n_sources >= N)
    throw ConfigError("wideband_music: need more microphones than sources");
  const long S = channels[0].frames();
  const int bins = channels[0].bins();
  for (const auto& ch : channels)
    if (ch.frames() != S || ch.bins() != bins)
      throw ConfigError("wideband_music: channels must have identical shape");

  const StftConfig& cfg = channels[0].config;
  const int bin_lo = std::max(1, cfg.bin_of_hz(params.band_lo_hz));
  const int bin_hi = std::min(bins - 1, cfg.bin_of_hz(params.band_hi_hz));
  if (bin_hi < bin_lo) throw ConfigError("wideband_music: empty frequency band");
  const int n_bins = bin_hi - bin_lo + 1;

  const int grid_n = std::max(4, int(std::lround(360.0 / params.grid_step_deg)));
  DoaSpectrum spec;
  spec.grid.resize(grid_n);
  for (int t = 0; t < grid_n; ++t) spec.grid[t] = 2.0 * kPi * t / grid_n;

  const long frames_used = (S + params.frame_stride - 1) / params.frame_stride;

  // Bins are grouped into a fixed number of blocks, each with its own
  // accumulator; the final block sum has a fixed order, so the result does
  // not depend on the worker count.
  const int n_blocks = std::min(n_bins, 16);
  std::vector<Eigen::MatrixXd> block_denom(
      n_blocks, Eigen::MatrixXd::Zero(frames_used, grid_n));

  parallel_for(n_blocks, workers, [&](std::size_t blk) {
    Eigen::MatrixXd& acc = block_denom[blk];
    Eigen::VectorXcd v(N);
    for (int j = int(blk); j < n_bins; j += n_blocks) {
      const int bin = bin_lo + j;
      const double omega = cfg.omega(bin);
      Eigen::MatrixXcd steer(N, grid_n);
      for (int t = 0; t < grid_n; ++t)
        steer.col(t) = manifold(geom, Direction(spec.grid[t]), omega).entries;

      CovarianceTracker tracker(N, params.eta);
      long row = 0;
      for (long s = 0; s < S; ++s) {
        for (int i = 0; i < N; ++i) v(i) = channels[i].data(s, bin);
        tracker.update(v);
        if (s % params.frame_stride != 0) continue;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(tracker.R);
        if (es.info() != Eigen::Success)
          throw NumericalError(
              "wideband_music: eigendecomposition failed at bin " +
              std::to_string(bin));
        // a^H P a with P = En En^H equals |En^H a|^2
        Eigen::MatrixXcd En = es.eigenvectors().leftCols(N - params.n_sources);
        acc.row(row) += (En.adjoint() * steer).colwise().squaredNorm();
        ++row;
      }
    }
  });

  Eigen::MatrixXd denom = Eigen::MatrixXd::Zero(frames_used, grid_n);
  for (const auto& acc : block_denom) denom += acc;

  Eigen::MatrixXd values(frames_used, grid_n);
  for (long r = 0; r < frames_used; ++r)
    for (int t = 0; t < grid_n; ++t)
      values(r, t) = denom(r, t) > 1.0 / params.ceiling ? 1.0 / denom(r, t)
                                                        : params.ceiling;

  Eigen::RowVectorXd avg = values.colwise().mean();
  double peak = avg.maxCoeff();
  if (peak > 0) avg /= peak;  // averaged first, then normalized to unit peak
  spec.averaged.assign(avg.data(), avg.data() + grid_n);
  if (params.keep_frame_values) spec.frame_values = values;

  spec.peaks = pick_peaks(spec.grid, spec.averaged, params.n_sources,
                          params.min_peak_separation_deg, &spec.peak_shortfall);
  return spec;
}

double mainlobe_halfwidth_deg(const DoaSpectrum& spectrum) {
  const int n = int(spectrum.averaged.size());
  if (n == 0) throw ConfigError("mainlobe width: empty spectrum");
  int peak = int(std::max_element(spectrum.averaged.begin(),
                                  spectrum.averaged.end()) -
                 spectrum.averaged.begin());
  const double half = spectrum.averaged[peak] * 0.5;
  int left = 0, right = 0;
  while (left < n - 1 &&
         spectrum.averaged[((peak - left - 1) % n + n) % n] >= half)
    ++left;
  while (right < n - 1 && spectrum.averaged[(peak + right + 1) % n] >= half)
    ++right;
  double width = (left + right + 1) * 360.0 / n;
  return std::min(width, 360.0);
}

}  // namespace mclpsep
