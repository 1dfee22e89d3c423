#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mclpsep/geometry.hpp"
#include "mclpsep/stft.hpp"

namespace mclpsep {

// Recursive covariance estimate R = (1 - eta) v v^H + eta R_prev for one
// frequency bin; eta is the forgetting factor.
struct CovarianceTracker {
  Eigen::MatrixXcd R;
  double eta = 0.95;

  CovarianceTracker(int n_mics, double eta_);
  void update(const Eigen::VectorXcd& frame);
};

struct NoiseProjector {
  Eigen::MatrixXcd P;  // Hermitian idempotent, rank N - K
  bool boundary_warning = false;  // eigenvalue multiplicity across the split
};

// Projector onto the span of the N-K smallest-eigenvalue eigenvectors.
NoiseProjector noise_projector(const Eigen::MatrixXcd& R, int n_sources);

struct DoaParams {
  double eta = 0.95;
  double grid_step_deg = 1.0;
  double band_lo_hz = 300.0;
  double band_hi_hz = 4000.0;
  double min_peak_separation_deg = 10.0;
  int frame_stride = 1;     // evaluate the spectrum every this many frames
  double ceiling = 1e12;    // clamp for a vanishing denominator
  int n_sources = 1;
  bool keep_frame_values = false;

  void validate() const;
};

struct DoaSpectrum {
  std::vector<double> grid;          // theta values in radians
  std::vector<double> averaged;      // time-averaged, unit peak
  Eigen::MatrixXd frame_values;      // per evaluated frame, optional
  std::vector<Direction> peaks;      // sorted by prominence
  bool peak_shortfall = false;       // fewer local maxima than requested
};

// Narrowband null spectra combined across bins for one frame:
// D(theta) = 1 / sum_omega a^H P a. projectors[j] pairs with omegas[j].
std::vector<double> doa_function(const std::vector<Eigen::MatrixXcd>& projectors,
                                 const std::vector<double>& omegas,
                                 const ArrayGeometry& geom,
                                 const std::vector<double>& grid,
                                 double ceiling = 1e12);

// Local maxima ranked by circular prominence, kept apart by the minimum
// separation. Returns fewer than requested with the shortfall flag set when
// the spectrum does not carry enough peaks.
std::vector<Direction> pick_peaks(const std::vector<double>& grid,
                                  const std::vector<double>& values,
                                  int n_peaks, double min_separation_deg,
                                  bool* shortfall = nullptr);

// Full driver: sequential covariance updates per bin, per-frame subspace
// spectra averaged over time, then normalized and peak-picked.
DoaSpectrum wideband_music(const std::vector<ComplexSpectrogram>& channels,
                           const ArrayGeometry& geom, const DoaParams& params,
                           unsigned workers = 0);

// Width (degrees) of the half-power region around the spectrum's peak.
double mainlobe_halfwidth_deg(const DoaSpectrum& spectrum);

}  // namespace mclpsep
