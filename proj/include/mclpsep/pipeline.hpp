#pragma once

#include <vector>

#include "mclpsep/config.hpp"

namespace mclpsep {

struct SeparationOutput {
  std::vector<std::vector<double>> sources;  // K time signals
  std::vector<double> doa_peaks_deg;
  bool doa_shortfall = false;
  bool gss_underflow = false;
  double seconds_mclp = 0.0;
  double seconds_doa = 0.0;
  double seconds_gss = 0.0;
  double seconds_postfilter = 0.0;
};

// The full chain: prediction-based dereverberation over every reference
// (unless skipped), wideband subspace direction estimation, geometric
// separation, then the variance-driven shrinkage post-filter (unless
// skipped).
SeparationOutput separate(const std::vector<std::vector<double>>& mics,
                          const ArrayGeometry& geom,
                          const PipelineConfig& cfg);

// Dereverberates every channel (one run per reference choice).
std::vector<std::vector<double>> dereverb_signals(
    const std::vector<std::vector<double>>& mics, const PipelineConfig& cfg);

// Dereverberated signal for a single reference channel.
std::vector<double> dereverb_reference(
    const std::vector<std::vector<double>>& mics, const PipelineConfig& cfg,
    int reference);

// Time-averaged direction spectrum of a multichannel recording, with the
// dereverberation front end applied unless the config skips it.
DoaSpectrum doa_of_signals(const std::vector<std::vector<double>>& mics,
                           const ArrayGeometry& geom,
                           const PipelineConfig& cfg);

}  // namespace mclpsep
