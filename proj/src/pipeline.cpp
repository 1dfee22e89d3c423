#include "mclpsep/pipeline.hpp"

#include <chrono>

namespace mclpsep {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<ComplexSpectrogram> analyze_all(
    const std::vector<std::vector<double>>& mics, const StftConfig& stft) {
  if (mics.empty()) throw ConfigError("pipeline: no input channels");
  std::vector<ComplexSpectrogram> specs;
  specs.reserve(mics.size());
  for (const auto& ch : mics) specs.push_back(analyze(ch, stft));
  return specs;
}

}  // namespace

SeparationOutput separate(const std::vector<std::vector<double>>& mics,
                          const ArrayGeometry& geom,
                          const PipelineConfig& cfg) {
  cfg.validate();
  geom.validate();
  if (int(mics.size()) != geom.n_mics())
    throw ConfigError("pipeline: channel count must match geometry");

  SeparationOutput out;
  std::vector<ComplexSpectrogram> specs = analyze_all(mics, cfg.stft);

  auto t0 = std::chrono::steady_clock::now();
  std::vector<ComplexSpectrogram> derev =
      cfg.skip_mclp ? specs : dereverb_all_refs(specs, cfg.mclp, cfg.workers);
  out.seconds_mclp = cfg.skip_mclp ? 0.0 : seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  DoaParams doa_params = cfg.doa;
  doa_params.n_sources = cfg.n_sources;
  DoaSpectrum doa = wideband_music(derev, geom, doa_params, cfg.workers);
  out.seconds_doa = seconds_since(t0);
  out.doa_shortfall = doa.peak_shortfall;
  for (const Direction& d : doa.peaks)
    out.doa_peaks_deg.push_back(d.theta * 180.0 / kPi);
  if (doa.peaks.empty())
    throw NumericalError("pipeline: no direction peaks found");

  t0 = std::chrono::steady_clock::now();
  GssResult gss = gss_solve(derev, doa.peaks, cfg.gss, geom, cfg.workers);
  out.seconds_gss = seconds_since(t0);
  out.gss_underflow = gss.step_underflow_warning;

  t0 = std::chrono::steady_clock::now();
  out.sources.resize(gss.sources.size());
  for (std::size_t k = 0; k < gss.sources.size(); ++k) {
    if (cfg.skip_postfilter) {
      out.sources[k] = synthesize(gss.sources[k]);
      continue;
    }
    Eigen::MatrixXd variances =
        postfilter_variances(derev, gss, int(k), doa.peaks, geom);
    ComplexSpectrogram filtered =
        apply_postfilter(gss.sources[k], variances, cfg.postfilter);
    out.sources[k] = synthesize(filtered);
  }
  if (!cfg.skip_postfilter) out.seconds_postfilter = seconds_since(t0);
  return out;
}

std::vector<std::vector<double>> dereverb_signals(
    const std::vector<std::vector<double>>& mics, const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<ComplexSpectrogram> specs = analyze_all(mics, cfg.stft);
  std::vector<ComplexSpectrogram> derev =
      dereverb_all_refs(specs, cfg.mclp, cfg.workers);
  std::vector<std::vector<double>> out(derev.size());
  for (std::size_t r = 0; r < derev.size(); ++r) out[r] = synthesize(derev[r]);
  return out;
}

std::vector<double> dereverb_reference(
    const std::vector<std::vector<double>>& mics, const PipelineConfig& cfg,
    int reference) {
  cfg.validate();
  std::vector<ComplexSpectrogram> specs = analyze_all(mics, cfg.stft);
  std::vector<ComplexSpectrogram> derev =
      dereverb_refs(specs, cfg.mclp, {reference}, cfg.workers);
  return synthesize(derev[0]);
}

DoaSpectrum doa_of_signals(const std::vector<std::vector<double>>& mics,
                           const ArrayGeometry& geom,
                           const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<ComplexSpectrogram> specs = analyze_all(mics, cfg.stft);
  std::vector<ComplexSpectrogram> derev =
      cfg.skip_mclp ? specs : dereverb_all_refs(specs, cfg.mclp, cfg.workers);
  DoaParams doa_params = cfg.doa;
  doa_params.n_sources = cfg.n_sources;
  return wideband_music(derev, geom, doa_params, cfg.workers);
}

}  // namespace mclpsep
