#pragma once

#include <cstdint>
#include <string>

#include "mclpsep/doa.hpp"
#include "mclpsep/geometry.hpp"
#include "mclpsep/gss.hpp"
#include "mclpsep/mclp.hpp"
#include "mclpsep/postfilter.hpp"
#include "mclpsep/simulate.hpp"
#include "mclpsep/stft.hpp"

namespace mclpsep {

// Every parameter of the processing chain, keyed in config files by the
// usual symbol names (d, L, M, alpha, lambda, epsilon, eta, gamma). Unknown
// keys are rejected; missing keys take the defaults below.
struct PipelineConfig {
  StftConfig stft;
  MclpParams mclp;
  DoaParams doa;
  GssParams gss;
  PostfilterParams postfilter;
  int n_sources = 1;
  bool skip_mclp = false;
  bool skip_postfilter = false;
  unsigned workers = 0;  // 0 = all cores
  uint64_t seed = 0;

  void validate() const;
};

PipelineConfig pipeline_config_from_json(const std::string& text);
PipelineConfig load_pipeline_config(const std::string& path);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

ArrayGeometry geometry_from_json(const std::string& text);
ArrayGeometry load_geometry(const std::string& path);

// A renderable scene plus the metadata needed for ground-truth output.
struct SceneSpec {
  SceneConfig scene;
  std::vector<double> source_gains;
  uint64_t seed = 0;
};

SceneSpec scene_from_json(const std::string& text, const StftConfig& stft);
SceneSpec load_scene(const std::string& path, const StftConfig& stft);

}  // namespace mclpsep
