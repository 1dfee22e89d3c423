#include "mclpsep/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "mclpsep/wav.hpp"

namespace mclpsep {

using nlohmann::json;

namespace {

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(what + ": invalid JSON: " + e.what());
  }
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(context + ": unknown key '" + it.key() + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback,
         const std::string& context) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(context + ": bad value for '" + key + "'");
  }
}

}  // namespace

void PipelineConfig::validate() const {
  stft.validate();
  mclp.validate();
  doa.validate();
  gss.validate();
  postfilter.validate();
  if (n_sources < 1) throw ConfigError("pipeline: n_sources must be >= 1");
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
  json j = parse(text, "pipeline config");
  check_keys(j, {"stft", "mclp", "doa", "gss", "postfilter", "pipeline"},
             "pipeline config");
  PipelineConfig cfg;

  json s = j.value("stft", json::object());
  check_keys(s, {"window_length", "hop", "sample_rate"}, "stft");
  cfg.stft.window_length = get_or(s, "window_length", cfg.stft.window_length, "stft");
  cfg.stft.hop = get_or(s, "hop", cfg.stft.hop, "stft");
  cfg.stft.sample_rate = get_or(s, "sample_rate", cfg.stft.sample_rate, "stft");

  json m = j.value("mclp", json::object());
  check_keys(m,
             {"d", "L", "M", "alpha", "lambda", "epsilon", "max_iters",
              "rel_tol", "band_lo_hz", "band_hi_hz"},
             "mclp");
  cfg.mclp.d = get_or(m, "d", cfg.mclp.d, "mclp");
  cfg.mclp.L = get_or(m, "L", cfg.mclp.L, "mclp");
  cfg.mclp.M = get_or(m, "M", cfg.mclp.M, "mclp");
  cfg.mclp.alpha = get_or(m, "alpha", cfg.mclp.alpha, "mclp");
  cfg.mclp.lambda = get_or(m, "lambda", cfg.mclp.lambda, "mclp");
  cfg.mclp.epsilon = get_or(m, "epsilon", cfg.mclp.epsilon, "mclp");
  cfg.mclp.max_iters = get_or(m, "max_iters", cfg.mclp.max_iters, "mclp");
  cfg.mclp.rel_tol = get_or(m, "rel_tol", cfg.mclp.rel_tol, "mclp");
  cfg.mclp.band_lo_hz = get_or(m, "band_lo_hz", cfg.mclp.band_lo_hz, "mclp");
  cfg.mclp.band_hi_hz = get_or(m, "band_hi_hz", cfg.mclp.band_hi_hz, "mclp");

  json d = j.value("doa", json::object());
  check_keys(d,
             {"eta", "grid_step_deg", "band_lo_hz", "band_hi_hz",
              "min_peak_separation_deg", "frame_stride", "ceiling"},
             "doa");
  cfg.doa.eta = get_or(d, "eta", cfg.doa.eta, "doa");
  cfg.doa.grid_step_deg = get_or(d, "grid_step_deg", cfg.doa.grid_step_deg, "doa");
  cfg.doa.band_lo_hz = get_or(d, "band_lo_hz", cfg.doa.band_lo_hz, "doa");
  cfg.doa.band_hi_hz = get_or(d, "band_hi_hz", cfg.doa.band_hi_hz, "doa");
  cfg.doa.min_peak_separation_deg =
      get_or(d, "min_peak_separation_deg", cfg.doa.min_peak_separation_deg, "doa");
  cfg.doa.frame_stride = get_or(d, "frame_stride", cfg.doa.frame_stride, "doa");
  cfg.doa.ceiling = get_or(d, "ceiling", cfg.doa.ceiling, "doa");

  json g = j.value("gss", json::object());
  check_keys(g, {"gamma", "max_steps", "grad_tol", "step_scale"}, "gss");
  cfg.gss.gamma = get_or(g, "gamma", cfg.gss.gamma, "gss");
  cfg.gss.max_steps = get_or(g, "max_steps", cfg.gss.max_steps, "gss");
  cfg.gss.grad_tol = get_or(g, "grad_tol", cfg.gss.grad_tol, "gss");
  cfg.gss.step_scale = get_or(g, "step_scale", cfg.gss.step_scale, "gss");

  json p = j.value("postfilter", json::object());
  check_keys(p, {"alpha"}, "postfilter");
  cfg.postfilter.alpha = get_or(p, "alpha", cfg.postfilter.alpha, "postfilter");

  json pl = j.value("pipeline", json::object());
  check_keys(pl, {"n_sources", "skip_mclp", "skip_postfilter", "workers", "seed"},
             "pipeline");
  cfg.n_sources = get_or(pl, "n_sources", cfg.n_sources, "pipeline");
  cfg.skip_mclp = get_or(pl, "skip_mclp", cfg.skip_mclp, "pipeline");
  cfg.skip_postfilter = get_or(pl, "skip_postfilter", cfg.skip_postfilter, "pipeline");
  cfg.workers = get_or(pl, "workers", cfg.workers, "pipeline");
  cfg.seed = get_or(pl, "seed", cfg.seed, "pipeline");

  cfg.doa.n_sources = cfg.n_sources;
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  return pipeline_config_from_json(slurp(path));
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
  json j;
  j["stft"] = {{"window_length", cfg.stft.window_length},
               {"hop", cfg.stft.hop},
               {"sample_rate", cfg.stft.sample_rate}};
  j["mclp"] = {{"d", cfg.mclp.d},           {"L", cfg.mclp.L},
               {"M", cfg.mclp.M},           {"alpha", cfg.mclp.alpha},
               {"lambda", cfg.mclp.lambda}, {"epsilon", cfg.mclp.epsilon},
               {"max_iters", cfg.mclp.max_iters},
               {"rel_tol", cfg.mclp.rel_tol},
               {"band_lo_hz", cfg.mclp.band_lo_hz},
               {"band_hi_hz", cfg.mclp.band_hi_hz}};
  j["doa"] = {{"eta", cfg.doa.eta},
              {"grid_step_deg", cfg.doa.grid_step_deg},
              {"band_lo_hz", cfg.doa.band_lo_hz},
              {"band_hi_hz", cfg.doa.band_hi_hz},
              {"min_peak_separation_deg", cfg.doa.min_peak_separation_deg},
              {"frame_stride", cfg.doa.frame_stride},
              {"ceiling", cfg.doa.ceiling}};
  j["gss"] = {{"gamma", cfg.gss.gamma},
              {"max_steps", cfg.gss.max_steps},
              {"grad_tol", cfg.gss.grad_tol},
              {"step_scale", cfg.gss.step_scale}};
  j["postfilter"] = {{"alpha", cfg.postfilter.alpha}};
  j["pipeline"] = {{"n_sources", cfg.n_sources},
                   {"skip_mclp", cfg.skip_mclp},
                   {"skip_postfilter", cfg.skip_postfilter},
                   {"workers", cfg.workers},
                   {"seed", cfg.seed}};
  return j.dump(2);
}

namespace {

ArrayGeometry geometry_from(const json& j) {
  check_keys(j,
             {"preset", "n_mics", "radius", "positions", "speed_of_sound",
              "sample_rate"},
             "geometry");
  double c = get_or(j, "speed_of_sound", 343.0, "geometry");
  double fs = get_or(j, "sample_rate", 16000.0, "geometry");
  if (j.contains("preset")) {
    std::string preset = j.at("preset").get<std::string>();
    if (preset != "circular")
      throw ConfigError("geometry: unknown preset '" + preset + "'");
    int n = get_or(j, "n_mics", 8, "geometry");
    double radius = get_or(j, "radius", 0.05, "geometry");
    return circular_array(n, radius, c, fs);
  }
  if (!j.contains("positions"))
    throw ConfigError("geometry: need a preset or explicit positions");
  ArrayGeometry g;
  g.speed_of_sound = c;
  g.sample_rate = fs;
  for (const auto& p : j.at("positions")) {
    if (!p.is_array() || (p.size() != 2 && p.size() != 3))
      throw ConfigError("geometry: positions must be [x, y] or [x, y, z]");
    double x = p.at(0).get<double>();
    double y = p.at(1).get<double>();
    double z = p.size() == 3 ? p.at(2).get<double>() : 0.0;
    g.positions.push_back({x, y, z});
  }
  // positions are given in meters relative to the array center; re-center
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : g.positions) centroid += p;
  centroid /= double(g.positions.size());
  for (auto& p : g.positions) p -= centroid;
  g.validate();
  return g;
}

}  // namespace

ArrayGeometry geometry_from_json(const std::string& text) {
  return geometry_from(parse(text, "geometry"));
}

ArrayGeometry load_geometry(const std::string& path) {
  return geometry_from_json(slurp(path));
}

SceneSpec scene_from_json(const std::string& text, const StftConfig& stft) {
  json j = parse(text, "scene");
  check_keys(j, {"seed", "duration_s", "geometry", "sources", "dcir"}, "scene");
  SceneSpec spec;
  spec.seed = get_or<uint64_t>(j, "seed", 1, "scene");
  double duration = get_or(j, "duration_s", 5.0, "scene");
  if (duration <= 0) throw ConfigError("scene: duration must be positive");

  if (!j.contains("geometry")) throw ConfigError("scene: missing geometry");
  spec.scene.geometry = geometry_from(j.at("geometry"));
  const int n_mics = spec.scene.geometry.n_mics();
  const long n_samples = long(duration * stft.sample_rate);

  if (!j.contains("sources") || !j.at("sources").is_array())
    throw ConfigError("scene: missing sources array");
  int k_index = 0;
  for (const auto& src : j.at("sources")) {
    check_keys(src,
               {"theta", "kind", "seed", "band_lo_hz", "band_hi_hz", "density",
                "gain", "path"},
               "source");
    if (!src.contains("theta")) throw ConfigError("source: missing theta");
    SceneSource s;
    s.theta = Direction(src.at("theta").get<double>());
    std::string kind = get_or<std::string>(src, "kind", "sparse", "source");
    uint64_t sseed = get_or<uint64_t>(src, "seed", spec.seed + 101 * (k_index + 1),
                                      "source");
    double gain = get_or(src, "gain", 1.0, "source");
    if (kind == "sparse") {
      double lo = get_or(src, "band_lo_hz", 300.0, "source");
      double hi = get_or(src, "band_hi_hz", 5000.0, "source");
      double density = get_or(src, "density", 0.08, "source");
      s.signal = sparse_bursts_signal(sseed, n_samples, stft, lo, hi, density);
    } else if (kind == "wav") {
      if (!src.contains("path")) throw ConfigError("source: wav kind needs a path");
      wav::Audio a = wav::read(src.at("path").get<std::string>());
      if (a.sample_rate != stft.sample_rate)
        throw ConfigError("source: wav sample rate mismatch (resampling not supported)");
      s.signal = a.channels.at(0);
      s.signal.resize(n_samples, 0.0);
    } else {
      throw ConfigError("source: unknown kind '" + kind + "'");
    }
    for (double& v : s.signal) v *= gain;
    spec.source_gains.push_back(gain);
    spec.scene.sources.push_back(std::move(s));
    ++k_index;
  }
  const int K = spec.scene.n_sources();
  if (K >= n_mics && K > 0)
    throw ConfigError("scene: need more microphones than sources");

  json dc = j.value("dcir", json::object());
  check_keys(dc,
             {"length", "decay", "direct_gain", "assumption1", "shared_head",
              "seed", "anechoic"},
             "dcir");
  bool anechoic = get_or(dc, "anechoic", false, "dcir");
  spec.scene.dcirs.assign(n_mics, std::vector<Dcir>(K));
  if (anechoic || K == 0) {
    for (auto& row : spec.scene.dcirs)
      for (auto& h : row) h.taps = {1.0};
    spec.scene.assumption1 = true;
  } else {
    int length = get_or(dc, "length", 2048, "dcir");
    double decay = get_or(dc, "decay", 0.0012, "dcir");
    double direct_gain = get_or(dc, "direct_gain", 16.0, "dcir");
    bool assumption1 = get_or(dc, "assumption1", true, "dcir");
    int shared_head = get_or(dc, "shared_head", stft.window_length, "dcir");
    uint64_t dseed = get_or<uint64_t>(dc, "seed", spec.seed ^ 0xdc1full, "dcir");
    for (int k = 0; k < K; ++k) {
      if (assumption1) {
        auto set = synth_dcir_set(dseed + 7919 * k, n_mics, length, decay,
                                  direct_gain, shared_head);
        for (int i = 0; i < n_mics; ++i) spec.scene.dcirs[i][k] = set[i];
      } else {
        for (int i = 0; i < n_mics; ++i)
          spec.scene.dcirs[i][k] = synth_dcir(dseed + 7919 * k + 31 * i, length,
                                              decay, direct_gain);
      }
    }
    spec.scene.assumption1 = assumption1;
  }
  spec.scene.validate();
  return spec;
}

SceneSpec load_scene(const std::string& path, const StftConfig& stft) {
  return scene_from_json(slurp(path), stft);
}

}  // namespace mclpsep
