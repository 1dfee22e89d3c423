// Batch front-end: simulate, dereverb, doa, separate, eval, verify-theory.
// Exit codes: 0 success, 2 config error, 3 numerical failure,
// 4 verification failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "mclpsep/metrics.hpp"
#include "mclpsep/pipeline.hpp"
#include "mclpsep/theory.hpp"
#include "mclpsep/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mclpsep;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot create output file: " + path.string());
  f << text;
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open file: " + path.string());
  try {
    json j;
    f >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + std::string(e.what()));
  }
}

PipelineConfig load_config_or_default(const std::string& path) {
  if (path.empty()) {
    PipelineConfig cfg;
    cfg.validate();
    return cfg;
  }
  return load_pipeline_config(path);
}

wav::Audio load_wav_checked(const std::string& path, int expected_rate) {
  wav::Audio a = wav::read(path);
  if (a.sample_rate != expected_rate)
    throw ConfigError(path + ": sample rate " + std::to_string(a.sample_rate) +
                      " does not match configured rate " +
                      std::to_string(expected_rate) +
                      " (resampling is not supported)");
  return a;
}

int run_simulate(const std::string& config_path, const std::string& scene_path,
                 const std::string& out_dir, bool float32) {
  PipelineConfig cfg = load_config_or_default(config_path);
  SceneSpec spec = load_scene(scene_path, cfg.stft);
  fs::create_directories(out_dir);

  std::vector<std::vector<double>> mixture = render_mixture(spec.scene);
  wav::Audio mix;
  mix.sample_rate = cfg.stft.sample_rate;
  mix.channels = mixture;
  wav::write(fs::path(out_dir) / "mixture.wav", mix, float32);

  json truth;
  truth["seed"] = spec.seed;
  truth["n_sources"] = spec.scene.n_sources();
  truth["sample_rate"] = cfg.stft.sample_rate;
  truth["mixture"] = "mixture.wav";
  for (int k = 0; k < spec.scene.n_sources(); ++k) {
    // per-source solo rendering at the microphones, for SIR references
    SceneConfig solo = spec.scene;
    solo.sources = {spec.scene.sources[k]};
    for (int i = 0; i < spec.scene.geometry.n_mics(); ++i)
      solo.dcirs[i] = {spec.scene.dcirs[i][k]};
    std::vector<std::vector<double>> rendered = render_mixture(solo);
    wav::Audio sw;
    sw.sample_rate = cfg.stft.sample_rate;
    sw.channels = rendered;
    std::string name = "source" + std::to_string(k + 1) + "_solo.wav";
    wav::write(fs::path(out_dir) / name, sw, float32);
    truth["thetas_rad"].push_back(spec.scene.sources[k].theta.theta);
    truth["thetas_deg"].push_back(spec.scene.sources[k].theta.theta * 180.0 / kPi);
    truth["solos"].push_back(name);
  }
  write_text(fs::path(out_dir) / "truth.json", truth.dump(2));
  std::cout << "wrote " << out_dir << "/mixture.wav ("
            << spec.scene.geometry.n_mics() << " channels) and truth.json\n";
  return 0;
}

int run_dereverb(const std::string& config_path, const std::string& in_path,
                 const std::string& out_dir, const std::string& trace_path) {
  PipelineConfig cfg = load_config_or_default(config_path);
  wav::Audio in = load_wav_checked(in_path, cfg.stft.sample_rate);
  fs::create_directories(out_dir);

  std::vector<ComplexSpectrogram> specs;
  for (const auto& ch : in.channels) specs.push_back(analyze(ch, cfg.stft));
  MclpParams params = cfg.mclp;
  params.record_objective = !trace_path.empty();

  std::vector<MclpTrace> traces;
  std::vector<ComplexSpectrogram> derev = dereverb_all_refs(
      specs, params, cfg.workers, trace_path.empty() ? nullptr : &traces);
  for (std::size_t r = 0; r < derev.size(); ++r) {
    wav::Audio out;
    out.sample_rate = cfg.stft.sample_rate;
    out.channels = {synthesize(derev[r])};
    wav::write(fs::path(out_dir) / ("dereverb" + std::to_string(r + 1) + ".wav"),
               out);
  }
  if (!trace_path.empty()) {
    json jt = json::array();
    for (const auto& t : traces) {
      json e;
      e["bin"] = t.bin;
      e["reference"] = t.reference;
      e["iterations"] = t.iterations;
      e["objective"] = t.objective;
      jt.push_back(e);
    }
    write_text(trace_path, jt.dump());
  }
  std::cout << "wrote " << derev.size() << " dereverberated channels to "
            << out_dir << "\n";
  return 0;
}

int run_doa(const std::string& config_path, const std::string& in_path,
            const std::string& out_dir, const std::string& geometry_path,
            bool per_frame) {
  PipelineConfig cfg = load_config_or_default(config_path);
  wav::Audio in = load_wav_checked(in_path, cfg.stft.sample_rate);
  ArrayGeometry geom = geometry_path.empty()
                           ? circular_array(int(in.n_channels()), 0.05, 343.0,
                                            cfg.stft.sample_rate)
                           : load_geometry(geometry_path);
  fs::create_directories(out_dir);

  PipelineConfig run_cfg = cfg;
  run_cfg.doa.keep_frame_values = per_frame;
  DoaSpectrum spec = doa_of_signals(in.channels, geom, run_cfg);

  std::string csv = "theta_deg,value\n";
  for (std::size_t t = 0; t < spec.grid.size(); ++t)
    csv += std::to_string(spec.grid[t] * 180.0 / kPi) + "," +
           std::to_string(spec.averaged[t]) + "\n";
  write_text(fs::path(out_dir) / "doa_spectrum.csv", csv);

  json peaks;
  peaks["shortfall"] = spec.peak_shortfall;
  for (const Direction& d : spec.peaks)
    peaks["peaks_deg"].push_back(d.theta * 180.0 / kPi);
  write_text(fs::path(out_dir) / "doa_peaks.json", peaks.dump(2));

  if (per_frame) {
    std::string frames_csv;
    for (long r = 0; r < spec.frame_values.rows(); ++r) {
      for (long c = 0; c < spec.frame_values.cols(); ++c)
        frames_csv += (c ? "," : "") + std::to_string(spec.frame_values(r, c));
      frames_csv += "\n";
    }
    write_text(fs::path(out_dir) / "doa_frames.csv", frames_csv);
  }
  std::cout << peaks.dump(2) << "\n";
  return 0;
}

int run_separate(const std::string& config_path, const std::string& in_path,
                 const std::string& out_dir, const std::string& geometry_path) {
  PipelineConfig cfg = load_config_or_default(config_path);
  wav::Audio in = load_wav_checked(in_path, cfg.stft.sample_rate);
  ArrayGeometry geom = geometry_path.empty()
                           ? circular_array(int(in.n_channels()), 0.05, 343.0,
                                            cfg.stft.sample_rate)
                           : load_geometry(geometry_path);
  fs::create_directories(out_dir);

  SeparationOutput result = separate(in.channels, geom, cfg);
  for (std::size_t k = 0; k < result.sources.size(); ++k) {
    wav::Audio out;
    out.sample_rate = cfg.stft.sample_rate;
    out.channels = {result.sources[k]};
    wav::write(fs::path(out_dir) / ("source" + std::to_string(k + 1) + ".wav"),
               out);
  }

  json report;
  report["doa_peaks_deg"] = result.doa_peaks_deg;
  report["doa_shortfall"] = result.doa_shortfall;
  report["gss_step_underflow"] = result.gss_underflow;
  report["seconds"] = {{"mclp", result.seconds_mclp},
                       {"doa", result.seconds_doa},
                       {"gss", result.seconds_gss},
                       {"postfilter", result.seconds_postfilter}};
  write_text(fs::path(out_dir) / "report.json", report.dump(2));
  std::cout << report.dump(2) << "\n";
  if (result.doa_shortfall)
    std::cerr << "warning: fewer direction peaks than sources\n";
  return 0;
}

int run_eval(const std::string& config_path, const std::string& scene_dir,
             const std::string& out_dir, const std::string& geometry_path) {
  PipelineConfig cfg = load_config_or_default(config_path);
  json truth = read_json_file(fs::path(scene_dir) / "truth.json");
  const int K = truth.at("n_sources").get<int>();
  if (K < 1) throw ConfigError("eval: scene has no sources");
  cfg.n_sources = K;
  cfg.doa.n_sources = K;

  wav::Audio mix = load_wav_checked(
      (fs::path(scene_dir) / truth.at("mixture").get<std::string>()).string(),
      cfg.stft.sample_rate);
  ArrayGeometry geom = geometry_path.empty()
                           ? circular_array(int(mix.n_channels()), 0.05, 343.0,
                                            cfg.stft.sample_rate)
                           : load_geometry(geometry_path);

  std::vector<std::vector<std::vector<double>>> solos(K);
  for (int k = 0; k < K; ++k) {
    wav::Audio solo = load_wav_checked(
        (fs::path(scene_dir) / truth.at("solos").at(k).get<std::string>())
            .string(),
        cfg.stft.sample_rate);
    solos[k] = solo.channels;
  }

  // References: raw solo renderings at microphone 1 for the plain variants,
  // dereverberated solo references for the prediction-filtered variants.
  std::vector<std::vector<double>> refs_raw(K), refs_lp(K);
  for (int k = 0; k < K; ++k) {
    refs_raw[k] = solos[k][0];
    refs_lp[k] = dereverb_reference(solos[k], cfg, 0);
  }

  struct Variant {
    std::string name;
    bool mclp;
    bool postfilter;
  };
  const std::vector<Variant> variants = {{"G", false, false},
                                         {"G+P", false, true},
                                         {"LP+G", true, false},
                                         {"LP+G+P", true, true}};

  json table;
  std::string csv = "variant";
  for (int k = 0; k < K; ++k) csv += ",source" + std::to_string(k + 1) + "_sir_db";
  csv += "\n";

  for (const Variant& v : variants) {
    PipelineConfig run_cfg = cfg;
    run_cfg.skip_mclp = !v.mclp;
    run_cfg.skip_postfilter = !v.postfilter;
    SeparationOutput sep = separate(mix.channels, geom, run_cfg);
    const auto& refs = v.mclp ? refs_lp : refs_raw;

    // match estimates to sources by the permutation with the best total SIR
    std::vector<int> perm(sep.sources.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = int(i);
    std::vector<double> best_db;
    double best_total = -1e300;
    std::vector<int> p = perm;
    std::sort(p.begin(), p.end());
    do {
      std::vector<std::vector<double>> ordered(K);
      for (int k = 0; k < K; ++k)
        ordered[k] = sep.sources[p[std::min<std::size_t>(k, p.size() - 1)]];
      SirResult r = sir(ordered, refs);
      double total = 0.0;
      for (int k = 0; k < K; ++k) total += r.defined[k] ? r.db[k] : -99.0;
      if (total > best_total) {
        best_total = total;
        best_db = r.db;
      }
    } while (std::next_permutation(p.begin(), p.end()));

    json row;
    csv += v.name;
    for (int k = 0; k < K; ++k) {
      row.push_back(best_db[k]);
      csv += "," + std::to_string(best_db[k]);
    }
    csv += "\n";
    table[v.name] = row;
    std::cout << v.name << ":";
    for (int k = 0; k < K; ++k) std::cout << " " << best_db[k] << " dB";
    std::cout << "\n";
  }

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "sir_table.json", table.dump(2));
  write_text(fs::path(out_dir) / "sir_table.csv", csv);
  return 0;
}

int run_verify_theory(uint64_t seed, const std::string& out_path,
                      int single_source, int multi_source, int equivalence,
                      int phase) {
  theory::TheoryReport report = theory::run_all_suites(
      seed, single_source, multi_source, equivalence, phase);
  std::string text = report.to_json();
  std::cout << text << "\n";
  if (!out_path.empty()) write_text(out_path, text);
  return report.all_pass() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind dereverberation front end for microphone-array source separation"};
  app.require_subcommand(1);

  std::string config_path, scene_path, in_path, out_dir = "out",
                                                geometry_path, trace_path;
  bool float32 = false, per_frame = false;

  auto* sim = app.add_subcommand("simulate", "Render a far-field reverberant scene");
  sim->add_option("--config", config_path, "pipeline config JSON");
  sim->add_option("--scene", scene_path, "scene description JSON")->required();
  sim->add_option("--out", out_dir, "output directory");
  sim->add_flag("--float32", float32, "write 32-bit float WAVs");

  auto* der = app.add_subcommand("dereverb", "Dereverberate every channel");
  der->add_option("--config", config_path, "pipeline config JSON");
  der->add_option("--in", in_path, "multichannel WAV")->required();
  der->add_option("--out", out_dir, "output directory");
  der->add_option("--trace", trace_path, "per-bin objective trace JSON");

  auto* doa_cmd = app.add_subcommand("doa", "Estimate directions of arrival");
  doa_cmd->add_option("--config", config_path, "pipeline config JSON");
  doa_cmd->add_option("--in", in_path, "multichannel WAV")->required();
  doa_cmd->add_option("--out", out_dir, "output directory");
  doa_cmd->add_option("--geometry", geometry_path, "geometry JSON (default: 5 cm circle)");
  doa_cmd->add_flag("--per-frame", per_frame, "dump per-frame spectra");

  auto* sep = app.add_subcommand("separate", "Separate sources end to end");
  sep->add_option("--config", config_path, "pipeline config JSON");
  sep->add_option("--in", in_path, "multichannel WAV")->required();
  sep->add_option("--out", out_dir, "output directory");
  sep->add_option("--geometry", geometry_path, "geometry JSON (default: 5 cm circle)");

  auto* ev = app.add_subcommand("eval", "SIR table over method variants");
  ev->add_option("--config", config_path, "pipeline config JSON");
  ev->add_option("--scene-dir", scene_path, "directory written by simulate")->required();
  ev->add_option("--out", out_dir, "output directory");
  ev->add_option("--geometry", geometry_path, "geometry JSON (default: 5 cm circle)");

  uint64_t seed = 1;
  int n_single = 100, n_multi = 50, n_equiv = 50, n_phase = 12;
  auto* ver = app.add_subcommand("verify-theory",
                                 "Run the exact-arithmetic identity suites");
  ver->add_option("--seed", seed, "suite seed");
  ver->add_option("--out", trace_path, "JSON report path");
  ver->add_option("--single", n_single, "single-source instances");
  ver->add_option("--multi", n_multi, "two-source instances");
  ver->add_option("--equiv", n_equiv, "equivalence instances");
  ver->add_option("--phase", n_phase, "phase-consistency instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return run_simulate(config_path, scene_path, out_dir, float32);
    if (der->parsed())
      return run_dereverb(config_path, in_path, out_dir, trace_path);
    if (doa_cmd->parsed())
      return run_doa(config_path, in_path, out_dir, geometry_path, per_frame);
    if (sep->parsed())
      return run_separate(config_path, in_path, out_dir, geometry_path);
    if (ev->parsed())
      return run_eval(config_path, scene_path, out_dir, geometry_path);
    if (ver->parsed())
      return run_verify_theory(seed, trace_path, n_single, n_multi, n_equiv,
                               n_phase);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
