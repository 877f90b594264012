#pragma once

// Reproducible experiment driver: synthesize reference fields, extract
// capsule subsets, run the upsampling methods (SH baseline and the PINN
// variants), evaluate time-domain NMSE against the reference, and emit
// plot-ready CSV artifacts. The CLI in tools/ is a thin wrapper over these
// functions so tests can drive the identical code paths in-process.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "spherepinn/evalkit.hpp"
#include "spherepinn/io.hpp"
#include "spherepinn/pinn.hpp"
#include "spherepinn/synth.hpp"

namespace spherepinn::experiment {

using nlohmann::json;

struct SceneSpec {
  std::string type = "shoebox";  // plane_wave | point_sources | shoebox | shoebox_rir
  std::vector<synth::PlaneWaveSpec> plane_waves;
  std::vector<synth::PointSourceSpec> point_sources;
  synth::ShoeboxSpec shoebox;
};

struct ExperimentConfig {
  std::string geometry_path;  // empty -> built-in 32-capsule layout
  specfun::Enclosure builtin_enclosure = specfun::Enclosure::Rigid;
  SceneSpec scene;
  double f_min = 100.0, f_max = 8000.0;
  double fs = 16000.0;
  long length = 4096;
  double medium_c = 343.0;
  std::vector<int> subset_sizes = {4, 9, 16, 25};
  std::vector<std::string> methods = {"baseline", "pinn", "pinn_no_pde",
                                      "pinn_plain_siren"};
  pinn::TrainConfig train;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int jobs = 1;
  double noise_snr_db = std::numeric_limits<double>::infinity();
  int waveform_channel = 0;
};

// ---- configuration parsing ----

namespace detail {

inline std::array<double, 3> parse_vec3(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError(key + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

inline SceneSpec scene_from_json(const json& j) {
  SceneSpec s;
  s.type = j.value("type", "shoebox");
  if (s.type == "plane_wave") {
    if (!j.contains("waves")) throw ConfigError("plane_wave scene needs 'waves'");
    for (const auto& w : j.at("waves")) {
      synth::PlaneWaveSpec spec;
      spec.direction.theta = w.at("theta").get<double>();
      spec.direction.phi = w.at("phi").get<double>();
      spec.amplitude = cplx(w.value("amp_re", 1.0), w.value("amp_im", 0.0));
      s.plane_waves.push_back(spec);
    }
  } else if (s.type == "point_sources") {
    if (!j.contains("sources"))
      throw ConfigError("point_sources scene needs 'sources'");
    for (const auto& w : j.at("sources")) {
      synth::PointSourceSpec spec;
      spec.position = detail::parse_vec3(w.at("position"), "source position");
      spec.amplitude = cplx(w.value("amp_re", 1.0), w.value("amp_im", 0.0));
      s.point_sources.push_back(spec);
    }
  } else if (s.type == "shoebox" || s.type == "shoebox_rir") {
    if (j.contains("dimensions"))
      s.shoebox.dimensions = detail::parse_vec3(j.at("dimensions"), "dimensions");
    if (j.contains("source"))
      s.shoebox.source = detail::parse_vec3(j.at("source"), "source");
    if (j.contains("array_center"))
      s.shoebox.array_center =
          detail::parse_vec3(j.at("array_center"), "array_center");
    s.shoebox.reflection_order =
        j.value("reflection_order", s.shoebox.reflection_order);
    s.shoebox.wall_reflection_coeff =
        j.value("wall_reflection_coeff", s.shoebox.wall_reflection_coeff);
  } else {
    throw ConfigError("unknown scene type '" + s.type + "'");
  }
  return s;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.geometry_path = j.value("geometry", "");
  if (j.contains("builtin_enclosure"))
    c.builtin_enclosure =
        io::parse_enclosure(j.at("builtin_enclosure").get<std::string>());
  if (j.contains("scene")) c.scene = scene_from_json(j.at("scene"));
  if (j.contains("band")) {
    const auto& b = j.at("band");
    if (!b.is_array() || b.size() != 2)
      throw ConfigError("band must be [f_min, f_max]");
    c.f_min = b[0].get<double>();
    c.f_max = b[1].get<double>();
  }
  c.fs = j.value("fs", c.fs);
  c.length = j.value("length", c.length);
  c.medium_c = j.value("medium_c", c.medium_c);
  if (j.contains("subset_sizes"))
    c.subset_sizes = j.at("subset_sizes").get<std::vector<int>>();
  if (j.contains("methods"))
    c.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("train")) c.train = io::config_from_json(j.at("train"));
  c.seed = j.value("seed", c.seed);
  c.train.seed = c.seed;
  c.out_dir = j.value("out", c.out_dir);
  c.jobs = j.value("jobs", c.jobs);
  if (j.contains("noise_snr_db")) c.noise_snr_db = j.at("noise_snr_db").get<double>();
  c.waveform_channel = j.value("waveform_channel", c.waveform_channel);
  if (c.fs <= 0 || c.length < 2) throw ConfigError("fs > 0 and length >= 2 required");
  if (c.f_max > c.fs / 2.0) throw ConfigError("band exceeds Nyquist");
  if (c.f_min < 0.0 || c.f_max < c.f_min) throw ConfigError("invalid band");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

// ---- reference synthesis ----

inline sma::ArrayGeometry load_geometry(const ExperimentConfig& cfg) {
  if (cfg.geometry_path.empty())
    return sma::pentakis32_geometry(0.042, cfg.builtin_enclosure);
  return io::read_geometry(cfg.geometry_path);
}

struct Reference {
  sma::ComplexPressureField field;
  evalkit::TimeSignalSet signals;       // band-limited reconstruction
  evalkit::TimeSignalSet raw_signals;   // only for shoebox_rir scenes
  bool has_raw = false;
};

// DFT-grid wavenumbers inside the band.
inline std::vector<double> band_wavenumbers(const ExperimentConfig& cfg) {
  std::vector<double> ks;
  const double df = cfg.fs / static_cast<double>(cfg.length);
  for (long j = 0; j <= cfg.length / 2; ++j) {
    const double f = j * df;
    if (f >= cfg.f_min && f <= cfg.f_max) ks.push_back(kTwoPi * f / cfg.medium_c);
  }
  if (ks.empty()) throw ConfigError("band contains no DFT bins");
  return ks;
}

inline Reference synthesize_reference(const ExperimentConfig& cfg) {
  const auto geometry = load_geometry(cfg);
  Reference ref;
  const sma::Medium medium{cfg.medium_c};

  if (cfg.scene.type == "shoebox_rir") {
    synth::ShoeboxSpec spec = cfg.scene.shoebox;
    spec.fs = cfg.fs;
    spec.length = cfg.length;
    ref.raw_signals = synth::image_source_rir(spec, geometry, medium);
    ref.has_raw = true;
    ref.field = evalkit::time_to_freq(ref.raw_signals, geometry, cfg.f_min,
                                      cfg.f_max, cfg.medium_c);
  } else {
    const auto ks = band_wavenumbers(cfg);
    if (cfg.scene.type == "shoebox") {
      synth::ShoeboxSpec spec = cfg.scene.shoebox;
      spec.fs = cfg.fs;
      spec.length = cfg.length;
      ref.field = synth::shoebox_field(spec, geometry, ks, medium);
    } else if (cfg.scene.type == "plane_wave") {
      if (cfg.scene.plane_waves.empty())
        throw ConfigError("plane_wave scene has no waves");
      ref.field.geometry = geometry;
      ref.field.wavenumbers = ks;
      ref.field.medium_c = cfg.medium_c;
      ref.field.pressures.assign(
          static_cast<size_t>(geometry.size()) * ks.size(), cplx{});
      for (const auto& w : cfg.scene.plane_waves)
        for (size_t j = 0; j < ks.size(); ++j) {
          const auto f = synth::plane_wave_field(w, geometry, ks[j]);
          for (int q = 0; q < geometry.size(); ++q)
            ref.field.at(q, static_cast<int>(j)) += f[q];
        }
    } else if (cfg.scene.type == "point_sources") {
      if (cfg.scene.point_sources.empty())
        throw ConfigError("point_sources scene has no sources");
      ref.field.geometry = geometry;
      ref.field.wavenumbers = ks;
      ref.field.medium_c = cfg.medium_c;
      ref.field.pressures.assign(
          static_cast<size_t>(geometry.size()) * ks.size(), cplx{});
      for (const auto& w : cfg.scene.point_sources)
        for (size_t j = 0; j < ks.size(); ++j) {
          const auto f = synth::point_source_field(w, geometry, ks[j]);
          for (int q = 0; q < geometry.size(); ++q)
            ref.field.at(q, static_cast<int>(j)) += f[q];
        }
    } else {
      throw ConfigError("unknown scene type '" + cfg.scene.type + "'");
    }
    ref.field.time_fs = cfg.fs;
    ref.field.time_length = cfg.length;
  }

  if (!std::isinf(cfg.noise_snr_db))
    ref.field = synth::add_noise(ref.field, cfg.noise_snr_db, cfg.seed);
  ref.signals = evalkit::freq_to_time(ref.field, cfg.fs, cfg.length);
  return ref;
}

// ---- methods ----

struct MethodSpec {
  std::string name;
  int id = 0;
  bool baseline = false;
  bool rowdy = true;  // keep the config's W; false forces W = 0
  bool pde = true;    // keep the config's lambda; false forces lambda = 0
};

inline MethodSpec method_by_name(const std::string& name) {
  if (name == "baseline") return {"baseline", 0, true, false, false};
  if (name == "pinn") return {"pinn", 1, false, true, true};
  if (name == "pinn_no_pde") return {"pinn_no_pde", 2, false, true, false};
  if (name == "pinn_plain_siren")
    return {"pinn_plain_siren", 3, false, false, false};
  if (name == "pinn_siren_pde") return {"pinn_siren_pde", 4, false, false, true};
  throw ConfigError("unknown method '" + name + "'");
}

inline pinn::TrainConfig method_train_config(const ExperimentConfig& cfg,
                                             const MethodSpec& m, int q,
                                             int q_index) {
  pinn::TrainConfig t = cfg.train;
  if (!m.rowdy) t.rowdy_terms = 0;
  if (!m.pde) t.lambda_pde = 0.0;
  // documented derived seed: base + 1009 * subset index + method id
  t.seed = cfg.seed + 1009ull * static_cast<std::uint64_t>(q_index) +
           static_cast<std::uint64_t>(m.id);
  (void)q;
  return t;
}

// ---- experiment run ----

struct CellResult {
  int q = 0;
  std::string method;
  double nmse_db = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string error;
};

struct RunResult {
  std::vector<CellResult> cells;
  std::string report_path;

  double nmse(int q, const std::string& method) const {
    for (const auto& c : cells)
      if (c.q == q && c.method == method) return c.nmse_db;
    throw std::out_of_range("no cell for q/method");
  }
};

namespace detail {

inline std::string cell_tag(int q, const std::string& method) {
  return "q" + std::to_string(q) + "_" + method;
}

struct JobOutput {
  CellResult cell;
  sma::ComplexPressureField est_field;
  evalkit::TimeSignalSet est_signals;
  std::vector<pinn::TraceRow> trace;
  bool has_model = false;
  pinn::PinnModel model;
};

inline JobOutput run_cell(const ExperimentConfig& cfg, const Reference& ref,
                          const sma::ArrayGeometry& geometry,
                          const MethodSpec& method, int q, int q_index) {
  JobOutput out;
  out.cell.q = q;
  out.cell.method = method.name;

  auto [sub_geo, indices] = sma::subset_select(geometry, q);
  sma::ComplexPressureField obs_field;
  obs_field.geometry = sub_geo;
  obs_field.wavenumbers = ref.field.wavenumbers;
  obs_field.medium_c = ref.field.medium_c;
  obs_field.time_fs = ref.field.time_fs;
  obs_field.time_length = ref.field.time_length;
  const int K = ref.field.bins();
  obs_field.pressures.resize(static_cast<size_t>(q) * K);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < K; ++j)
      obs_field.at(i, j) = ref.field.at(indices[i], j);

  if (method.baseline) {
    out.est_field = sma::baseline_upsample(obs_field, geometry.capsules);
    out.est_field.geometry = geometry;
  } else {
    pinn::ObservationSet obs;
    obs.radius = geometry.radius;
    obs.wavenumbers = ref.field.wavenumbers;
    for (int i = 0; i < q; ++i) obs.positions.push_back(sub_geo.capsule_unit(i));
    obs.pressures = obs_field.pressures;
    const auto tcfg = method_train_config(cfg, method, q, q_index);
    auto trained = pinn::train(obs, tcfg);
    out.trace = std::move(trained.trace);
    out.est_field = pinn::predict(trained.model, geometry.capsules);
    out.model = std::move(trained.model);
    out.has_model = true;
    out.est_field.geometry = geometry;
    out.est_field.medium_c = ref.field.medium_c;
  }
  out.est_field.time_fs = ref.field.time_fs;
  out.est_field.time_length = ref.field.time_length;
  out.est_signals = evalkit::freq_to_time(out.est_field, cfg.fs, cfg.length);
  out.cell.nmse_db = evalkit::nmse_time(out.est_signals, ref.signals).overall_db;
  out.cell.ok = true;
  return out;
}

}  // namespace detail

inline void cmd_synth(const ExperimentConfig& cfg) {
  const auto ref = synthesize_reference(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  io::write_field(ref.field, cfg.out_dir + "/reference.field");
  io::write_signals(ref.signals, cfg.out_dir + "/reference.sig");
  if (ref.has_raw)
    io::write_signals(ref.raw_signals, cfg.out_dir + "/reference_raw.sig");
  log_info("synthesized reference: " + std::to_string(ref.field.channels()) +
           " channels, " + std::to_string(ref.field.bins()) + " bins -> " +
           cfg.out_dir);
}

// Runs the full per-Q, per-method grid and writes the report artifacts.
// When ref_override is non-null it is used instead of synthesizing.
inline RunResult cmd_run(const ExperimentConfig& cfg,
                         const Reference* ref_override = nullptr) {
  const auto geometry = load_geometry(cfg);
  for (int q : cfg.subset_sizes)
    if (q < 1 || q > geometry.size())
      throw ConfigError("subset size " + std::to_string(q) +
                        " out of range for Q = " +
                        std::to_string(geometry.size()));
  std::vector<MethodSpec> methods;
  for (const auto& name : cfg.methods) methods.push_back(method_by_name(name));
  if (methods.empty()) throw ConfigError("no methods selected");
  if (cfg.waveform_channel < 0 || cfg.waveform_channel >= geometry.size())
    throw ConfigError("waveform_channel out of range");

  const Reference ref_local =
      ref_override ? Reference{} : synthesize_reference(cfg);
  const Reference& ref = ref_override ? *ref_override : ref_local;

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  fs::create_directories(cfg.out_dir + "/traces");
  fs::create_directories(cfg.out_dir + "/models");
  fs::create_directories(cfg.out_dir + "/waveforms");
  fs::create_directories(cfg.out_dir + "/frequency");

  // parallel jobs over (q, method); deterministic assembly afterwards
  struct Task {
    int q, q_index;
    MethodSpec method;
  };
  std::vector<Task> tasks;
  for (size_t qi = 0; qi < cfg.subset_sizes.size(); ++qi)
    for (const auto& m : methods)
      tasks.push_back({cfg.subset_sizes[qi], static_cast<int>(qi), m});

  std::vector<detail::JobOutput> outputs(tasks.size());
  const int jobs = std::max(1, cfg.jobs);
  const int saved_threads = linalg::thread_count();
  if (jobs > 1)
    linalg::thread_count() = std::max(
        1, static_cast<int>(std::thread::hardware_concurrency()) / jobs);

  std::vector<std::thread> workers;
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const auto& t = tasks[i];
      try {
        outputs[i] = detail::run_cell(cfg, ref, geometry, t.method, t.q, t.q_index);
      } catch (const std::exception& e) {
        outputs[i].cell.q = t.q;
        outputs[i].cell.method = t.method.name;
        outputs[i].cell.ok = false;
        outputs[i].cell.error = e.what();
      }
      log_info("done " + detail::cell_tag(t.q, t.method.name) +
               (outputs[i].cell.ok
                    ? " nmse " + std::to_string(outputs[i].cell.nmse_db) + " dB"
                    : " FAILED: " + outputs[i].cell.error));
    }
  };
  for (int w = 1; w < jobs; ++w) workers.emplace_back(worker);
  worker();
  for (auto& w : workers) w.join();
  linalg::thread_count() = saved_threads;

  // per-cell artifacts
  for (size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    auto& o = outputs[i];
    if (!o.cell.ok) continue;
    const std::string tag = detail::cell_tag(t.q, t.method.name);
    if (!o.trace.empty()) {
      io::CsvWriter trace(cfg.out_dir + "/traces/trace_" + tag + ".csv",
                          "loss-trace", {"iteration", "total", "data", "pde", "lr"});
      for (const auto& row : o.trace)
        trace.row({std::to_string(row.iteration), io::fmt_double(row.total),
                   io::fmt_double(row.data), io::fmt_double(row.pde),
                   io::fmt_double(row.lr)});
    }
    if (o.has_model)
      io::write_model(o.model, cfg.out_dir + "/models/model_" + tag + ".spnn");
    const auto freq_rep = evalkit::nmse_freq(o.est_field, ref.field);
    io::CsvWriter freq(cfg.out_dir + "/frequency/nmse_" + tag + ".csv",
                       "nmse-frequency", {"wavenumber", "frequency_hz", "nmse_db"});
    for (int j = 0; j < ref.field.bins(); ++j) {
      const double f = ref.field.wavenumbers[j] * ref.field.medium_c / kTwoPi;
      freq.row({io::fmt_double(ref.field.wavenumbers[j]), io::fmt_double(f),
                io::fmt_double(freq_rep.per_frequency_db[j])});
    }
  }

  // waveform CSVs (one per q, one chosen channel, all methods as columns)
  for (size_t qi = 0; qi < cfg.subset_sizes.size(); ++qi) {
    const int q = cfg.subset_sizes[qi];
    std::vector<std::string> cols = {"sample", "time_s", "reference"};
    std::vector<const detail::JobOutput*> with;
    for (size_t i = 0; i < tasks.size(); ++i)
      if (tasks[i].q == q && outputs[i].cell.ok) {
        cols.push_back(tasks[i].method.name);
        with.push_back(&outputs[i]);
      }
    io::CsvWriter wf(cfg.out_dir + "/waveforms/waveform_q" + std::to_string(q) +
                         ".csv",
                     "waveform", cols);
    const int ch = cfg.waveform_channel;
    for (long t = 0; t < cfg.length; ++t) {
      std::vector<std::string> cells = {
          std::to_string(t), io::fmt_double(t / cfg.fs),
          io::fmt_double(ref.signals.at(ch, t))};
      for (const auto* o : with)
        cells.push_back(io::fmt_double(o->est_signals.at(ch, t)));
      wf.row(cells);
    }
  }

  // NMSE table (methods x Q)
  RunResult result;
  result.report_path = cfg.out_dir + "/report.csv";
  {
    std::vector<std::string> cols = {"method"};
    for (int q : cfg.subset_sizes) cols.push_back("q" + std::to_string(q));
    io::CsvWriter rep(
        result.report_path, "nmse-table", cols,
        {"baseline = order-limited spherical-harmonics surface interpolation "
         "(signal-processing reference method)",
         "values: mean NMSE over channels, dB, time domain"});
    for (const auto& m : methods) {
      std::vector<std::string> cells = {m.name};
      for (size_t qi = 0; qi < cfg.subset_sizes.size(); ++qi) {
        const detail::JobOutput* found = nullptr;
        for (size_t i = 0; i < tasks.size(); ++i)
          if (tasks[i].q == cfg.subset_sizes[qi] &&
              tasks[i].method.name == m.name)
            found = &outputs[i];
        if (found && found->cell.ok) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.6f", found->cell.nmse_db);
          cells.push_back(buf);
        } else {
          cells.push_back("nan");
        }
      }
      rep.row(cells);
    }
  }
  for (auto& o : outputs) result.cells.push_back(o.cell);

  // fail loudly after flushing partial results
  for (const auto& c : result.cells)
    if (!c.ok)
      throw SynthesisError("cell " + detail::cell_tag(c.q, c.method) +
                           " failed: " + c.error);
  std::printf("report written: %s\n", result.report_path.c_str());
  for (const auto& c : result.cells)
    std::printf("q=%d %s: %.2f dB\n", c.q, c.method.c_str(), c.nmse_db);
  return result;
}

// NMSE between two artifact files (both signal sidecars or both fields).
inline double cmd_eval(const std::string& estimate_path,
                       const std::string& reference_path,
                       const std::string& out_dir) {
  auto sniff = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string first;
    std::getline(in, first);
    return first;
  };
  const std::string kind_e = sniff(estimate_path);
  const std::string kind_r = sniff(reference_path);
  if (kind_e != kind_r)
    throw ShapeMismatchError("estimate and reference are different kinds");

  evalkit::NmseReport report;
  std::vector<double> frequencies_hz;
  if (kind_e == "spherepinn-signals v1") {
    report = evalkit::nmse_time(io::read_signals(estimate_path),
                                io::read_signals(reference_path));
  } else if (kind_e == "spherepinn-field v1") {
    const auto est = io::read_field(estimate_path);
    const auto ref = io::read_field(reference_path);
    report = evalkit::nmse_freq(est, ref);
    for (double k : ref.wavenumbers)
      frequencies_hz.push_back(k * ref.medium_c / kTwoPi);
  } else {
    throw IoError(estimate_path + ": unrecognized artifact kind");
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    io::CsvWriter ch(out_dir + "/nmse_per_channel.csv", "nmse-channel",
                     {"channel", "nmse_db"});
    for (size_t q = 0; q < report.per_channel_db.size(); ++q)
      ch.row({std::to_string(q), io::fmt_double(report.per_channel_db[q])});
    if (!report.per_frequency_db.empty()) {
      io::CsvWriter fr(out_dir + "/nmse_per_frequency.csv", "nmse-frequency",
                       {"frequency_hz", "nmse_db"});
      for (size_t j = 0; j < report.per_frequency_db.size(); ++j)
        fr.row({io::fmt_double(frequencies_hz[j]),
                io::fmt_double(report.per_frequency_db[j])});
    }
  }
  std::printf("NMSE overall: %.2f dB (channels: %zu, excluded: %zu)\n",
              report.overall_db, report.per_channel_db.size(),
              report.excluded_channels.size());
  return report.overall_db;
}

}  // namespace spherepinn::experiment
