#pragma once

// File formats (documented in docs/formats.md):
//  - geometry: text, "radius_m enclosure" header then Q lines
//    "theta_rad phi_rad weight_sr"
//  - field:    versioned structured text (geometry block, wavenumber list,
//    interleaved re/im pressure matrix)
//  - signals:  raw little-endian float64 samples plus a structured-text
//    sidecar (fs, channels, length, layout)
//  - model:    binary container: magic, JSON header (config echo, layer
//    dimensions, frequencies, scales), then all parameters as float64
//  - reports:  CSV with a "# spherepinn <kind> v1" version line
//
// All decimal text uses %.17g so writes round-trip bit-exactly and repeated
// runs produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spherepinn/evalkit_types.hpp"
#include "spherepinn/pinn.hpp"
#include "spherepinn/sh_transform.hpp"

namespace spherepinn::io {

using sma::ArrayGeometry;
using sma::ComplexPressureField;
using specfun::Enclosure;

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline double parse_double(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw IoError("bad number '" + tok + "' in " + where);
  return v;
}

inline long parse_long(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0')
    throw IoError("bad integer '" + tok + "' in " + where);
  return v;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

inline std::string expect_line(std::istream& in, const std::string& what) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("unexpected end of file, wanted " + what);
  return line;
}

}  // namespace detail

inline Enclosure parse_enclosure(const std::string& s) {
  if (s == "open") return Enclosure::Open;
  if (s == "rigid") return Enclosure::Rigid;
  throw IoError("unknown enclosure '" + s + "' (expected open|rigid)");
}

// ---- geometry files ----

inline void write_geometry(const ArrayGeometry& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << fmt_double(g.radius) << ' ' << specfun::enclosure_name(g.enclosure)
      << '\n';
  for (int q = 0; q < g.size(); ++q)
    out << fmt_double(g.capsules[q].theta) << ' '
        << fmt_double(g.capsules[q].phi) << ' ' << fmt_double(g.weights[q])
        << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline ArrayGeometry read_geometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open geometry file " + path);
  ArrayGeometry g;
  const auto header = detail::split(detail::expect_line(in, "geometry header"));
  if (header.size() != 2)
    throw IoError(path + ": header must be 'radius_m enclosure'");
  g.radius = detail::parse_double(header[0], path + " header");
  g.enclosure = parse_enclosure(header[1]);
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tok = detail::split(line);
    if (tok.size() != 3)
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected 'theta phi weight'");
    const std::string where = path + ":" + std::to_string(lineno);
    g.capsules.push_back({detail::parse_double(tok[0], where),
                          detail::parse_double(tok[1], where)});
    g.weights.push_back(detail::parse_double(tok[2], where));
  }
  sma::validate_geometry(g);
  return g;
}

// ---- field files ----

inline void write_field(const ComplexPressureField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "spherepinn-field v1\n";
  out << "radius " << fmt_double(f.geometry.radius) << '\n';
  out << "enclosure " << specfun::enclosure_name(f.geometry.enclosure) << '\n';
  out << "medium_c " << fmt_double(f.medium_c) << '\n';
  if (f.time_fs != 0.0)
    out << "time_meta " << fmt_double(f.time_fs) << ' ' << f.time_length
        << '\n';
  out << "capsules " << f.geometry.size() << '\n';
  for (int q = 0; q < f.geometry.size(); ++q)
    out << fmt_double(f.geometry.capsules[q].theta) << ' '
        << fmt_double(f.geometry.capsules[q].phi) << ' '
        << fmt_double(f.geometry.weights[q]) << '\n';
  out << "frequencies " << f.bins() << '\n';
  for (double k : f.wavenumbers) out << fmt_double(k) << '\n';
  out << "pressures\n";
  for (int q = 0; q < f.geometry.size(); ++q) {
    for (int j = 0; j < f.bins(); ++j) {
      if (j) out << ' ';
      out << fmt_double(f.at(q, j).real()) << ' '
          << fmt_double(f.at(q, j).imag());
    }
    out << '\n';
  }
  out << "end\n";
  if (!out) throw IoError("write failed: " + path);
}

inline ComplexPressureField read_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open field file " + path);
  if (detail::expect_line(in, "field magic") != "spherepinn-field v1")
    throw IoError(path + ": not a spherepinn-field v1 file");
  ComplexPressureField f;
  int q_count = -1;
  while (true) {
    const auto tok = detail::split(detail::expect_line(in, "field key"));
    if (tok.empty()) continue;
    if (tok[0] == "radius" && tok.size() == 2)
      f.geometry.radius = detail::parse_double(tok[1], path);
    else if (tok[0] == "enclosure" && tok.size() == 2)
      f.geometry.enclosure = parse_enclosure(tok[1]);
    else if (tok[0] == "medium_c" && tok.size() == 2)
      f.medium_c = detail::parse_double(tok[1], path);
    else if (tok[0] == "time_meta" && tok.size() == 3) {
      f.time_fs = detail::parse_double(tok[1], path);
      f.time_length = detail::parse_long(tok[2], path);
    } else if (tok[0] == "capsules" && tok.size() == 2) {
      q_count = static_cast<int>(detail::parse_long(tok[1], path));
      break;
    } else {
      throw IoError(path + ": unexpected field key '" + tok[0] + "'");
    }
  }
  if (q_count < 1) throw IoError(path + ": capsules must be >= 1");
  for (int q = 0; q < q_count; ++q) {
    const auto tok = detail::split(detail::expect_line(in, "capsule line"));
    if (tok.size() != 3) throw IoError(path + ": bad capsule line");
    f.geometry.capsules.push_back({detail::parse_double(tok[0], path),
                                   detail::parse_double(tok[1], path)});
    f.geometry.weights.push_back(detail::parse_double(tok[2], path));
  }
  const auto ftok = detail::split(detail::expect_line(in, "frequencies"));
  if (ftok.size() != 2 || ftok[0] != "frequencies")
    throw IoError(path + ": expected 'frequencies K'");
  const int bins = static_cast<int>(detail::parse_long(ftok[1], path));
  if (bins < 1) throw IoError(path + ": frequencies must be >= 1");
  for (int j = 0; j < bins; ++j)
    f.wavenumbers.push_back(detail::parse_double(
        detail::expect_line(in, "wavenumber"), path + " wavenumber"));
  if (detail::expect_line(in, "pressures") != "pressures")
    throw IoError(path + ": expected 'pressures'");
  f.pressures.resize(static_cast<size_t>(q_count) * bins);
  for (int q = 0; q < q_count; ++q) {
    const auto tok = detail::split(detail::expect_line(in, "pressure row"));
    if (static_cast<int>(tok.size()) != 2 * bins)
      throw IoError(path + ": pressure row " + std::to_string(q) +
                    " must hold " + std::to_string(2 * bins) + " numbers");
    for (int j = 0; j < bins; ++j)
      f.at(q, j) = cplx(detail::parse_double(tok[2 * j], path),
                        detail::parse_double(tok[2 * j + 1], path));
  }
  if (detail::expect_line(in, "end") != "end")
    throw IoError(path + ": missing 'end'");
  sma::validate_field(f);
  return f;
}

// ---- time-signal files (sidecar + raw float64) ----

inline std::string sidecar_data_name(const std::string& sidecar_path) {
  const auto slash = sidecar_path.find_last_of('/');
  const std::string base =
      slash == std::string::npos ? sidecar_path : sidecar_path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  return (dot == std::string::npos ? base : base.substr(0, dot)) + ".f64";
}

inline void write_signals(const evalkit::TimeSignalSet& s,
                          const std::string& sidecar_path) {
  evalkit::validate_signals(s);
  const std::string data_name = sidecar_data_name(sidecar_path);
  std::ofstream meta(sidecar_path);
  if (!meta) throw IoError("cannot open " + sidecar_path + " for writing");
  meta << "spherepinn-signals v1\n";
  meta << "fs " << fmt_double(s.fs) << '\n';
  meta << "channels " << s.channels << '\n';
  meta << "length " << s.length << '\n';
  meta << "layout channel_major\n";
  meta << "data " << data_name << '\n';
  if (!meta) throw IoError("write failed: " + sidecar_path);

  const auto slash = sidecar_path.find_last_of('/');
  const std::string dir =
      slash == std::string::npos ? "" : sidecar_path.substr(0, slash + 1);
  std::ofstream raw(dir + data_name, std::ios::binary);
  if (!raw) throw IoError("cannot open " + dir + data_name + " for writing");
  raw.write(reinterpret_cast<const char*>(s.samples.data()),
            static_cast<std::streamsize>(s.samples.size() * sizeof(double)));
  if (!raw) throw IoError("write failed: " + dir + data_name);
}

inline evalkit::TimeSignalSet read_signals(const std::string& sidecar_path) {
  std::ifstream meta(sidecar_path);
  if (!meta) throw IoError("cannot open signal sidecar " + sidecar_path);
  if (detail::expect_line(meta, "signals magic") != "spherepinn-signals v1")
    throw IoError(sidecar_path + ": not a spherepinn-signals v1 file");
  evalkit::TimeSignalSet s;
  std::string data_name;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    const auto tok = detail::split(line);
    if (tok[0] == "fs" && tok.size() == 2)
      s.fs = detail::parse_double(tok[1], sidecar_path);
    else if (tok[0] == "channels" && tok.size() == 2)
      s.channels = static_cast<int>(detail::parse_long(tok[1], sidecar_path));
    else if (tok[0] == "length" && tok.size() == 2)
      s.length = detail::parse_long(tok[1], sidecar_path);
    else if (tok[0] == "layout" && tok.size() == 2) {
      if (tok[1] != "channel_major")
        throw IoError(sidecar_path + ": unsupported layout " + tok[1]);
    } else if (tok[0] == "data" && tok.size() == 2)
      data_name = tok[1];
    else
      throw IoError(sidecar_path + ": unexpected key '" + tok[0] + "'");
  }
  if (data_name.empty()) throw IoError(sidecar_path + ": missing data entry");
  const auto slash = sidecar_path.find_last_of('/');
  const std::string dir =
      slash == std::string::npos ? "" : sidecar_path.substr(0, slash + 1);
  std::ifstream raw(dir + data_name, std::ios::binary);
  if (!raw) throw IoError("cannot open signal data " + dir + data_name);
  s.samples.resize(static_cast<size_t>(s.channels) * s.length);
  raw.read(reinterpret_cast<char*>(s.samples.data()),
           static_cast<std::streamsize>(s.samples.size() * sizeof(double)));
  if (raw.gcount() !=
      static_cast<std::streamsize>(s.samples.size() * sizeof(double)))
    throw IoError(dir + data_name + ": truncated sample data");
  evalkit::validate_signals(s);
  return s;
}

// ---- model files ----

inline constexpr char kModelMagic[8] = {'S', 'P', 'N', 'N', 'M', 'D', '0', '1'};

inline nlohmann::json config_to_json(const pinn::TrainConfig& c) {
  return nlohmann::json{
      {"iterations", c.iterations},
      {"lr0", c.lr0},
      {"lr_min", c.lr_min},
      {"lambda_pde", c.lambda_pde},
      {"collocation_count", c.collocation_count},
      {"collocation_mode",
       c.collocation_mode == pinn::CollocationMode::FixedFibonacci
           ? "fixed_fibonacci"
           : "resampled_uniform"},
      {"seed", c.seed},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_eps", c.adam_eps},
      {"hidden_layers", c.hidden_layers},
      {"hidden_width", c.hidden_width},
      {"omega0_first", c.omega0_first},
      {"omega0_hidden", c.omega0_hidden},
      {"rowdy_terms", c.rowdy_terms},
      {"rowdy_n_init", c.rowdy_n_init}};
}

inline pinn::TrainConfig config_from_json(const nlohmann::json& j) {
  pinn::TrainConfig c;
  c.iterations = j.value("iterations", c.iterations);
  c.lr0 = j.value("lr0", c.lr0);
  c.lr_min = j.value("lr_min", c.lr_min);
  c.lambda_pde = j.value("lambda_pde", c.lambda_pde);
  c.collocation_count = j.value("collocation_count", c.collocation_count);
  const std::string mode = j.value("collocation_mode", "fixed_fibonacci");
  if (mode == "fixed_fibonacci")
    c.collocation_mode = pinn::CollocationMode::FixedFibonacci;
  else if (mode == "resampled_uniform")
    c.collocation_mode = pinn::CollocationMode::ResampledUniform;
  else
    throw ConfigError("unknown collocation_mode '" + mode + "'");
  c.seed = j.value("seed", c.seed);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
  c.hidden_width = j.value("hidden_width", c.hidden_width);
  c.omega0_first = j.value("omega0_first", c.omega0_first);
  c.omega0_hidden = j.value("omega0_hidden", c.omega0_hidden);
  c.rowdy_terms = j.value("rowdy_terms", c.rowdy_terms);
  c.rowdy_n_init = j.value("rowdy_n_init", c.rowdy_n_init);
  return c;
}

inline void write_model(const pinn::PinnModel& m, const std::string& path) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.real_net.layers)
    layers.push_back(
        {{"out", l.weights.rows},
         {"in", l.weights.cols},
         {"sinusoidal", l.sinusoidal},
         {"omega0", l.sinusoidal ? l.act.omega0 : 0.0},
         {"rowdy_terms",
          l.sinusoidal ? static_cast<int>(l.act.n.size()) : 0}});
  const nlohmann::json header = {{"format", "spherepinn-model"},
                                 {"version", 1},
                                 {"config", config_to_json(m.config)},
                                 {"layers", layers},
                                 {"wavenumbers", m.wavenumbers},
                                 {"radius", m.radius},
                                 {"coord_scale", m.coord_scale},
                                 {"pressure_scale", m.pressure_scale}};
  const std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kModelMagic, 8);
  const std::uint64_t len = htext.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  auto dump_net = [&](const pinn::MlpParams& net) {
    for (const auto& l : net.layers) {
      out.write(reinterpret_cast<const char*>(l.weights.a.data()),
                static_cast<std::streamsize>(l.weights.a.size() * 8));
      out.write(reinterpret_cast<const char*>(l.biases.data()),
                static_cast<std::streamsize>(l.biases.size() * 8));
      if (l.sinusoidal) {
        out.write(reinterpret_cast<const char*>(l.act.n.data()),
                  static_cast<std::streamsize>(l.act.n.size() * 8));
        out.write(reinterpret_cast<const char*>(l.act.alpha.data()),
                  static_cast<std::streamsize>(l.act.alpha.size() * 8));
      }
    }
  };
  dump_net(m.real_net);
  dump_net(m.imag_net);
  if (!out) throw IoError("write failed: " + path);
}

inline pinn::PinnModel read_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kModelMagic, 8) != 0)
    throw IoError(path + ": not a spherepinn model file");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  if (in.gcount() != 8 || len == 0 || len > (1u << 26))
    throw IoError(path + ": bad header length");
  std::string htext(len, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(len));
  if (in.gcount() != static_cast<std::streamsize>(len))
    throw IoError(path + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": bad JSON header: " + e.what());
  }
  if (header.value("format", "") != "spherepinn-model" ||
      header.value("version", 0) != 1)
    throw IoError(path + ": unsupported model format/version");

  pinn::PinnModel m;
  m.config = config_from_json(header.at("config"));
  m.wavenumbers = header.at("wavenumbers").get<std::vector<double>>();
  m.radius = header.at("radius").get<double>();
  m.coord_scale = header.at("coord_scale").get<double>();
  m.pressure_scale = header.at("pressure_scale").get<double>();

  auto load_net = [&](pinn::MlpParams* net) {
    for (const auto& jl : header.at("layers")) {
      pinn::MlpLayer l;
      const int out = jl.at("out").get<int>();
      const int in_dim = jl.at("in").get<int>();
      l.weights = linalg::Mat(out, in_dim);
      l.sinusoidal = jl.at("sinusoidal").get<bool>();
      in.read(reinterpret_cast<char*>(l.weights.a.data()),
              static_cast<std::streamsize>(l.weights.a.size() * 8));
      l.biases.resize(out);
      in.read(reinterpret_cast<char*>(l.biases.data()),
              static_cast<std::streamsize>(out * 8));
      if (l.sinusoidal) {
        l.act.omega0 = jl.at("omega0").get<double>();
        const int W = jl.at("rowdy_terms").get<int>();
        l.act.n.resize(W);
        l.act.alpha.resize(W);
        in.read(reinterpret_cast<char*>(l.act.n.data()),
                static_cast<std::streamsize>(W * 8));
        in.read(reinterpret_cast<char*>(l.act.alpha.data()),
                static_cast<std::streamsize>(W * 8));
      }
      if (!in) throw IoError(path + ": truncated parameter data");
      net->layers.push_back(std::move(l));
    }
  };
  load_net(&m.real_net);
  load_net(&m.imag_net);
  return m;
}

// ---- CSV reports ----

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& kind,
            const std::vector<std::string>& columns,
            const std::vector<std::string>& comments = {})
      : out_(path), path_(path) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
    out_ << "# spherepinn " << kind << " v1\n";
    for (const auto& c : comments) out_ << "# " << c << '\n';
    for (size_t i = 0; i < columns.size(); ++i)
      out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i)
      out_ << cells[i] << (i + 1 < cells.size() ? "," : "");
    out_ << '\n';
    if (!out_) throw IoError("write failed: " + path_);
  }

  void comment(const std::string& text) { out_ << "# " << text << '\n'; }

 private:
  std::ofstream out_;
  std::string path_;
};

}  // namespace spherepinn::io
