#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "spherepinn/io.hpp"
#include "spherepinn/synth.hpp"

using namespace spherepinn;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("geometry file round trip and validation") {
  const auto g = sma::pentakis32_geometry(0.05, specfun::Enclosure::Open);
  const auto path = tmp_path("io_geom.txt");
  io::write_geometry(g, path);
  const auto back = io::read_geometry(path);
  CHECK(back.radius == g.radius);
  CHECK(back.enclosure == g.enclosure);
  REQUIRE(back.size() == 32);
  for (int q = 0; q < 32; ++q) {
    CHECK(back.capsules[q].theta == g.capsules[q].theta);
    CHECK(back.capsules[q].phi == g.capsules[q].phi);
    CHECK(back.weights[q] == g.weights[q]);
  }

  // strict validation: bad enclosure, bad weight sum, malformed line
  {
    std::ofstream out(path);
    out << "0.042 fuzzy\n0 0 12.566\n";
  }
  CHECK_THROWS_AS(io::read_geometry(path), IoError);
  {
    std::ofstream out(path);
    out << "0.042 open\n0.5 0.0 1.0\n1.0 1.0 1.0\n";
  }
  CHECK_THROWS_AS(io::read_geometry(path), ConfigError);  // sum != 4pi
  {
    std::ofstream out(path);
    out << "0.042 open\n0.5 0.0\n";
  }
  CHECK_THROWS_AS(io::read_geometry(path), IoError);
  CHECK_THROWS_AS(io::read_geometry(tmp_path("io_missing.txt")), IoError);
}

TEST_CASE("field file round trip is bit-exact") {
  auto g = sma::pentakis32_geometry();
  sma::ComplexPressureField f;
  f.geometry = g;
  f.wavenumbers = {3.7, 19.2, 55.5};
  f.medium_c = 340.0;
  f.time_fs = 16000.0;
  f.time_length = 512;
  f.pressures.resize(96);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& p : f.pressures) p = cplx(u(rng) * 1e-7, u(rng) * 1e3);

  const auto path = tmp_path("io_field.field");
  io::write_field(f, path);
  const auto back = io::read_field(path);
  CHECK(back.geometry.radius == f.geometry.radius);
  CHECK(back.time_fs == f.time_fs);
  CHECK(back.time_length == f.time_length);
  CHECK(back.medium_c == f.medium_c);
  CHECK(back.wavenumbers == f.wavenumbers);
  CHECK(back.pressures == f.pressures);

  // truncation detected
  {
    std::ifstream in(path);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(path);
    out << all.substr(0, all.size() / 2);
  }
  CHECK_THROWS_AS(io::read_field(path), IoError);
}

TEST_CASE("signal file round trip is bit-exact") {
  evalkit::TimeSignalSet s;
  s.fs = 8000.0;
  s.channels = 3;
  s.length = 101;
  s.samples.resize(303);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : s.samples) v = u(rng);

  const auto path = tmp_path("io_sig.sig");
  io::write_signals(s, path);
  const auto back = io::read_signals(path);
  CHECK(back.fs == s.fs);
  CHECK(back.channels == s.channels);
  CHECK(back.length == s.length);
  CHECK(back.samples == s.samples);
}

TEST_CASE("model file round trip is bit-exact") {
  pinn::TrainConfig cfg;
  cfg.hidden_width = 12;
  cfg.hidden_layers = 2;
  cfg.rowdy_terms = 3;
  cfg.seed = 99;
  cfg.lambda_pde = 3e-9;
  auto model = pinn::init_params(cfg, {10.0, 31.0}, 0.042);
  model.pressure_scale = 17.25;
  // perturb so the file is not just the init
  model.real_net.layers[1].act.n[1] = -0.125;
  model.imag_net.layers[0].biases[3] = 0.75;

  const auto path = tmp_path("io_model.spnn");
  io::write_model(model, path);
  const auto back = io::read_model(path);
  CHECK(back.pressure_scale == model.pressure_scale);
  CHECK(back.radius == model.radius);
  CHECK(back.coord_scale == model.coord_scale);
  CHECK(back.wavenumbers == model.wavenumbers);
  CHECK(back.config.lambda_pde == cfg.lambda_pde);
  CHECK(back.config.seed == cfg.seed);
  REQUIRE(back.real_net.layers.size() == model.real_net.layers.size());
  for (size_t l = 0; l < model.real_net.layers.size(); ++l) {
    CHECK(back.real_net.layers[l].weights.a == model.real_net.layers[l].weights.a);
    CHECK(back.imag_net.layers[l].biases == model.imag_net.layers[l].biases);
    if (model.real_net.layers[l].sinusoidal) {
      CHECK(back.real_net.layers[l].act.n == model.real_net.layers[l].act.n);
      CHECK(back.real_net.layers[l].act.alpha ==
            model.real_net.layers[l].act.alpha);
      CHECK(back.real_net.layers[l].act.omega0 ==
            model.real_net.layers[l].act.omega0);
    }
  }

  // predictions from the reloaded model are identical
  const auto a = pinn::forward(model, {0.0, 0.6, 0.8});
  const auto b = pinn::forward(back, {0.0, 0.6, 0.8});
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);

  // corrupted magic rejected
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTMODEL garbage";
  }
  CHECK_THROWS_AS(io::read_model(path), IoError);
}

TEST_CASE("csv writer versioned header") {
  const auto path = tmp_path("io_table.csv");
  {
    io::CsvWriter w(path, "nmse-table", {"method", "q4"}, {"a note"});
    w.row({"baseline", "-12.5"});
  }
  std::ifstream in(path);
  std::string l1, l2, l3, l4;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  std::getline(in, l4);
  CHECK(l1 == "# spherepinn nmse-table v1");
  CHECK(l2 == "# a note");
  CHECK(l3 == "method,q4");
  CHECK(l4 == "baseline,-12.5");
}
