#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "spherepinn/evalkit.hpp"
#include "spherepinn/pinn.hpp"
#include "spherepinn/synth.hpp"

using namespace spherepinn;
using namespace spherepinn::pinn;

namespace {

// Plane-wave observations on a capsule subset of the reference layout.
ObservationSet plane_wave_obs(int q_count, int bins) {
  const auto g32 = sma::pentakis32_geometry(0.042, specfun::Enclosure::Open);
  auto [g, idx] = sma::subset_select(g32, q_count);
  ObservationSet obs;
  obs.radius = g.radius;
  for (int q = 0; q < g.size(); ++q)
    obs.positions.push_back(g.capsule_unit(q));
  for (int j = 0; j < bins; ++j)
    obs.wavenumbers.push_back((8.0 + 6.0 * j) / 0.042 * 0.042);
  synth::PlaneWaveSpec spec;
  spec.direction = {1.9, 0.7};
  obs.pressures.resize(static_cast<size_t>(g.size()) * bins);
  for (int j = 0; j < bins; ++j) {
    const auto f = synth::plane_wave_field(spec, g, obs.wavenumbers[j]);
    for (int q = 0; q < g.size(); ++q)
      obs.pressures[static_cast<size_t>(q) * bins + j] = f[q];
  }
  return obs;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.iterations = 200;
  cfg.lr0 = 1e-3;
  cfg.hidden_width = 32;
  cfg.hidden_layers = 2;
  cfg.rowdy_terms = 2;
  cfg.collocation_count = 16;
  cfg.lambda_pde = 1e-6;
  cfg.seed = 1;
  return cfg;
}

}  // namespace

TEST_CASE("train reduces the data term") {
  const auto obs = plane_wave_obs(9, 8);
  const auto cfg = small_config();
  const auto result = train(obs, cfg);
  REQUIRE(result.trace.size() == 200);
  CHECK(result.trace.back().data < result.trace.front().data);
  CHECK(result.trace.front().lr == doctest::Approx(cfg.lr0));
}

TEST_CASE("train is deterministic given the seed") {
  const auto obs = plane_wave_obs(4, 3);
  auto cfg = small_config();
  cfg.iterations = 40;
  const auto r1 = train(obs, cfg);
  const auto r2 = train(obs, cfg);
  REQUIRE(r1.trace.size() == r2.trace.size());
  for (size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r1.trace[i].total == r2.trace[i].total);
    CHECK(r1.trace[i].data == r2.trace[i].data);
    CHECK(r1.trace[i].pde == r2.trace[i].pde);
  }
  for (size_t l = 0; l < r1.model.real_net.layers.size(); ++l)
    CHECK(r1.model.real_net.layers[l].weights.a ==
          r2.model.real_net.layers[l].weights.a);

  auto cfg2 = cfg;
  cfg2.seed = 2;
  const auto r3 = train(obs, cfg2);
  CHECK(r1.trace.back().total != r3.trace.back().total);
}

TEST_CASE("resampled collocation mode is seeded and deterministic") {
  const auto obs = plane_wave_obs(4, 2);
  auto cfg = small_config();
  cfg.iterations = 10;
  cfg.collocation_mode = CollocationMode::ResampledUniform;
  const auto r1 = train(obs, cfg);
  const auto r2 = train(obs, cfg);
  for (size_t i = 0; i < r1.trace.size(); ++i)
    CHECK(r1.trace[i].pde == r2.trace[i].pde);
}

TEST_CASE("lambda = 0 run has no PDE contribution") {
  const auto obs = plane_wave_obs(4, 2);
  auto cfg = small_config();
  cfg.iterations = 30;
  cfg.lambda_pde = 0.0;
  cfg.rowdy_terms = 0;  // plain sinusoidal data-only ablation
  const auto r = train(obs, cfg);
  for (const auto& row : r.trace) {
    CHECK(row.pde == 0.0);
    CHECK(row.total == row.data);
  }
}

TEST_CASE("non-finite loss aborts with the iteration index") {
  auto obs = plane_wave_obs(4, 1);
  obs.wavenumbers[0] = 1e170;  // kappa^2 overflows -> inf residual
  auto cfg = small_config();
  cfg.iterations = 5;
  cfg.lambda_pde = 1.0;
  bool thrown = false;
  try {
    train(obs, cfg);
  } catch (const NonFiniteLossError& e) {
    thrown = true;
    CHECK(e.iteration == 0);
  }
  CHECK(thrown);
}

TEST_CASE("predict converges on band-limited data and restores scale") {
  auto obs = plane_wave_obs(9, 4);
  // scale observations up to exercise pressure normalization
  for (auto& p : obs.pressures) p *= 37.0;
  TrainConfig cfg;
  cfg.iterations = 800;
  cfg.lr0 = 2e-3;
  cfg.hidden_width = 48;
  cfg.hidden_layers = 2;
  cfg.rowdy_terms = 2;
  cfg.collocation_count = 32;
  cfg.lambda_pde = 1e-8;
  cfg.seed = 3;
  const auto result = train(obs, cfg);

  std::vector<sma::CapsuleDir> targets;
  for (const auto& u : obs.positions) {
    const auto s = sma::to_spherical(u);
    targets.push_back({s.theta, s.phi});
  }
  const auto est = predict(result.model, targets);

  sma::ComplexPressureField ref = est;
  for (int q = 0; q < est.channels(); ++q)
    for (int j = 0; j < est.bins(); ++j)
      ref.at(q, j) = obs.at(q, j);
  const auto rep = evalkit::nmse_freq(est, ref);
  CHECK(rep.overall_db < -20.0);
}

TEST_CASE("predict edge cases") {
  TrainConfig cfg;
  cfg.hidden_width = 8;
  cfg.hidden_layers = 1;
  cfg.rowdy_terms = 1;
  cfg.seed = 4;
  auto model = init_params(cfg, {10.0, 20.0}, 0.042);
  model.pressure_scale = 2.5;

  const auto empty = predict(model, {});
  CHECK(empty.channels() == 0);
  CHECK(empty.bins() == 2);

  std::vector<sma::CapsuleDir> t1 = {{0.3, 0.4}, {1.2, 2.2}, {2.0, 5.0}};
  std::vector<sma::CapsuleDir> t2 = {t1[2], t1[0], t1[1]};
  const auto e1 = predict(model, t1);
  const auto e2 = predict(model, t2);
  for (int j = 0; j < 2; ++j) {
    CHECK(e1.at(0, j) == e2.at(1, j));
    CHECK(e1.at(1, j) == e2.at(2, j));
    CHECK(e1.at(2, j) == e2.at(0, j));
  }
}
