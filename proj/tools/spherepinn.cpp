// spherepinn CLI: synthesize reference sound fields, extract capsule
// subsets, train the physics-informed upsampler, run baseline/PINN
// comparisons, and evaluate NMSE between artifacts.
//
// Exit codes: 0 ok, 2 config error, 3 synthesis failure, 4 data mismatch,
// 5 training abort. SPHEREPINN_LOG in {error, info, debug} controls logging.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spherepinn/experiment.hpp"

namespace {

using namespace spherepinn;

experiment::ExperimentConfig load_config_with_overrides(
    const std::string& config_path, long seed, const std::string& out,
    int jobs) {
  experiment::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = experiment::load_config(config_path);
  if (seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.train.seed = cfg.seed;
  }
  if (!out.empty()) cfg.out_dir = out;
  if (jobs > 0) cfg.jobs = jobs;
  return cfg;
}

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const SynthesisError& e) {
    std::fprintf(stderr, "synthesis error: %s\n", e.what());
    return 3;
  } catch (const ShapeMismatchError& e) {
    std::fprintf(stderr, "data mismatch: %s\n", e.what());
    return 4;
  } catch (const NonFiniteLossError& e) {
    std::fprintf(stderr, "training aborted: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "spherepinn: spherical-microphone-array spatial upsampling with a "
      "physics-informed sinusoidal network and an SH interpolation baseline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  long seed = -1;
  int jobs = 0;
  app.add_option("--config", config_path, "JSON experiment configuration");
  app.add_option("--seed", seed, "override the experiment seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "parallel jobs for independent subsets");

  // synth
  auto* synth_cmd =
      app.add_subcommand("synth", "synthesize the reference field and signals");

  // run
  auto* run_cmd = app.add_subcommand(
      "run", "full experiment: subsets -> methods -> NMSE report");

  // eval
  std::string est_path, ref_path;
  auto* eval_cmd =
      app.add_subcommand("eval", "NMSE between two artifacts of the same kind");
  eval_cmd->add_option("estimate", est_path, "estimate file")->required();
  eval_cmd->add_option("reference", ref_path, "reference file")->required();

  // subset
  int subset_q = 0;
  std::string subset_geometry, subset_out;
  auto* subset_cmd =
      app.add_subcommand("subset", "deterministic maximin capsule subset");
  subset_cmd->add_option("-q,--count", subset_q, "capsules to keep")->required();
  subset_cmd->add_option("--geometry", subset_geometry,
                         "geometry file (default: built-in 32)");
  subset_cmd->add_option("--write", subset_out, "write subset geometry here");

  // train
  std::string train_field, train_model_out, train_trace_out;
  auto* train_cmd =
      app.add_subcommand("train", "train the PINN on a field file");
  train_cmd->add_option("field", train_field, "observation field file")
      ->required();
  train_cmd->add_option("--model", train_model_out, "output model path")
      ->required();
  train_cmd->add_option("--trace", train_trace_out, "loss trace CSV path");

  // predict
  std::string predict_model, predict_geometry, predict_out;
  double predict_fs = 0.0;
  long predict_length = 0;
  auto* predict_cmd =
      app.add_subcommand("predict", "evaluate a trained model at directions");
  predict_cmd->add_option("model", predict_model, "model file")->required();
  predict_cmd->add_option("--geometry", predict_geometry,
                          "target geometry file (default: built-in 32)");
  predict_cmd->add_option("--field", predict_out, "output field path")
      ->required();
  predict_cmd->add_option("--fs", predict_fs,
                          "also write signals at this sample rate");
  predict_cmd->add_option("--length", predict_length,
                          "signal length for --fs");

  CLI11_PARSE(app, argc, argv);

  return run_guarded([&] {
    auto cfg = load_config_with_overrides(config_path, seed, out_dir, jobs);

    if (synth_cmd->parsed()) {
      experiment::cmd_synth(cfg);
      return;
    }
    if (run_cmd->parsed()) {
      experiment::cmd_run(cfg);
      return;
    }
    if (eval_cmd->parsed()) {
      experiment::cmd_eval(est_path, ref_path, cfg.out_dir);
      return;
    }
    if (subset_cmd->parsed()) {
      const auto geometry = subset_geometry.empty()
                                ? sma::pentakis32_geometry()
                                : io::read_geometry(subset_geometry);
      if (subset_q < 1 || subset_q > geometry.size())
        throw ConfigError("subset count out of range");
      auto [sub, indices] = sma::subset_select(geometry, subset_q);
      std::printf("indices:");
      for (int i : indices) std::printf(" %d", i);
      std::printf("\n");
      if (!subset_out.empty()) io::write_geometry(sub, subset_out);
      return;
    }
    if (train_cmd->parsed()) {
      const auto field = io::read_field(train_field);
      pinn::ObservationSet obs;
      obs.radius = field.geometry.radius;
      obs.wavenumbers = field.wavenumbers;
      for (int q = 0; q < field.channels(); ++q)
        obs.positions.push_back(field.geometry.capsule_unit(q));
      obs.pressures = field.pressures;
      const auto result = pinn::train(obs, cfg.train);
      io::write_model(result.model, train_model_out);
      if (!train_trace_out.empty()) {
        io::CsvWriter trace(train_trace_out, "loss-trace",
                            {"iteration", "total", "data", "pde", "lr"});
        for (const auto& row : result.trace)
          trace.row({std::to_string(row.iteration), io::fmt_double(row.total),
                     io::fmt_double(row.data), io::fmt_double(row.pde),
                     io::fmt_double(row.lr)});
      }
      std::printf("trained %ld iterations, final loss %.6g, model: %s\n",
                  cfg.train.iterations,
                  result.trace.empty() ? 0.0 : result.trace.back().total,
                  train_model_out.c_str());
      return;
    }
    if (predict_cmd->parsed()) {
      const auto model = io::read_model(predict_model);
      const auto geometry = predict_geometry.empty()
                                ? sma::pentakis32_geometry()
                                : io::read_geometry(predict_geometry);
      auto field = pinn::predict(model, geometry.capsules);
      field.geometry = geometry;
      field.medium_c = cfg.medium_c;
      if (predict_fs > 0.0 && predict_length > 0) {
        field.time_fs = predict_fs;
        field.time_length = predict_length;
      }
      io::write_field(field, predict_out);
      if (predict_fs > 0.0 && predict_length > 0) {
        const auto sig = evalkit::freq_to_time(field, predict_fs, predict_length);
        const auto dot = predict_out.find_last_of('.');
        const std::string base =
            dot == std::string::npos ? predict_out : predict_out.substr(0, dot);
        io::write_signals(sig, base + ".sig");
      }
      std::printf("predicted field: %s (%d channels, %d bins)\n",
                  predict_out.c_str(), field.channels(), field.bins());
      return;
    }
  });
}
