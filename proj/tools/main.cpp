#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "firebench/bench.hpp"
#include "firebench/fidn.hpp"
#include "firebench/metrics.hpp"
#include "firebench/png_io.hpp"
#include "firebench/raster_io.hpp"
#include "firebench/synth.hpp"

namespace fs = std::filesystem;
using namespace firebench;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

struct SplitSpec {
  int train = 0, val = 0, test = 0;
};

SplitSpec parse_split(const std::string& text) {
  SplitSpec s;
  if (std::sscanf(text.c_str(), "%d/%d/%d", &s.train, &s.val, &s.test) != 3)
    throw Error("--split expects train/val/test, e.g. 243/30/30");
  return s;
}

int cmd_gen(const std::string& out_dir, int events, std::uint64_t seed,
            const std::string& split_text, const std::string& config_path,
            int grid, const std::string& generator, bool seed_set,
            bool grid_set, bool generator_set) {
  wb::ScenarioConfig cfg;
  if (!config_path.empty()) cfg = wb::scenario_from_json(slurp(config_path));
  if (seed_set) cfg.seed = seed;
  if (grid_set) {
    cfg.fine_spec.height = cfg.fine_spec.width = grid;
  }
  if (generator_set)
    cfg.generator = generator == "mtt" ? wb::Generator::MTT : wb::Generator::CA;
  SplitSpec split = parse_split(split_text);
  if (split.train + split.val + split.test != events)
    throw Error("--split sizes must sum to --events");

  auto dataset = wb::gen_dataset(cfg, events);
  auto parts = wb::chronological_split(dataset, split.train, split.val,
                                       split.test);

  fs::create_directories(out_dir);
  std::vector<std::string> manifests;
  for (const auto& ev : dataset) {
    std::string dir = out_dir + "/events/" + ev.name;
    write_event(ev, dir);
    manifests.push_back("events/" + ev.name + "/event.json");
  }
  auto write_split = [&](const std::vector<int>& idx, const std::string& name) {
    std::vector<std::string> list;
    for (int i : idx) list.push_back(manifests[i]);
    write_dataset_manifest(list, out_dir + "/" + name + ".json");
  };
  write_split(parts.train, "train");
  write_split(parts.val, "val");
  write_split(parts.test, "test");
  std::ofstream(out_dir + "/scenario.json") << wb::scenario_to_json(cfg);
  // Standalone physics configs so simulate/bench can reuse the generating
  // process directly.
  std::ofstream(out_dir + "/physics_ca.json")
      << ca::ca_config_to_json(cfg.physics);
  std::ofstream(out_dir + "/physics_mtt.json")
      << mtt::ros_params_to_json(cfg.mtt_physics);

  std::cout << "generated " << dataset.size() << " events under " << out_dir
            << " (train " << split.train << ", val " << split.val << ", test "
            << split.test << ")\n";
  return 0;
}

int cmd_train(const std::string& train_manifest, const std::string& val_manifest,
              const std::string& out_dir, const std::string& config_path,
              int epochs, int batch, double lr, bool epochs_set, bool batch_set,
              bool lr_set) {
  fidn::ModelConfig mcfg;
  fidn::TrainSettings settings;
  if (!config_path.empty()) {
    std::string text = slurp(config_path);
    mcfg = fidn::model_config_from_json(text);
    settings = fidn::train_settings_from_json(text);
  }
  if (epochs_set) settings.epochs = epochs;
  if (batch_set) settings.batch = batch;
  if (lr_set) settings.adam.lr = lr;

  auto train_events = load_dataset(train_manifest);
  std::vector<FireEvent> val_events;
  if (!val_manifest.empty()) val_events = load_dataset(val_manifest);

  auto augmented = wb::augment(train_events);
  std::cout << "training on " << augmented.size() << " samples ("
            << train_events.size() << " events x4 rotations), validating on "
            << val_events.size() << " events\n";

  fidn::FidnModel<float> model(mcfg);
  auto result = fidn::train(model, augmented, val_events, settings);

  fs::create_directories(out_dir);
  model.save(out_dir + "/ckpt.bin");
  fidn::write_curves_csv(result.curves, out_dir + "/curves.csv");
  std::ofstream(out_dir + "/model.json") << fidn::model_config_to_json(mcfg);
  std::cout << "best validation BCE " << result.best_val_bce << " at epoch "
            << result.best_epoch << "; checkpoint written to " << out_dir
            << "/ckpt.bin\n";
  return 0;
}

int cmd_predict(const std::string& event_path, const std::string& ckpt_path,
                const std::string& config_path, const std::string& out_prefix) {
  fidn::ModelConfig mcfg;
  if (!config_path.empty())
    mcfg = fidn::model_config_from_json(slurp(config_path));
  FireEvent ev = read_event(event_path);
  fidn::FidnModel<float> model(mcfg);
  model.load(ckpt_path);
  auto pred = model.predict(ev);

  write_mask_pgm(pred.mask, out_prefix + ".pgm");
  const auto& spec = pred.mask.spec;
  std::vector<std::uint8_t> gray(spec.cells());
  for (int i = 0; i < spec.cells(); ++i)
    gray[i] = static_cast<std::uint8_t>(
        std::lround(255.0 * pred.probability[i]));
  write_png_gray8(out_prefix + ".png", spec.width, spec.height, gray);
  std::cout << "predicted burnt area " << burnt_area_km2(pred.mask)
            << " km^2 -> " << out_prefix << ".pgm\n";
  return 0;
}

int cmd_simulate(const std::string& model, const std::string& event_path,
                 const std::string& config_path, int days,
                 const std::string& out_path, const std::string& arrival_path,
                 std::uint64_t seed, bool days_set, bool seed_set) {
  FireEvent ev = read_event(event_path);
  int run_days = days_set ? days : ev.duration_days - 2;

  BurntMask mask;
  if (model == "ca") {
    ca::CAConfig cfg;
    if (!config_path.empty())
      cfg = ca::ca_config_from_json(slurp(config_path));
    if (seed_set) cfg.seed = seed;
    mask = ca::ca_run(ev, cfg, run_days);
  } else if (model == "mtt") {
    mtt::RosParams params;
    if (!config_path.empty())
      params = mtt::ros_params_from_json(slurp(config_path));
    mask = mtt::mtt_run(ev, params, run_days);
    if (!arrival_path.empty()) {
      mtt::RosField ros =
          mtt::build_ros(ev.env, params, ev.day_masks[2].spec);
      mtt::ArrivalField arrival =
          mtt::mtt_arrival(ros, ev.day_masks[2], params.neighborhood);
      write_arrival_f32(arrival, arrival_path,
                        fs::path(arrival_path).replace_extension(".json"));
    }
  } else {
    throw Error("simulate: --model must be ca or mtt");
  }
  write_mask_pgm(mask, out_path);
  std::cout << model << " burnt area after " << run_days << " days: "
            << burnt_area_km2(mask) << " km^2 -> " << out_path << "\n";
  return 0;
}

std::vector<double> load_pred_field(const std::string& path, GridSpec* spec) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".f32") {
    std::string sidecar = path.substr(0, path.size() - 4) + ".json";
    EnvChannel ch = read_channel_f32(path, sidecar, spec);
    return std::vector<double>(ch.values.begin(), ch.values.end());
  }
  BurntMask m = read_mask_pgm(path);
  *spec = m.spec;
  return metrics::to_field(m);
}

int cmd_evaluate(const std::string& truth_path, const std::string& pred_path) {
  BurntMask truth = read_mask_pgm(truth_path);
  GridSpec pred_spec;
  std::vector<double> pred = load_pred_field(pred_path, &pred_spec);

  auto t0 = std::chrono::steady_clock::now();
  metrics::MetricReport r = metrics::evaluate(truth, pred);
  auto t1 = std::chrono::steady_clock::now();
  double runtime = std::chrono::duration<double>(t1 - t0).count();

  std::printf("name,bce,mse,rrmse,ssim,psnr,runtime_s\n");
  std::printf("%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
              stem_of(pred_path).c_str(), r.bce, r.mse, r.rrmse, r.ssim,
              r.psnr, runtime);
  return 0;
}

int cmd_bench(const std::string& dataset_manifest, const std::string& ckpt_path,
              const std::string& model_config_path, const std::string& models,
              const std::string& out_dir, const std::string& ca_config_path,
              const std::string& mtt_config_path, int ensemble, int threads,
              std::uint64_t ca_seed) {
  wb::BenchConfig cfg;
  cfg.models.clear();
  std::stringstream ss(models);
  std::string tok;
  while (std::getline(ss, tok, ',')) cfg.models.push_back(tok);
  if (!ca_config_path.empty())
    cfg.ca_cfg = ca::ca_config_from_json(slurp(ca_config_path));
  if (!mtt_config_path.empty())
    cfg.mtt_cfg = mtt::ros_params_from_json(slurp(mtt_config_path));
  cfg.ca_cfg.seed = ca_seed;
  cfg.ca_ensemble = ensemble;
  cfg.threads = threads;
  cfg.panel_dir = out_dir + "/panels";

  auto events = load_dataset(dataset_manifest);

  wb::MaskPredictor predictor;
  fidn::FidnModel<float>* model = nullptr;
  fidn::FidnModel<float> model_storage{fidn::ModelConfig{}};
  bool want_fidn =
      std::count(cfg.models.begin(), cfg.models.end(), "fidn") > 0;
  if (want_fidn) {
    if (ckpt_path.empty()) throw Error("bench: fidn requires --ckpt");
    fidn::ModelConfig mcfg;
    if (!model_config_path.empty())
      mcfg = fidn::model_config_from_json(slurp(model_config_path));
    model_storage = fidn::FidnModel<float>(mcfg);
    model_storage.load(ckpt_path);
    model = &model_storage;
    predictor = [model](const FireEvent& ev) {
      return model->predict(ev).mask;
    };
  }

  auto report = wb::bench(events, cfg, predictor);
  wb::write_report(report, out_dir);
  std::cout << "benchmark over " << events.size() << " events -> " << out_dir
            << "/rows.csv, summary.md, panels/\n";
  int failures = 0;
  for (const auto& row : report.rows)
    if (!row.ok) {
      ++failures;
      std::cerr << "row error: " << row.event << "/" << row.model << ": "
                << row.error << "\n";
    }
  if (failures) std::cerr << failures << " row(s) failed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"firebench: wildfire final-burnt-area prediction workbench"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic fire dataset");
  std::string gen_out = "dataset", gen_split = "243/30/30", gen_config,
              gen_generator = "ca";
  int gen_events = 303, gen_grid = 64;
  std::uint64_t gen_seed = 0;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--events", gen_events, "number of events to generate");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "scenario seed");
  gen->add_option("--split", gen_split, "train/val/test sizes");
  gen->add_option("--config", gen_config, "scenario JSON (flags override)");
  auto* gen_grid_opt = gen->add_option("--grid", gen_grid, "fine resolution");
  auto* gen_gen_opt = gen->add_option("--generator", gen_generator,
                                      "generating process: ca or mtt");

  // train
  auto* train = app.add_subcommand("train", "train the prediction network");
  std::string train_manifest, train_val, train_out = "run", train_config;
  int train_epochs = 30, train_batch = 4;
  double train_lr = 1e-3;
  train->add_option("--train", train_manifest, "training manifest")->required();
  train->add_option("--val", train_val, "validation manifest");
  train->add_option("--out", train_out, "output directory");
  train->add_option("--config", train_config,
                    "model + optimizer JSON (flags override)");
  auto* epochs_opt = train->add_option("--epochs", train_epochs, "epochs");
  auto* batch_opt = train->add_option("--batch", train_batch, "batch size");
  auto* lr_opt = train->add_option("--lr", train_lr, "learning rate");

  // predict
  auto* predict = app.add_subcommand("predict", "predict one event");
  std::string pr_event, pr_ckpt, pr_config, pr_out = "prediction";
  predict->add_option("--event", pr_event, "event manifest")->required();
  predict->add_option("--ckpt", pr_ckpt, "checkpoint")->required();
  predict->add_option("--model-config", pr_config, "model JSON");
  predict->add_option("--out", pr_out, "output prefix");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a physics baseline");
  std::string sim_model, sim_event, sim_config, sim_out = "simulated.pgm",
              sim_arrival;
  int sim_days = 0;
  std::uint64_t sim_seed = 0;
  simulate->add_option("--model", sim_model, "ca or mtt")->required();
  simulate->add_option("--event", sim_event, "event manifest")->required();
  simulate->add_option("--config", sim_config, "model parameter JSON");
  auto* days_opt = simulate->add_option("--days", sim_days,
                                        "days to simulate from day 2 "
                                        "(default: event duration - 2)");
  simulate->add_option("--out", sim_out, "output mask path");
  simulate->add_option("--arrival", sim_arrival,
                       "arrival-field dump path (mtt only, .f32)");
  auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "CA seed");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "metrics for a prediction");
  std::string ev_truth, ev_pred;
  evaluate->add_option("--truth", ev_truth, "true mask PGM")->required();
  evaluate->add_option("--pred", ev_pred, "predicted mask PGM or field .f32")
      ->required();

  // bench
  auto* bench = app.add_subcommand("bench", "compare models on a dataset");
  std::string be_dataset, be_ckpt, be_mcfg, be_models = "fidn,ca,mtt,persistence",
              be_out = "report", be_ca_cfg, be_mtt_cfg;
  int be_ensemble = 100, be_threads = 1;
  std::uint64_t be_ca_seed = 99;
  bench->add_option("--dataset", be_dataset, "dataset manifest")->required();
  bench->add_option("--ckpt", be_ckpt, "trained checkpoint");
  bench->add_option("--model-config", be_mcfg, "model JSON");
  bench->add_option("--models", be_models, "comma list of models");
  bench->add_option("--out", be_out, "report directory");
  bench->add_option("--ca-config", be_ca_cfg, "CA parameter JSON");
  bench->add_option("--mtt-config", be_mtt_cfg, "MTT parameter JSON");
  bench->add_option("--ensemble", be_ensemble, "CA ensemble size");
  bench->add_option("--threads", be_threads, "worker threads");
  bench->add_option("--ca-seed", be_ca_seed, "CA base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (gen->parsed())
      return cmd_gen(gen_out, gen_events, gen_seed, gen_split, gen_config,
                     gen_grid, gen_generator, gen_seed_opt->count() > 0,
                     gen_grid_opt->count() > 0, gen_gen_opt->count() > 0);
    if (train->parsed())
      return cmd_train(train_manifest, train_val, train_out, train_config,
                       train_epochs, train_batch, train_lr,
                       epochs_opt->count() > 0, batch_opt->count() > 0,
                       lr_opt->count() > 0);
    if (predict->parsed())
      return cmd_predict(pr_event, pr_ckpt, pr_config, pr_out);
    if (simulate->parsed())
      return cmd_simulate(sim_model, sim_event, sim_config, sim_days, sim_out,
                          sim_arrival, sim_seed, days_opt->count() > 0,
                          sim_seed_opt->count() > 0);
    if (evaluate->parsed()) return cmd_evaluate(ev_truth, ev_pred);
    if (bench->parsed())
      return cmd_bench(be_dataset, be_ckpt, be_mcfg, be_models, be_out,
                       be_ca_cfg, be_mtt_cfg, be_ensemble, be_threads,
                       be_ca_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
