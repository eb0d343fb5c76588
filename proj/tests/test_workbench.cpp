#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "firebench/bench.hpp"
#include "firebench/raster_io.hpp"
#include "firebench/synth.hpp"
#include "test_util.hpp"

using namespace firebench;
namespace fs = std::filesystem;

namespace {

wb::ScenarioConfig small_scenario(std::uint64_t seed) {
  wb::ScenarioConfig cfg;
  cfg.fine_spec = GridSpec{32, 32, 0.026};
  cfg.min_final_area_px = 40;
  cfg.seed = seed;
  return cfg;
}

bool events_equal(const FireEvent& a, const FireEvent& b) {
  if (a.name != b.name || a.year != b.year ||
      a.duration_days != b.duration_days)
    return false;
  for (int d = 0; d < 3; ++d)
    if (a.day_masks[d].cells != b.day_masks[d].cells) return false;
  if (a.final_mask.cells != b.final_mask.cells) return false;
  if (a.env.channels.size() != b.env.channels.size()) return false;
  for (size_t c = 0; c < a.env.channels.size(); ++c)
    if (a.env.channels[c].values != b.env.channels[c].values) return false;
  return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) fields.push_back(tok);
  return fields;
}

}  // namespace

TEST_CASE("generated events satisfy the event invariants") {
  auto events = wb::gen_dataset(small_scenario(3), 8);
  REQUIRE(events.size() == 8);
  for (const auto& ev : events) {
    ev.validate();  // throws on violation
    CHECK(ev.duration_days > 4);
    CHECK(ev.final_mask.count() >= 40);
    CHECK(ev.day_masks[2].subset_of(ev.final_mask));
  }
}

TEST_CASE("generation is deterministic in the seed") {
  auto a = wb::gen_dataset(small_scenario(11), 4);
  auto b = wb::gen_dataset(small_scenario(11), 4);
  auto c = wb::gen_dataset(small_scenario(12), 4);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) REQUIRE(events_equal(a[i], b[i]));
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!events_equal(a[i], c[i])) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("impossible scenario trips the rejection guard") {
  wb::ScenarioConfig cfg = small_scenario(5);
  cfg.min_final_area_px = 32 * 32 + 1;  // cannot be met
  CHECK_THROWS_AS(wb::gen_dataset(cfg, 1), Error);
}

TEST_CASE("mtt generator mode produces valid events") {
  wb::ScenarioConfig cfg = small_scenario(19);
  cfg.generator = wb::Generator::MTT;
  auto events = wb::gen_dataset(cfg, 3);
  for (const auto& ev : events) {
    ev.validate();
    CHECK(ev.duration_days > 4);
  }
}

TEST_CASE("augmentation quadruples the dataset and keeps invariants") {
  auto events = wb::gen_dataset(small_scenario(7), 5);
  auto aug = wb::augment(events);
  REQUIRE(aug.size() == 20);
  for (const auto& ev : aug) ev.validate();
  CHECK(aug[0].name == events[0].name);
  CHECK(aug[1].name == events[0].name + "_r90");
  CHECK(aug[2].name == events[0].name + "_r180");
  CHECK(aug[3].name == events[0].name + "_r270");
  // Rotations preserve burnt area.
  for (int k = 1; k < 4; ++k)
    CHECK(burnt_area_km2(aug[k].final_mask) ==
          doctest::Approx(burnt_area_km2(events[0].final_mask)));

  auto one = wb::augment({events[0]});
  CHECK(one.size() == 4);
}

TEST_CASE("chronological split follows the year tags") {
  auto events = wb::gen_dataset(small_scenario(9), 10);
  auto split = wb::chronological_split(events, 6, 2, 2);
  REQUIRE(split.train.size() == 6);
  REQUIRE(split.val.size() == 2);
  REQUIRE(split.test.size() == 2);
  int last_train_year = 0;
  for (int i : split.train)
    last_train_year = std::max(last_train_year, events[i].year);
  for (int i : split.val) CHECK(events[i].year >= last_train_year);
  CHECK_THROWS_AS(wb::chronological_split(events, 9, 2, 2), Error);
}

TEST_CASE("bench runs the physics models and proves input fairness") {
  auto events = wb::gen_dataset(small_scenario(13), 4);
  auto dir = fbtest::temp_dir("bench");

  wb::BenchConfig cfg;
  cfg.models = {"ca", "mtt", "persistence"};
  cfg.ca_cfg = small_scenario(13).physics;
  cfg.ca_cfg.seed = 400;
  cfg.ca_ensemble = 8;
  cfg.panel_dir = dir + "/panels";
  auto report = wb::bench(events, cfg, nullptr);

  REQUIRE(report.rows.size() == events.size() * 3);
  std::map<std::string, std::vector<const wb::BenchRow*>> by_event;
  for (const auto& row : report.rows) {
    REQUIRE(row.ok);
    by_event[row.event].push_back(&row);
    if (row.model == "ca" || row.model == "mtt")
      CHECK(row.duration_given);
    else
      CHECK_FALSE(row.duration_given);
    CHECK(row.runtime_s >= 0.0);
  }
  // Identical inputs per event across models.
  for (const auto& [name, rows] : by_event) {
    REQUIRE(rows.size() == 3);
    for (const auto* row : rows)
      CHECK(row->input_hash == rows[0]->input_hash);
  }
  // The persistence row is the exact day-2 floor.
  for (const auto& ev : events) {
    for (const auto* row : by_event[ev.name])
      if (row->model == "persistence") {
        auto expected = metrics::evaluate(ev.final_mask, ev.day_masks[2]);
        CHECK(row->m.mse == doctest::Approx(expected.mse).epsilon(1e-12));
      }
  }
  for (const auto& ev : events)
    CHECK(fs::exists(dir + "/panels/" + ev.name + ".png"));

  // Summary statistics recomputed by an independent pass.
  wb::write_report(report, dir);
  for (const auto& s : report.summary) {
    std::vector<double> xs;
    for (const auto& row : report.rows) {
      if (row.model != s.model) continue;
      if (s.metric == "mse") xs.push_back(row.m.mse);
      if (s.metric == "ssim") xs.push_back(row.m.ssim);
      if (s.metric == "runtime_s") xs.push_back(row.runtime_s);
    }
    if (xs.empty()) continue;
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    REQUIRE(s.mean == doctest::Approx(mean).epsilon(1e-12));
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    double sd = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
    REQUIRE(s.stddev == doctest::Approx(sd).epsilon(1e-12));
  }

  // The emitted CSV re-parses to the exact values printed.
  std::ifstream f(dir + "/rows.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header ==
        "event,model,bce,mse,rrmse,ssim,psnr,runtime_s,input_hash,"
        "duration_given,error");
  size_t row_idx = 0;
  std::string line;
  while (std::getline(f, line)) {
    auto fields = split_csv_line(line);
    REQUIRE(fields.size() >= 10);
    const auto& row = report.rows[row_idx++];
    CHECK(std::abs(std::stod(fields[2]) - row.m.bce) <= 1e-12);
    CHECK(std::abs(std::stod(fields[3]) - row.m.mse) <= 1e-12);
    CHECK(std::abs(std::stod(fields[5]) - row.m.ssim) <= 1e-12);
    CHECK(fields[8] == row.input_hash);
  }
  CHECK(row_idx == report.rows.size());
  CHECK(fs::exists(dir + "/summary.md"));
}

TEST_CASE("persistence is always included and row failures do not abort") {
  auto events = wb::gen_dataset(small_scenario(17), 2);
  wb::BenchConfig cfg;
  cfg.models = {"fidn", "mtt"};  // no persistence listed
  cfg.ca_ensemble = 2;
  int calls = 0;
  auto flaky = [&calls, &events](const FireEvent& ev) -> BurntMask {
    if (++calls == 1) throw Error("synthetic model failure");
    return ev.day_masks[2];
  };
  auto report = wb::bench(events, cfg, flaky);
  REQUIRE(report.rows.size() == events.size() * 3);  // fidn, mtt, persistence
  int errors = 0, persistence_rows = 0, ok_rows = 0;
  for (const auto& row : report.rows) {
    if (!row.ok) {
      ++errors;
      CHECK(row.error == "synthetic model failure");
    } else {
      ++ok_rows;
    }
    if (row.model == "persistence") ++persistence_rows;
  }
  CHECK(errors == 1);
  CHECK(persistence_rows == static_cast<int>(events.size()));
  CHECK(ok_rows == static_cast<int>(report.rows.size()) - 1);
}

TEST_CASE("bench requires a predictor when the learned model is requested") {
  auto events = wb::gen_dataset(small_scenario(15), 1);
  wb::BenchConfig cfg;
  cfg.models = {"fidn"};
  CHECK_THROWS_AS(wb::bench(events, cfg, nullptr), Error);
  cfg.models = {"nonsense"};
  CHECK_THROWS_AS(wb::bench(events, cfg, nullptr), Error);
}

TEST_CASE("quantile helper uses linear interpolation") {
  std::vector<double> xs{4.0, 1.0, 3.0, 2.0};
  CHECK(wb::quantile(xs, 0.5) == doctest::Approx(2.5));
  CHECK(wb::quantile(xs, 0.0) == doctest::Approx(1.0));
  CHECK(wb::quantile(xs, 1.0) == doctest::Approx(4.0));
  CHECK(wb::quantile(xs, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("scenario JSON round trip") {
  wb::ScenarioConfig cfg = small_scenario(23);
  cfg.wind_speed = 5.5;
  cfg.generator = wb::Generator::MTT;
  cfg.physics.p_h = 0.41;
  wb::ScenarioConfig back = wb::scenario_from_json(wb::scenario_to_json(cfg));
  CHECK(back.fine_spec.height == 32);
  CHECK(back.wind_speed == 5.5);
  CHECK(back.generator == wb::Generator::MTT);
  CHECK(back.physics.p_h == 0.41);
  CHECK(back.seed == cfg.seed);
}

// End-to-end CLI checks; the binary path arrives via the environment.
TEST_CASE("cli surface: exit codes and artifacts") {
  const char* cli = std::getenv("FIREBENCH_CLI");
  if (!cli) return;  // library-only run
  auto dir = fbtest::temp_dir("cli");
  std::string base = std::string(cli);
  auto run = [&](const std::string& args) {
    std::string cmd = base + " " + args + " >" + dir + "/out.txt 2>" + dir +
                      "/err.txt";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };

  CHECK(run("--definitely-not-a-flag") == 1);
  CHECK(run("gen --events 5 --split 9/9/9 --out " + dir + "/d") == 2);
  CHECK(run("evaluate --truth missing.pgm --pred missing.pgm") == 2);

  CHECK(run("gen --events 6 --split 4/1/1 --grid 32 --seed 3 --out " + dir +
            "/data") == 0);
  CHECK(fs::exists(dir + "/data/train.json"));
  CHECK(fs::exists(dir + "/data/val.json"));
  CHECK(fs::exists(dir + "/data/test.json"));
  auto train_list = read_dataset_manifest(dir + "/data/train.json");
  CHECK(train_list.size() == 4);

  // Pick one event for simulate/evaluate round trips.
  auto events = read_dataset_manifest(dir + "/data/test.json");
  REQUIRE(events.size() == 1);
  std::string ev_manifest = dir + "/data/" + events[0];

  CHECK(run("simulate --model mtt --event " + ev_manifest + " --out " + dir +
            "/mtt.pgm --arrival " + dir + "/arrival.f32") == 0);
  CHECK(fs::exists(dir + "/mtt.pgm"));
  CHECK(fs::exists(dir + "/arrival.f32"));
  CHECK(run("simulate --model ca --event " + ev_manifest + " --out " + dir +
            "/ca.pgm --seed 5") == 0);

  // evaluate of a mask against itself: ssim 1, mse 0, psnr inf.
  fs::path truth = fs::path(ev_manifest).parent_path() / "final.pgm";
  CHECK(run("evaluate --truth " + truth.string() + " --pred " +
            truth.string()) == 0);
  std::ifstream out(dir + "/out.txt");
  std::string header, row;
  std::getline(out, header);
  std::getline(out, row);
  auto fields = split_csv_line(row);
  REQUIRE(fields.size() == 7);
  CHECK(std::stod(fields[2]) == 0.0);          // mse
  CHECK(std::stod(fields[4]) == 1.0);          // ssim
  CHECK(std::isinf(std::stod(fields[5])));     // psnr sentinel

  CHECK(run("bench --dataset " + dir + "/data/test.json --models "
            "ca,mtt,persistence --ensemble 4 --out " + dir + "/report") == 0);
  CHECK(fs::exists(dir + "/report/rows.csv"));
  CHECK(fs::exists(dir + "/report/summary.md"));
}
