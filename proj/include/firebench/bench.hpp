#pragma once

#include <functional>
#include <string>
#include <vector>

#include "firebench/ca.hpp"
#include "firebench/metrics.hpp"
#include "firebench/mtt.hpp"
#include "firebench/raster.hpp"

// Three-model comparison harness. Every model consumes the identical day-2
// mask and driver stack per event (proved by hashing the consumed inputs
// into each row); CA and MTT additionally receive the true remaining
// duration, the learned model does not. Runtime brackets the prediction
// call only, never file I/O.
namespace firebench::wb {

struct BenchRow {
  std::string event;
  std::string model;
  metrics::MetricReport m;
  double runtime_s = 0;
  std::string input_hash;
  bool duration_given = false;
  bool ok = true;
  std::string error;
};

struct SummaryEntry {
  std::string model;
  std::string metric;
  double mean = 0, stddev = 0, median = 0, iqr = 0;
  int n = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<SummaryEntry> summary;
};

struct BenchConfig {
  // The persistence floor row is always included, listed or not.
  std::vector<std::string> models{"fidn", "ca", "mtt", "persistence"};
  ca::CAConfig ca_cfg;
  // The CA prediction is the cell-wise majority over a seeded Monte Carlo
  // ensemble of this many runs.
  int ca_ensemble = 100;
  mtt::RosParams mtt_cfg;
  int threads = 1;
  std::string panel_dir;  // empty = no panel images
};

// Learned-model hook: returns the predicted mask for one event.
using MaskPredictor = std::function<BurntMask(const FireEvent&)>;

// FNV-1a 64 over the day-2 mask cells and every env channel (name and
// float32 payload) in stored order; hex string.
std::string hash_event_inputs(const BurntMask& day2, const EnvStack& env);

BenchReport bench(const std::vector<FireEvent>& events, const BenchConfig& cfg,
                  MaskPredictor fidn_predictor);

// rows.csv and summary.md under outdir (created if needed).
void write_report(const BenchReport& report, const std::string& outdir);

// Sample statistics used by the summary (stddev with n-1; median and IQR by
// linear interpolation between order statistics).
double sample_mean(const std::vector<double>& xs);
double sample_stddev(const std::vector<double>& xs);
double quantile(std::vector<double> xs, double p);

std::vector<SummaryEntry> summarize(const std::vector<BenchRow>& rows);

}  // namespace firebench::wb
