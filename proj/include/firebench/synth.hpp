#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "firebench/ca.hpp"
#include "firebench/mtt.hpp"
#include "firebench/raster.hpp"

// Synthetic fire-event generation. Driver stacks are synthesized from
// seeded value noise at the coarse resolution; events are produced by
// running a spread model from random ignitions until extinction or a day
// cap, recording the day-0..2 and final masks. The default generating
// process is the cellular automaton, which gives that baseline an inherent
// advantage in benchmarks; the MTT generator mode exists to test the
// surrogate off-distribution.
namespace firebench::wb {

enum class Generator { CA, MTT };

struct ScenarioConfig {
  GridSpec fine_spec{64, 64, 0.026};
  int coarse_factor = 4;

  double terrain_amplitude_m = 300;  // relief of the synthetic elevation
  double terrain_roughness = 0.55;   // octave persistence in (0,1)
  double veg_noise_scale = 0.35;     // vegetation field variability
  int water_bodies = 2;
  double wind_speed = 3.0;           // m/s
  double wind_dir_deg = 45.0;        // blowing-toward, CCW from east
  int ignition_count = 1;
  std::string ignition_rule = "center_jitter";  // center|center_jitter|uniform
  double ignition_jitter_frac = 0.0625;         // sigma as fraction of size

  // Spread per simulated day is grid-relative; at desk scale two CA steps
  // per day keep multi-week fires inside a 64-cell grid. The generation
  // factor maps penalize sparse fuel harder than the classic calibration so
  // sparse belts can stop a front and durations spread out.
  ScenarioConfig() {
    physics.steps_per_day = 2;
    physics.veg_factor = ca::FactorMap{{0.25, 0.6}, {-0.5, 0.0, 0.4}};
    physics.den_factor = ca::FactorMap{{0.35, 0.7}, {-0.6, 0.0, 0.3}};
    mtt_physics.r0 = 1.0;  // desk calibration against generated events
  }

  Generator generator = Generator::CA;
  ca::CAConfig physics;         // generating process (CA mode)
  mtt::RosParams mtt_physics;   // generating process (MTT mode)
  int day_cap = 30;
  int min_duration_days = 5;    // selection rule: duration > 4
  double min_final_area_px = 100;
  int start_year = 2001;
  int years = 10;               // events are spread over this many tags
  std::uint64_t seed = 0;

  GridSpec coarse_spec() const {
    return GridSpec{fine_spec.height / coarse_factor,
                    fine_spec.width / coarse_factor,
                    fine_spec.pixel_area * coarse_factor * coarse_factor};
  }
  void validate() const;
};

ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& cfg);

// Synthesizes one driver stack at the coarse resolution.
EnvStack synth_env(const ScenarioConfig& cfg, std::uint64_t seed);

// Generates exactly n_events accepted events (duration > 4 and final area
// above the floor); throws if the rejection rate exceeds 99%.
std::vector<FireEvent> gen_dataset(const ScenarioConfig& cfg, int n_events);

// Original events plus their three quarter-turn rotations; output size is
// exactly 4x the input. Intended for the training split only.
std::vector<FireEvent> augment(const std::vector<FireEvent>& events);

// Chronological split by the synthetic year tag (ties broken by index):
// first n_train events, then n_val, then the rest.
struct Split {
  std::vector<int> train, val, test;
};
Split chronological_split(const std::vector<FireEvent>& events, int n_train,
                          int n_val, int n_test);

}  // namespace firebench::wb
