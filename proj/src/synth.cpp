#include "firebench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "firebench/rng.hpp"
#include "json.hpp"

using nlohmann::json;

namespace firebench::wb {

void ScenarioConfig::validate() const {
  fine_spec.validate();
  if (coarse_factor < 1 || fine_spec.height % coarse_factor != 0 ||
      fine_spec.width % coarse_factor != 0)
    throw Error("ScenarioConfig: coarse_factor must divide the fine grid");
  if (ignition_count < 1) throw Error("ScenarioConfig: ignition_count < 1");
  if (ignition_rule != "center" && ignition_rule != "center_jitter" &&
      ignition_rule != "uniform")
    throw Error("ScenarioConfig: unknown ignition rule '" + ignition_rule +
                "'");
  if (day_cap < min_duration_days)
    throw Error("ScenarioConfig: day_cap below the minimum duration");
  physics.validate();
  mtt_physics.validate();
}

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("ScenarioConfig: ") + e.what());
  }
  ScenarioConfig cfg;
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    cfg.fine_spec.height = g.value("height", cfg.fine_spec.height);
    cfg.fine_spec.width = g.value("width", cfg.fine_spec.width);
    cfg.fine_spec.pixel_area = g.value("pixel_area", cfg.fine_spec.pixel_area);
    cfg.coarse_factor = g.value("coarse_factor", cfg.coarse_factor);
  }
  cfg.terrain_amplitude_m = j.value("terrain_amplitude_m", cfg.terrain_amplitude_m);
  cfg.terrain_roughness = j.value("terrain_roughness", cfg.terrain_roughness);
  cfg.veg_noise_scale = j.value("veg_noise_scale", cfg.veg_noise_scale);
  cfg.water_bodies = j.value("water_bodies", cfg.water_bodies);
  cfg.wind_speed = j.value("wind_speed", cfg.wind_speed);
  cfg.wind_dir_deg = j.value("wind_dir_deg", cfg.wind_dir_deg);
  cfg.ignition_count = j.value("ignition_count", cfg.ignition_count);
  cfg.ignition_rule = j.value("ignition_rule", cfg.ignition_rule);
  cfg.ignition_jitter_frac = j.value("ignition_jitter_frac", cfg.ignition_jitter_frac);
  if (j.contains("generator")) {
    std::string g = j["generator"].get<std::string>();
    if (g == "ca")
      cfg.generator = Generator::CA;
    else if (g == "mtt")
      cfg.generator = Generator::MTT;
    else
      throw Error("ScenarioConfig: unknown generator '" + g + "'");
  }
  if (j.contains("physics")) cfg.physics = ca::ca_config_from_json(j["physics"].dump());
  if (j.contains("mtt_physics"))
    cfg.mtt_physics = mtt::ros_params_from_json(j["mtt_physics"].dump());
  cfg.day_cap = j.value("day_cap", cfg.day_cap);
  cfg.min_duration_days = j.value("min_duration_days", cfg.min_duration_days);
  cfg.min_final_area_px = j.value("min_final_area_px", cfg.min_final_area_px);
  cfg.start_year = j.value("start_year", cfg.start_year);
  cfg.years = j.value("years", cfg.years);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j{{"grid",
          {{"height", cfg.fine_spec.height},
           {"width", cfg.fine_spec.width},
           {"pixel_area", cfg.fine_spec.pixel_area},
           {"coarse_factor", cfg.coarse_factor}}},
         {"terrain_amplitude_m", cfg.terrain_amplitude_m},
         {"terrain_roughness", cfg.terrain_roughness},
         {"veg_noise_scale", cfg.veg_noise_scale},
         {"water_bodies", cfg.water_bodies},
         {"wind_speed", cfg.wind_speed},
         {"wind_dir_deg", cfg.wind_dir_deg},
         {"ignition_count", cfg.ignition_count},
         {"ignition_rule", cfg.ignition_rule},
         {"ignition_jitter_frac", cfg.ignition_jitter_frac},
         {"generator", cfg.generator == Generator::CA ? "ca" : "mtt"},
         {"physics", json::parse(ca::ca_config_to_json(cfg.physics))},
         {"mtt_physics", json::parse(mtt::ros_params_to_json(cfg.mtt_physics))},
         {"day_cap", cfg.day_cap},
         {"min_duration_days", cfg.min_duration_days},
         {"min_final_area_px", cfg.min_final_area_px},
         {"start_year", cfg.start_year},
         {"years", cfg.years},
         {"seed", cfg.seed}};
  return j.dump(2);
}

namespace {

// Octaved value noise in [0,1]: random lattices bilinearly upsampled and
// blended with geometric weights, then min-max normalized.
std::vector<float> noise_field(const GridSpec& spec, int base_cells,
                               int octaves, double persistence,
                               SplitMix64& rng) {
  std::vector<double> acc(spec.cells(), 0.0);
  double weight = 1.0;
  for (int o = 0; o < octaves; ++o) {
    int res = std::min(base_cells << o, std::max(spec.height, spec.width));
    GridSpec lattice{res, res, 1.0};
    std::vector<double> vals(lattice.cells());
    for (auto& v : vals) v = rng.uniform();
    auto up = resample(vals, lattice, spec, ResampleMode::Bilinear);
    for (int i = 0; i < spec.cells(); ++i) acc[i] += weight * up[i];
    weight *= persistence;
  }
  auto [lo_it, hi_it] = std::minmax_element(acc.begin(), acc.end());
  double lo = *lo_it, hi = *hi_it;
  double span = hi > lo ? hi - lo : 1.0;
  std::vector<float> out(acc.size());
  for (size_t i = 0; i < acc.size(); ++i)
    out[i] = static_cast<float>((acc[i] - lo) / span);
  return out;
}

float clamp01(double v) {
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

}  // namespace

EnvStack synth_env(const ScenarioConfig& cfg, std::uint64_t seed) {
  GridSpec spec = cfg.coarse_spec();
  SplitMix64 rng(seed);

  // Elevation and its gradient-derived slope.
  auto elev_n = noise_field(spec, 3, 4, cfg.terrain_roughness, rng);
  std::vector<double> elev(spec.cells());
  for (int i = 0; i < spec.cells(); ++i)
    elev[i] = elev_n[i] * cfg.terrain_amplitude_m;

  std::vector<float> slope(spec.cells());
  const double cell_m = spec.cell_size_m();
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c) {
      int rm = std::max(r - 1, 0), rp = std::min(r + 1, spec.height - 1);
      int cm = std::max(c - 1, 0), cp = std::min(c + 1, spec.width - 1);
      double dz_dy = (elev[rp * spec.width + c] - elev[rm * spec.width + c]) /
                     ((rp - rm) * cell_m);
      double dz_dx = (elev[r * spec.width + cp] - elev[r * spec.width + cm]) /
                     ((cp - cm) * cell_m);
      double s = std::atan(std::hypot(dz_dx, dz_dy)) * 180.0 / M_PI;
      slope[r * spec.width + c] = static_cast<float>(std::min(s, 89.0));
    }

  auto fuel_n = noise_field(spec, 3, 3, 0.5, rng);
  auto mix_n = noise_field(spec, 2, 2, 0.5, rng);
  auto bare_n = noise_field(spec, 3, 2, 0.5, rng);
  auto precip_n = noise_field(spec, 2, 3, 0.5, rng);

  std::vector<float> tree(spec.cells()), grass(spec.cells()),
      bare(spec.cells()), snow(spec.cells()), water(spec.cells(), 0.0f);
  double high = cfg.terrain_amplitude_m * 0.88;
  for (int i = 0; i < spec.cells(); ++i) {
    // Skewed noise keeps real sparse belts between dense patches so fires
    // can stall and die instead of percolating forever.
    double base = std::pow(fuel_n[i], 1.0 + 2.0 * cfg.veg_noise_scale);
    double fuel = std::clamp(1.05 * base, 0.0, 0.95);
    tree[i] = clamp01(fuel * mix_n[i]);
    grass[i] = clamp01(fuel * (1.0 - mix_n[i]));
    bare[i] = clamp01(0.75 * bare_n[i] * (1.0 - fuel));
    snow[i] = clamp01((elev[i] - high) / (cfg.terrain_amplitude_m - high + 1.0));
  }

  // Water bodies: elliptical blobs.
  for (int b = 0; b < cfg.water_bodies; ++b) {
    double cr = rng.uniform(0.1, 0.9) * spec.height;
    double cc = rng.uniform(0.1, 0.9) * spec.width;
    double ry = rng.uniform(0.04, 0.12) * spec.height + 1.0;
    double rx = rng.uniform(0.04, 0.12) * spec.width + 1.0;
    for (int r = 0; r < spec.height; ++r)
      for (int c = 0; c < spec.width; ++c) {
        double d = std::pow((r - cr) / ry, 2) + std::pow((c - cc) / rx, 2);
        if (d <= 1.0) {
          int i = r * spec.width + c;
          water[i] = 1.0f;
          tree[i] = grass[i] = 0.0f;
        }
      }
  }

  std::vector<float> biomass_above(spec.cells()), biomass_below(spec.cells()),
      precip(spec.cells());
  for (int i = 0; i < spec.cells(); ++i) {
    biomass_above[i] =
        static_cast<float>(120.0 * tree[i] + 25.0 * grass[i]);
    biomass_below[i] = static_cast<float>(0.3 * biomass_above[i] + 2.0);
    precip[i] = static_cast<float>(150.0 * precip_n[i]);
  }

  double dir = cfg.wind_dir_deg * M_PI / 180.0;
  std::vector<float> wind_u(spec.cells(),
                            static_cast<float>(cfg.wind_speed * std::cos(dir)));
  std::vector<float> wind_v(spec.cells(),
                            static_cast<float>(cfg.wind_speed * std::sin(dir)));

  EnvStack env;
  env.spec = spec;
  auto add = [&](const char* name, std::vector<float> vals) {
    env.channels.push_back(
        EnvChannel{name, channels::units_of(name), std::move(vals)});
  };
  add(channels::kBiomassAbove, std::move(biomass_above));
  add(channels::kBiomassBelow, std::move(biomass_below));
  add(channels::kSlope, std::move(slope));
  add(channels::kTree, std::move(tree));
  add(channels::kGrass, std::move(grass));
  add(channels::kBare, std::move(bare));
  add(channels::kSnow, std::move(snow));
  add(channels::kWater, std::move(water));
  add(channels::kWindU, std::move(wind_u));
  add(channels::kWindV, std::move(wind_v));
  add(channels::kPrecip, std::move(precip));
  env.validate();
  return env;
}

namespace {

BurntMask pick_ignition(const ScenarioConfig& cfg,
                        const std::vector<ca::CellState>& cells,
                        SplitMix64& rng) {
  const GridSpec& spec = cfg.fine_spec;
  BurntMask mask(spec);
  int placed = 0, guard = 0;
  while (placed < cfg.ignition_count && guard++ < 10000) {
    int r, c;
    if (cfg.ignition_rule == "uniform") {
      r = static_cast<int>(rng.below(spec.height));
      c = static_cast<int>(rng.below(spec.width));
    } else {
      double jr = 0, jc = 0;
      if (cfg.ignition_rule == "center_jitter") {
        jr = rng.normal(0.0, cfg.ignition_jitter_frac * spec.height);
        jc = rng.normal(0.0, cfg.ignition_jitter_frac * spec.width);
      }
      r = std::clamp(static_cast<int>(std::lround(spec.height / 2.0 + jr)), 0,
                     spec.height - 1);
      c = std::clamp(static_cast<int>(std::lround(spec.width / 2.0 + jc)), 0,
                     spec.width - 1);
    }
    int i = r * spec.width + c;
    if (cells[i] != ca::CellState::Combustible || mask.cells[i]) continue;
    mask.cells[i] = 1;
    ++placed;
  }
  if (placed < cfg.ignition_count)
    throw Error("gen_dataset: could not place ignition on combustible land");
  return mask;
}

struct RawEvent {
  std::array<BurntMask, 3> days;
  BurntMask final_mask;
  int duration = 0;
};

// Runs the CA generator; duration is the last day index with burning
// activity (day 0 is the ignition day), truncated at the cap.
bool run_ca_event(const ScenarioConfig& cfg, const EnvStack& env,
                  std::uint64_t sim_seed, SplitMix64& rng, RawEvent* out) {
  ca::CAConfig physics = cfg.physics;
  physics.seed = sim_seed;
  ca::Simulation sim(cfg.fine_spec, env, physics);
  BurntMask ignition = pick_ignition(cfg, sim.cells(), rng);
  sim.seed_burning(ignition);

  int last_active = 0;
  for (int day = 0; day < cfg.day_cap; ++day) {
    bool was_active = sim.active();
    for (int s = 0; s < physics.steps_per_day && sim.active(); ++s) sim.step();
    if (was_active) last_active = day;
    if (day < 3) out->days[day] = sim.burnt_mask();
    if (!sim.active() && day >= 2) break;
  }
  out->final_mask = sim.burnt_mask();
  out->duration = last_active;
  return true;
}

bool run_mtt_event(const ScenarioConfig& cfg, const EnvStack& env,
                   SplitMix64& rng, RawEvent* out) {
  mtt::RosField ros = mtt::build_ros(env, cfg.mtt_physics, cfg.fine_spec);
  std::vector<ca::CellState> cells(cfg.fine_spec.cells(),
                                   ca::CellState::NonCombustible);
  for (int i = 0; i < cfg.fine_spec.cells(); ++i)
    if (ros.ros[i] > 0) cells[i] = ca::CellState::Combustible;
  BurntMask ignition = pick_ignition(cfg, cells, rng);
  mtt::ArrivalField arrival =
      mtt::mtt_arrival(ros, ignition, cfg.mtt_physics.neighborhood);

  auto mask_at_day = [&](int day) {
    BurntMask m(cfg.fine_spec);
    double horizon = (day + 1) * cfg.mtt_physics.minutes_per_day;
    for (int i = 0; i < cfg.fine_spec.cells(); ++i)
      m.cells[i] =
          (ignition.cells[i] || arrival.t_arrive[i] <= horizon) ? 1 : 0;
    return m;
  };

  int duration = cfg.min_duration_days +
                 static_cast<int>(rng.below(cfg.day_cap - cfg.min_duration_days + 1));
  for (int d = 0; d < 3; ++d) out->days[d] = mask_at_day(d);
  out->final_mask = mask_at_day(duration);
  // Effective duration: last day that still added cells.
  int prev = out->days[0].count();
  int last_growth = 0;
  for (int d = 1; d <= duration; ++d) {
    int cur = mask_at_day(d).count();
    if (cur > prev) last_growth = d;
    prev = cur;
  }
  out->duration = last_growth;
  return true;
}

}  // namespace

std::vector<FireEvent> gen_dataset(const ScenarioConfig& cfg, int n_events) {
  cfg.validate();
  if (n_events < 1) throw Error("gen_dataset: n_events must be >= 1");

  std::vector<FireEvent> events;
  long long attempts = 0;
  while (static_cast<int>(events.size()) < n_events) {
    ++attempts;
    if (attempts > 1000 && static_cast<long long>(events.size()) * 100 < attempts)
      throw Error("gen_dataset: rejection rate above 99%; scenario "
                  "configuration cannot produce qualifying events");

    std::uint64_t attempt_seed = splitmix64_at(cfg.seed, attempts);
    EnvStack env = synth_env(cfg, attempt_seed);
    SplitMix64 rng(splitmix64_at(attempt_seed, 1));

    RawEvent raw;
    if (cfg.generator == Generator::CA)
      run_ca_event(cfg, env, splitmix64_at(attempt_seed, 2), rng, &raw);
    else
      run_mtt_event(cfg, env, rng, &raw);

    if (raw.duration < cfg.min_duration_days) continue;
    if (raw.final_mask.count() < cfg.min_final_area_px) continue;

    FireEvent ev;
    int idx = static_cast<int>(events.size());
    char name[32];
    std::snprintf(name, sizeof name, "ev%04d", idx);
    ev.name = name;
    ev.year = cfg.start_year +
              static_cast<int>(static_cast<long long>(idx) * cfg.years /
                               std::max(n_events, 1));
    ev.duration_days = raw.duration;
    ev.day_masks = std::move(raw.days);
    ev.final_mask = std::move(raw.final_mask);
    ev.env = std::move(env);
    ev.validate();
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<FireEvent> augment(const std::vector<FireEvent>& events) {
  std::vector<FireEvent> out;
  out.reserve(events.size() * 4);
  static const char* suffix[4] = {"", "_r90", "_r180", "_r270"};
  for (const auto& ev : events) {
    out.push_back(ev);
    for (int k = 1; k <= 3; ++k) {
      FireEvent rot = rotate_event(ev, k);
      rot.name = ev.name + suffix[k];
      out.push_back(std::move(rot));
    }
  }
  return out;
}

Split chronological_split(const std::vector<FireEvent>& events, int n_train,
                          int n_val, int n_test) {
  if (n_train + n_val + n_test > static_cast<int>(events.size()))
    throw Error("chronological_split: split sizes exceed dataset");
  std::vector<int> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return events[a].year < events[b].year;
  });
  Split s;
  int pos = 0;
  for (int i = 0; i < n_train; ++i) s.train.push_back(order[pos++]);
  for (int i = 0; i < n_val; ++i) s.val.push_back(order[pos++]);
  for (int i = 0; i < n_test; ++i) s.test.push_back(order[pos++]);
  return s;
}

}  // namespace firebench::wb
