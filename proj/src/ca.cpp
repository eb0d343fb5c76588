#include "firebench/ca.hpp"

#include <algorithm>
#include <cmath>

#include "firebench/rng.hpp"
#include "json.hpp"

using nlohmann::json;

namespace firebench::ca {

double FactorMap::lookup(double v) const {
  size_t i = 0;
  while (i < edges.size() && v > edges[i]) ++i;
  return factors[i];
}

void FactorMap::validate() const {
  if (factors.size() != edges.size() + 1)
    throw Error("FactorMap: need one factor per bin (edges + 1)");
  if (!std::is_sorted(edges.begin(), edges.end()))
    throw Error("FactorMap: edges must be ascending");
}

void CAConfig::validate() const {
  if (p_h < 0.0 || p_h > 1.0 || !std::isfinite(p_h))
    throw Error("CAConfig: p_h must be in [0,1]");
  if (!std::isfinite(c1) || !std::isfinite(c2) || !std::isfinite(a))
    throw Error("CAConfig: non-finite coefficient");
  if (steps_per_day < 1) throw Error("CAConfig: steps_per_day must be >= 1");
  veg_factor.validate();
  den_factor.validate();
}

std::string ca_config_to_json(const CAConfig& cfg) {
  json j{{"p_h", cfg.p_h},
         {"c1", cfg.c1},
         {"c2", cfg.c2},
         {"a", cfg.a},
         {"veg_factor", {{"edges", cfg.veg_factor.edges},
                         {"factors", cfg.veg_factor.factors}}},
         {"den_factor", {{"edges", cfg.den_factor.edges},
                         {"factors", cfg.den_factor.factors}}},
         {"steps_per_day", cfg.steps_per_day},
         {"neighborhood", cfg.neighborhood == Neighborhood::Moore8
                              ? "moore8"
                              : "vonNeumann4"},
         {"seed", cfg.seed}};
  return j.dump(2);
}

CAConfig ca_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("CAConfig: ") + e.what());
  }
  CAConfig cfg;
  cfg.p_h = j.value("p_h", cfg.p_h);
  cfg.c1 = j.value("c1", cfg.c1);
  cfg.c2 = j.value("c2", cfg.c2);
  cfg.a = j.value("a", cfg.a);
  if (j.contains("veg_factor")) {
    cfg.veg_factor.edges = j["veg_factor"].at("edges").get<std::vector<double>>();
    cfg.veg_factor.factors =
        j["veg_factor"].at("factors").get<std::vector<double>>();
  }
  if (j.contains("den_factor")) {
    cfg.den_factor.edges = j["den_factor"].at("edges").get<std::vector<double>>();
    cfg.den_factor.factors =
        j["den_factor"].at("factors").get<std::vector<double>>();
  }
  cfg.steps_per_day = j.value("steps_per_day", cfg.steps_per_day);
  if (j.contains("neighborhood")) {
    std::string nb = j["neighborhood"].get<std::string>();
    if (nb == "moore8")
      cfg.neighborhood = Neighborhood::Moore8;
    else if (nb == "vonNeumann4")
      cfg.neighborhood = Neighborhood::VonNeumann4;
    else
      throw Error("CAConfig: unknown neighborhood '" + nb + "'");
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

const std::vector<std::pair<int, int>>& neighbor_offsets(Neighborhood nb) {
  static const std::vector<std::pair<int, int>> von4{
      {-1, 0}, {0, -1}, {0, 1}, {1, 0}};
  static const std::vector<std::pair<int, int>> moore8{
      {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
  return nb == Neighborhood::Moore8 ? moore8 : von4;
}

bool is_non_combustible(double water, double snow, double bare) {
  return std::max(water, std::max(snow, bare)) > 0.5;
}

namespace {

std::vector<float> channel_at(const EnvStack& env, const char* name,
                              const GridSpec& spec) {
  const EnvChannel* ch = env.find(name);
  if (!ch) return std::vector<float>(spec.cells(), 0.0f);
  if (env.spec == spec) return ch->values;
  return resample(ch->values, env.spec, spec, ResampleMode::Bilinear);
}

}  // namespace

Simulation::Simulation(const GridSpec& spec, const EnvStack& env,
                       const CAConfig& cfg)
    : spec_(spec), cfg_(cfg), dirs_(neighbor_offsets(cfg.neighborhood)) {
  spec_.validate();
  cfg_.validate();

  auto tree = channel_at(env, channels::kTree, spec_);
  auto grass = channel_at(env, channels::kGrass, spec_);
  auto bare = channel_at(env, channels::kBare, spec_);
  auto snow = channel_at(env, channels::kSnow, spec_);
  auto water = channel_at(env, channels::kWater, spec_);
  auto slope = channel_at(env, channels::kSlope, spec_);
  auto wind_u = channel_at(env, channels::kWindU, spec_);
  auto wind_v = channel_at(env, channels::kWindV, spec_);

  const int cells = spec_.cells();
  state_.assign(cells, CellState::Combustible);
  for (int i = 0; i < cells; ++i)
    if (is_non_combustible(water[i], snow[i], bare[i]))
      state_[i] = CellState::NonCombustible;

  // Ignition probabilities are constant over a run, so the full
  // (direction, cell) table is precomputed.
  const int n_dirs = static_cast<int>(dirs_.size());
  p_burn_.assign(static_cast<size_t>(n_dirs) * cells, 0.0);
  for (int r = 0; r < spec_.height; ++r) {
    for (int c = 0; c < spec_.width; ++c) {
      int t = r * spec_.width + c;
      double fuel = tree[t] + grass[t];
      double base = cfg_.p_h * (1.0 + cfg_.veg_factor.lookup(fuel)) *
                    (1.0 + cfg_.den_factor.lookup(fuel));
      double p_slope = std::exp(cfg_.a * slope[t]);
      for (int d = 0; d < n_dirs; ++d) {
        int nr = r + dirs_[d].first;
        int nc = c + dirs_[d].second;
        if (nr < 0 || nr >= spec_.height || nc < 0 || nc >= spec_.width)
          continue;
        int n = nr * spec_.width + nc;
        // Spread direction source -> target in (east, north) coordinates.
        double de = -dirs_[d].second;
        double dn = dirs_[d].first;
        double u = wind_u[n], v = wind_v[n];
        double speed = std::hypot(u, v);
        double p_wind = 1.0;
        if (speed > 0.0) {
          double cos_theta =
              (u * de + v * dn) / (speed * std::hypot(de, dn));
          p_wind = std::exp(cfg_.c1 * speed) *
                   std::exp(speed * cfg_.c2 * (cos_theta - 1.0));
        }
        p_burn_[static_cast<size_t>(d) * cells + t] =
            std::clamp(base * p_wind * p_slope, 0.0, 1.0);
      }
    }
  }
}

void Simulation::seed_burning(const BurntMask& ignition) {
  if (!(ignition.spec == spec_))
    throw Error("Simulation: ignition mask spec mismatch");
  for (int i = 0; i < spec_.cells(); ++i)
    if (ignition.cells[i] && state_[i] != CellState::Burning &&
        state_[i] != CellState::Burnt) {
      state_[i] = CellState::Burning;
      ++burning_count_;
    }
}

void Simulation::step() {
  const int cells = spec_.cells();
  const int n_dirs = static_cast<int>(dirs_.size());
  std::vector<int> ignited;

  if (burning_count_ > 0) {
    for (int r = 0; r < spec_.height; ++r) {
      for (int c = 0; c < spec_.width; ++c) {
        int t = r * spec_.width + c;
        if (state_[t] != CellState::Combustible) continue;
        for (int d = 0; d < n_dirs; ++d) {
          int nr = r + dirs_[d].first;
          int nc = c + dirs_[d].second;
          if (nr < 0 || nr >= spec_.height || nc < 0 || nc >= spec_.width)
            continue;
          if (state_[nr * spec_.width + nc] != CellState::Burning) continue;
          std::uint64_t counter =
              (static_cast<std::uint64_t>(step_) * cells + t) * n_dirs + d;
          double u = bits_to_unit(splitmix64_at(cfg_.seed, counter));
          if (u < p_burn_[static_cast<size_t>(d) * cells + t]) {
            ignited.push_back(t);
            break;
          }
        }
      }
    }
  }

  for (int i = 0; i < cells; ++i)
    if (state_[i] == CellState::Burning) state_[i] = CellState::Burnt;
  for (int t : ignited) state_[t] = CellState::Burning;
  burning_count_ = static_cast<int>(ignited.size());
  ++step_;
}

BurntMask Simulation::burnt_mask() const {
  BurntMask m(spec_);
  for (int i = 0; i < spec_.cells(); ++i)
    m.cells[i] = (state_[i] == CellState::Burnt ||
                  state_[i] == CellState::Burning)
                     ? 1
                     : 0;
  return m;
}

BurntMask ca_run(const FireEvent& event, const CAConfig& cfg, int days) {
  if (days < 0) throw Error("ca_run: days must be >= 0");
  Simulation sim(event.day_masks[2].spec, event.env, cfg);
  sim.seed_burning(event.day_masks[2]);
  const int steps = days * cfg.steps_per_day;
  for (int s = 0; s < steps && sim.active(); ++s) sim.step();
  return sim.burnt_mask();
}

}  // namespace firebench::ca
