#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "firebench/raster.hpp"

// Stochastic cellular-automaton fire spread over a regular grid. Cells move
// along Combustible -> Burning -> Burnt; NonCombustible cells (dominant
// water/snow/bare cover) never change. At each step every Burning cell
// tries to ignite each Combustible neighbor independently with
//
//   p_burn = clamp(p_h * (1 + p_veg) * (1 + p_den) * p_w * p_s, 0, 1)
//   p_w    = exp(c1 * V) * exp(V * c2 * (cos(theta) - 1))
//   p_s    = exp(a * slope_deg)
//
// where V and the wind direction are taken at the source cell, theta is the
// angle between the wind vector and the spread direction, and slope_deg is
// the slope at the target cell. The driver stack carries slope magnitude
// only, so the uphill sign of the slope term is fixed at +1 (slope acts as
// an isotropic accelerant). p_h, c1, c2 and a default to the classic
// square-mesh CA calibration (0.58, 0.045, 0.131, 0.078); the density-bin
// factor maps are a documented reconstruction and all of it is
// configurable.
//
// Reproducibility: all randomness comes from SplitMix64 in counter form
// (see rng.hpp). The draw deciding whether the neighbor in direction d
// ignites cell t at step s uses counter (s * cells + t) * n_dirs + d, with
// cells indexed row-major and directions in the documented order below, so
// two runs with equal inputs and seed agree bit-for-bit, as does any
// reimplementation following the same counter layout.
namespace firebench::ca {

enum class CellState : std::uint8_t {
  NonCombustible = 0,
  Combustible = 1,
  Burning = 2,
  Burnt = 3
};

enum class Neighborhood { VonNeumann4, Moore8 };

// Piecewise-constant lookup over ascending bin edges; values at an edge
// fall into the lower bin (v <= edges[i] selects factors[i]).
struct FactorMap {
  std::vector<double> edges;
  std::vector<double> factors;  // size edges.size() + 1

  double lookup(double v) const;
  void validate() const;
};

struct CAConfig {
  double p_h = 0.58;   // base ignition probability
  double c1 = 0.045;   // wind speed coefficient, per m/s
  double c2 = 0.131;   // wind alignment coefficient, per m/s
  double a = 0.078;    // slope coefficient, per degree
  FactorMap veg_factor{{0.2, 0.6}, {-0.3, 0.0, 0.4}};  // over tree+grass
  FactorMap den_factor{{0.3, 0.7}, {-0.4, 0.0, 0.3}};  // over tree+grass
  int steps_per_day = 8;
  Neighborhood neighborhood = Neighborhood::Moore8;
  std::uint64_t seed = 0;

  void validate() const;
};

std::string ca_config_to_json(const CAConfig& cfg);
CAConfig ca_config_from_json(const std::string& text);

// Direction offsets (dr, dc) from a target cell to its potential source,
// in the fixed order used by the RNG counter layout.
const std::vector<std::pair<int, int>>& neighbor_offsets(Neighborhood nb);

bool is_non_combustible(double water, double snow, double bare);

// One simulation instance; env is resampled to `spec` on construction and
// all per-direction ignition probabilities are precomputed. A Simulation is
// confined to one thread; distinct instances may run concurrently.
class Simulation {
 public:
  Simulation(const GridSpec& spec, const EnvStack& env, const CAConfig& cfg);

  // Marks cells Burning regardless of their current state; the ignition
  // history is authoritative.
  void seed_burning(const BurntMask& ignition);

  void step();
  int steps_done() const { return step_; }
  bool active() const { return burning_count_ > 0; }
  const std::vector<CellState>& cells() const { return state_; }

  // Union of Burnt and Burning cells.
  BurntMask burnt_mask() const;

 private:
  GridSpec spec_;
  CAConfig cfg_;
  std::vector<CellState> state_;
  std::vector<double> p_burn_;  // n_dirs * cells
  std::vector<std::pair<int, int>> dirs_;
  int step_ = 0;
  int burning_count_ = 0;
};

// Runs the CA from the event's day-2 mask for `days` simulated days
// (days * steps_per_day steps) and returns the resulting burnt mask.
BurntMask ca_run(const FireEvent& event, const CAConfig& cfg, int days);

}  // namespace firebench::ca
