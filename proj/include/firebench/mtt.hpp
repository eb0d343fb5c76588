#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "firebench/raster.hpp"

// Minimum-travel-time fire growth: a deterministic arrival-time field is
// computed by exact shortest paths over the grid network and thresholded at
// the fire horizon. Edge travel time between adjacent cells m and n is
// dist(m, n) / harmonic_mean(ros(m), ros(n)); cells with zero rate of
// spread carry no edges.
namespace firebench::mtt {

enum class Neighborhood { N4, N8, N16Knight };

struct RosParams {
  double r0 = 3.0;      // base rate of spread, m/min, at full fuel
  double w_tree = 1.0;  // fuel weight for tree density
  double w_grass = 0.6; // fuel weight for grass density
  double k_w = 0.15;    // wind coefficient, per m/s
  double k_s = 1.5;     // slope coefficient, per tan(slope)
  double m_min = 0.2;   // multiplier clamp
  double m_max = 5.0;
  double minutes_per_day = 360;  // active spread window per day
  Neighborhood neighborhood = Neighborhood::N8;

  void validate() const;
};

std::string ros_params_to_json(const RosParams& p);
RosParams ros_params_from_json(const std::string& text);

struct RosField {
  GridSpec spec;
  std::vector<double> ros;  // m/min, >= 0; 0 = unburnable
};

struct ArrivalField {
  GridSpec spec;
  std::vector<double> t_arrive;  // minutes; +infinity when unreachable
};

// ros = r0 * (w_tree*tree + w_grass*grass) * multiplier with
// multiplier = clamp(exp(k_w * V) * exp(k_s * tan(slope)), m_min, m_max),
// zero where the cell is non-combustible. The driver stack carries only
// scalar wind speed per cell and scalar slope, so both directional terms
// are evaluated at head-fire alignment (cos == 1, uphill), i.e. the field
// is the maximum local spread rate.
RosField build_ros(const EnvStack& env, const RosParams& params,
                   const GridSpec& target_spec);

// Exact single-source-set shortest paths (Dijkstra over a binary heap).
// t_arrive is 0 exactly on ignition cells. Throws on an empty ignition set.
ArrivalField mtt_arrival(const RosField& ros, const BurntMask& ignition,
                         Neighborhood nb);

// Threshold of the arrival field at horizon = days * minutes_per_day,
// unioned with the ignition (day-2) mask.
BurntMask mtt_run(const FireEvent& event, const RosParams& params, int days);

// Arrival-field dump for visualization, as raw little-endian float32 plus
// the standard sidecar.
void write_arrival_f32(const ArrivalField& field, const std::string& data_path,
                       const std::string& sidecar_path);

}  // namespace firebench::mtt
