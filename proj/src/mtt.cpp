#include "firebench/mtt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "firebench/ca.hpp"
#include "firebench/raster_io.hpp"
#include "json.hpp"

using nlohmann::json;

namespace firebench::mtt {

void RosParams::validate() const {
  if (!(r0 >= 0) || !std::isfinite(r0)) throw Error("RosParams: bad r0");
  if (!(m_min > 0) || !(m_max >= m_min))
    throw Error("RosParams: multiplier clamp must satisfy 0 < m_min <= m_max");
  if (!(minutes_per_day > 0)) throw Error("RosParams: minutes_per_day <= 0");
}

std::string ros_params_to_json(const RosParams& p) {
  const char* nb = p.neighborhood == Neighborhood::N4
                       ? "n4"
                       : (p.neighborhood == Neighborhood::N8 ? "n8" : "n16");
  json j{{"r0", p.r0},         {"w_tree", p.w_tree},
         {"w_grass", p.w_grass}, {"k_w", p.k_w},
         {"k_s", p.k_s},        {"m_min", p.m_min},
         {"m_max", p.m_max},    {"minutes_per_day", p.minutes_per_day},
         {"neighborhood", nb}};
  return j.dump(2);
}

RosParams ros_params_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("RosParams: ") + e.what());
  }
  RosParams p;
  p.r0 = j.value("r0", p.r0);
  p.w_tree = j.value("w_tree", p.w_tree);
  p.w_grass = j.value("w_grass", p.w_grass);
  p.k_w = j.value("k_w", p.k_w);
  p.k_s = j.value("k_s", p.k_s);
  p.m_min = j.value("m_min", p.m_min);
  p.m_max = j.value("m_max", p.m_max);
  p.minutes_per_day = j.value("minutes_per_day", p.minutes_per_day);
  if (j.contains("neighborhood")) {
    std::string nb = j["neighborhood"].get<std::string>();
    if (nb == "n4")
      p.neighborhood = Neighborhood::N4;
    else if (nb == "n8")
      p.neighborhood = Neighborhood::N8;
    else if (nb == "n16")
      p.neighborhood = Neighborhood::N16Knight;
    else
      throw Error("RosParams: unknown neighborhood '" + nb + "'");
  }
  p.validate();
  return p;
}

namespace {

std::vector<float> channel_at(const EnvStack& env, const char* name,
                              const GridSpec& spec) {
  const EnvChannel* ch = env.find(name);
  if (!ch) return std::vector<float>(spec.cells(), 0.0f);
  if (env.spec == spec) return ch->values;
  return resample(ch->values, env.spec, spec, ResampleMode::Bilinear);
}

const std::vector<std::pair<int, int>>& offsets(Neighborhood nb) {
  static const std::vector<std::pair<int, int>> n4{
      {-1, 0}, {0, -1}, {0, 1}, {1, 0}};
  static const std::vector<std::pair<int, int>> n8{
      {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
  static const std::vector<std::pair<int, int>> n16{
      {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1},  {1, -1}, {1, 0},  {1, 1},
      {-2, -1}, {-2, 1}, {-1, -2}, {-1, 2}, {1, -2}, {1, 2},  {2, -1}, {2, 1}};
  switch (nb) {
    case Neighborhood::N4: return n4;
    case Neighborhood::N8: return n8;
    default: return n16;
  }
}

}  // namespace

RosField build_ros(const EnvStack& env, const RosParams& params,
                   const GridSpec& target_spec) {
  params.validate();
  target_spec.validate();
  auto tree = channel_at(env, channels::kTree, target_spec);
  auto grass = channel_at(env, channels::kGrass, target_spec);
  auto bare = channel_at(env, channels::kBare, target_spec);
  auto snow = channel_at(env, channels::kSnow, target_spec);
  auto water = channel_at(env, channels::kWater, target_spec);
  auto slope = channel_at(env, channels::kSlope, target_spec);
  auto wind_u = channel_at(env, channels::kWindU, target_spec);
  auto wind_v = channel_at(env, channels::kWindV, target_spec);

  RosField field{target_spec, std::vector<double>(target_spec.cells(), 0.0)};
  for (int i = 0; i < target_spec.cells(); ++i) {
    if (ca::is_non_combustible(water[i], snow[i], bare[i])) continue;
    double fuel = params.w_tree * tree[i] + params.w_grass * grass[i];
    if (fuel <= 0.0) continue;
    double speed = std::hypot(wind_u[i], wind_v[i]);
    double mult = std::exp(params.k_w * speed) *
                  std::exp(params.k_s * std::tan(slope[i] * M_PI / 180.0));
    mult = std::clamp(mult, params.m_min, params.m_max);
    field.ros[i] = params.r0 * fuel * mult;
  }
  return field;
}

ArrivalField mtt_arrival(const RosField& ros, const BurntMask& ignition,
                         Neighborhood nb) {
  if (!(ros.spec == ignition.spec))
    throw Error("mtt_arrival: ros and ignition specs differ");
  if (ignition.count() == 0) throw Error("mtt_arrival: empty ignition set");

  const GridSpec& spec = ros.spec;
  const double inf = std::numeric_limits<double>::infinity();
  ArrivalField field{spec, std::vector<double>(spec.cells(), inf)};
  const auto& offs = offsets(nb);
  const double cell_m = spec.cell_size_m();

  using Item = std::pair<double, int>;  // (time, cell)
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  for (int i = 0; i < spec.cells(); ++i)
    if (ignition.cells[i]) {
      field.t_arrive[i] = 0.0;
      heap.push({0.0, i});
    }

  while (!heap.empty()) {
    auto [t, m] = heap.top();
    heap.pop();
    if (t > field.t_arrive[m]) continue;  // stale entry
    if (ros.ros[m] <= 0.0) continue;      // no outgoing edges
    int r = m / spec.width, c = m % spec.width;
    for (const auto& [dr, dc] : offs) {
      int nr = r + dr, nc = c + dc;
      if (nr < 0 || nr >= spec.height || nc < 0 || nc >= spec.width) continue;
      int n = nr * spec.width + nc;
      if (ros.ros[n] <= 0.0) continue;
      double dist = cell_m * std::sqrt(double(dr * dr + dc * dc));
      double hmean = 2.0 * ros.ros[m] * ros.ros[n] / (ros.ros[m] + ros.ros[n]);
      double cand = t + dist / hmean;
      if (cand < field.t_arrive[n]) {
        field.t_arrive[n] = cand;
        heap.push({cand, n});
      }
    }
  }
  return field;
}

BurntMask mtt_run(const FireEvent& event, const RosParams& params, int days) {
  if (days < 0) throw Error("mtt_run: days must be >= 0");
  const BurntMask& ignition = event.day_masks[2];
  RosField ros = build_ros(event.env, params, ignition.spec);
  ArrivalField arrival = mtt_arrival(ros, ignition, params.neighborhood);
  double horizon = days * params.minutes_per_day;
  BurntMask out(ignition.spec);
  for (int i = 0; i < ignition.spec.cells(); ++i)
    out.cells[i] = (ignition.cells[i] || arrival.t_arrive[i] <= horizon) ? 1 : 0;
  return out;
}

void write_arrival_f32(const ArrivalField& field, const std::string& data_path,
                       const std::string& sidecar_path) {
  EnvChannel ch;
  ch.name = "arrival_minutes";
  ch.units = "min";
  ch.values.assign(field.t_arrive.begin(), field.t_arrive.end());
  write_channel_f32(ch, field.spec, data_path, sidecar_path);
}

}  // namespace firebench::mtt
