#include "firebench/raster_io.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "channel files are little-endian; add byte swapping first");

namespace fs = std::filesystem;
using nlohmann::json;

namespace firebench {

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw Error("cannot write " + path);
  return f;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) throw Error("cannot read " + path);
  return f;
}

json read_json(const std::string& path) {
  auto f = open_in(path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  return j;
}

}  // namespace

void write_mask_pgm(const BurntMask& mask, const std::string& path) {
  mask.validate();
  auto f = open_out(path);
  f << "P2\n";
  f << "# pixel_area=" << format_real(mask.spec.pixel_area) << "\n";
  f << mask.spec.width << " " << mask.spec.height << "\n1\n";
  for (int r = 0; r < mask.spec.height; ++r) {
    for (int c = 0; c < mask.spec.width; ++c) {
      if (c) f << ' ';
      f << static_cast<int>(mask.at(r, c));
    }
    f << '\n';
  }
  if (!f) throw Error("write failed for " + path);
}

BurntMask read_mask_pgm(const std::string& path) {
  auto f = open_in(path);
  std::string magic;
  double pixel_area = 0.026;

  // Token scanner that honors '#' comment lines and picks up pixel_area.
  auto next_token = [&]() -> std::string {
    std::string tok;
    while (f >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(f, rest);
        std::string line = tok + rest;
        auto pos = line.find("pixel_area=");
        if (pos != std::string::npos)
          pixel_area = std::stod(line.substr(pos + 11));
        continue;
      }
      return tok;
    }
    throw Error(path + ": truncated PGM header");
  };

  magic = next_token();
  if (magic != "P2") throw Error(path + ": expected ASCII PGM (P2)");
  int width = std::stoi(next_token());
  int height = std::stoi(next_token());
  int maxval = std::stoi(next_token());
  if (maxval != 1) throw Error(path + ": mask PGM requires maxval 1");

  BurntMask mask(GridSpec{height, width, pixel_area});
  for (int i = 0; i < mask.spec.cells(); ++i) {
    int v = std::stoi(next_token());
    if (v != 0 && v != 1)
      throw Error(path + ": cell value outside {0,1}");
    mask.cells[i] = static_cast<std::uint8_t>(v);
  }
  return mask;
}

void write_channel_f32(const EnvChannel& ch, const GridSpec& spec,
                       const std::string& data_path,
                       const std::string& sidecar_path) {
  if (static_cast<int>(ch.values.size()) != spec.cells())
    throw Error("write_channel_f32: size does not match spec");
  {
    auto f = open_out(data_path, true);
    f.write(reinterpret_cast<const char*>(ch.values.data()),
            static_cast<std::streamsize>(ch.values.size() * sizeof(float)));
    if (!f) throw Error("write failed for " + data_path);
  }
  json j{{"name", ch.name},
         {"units", ch.units},
         {"height", spec.height},
         {"width", spec.width},
         {"pixel_area", spec.pixel_area}};
  auto f = open_out(sidecar_path);
  f << j.dump(2) << "\n";
}

EnvChannel read_channel_f32(const std::string& data_path,
                            const std::string& sidecar_path, GridSpec* spec) {
  json j = read_json(sidecar_path);
  GridSpec s{j.at("height").get<int>(), j.at("width").get<int>(),
             j.at("pixel_area").get<double>()};
  s.validate();
  EnvChannel ch;
  ch.name = j.at("name").get<std::string>();
  ch.units = j.at("units").get<std::string>();
  ch.values.resize(s.cells());
  auto f = open_in(data_path, true);
  f.read(reinterpret_cast<char*>(ch.values.data()),
         static_cast<std::streamsize>(ch.values.size() * sizeof(float)));
  if (f.gcount() != static_cast<std::streamsize>(ch.values.size() *
                                                 sizeof(float)))
    throw Error(data_path + ": truncated channel data");
  if (spec) *spec = s;
  return ch;
}

void write_event(const FireEvent& event, const std::string& dir) {
  event.validate();
  fs::create_directories(dir);
  const std::array<std::string, 3> day_names{"day0.pgm", "day1.pgm",
                                             "day2.pgm"};
  for (int i = 0; i < 3; ++i)
    write_mask_pgm(event.day_masks[i], dir + "/" + day_names[i]);
  write_mask_pgm(event.final_mask, dir + "/final.pgm");

  json chans = json::array();
  for (const auto& ch : event.env.channels) {
    std::string data = ch.name + ".f32";
    std::string side = ch.name + ".json";
    write_channel_f32(ch, event.env.spec, dir + "/" + data, dir + "/" + side);
    chans.push_back({{"name", ch.name}, {"data", data}, {"sidecar", side}});
  }

  json j{{"name", event.name},
         {"year", event.year},
         {"duration_days", event.duration_days},
         {"masks",
          {{"day0", day_names[0]},
           {"day1", day_names[1]},
           {"day2", day_names[2]},
           {"final", "final.pgm"}}},
         {"channels", chans}};
  auto f = open_out(dir + "/event.json");
  f << j.dump(2) << "\n";
}

FireEvent read_event(const std::string& manifest_path) {
  json j = read_json(manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();
  auto rel = [&](const json& node) { return (base / node.get<std::string>()).string(); };

  FireEvent ev;
  ev.name = j.at("name").get<std::string>();
  ev.year = j.at("year").get<int>();
  ev.duration_days = j.at("duration_days").get<int>();
  const auto& masks = j.at("masks");
  ev.day_masks[0] = read_mask_pgm(rel(masks.at("day0")));
  ev.day_masks[1] = read_mask_pgm(rel(masks.at("day1")));
  ev.day_masks[2] = read_mask_pgm(rel(masks.at("day2")));
  ev.final_mask = read_mask_pgm(rel(masks.at("final")));

  for (const auto& c : j.at("channels")) {
    GridSpec spec;
    EnvChannel ch =
        read_channel_f32(rel(c.at("data")), rel(c.at("sidecar")), &spec);
    if (ev.env.channels.empty())
      ev.env.spec = spec;
    else if (!(spec == ev.env.spec))
      throw Error(manifest_path + ": channels disagree on grid spec");
    ev.env.channels.push_back(std::move(ch));
  }
  ev.validate();
  return ev;
}

void write_dataset_manifest(const std::vector<std::string>& event_manifests,
                            const std::string& path) {
  json j{{"events", event_manifests}};
  auto f = open_out(path);
  f << j.dump(2) << "\n";
}

std::vector<std::string> read_dataset_manifest(const std::string& path) {
  json j = read_json(path);
  return j.at("events").get<std::vector<std::string>>();
}

std::vector<FireEvent> load_dataset(const std::string& manifest_path) {
  fs::path base = fs::path(manifest_path).parent_path();
  std::vector<FireEvent> events;
  for (const auto& rel : read_dataset_manifest(manifest_path))
    events.push_back(read_event((base / rel).string()));
  return events;
}

}  // namespace firebench
