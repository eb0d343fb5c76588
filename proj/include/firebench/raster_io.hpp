#pragma once

#include <string>
#include <vector>

#include "firebench/raster.hpp"

namespace firebench {

// Mask file format: ASCII PGM (P2), maxval 1, row-major from the top-left
// corner, with a `# pixel_area=<real>` comment carrying the grid scale.
void write_mask_pgm(const BurntMask& mask, const std::string& path);
BurntMask read_mask_pgm(const std::string& path);

// Channel file format: raw little-endian float32, row-major, one file per
// channel, plus a JSON sidecar with name, units, height, width and
// pixel_area.
void write_channel_f32(const EnvChannel& ch, const GridSpec& spec,
                       const std::string& data_path,
                       const std::string& sidecar_path);
EnvChannel read_channel_f32(const std::string& data_path,
                            const std::string& sidecar_path, GridSpec* spec);

// Event manifest: one JSON document per event referencing the mask and
// channel files (paths relative to the manifest).
void write_event(const FireEvent& event, const std::string& dir);
FireEvent read_event(const std::string& manifest_path);

// Dataset manifest: JSON list of event-manifest paths (relative to the
// manifest file).
void write_dataset_manifest(const std::vector<std::string>& event_manifests,
                            const std::string& path);
std::vector<std::string> read_dataset_manifest(const std::string& path);

std::vector<FireEvent> load_dataset(const std::string& manifest_path);

}  // namespace firebench
