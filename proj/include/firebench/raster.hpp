#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace firebench {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform raster geometry. Grids are treated as already-projected rasters
// with a constant per-pixel area; there is no geodesy anywhere in the
// workbench.
struct GridSpec {
  int height = 0;
  int width = 0;
  double pixel_area = 0.026;  // km^2 per pixel

  bool operator==(const GridSpec&) const = default;

  int cells() const { return height * width; }
  double cell_size_m() const { return std::sqrt(pixel_area) * 1000.0; }
  void validate() const;
};

// Binary burnt/not-burnt grid for one day of one fire event.
struct BurntMask {
  GridSpec spec;
  std::vector<std::uint8_t> cells;  // row-major, values in {0,1}

  BurntMask() = default;
  explicit BurntMask(GridSpec s) : spec(s), cells(s.cells(), 0) {}

  std::uint8_t at(int r, int c) const { return cells[r * spec.width + c]; }
  void set(int r, int c, std::uint8_t v) { cells[r * spec.width + c] = v; }
  int count() const;
  bool subset_of(const BurntMask& other) const;
  void validate() const;
};

// Canonical identifiers for the environmental channel schema. Wind is kept
// as two components (u east, v north, m/s); the five landcover densities
// are fractions in [0,1]; slope is in degrees in [0,90).
namespace channels {
inline constexpr const char* kBiomassAbove = "biomass_above";  // Mg C/ha
inline constexpr const char* kBiomassBelow = "biomass_below";  // Mg C/ha
inline constexpr const char* kSlope = "slope";                 // deg
inline constexpr const char* kTree = "tree";                   // fraction
inline constexpr const char* kGrass = "grass";                 // fraction
inline constexpr const char* kBare = "bare";                   // fraction
inline constexpr const char* kSnow = "snow";                   // fraction
inline constexpr const char* kWater = "water";                 // fraction
inline constexpr const char* kWindU = "wind_u";                // m/s
inline constexpr const char* kWindV = "wind_v";                // m/s
inline constexpr const char* kPrecip = "precip";               // mm

// Schema order used by manifests and by the model input grouping.
std::vector<std::string> all();
std::string units_of(const std::string& name);
}  // namespace channels

struct EnvChannel {
  std::string name;
  std::string units;
  std::vector<float> values;  // row-major
};

// Multi-channel stack of environmental drivers on one (possibly coarser)
// grid.
struct EnvStack {
  GridSpec spec;
  std::vector<EnvChannel> channels;

  const EnvChannel* find(const std::string& name) const;
  const EnvChannel& channel(const std::string& name) const;  // throws Error
  void validate() const;
};

// One fire event: ignition-phase masks for days 0..2, the final mask, the
// driver stack and metadata. Masks share one fine GridSpec; env may be
// coarser.
struct FireEvent {
  std::string name;
  int year = 0;
  int duration_days = 0;  // must be > 4
  std::array<BurntMask, 3> day_masks;
  BurntMask final_mask;
  EnvStack env;

  void validate() const;
};

enum class ResampleMode { Nearest, Bilinear };

// threshold is inclusive: cell = 1 iff value >= threshold. Non-finite
// inputs are rejected with the offending cell index.
BurntMask binarize(const std::vector<double>& values, const GridSpec& spec,
                   double threshold = 0.5);

// Nearest uses center-aligned index mapping; bilinear samples at cell
// centers with edge clamping, so the output range never leaves the input
// range.
std::vector<double> resample(const std::vector<double>& src,
                             const GridSpec& src_spec,
                             const GridSpec& dst_spec, ResampleMode mode);
std::vector<float> resample(const std::vector<float>& src,
                            const GridSpec& src_spec, const GridSpec& dst_spec,
                            ResampleMode mode);

// Rotation convention: counter-clockwise quarter turns on screen-oriented
// grids (row 0 at the top), with wind u pointing east (+column) and v
// pointing north (-row). Each quarter turn remaps wind as
// (u', v') = (-v, u); scalar channels rotate spatially only.
FireEvent rotate_event(const FireEvent& event, int quarter_turns);

// One CCW quarter turn applied k times to a row-major array.
template <typename T>
std::vector<T> rotate_ccw(const std::vector<T>& src, int height, int width,
                          int k);

double burnt_area_km2(const BurntMask& mask);

}  // namespace firebench
