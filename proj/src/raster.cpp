#include "firebench/raster.hpp"

#include <algorithm>
#include <cmath>

namespace firebench {

void GridSpec::validate() const {
  if (height < 1 || width < 1)
    throw Error("GridSpec: height and width must be >= 1");
  if (!(pixel_area > 0.0) || !std::isfinite(pixel_area))
    throw Error("GridSpec: pixel_area must be a positive finite number");
}

int BurntMask::count() const {
  int n = 0;
  for (std::uint8_t v : cells) n += v;
  return n;
}

bool BurntMask::subset_of(const BurntMask& other) const {
  if (!(spec == other.spec)) return false;
  for (size_t i = 0; i < cells.size(); ++i)
    if (cells[i] && !other.cells[i]) return false;
  return true;
}

void BurntMask::validate() const {
  spec.validate();
  if (static_cast<int>(cells.size()) != spec.cells())
    throw Error("BurntMask: cell count does not match spec");
  for (size_t i = 0; i < cells.size(); ++i)
    if (cells[i] > 1)
      throw Error("BurntMask: cell " + std::to_string(i) +
                  " is not in {0,1}");
}

namespace channels {

std::vector<std::string> all() {
  return {kBiomassAbove, kBiomassBelow, kSlope, kTree,  kGrass, kBare,
          kSnow,         kWater,        kWindU, kWindV, kPrecip};
}

std::string units_of(const std::string& name) {
  if (name == kBiomassAbove || name == kBiomassBelow) return "Mg C/ha";
  if (name == kSlope) return "deg";
  if (name == kWindU || name == kWindV) return "m/s";
  if (name == kPrecip) return "mm";
  return "fraction";
}

}  // namespace channels

const EnvChannel* EnvStack::find(const std::string& name) const {
  for (const auto& ch : channels)
    if (ch.name == name) return &ch;
  return nullptr;
}

const EnvChannel& EnvStack::channel(const std::string& name) const {
  const EnvChannel* ch = find(name);
  if (!ch) throw Error("EnvStack: missing channel '" + name + "'");
  return *ch;
}

void EnvStack::validate() const {
  spec.validate();
  for (const auto& ch : channels) {
    if (static_cast<int>(ch.values.size()) != spec.cells())
      throw Error("EnvStack: channel '" + ch.name +
                  "' size does not match spec");
    bool density = ch.name == channels::kTree || ch.name == channels::kGrass ||
                   ch.name == channels::kBare || ch.name == channels::kSnow ||
                   ch.name == channels::kWater;
    for (float v : ch.values) {
      if (!std::isfinite(v))
        throw Error("EnvStack: non-finite value in channel '" + ch.name + "'");
      if (density && (v < 0.0f || v > 1.0f))
        throw Error("EnvStack: density channel '" + ch.name +
                    "' outside [0,1]");
      if (ch.name == channels::kSlope && (v < 0.0f || v >= 90.0f))
        throw Error("EnvStack: slope outside [0,90)");
    }
  }
}

void FireEvent::validate() const {
  if (duration_days <= 4)
    throw Error("FireEvent '" + name + "': duration_days must be > 4");
  final_mask.validate();
  for (const auto& m : day_masks) {
    m.validate();
    if (!(m.spec == final_mask.spec))
      throw Error("FireEvent '" + name + "': masks do not share one spec");
  }
  if (!day_masks[0].subset_of(day_masks[1]) ||
      !day_masks[1].subset_of(day_masks[2]) ||
      !day_masks[2].subset_of(final_mask))
    throw Error("FireEvent '" + name + "': day masks are not monotone");
  env.validate();
}

BurntMask binarize(const std::vector<double>& values, const GridSpec& spec,
                   double threshold) {
  spec.validate();
  if (!std::isfinite(threshold)) throw Error("binarize: non-finite threshold");
  if (static_cast<int>(values.size()) != spec.cells())
    throw Error("binarize: value count does not match spec");
  BurntMask mask(spec);
  for (size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw Error("binarize: non-finite value at cell " + std::to_string(i));
    mask.cells[i] = values[i] >= threshold ? 1 : 0;
  }
  return mask;
}

namespace {

template <typename T>
std::vector<T> resample_impl(const std::vector<T>& src, const GridSpec& s,
                             const GridSpec& d, ResampleMode mode) {
  s.validate();
  if (d.height < 1 || d.width < 1) throw Error("resample: zero-sized target");
  if (static_cast<int>(src.size()) != s.cells())
    throw Error("resample: source size does not match spec");

  std::vector<T> out(static_cast<size_t>(d.height) * d.width);
  if (mode == ResampleMode::Nearest) {
    for (int r = 0; r < d.height; ++r) {
      int sr = static_cast<int>((r + 0.5) * s.height / d.height);
      sr = std::min(sr, s.height - 1);
      for (int c = 0; c < d.width; ++c) {
        int sc = static_cast<int>((c + 0.5) * s.width / d.width);
        sc = std::min(sc, s.width - 1);
        out[r * d.width + c] = src[sr * s.width + sc];
      }
    }
    return out;
  }

  // Bilinear at cell centers with edge clamping.
  for (int r = 0; r < d.height; ++r) {
    double y = (r + 0.5) * static_cast<double>(s.height) / d.height - 0.5;
    y = std::clamp(y, 0.0, static_cast<double>(s.height - 1));
    int y0 = static_cast<int>(std::floor(y));
    int y1 = std::min(y0 + 1, s.height - 1);
    double fy = y - y0;
    for (int c = 0; c < d.width; ++c) {
      double x = (c + 0.5) * static_cast<double>(s.width) / d.width - 0.5;
      x = std::clamp(x, 0.0, static_cast<double>(s.width - 1));
      int x0 = static_cast<int>(std::floor(x));
      int x1 = std::min(x0 + 1, s.width - 1);
      double fx = x - x0;
      double v00 = src[y0 * s.width + x0];
      double v01 = src[y0 * s.width + x1];
      double v10 = src[y1 * s.width + x0];
      double v11 = src[y1 * s.width + x1];
      double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                 fy * ((1 - fx) * v10 + fx * v11);
      out[r * d.width + c] = static_cast<T>(v);
    }
  }
  return out;
}

}  // namespace

std::vector<double> resample(const std::vector<double>& src,
                             const GridSpec& src_spec,
                             const GridSpec& dst_spec, ResampleMode mode) {
  return resample_impl(src, src_spec, dst_spec, mode);
}

std::vector<float> resample(const std::vector<float>& src,
                            const GridSpec& src_spec, const GridSpec& dst_spec,
                            ResampleMode mode) {
  return resample_impl(src, src_spec, dst_spec, mode);
}

template <typename T>
std::vector<T> rotate_ccw(const std::vector<T>& src, int height, int width,
                          int k) {
  k = ((k % 4) + 4) % 4;
  std::vector<T> cur = src;
  int h = height, w = width;
  for (int t = 0; t < k; ++t) {
    // One CCW quarter turn: out(i, j) = in(j, w - 1 - i); out is w x h.
    std::vector<T> next(cur.size());
    for (int i = 0; i < w; ++i)
      for (int j = 0; j < h; ++j) next[i * h + j] = cur[j * w + (w - 1 - i)];
    cur = std::move(next);
    std::swap(h, w);
  }
  return cur;
}

template std::vector<std::uint8_t> rotate_ccw(const std::vector<std::uint8_t>&,
                                              int, int, int);
template std::vector<float> rotate_ccw(const std::vector<float>&, int, int,
                                       int);
template std::vector<double> rotate_ccw(const std::vector<double>&, int, int,
                                        int);

namespace {

BurntMask rotate_mask(const BurntMask& m, int k) {
  BurntMask out;
  out.spec = m.spec;
  if (k % 2 == 1) std::swap(out.spec.height, out.spec.width);
  out.cells = rotate_ccw(m.cells, m.spec.height, m.spec.width, k);
  return out;
}

}  // namespace

FireEvent rotate_event(const FireEvent& event, int quarter_turns) {
  if (quarter_turns < 1 || quarter_turns > 3)
    throw Error("rotate_event: quarter_turns must be in {1,2,3}");
  FireEvent out = event;
  for (int i = 0; i < 3; ++i)
    out.day_masks[i] = rotate_mask(event.day_masks[i], quarter_turns);
  out.final_mask = rotate_mask(event.final_mask, quarter_turns);

  out.env.spec = event.env.spec;
  if (quarter_turns % 2 == 1)
    std::swap(out.env.spec.height, out.env.spec.width);
  for (auto& ch : out.env.channels)
    ch.values = rotate_ccw(ch.values, event.env.spec.height,
                           event.env.spec.width, quarter_turns);

  // Wind components transform as a vector: one CCW quarter turn maps
  // (u, v) -> (-v, u).
  EnvChannel* u = nullptr;
  EnvChannel* v = nullptr;
  for (auto& ch : out.env.channels) {
    if (ch.name == channels::kWindU) u = &ch;
    if (ch.name == channels::kWindV) v = &ch;
  }
  if (u && v) {
    for (int t = 0; t < quarter_turns; ++t) {
      for (size_t i = 0; i < u->values.size(); ++i) {
        float uu = u->values[i], vv = v->values[i];
        u->values[i] = -vv;
        v->values[i] = uu;
      }
    }
  }
  return out;
}

double burnt_area_km2(const BurntMask& mask) {
  return mask.count() * mask.spec.pixel_area;
}

}  // namespace firebench
