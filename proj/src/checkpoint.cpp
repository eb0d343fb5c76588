#include "firebench/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint files are little-endian; add byte swapping first");

namespace firebench::ckpt {

namespace {

constexpr char kMagic[4] = {'F', 'B', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& f, const std::string& path) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw Error(path + ": truncated checkpoint");
  return v;
}

}  // namespace

std::uint64_t TensorRecord::count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write_checkpoint(const std::string& path,
                      const std::vector<TensorRecord>& tensors) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f.write(kMagic, 4);
  put(f, kVersion);
  put(f, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.data.size() != t.count())
      throw Error("checkpoint: tensor '" + t.name + "' dims/data mismatch");
    put(f, static_cast<std::uint32_t>(t.name.size()));
    f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put(f, static_cast<std::uint32_t>(t.dtype));
    put(f, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put(f, d);
    if (t.dtype == kF32) {
      std::vector<float> buf(t.data.begin(), t.data.end());
      f.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    } else {
      f.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
  }
  if (!f) throw Error("write failed for " + path);
}

std::vector<TensorRecord> read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(path + ": not a checkpoint file");
  auto version = get<std::uint32_t>(f, path);
  if (version != kVersion)
    throw Error(path + ": unsupported checkpoint version " +
                std::to_string(version));
  auto count = get<std::uint32_t>(f, path);
  std::vector<TensorRecord> tensors(count);
  for (auto& t : tensors) {
    auto name_len = get<std::uint32_t>(f, path);
    t.name.resize(name_len);
    f.read(t.name.data(), name_len);
    auto dtype = get<std::uint32_t>(f, path);
    if (dtype > 1) throw Error(path + ": unknown dtype code");
    t.dtype = static_cast<DType>(dtype);
    auto rank = get<std::uint32_t>(f, path);
    t.dims.resize(rank);
    for (auto& d : t.dims) d = get<std::uint64_t>(f, path);
    std::uint64_t n = t.count();
    t.data.resize(n);
    if (t.dtype == kF32) {
      std::vector<float> buf(n);
      f.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
      if (!f) throw Error(path + ": truncated tensor data");
      for (std::uint64_t i = 0; i < n; ++i) t.data[i] = buf[i];
    } else {
      f.read(reinterpret_cast<char*>(t.data.data()),
             static_cast<std::streamsize>(n * sizeof(double)));
      if (!f) throw Error(path + ": truncated tensor data");
    }
  }
  return tensors;
}

}  // namespace firebench::ckpt
