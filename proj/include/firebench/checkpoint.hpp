#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "firebench/raster.hpp"

// Named-tensor checkpoint file. Little-endian layout:
//
//   magic   4 bytes  'F' 'B' 'C' 'K'
//   version u32      currently 1
//   count   u32      number of tensor records
//   record:
//     name_len u32, name bytes (no terminator)
//     dtype    u32  0 = float32, 1 = float64
//     rank     u32
//     dims     u64 * rank
//     data     raw values, little-endian, row-major
namespace firebench::ckpt {

enum DType : std::uint32_t { kF32 = 0, kF64 = 1 };

struct TensorRecord {
  std::string name;
  DType dtype = kF32;
  std::vector<std::uint64_t> dims;
  // Values widened to double in memory; written back at `dtype` width
  // (lossless for values that originated at that width).
  std::vector<double> data;

  std::uint64_t count() const;
};

void write_checkpoint(const std::string& path,
                      const std::vector<TensorRecord>& tensors);
std::vector<TensorRecord> read_checkpoint(const std::string& path);

}  // namespace firebench::ckpt
