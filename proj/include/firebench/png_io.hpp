#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace firebench {

// 8-bit PNG writers (grayscale / RGB), row-major from the top-left corner.
void write_png_gray8(const std::string& path, int width, int height,
                     const std::vector<std::uint8_t>& pixels);
void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);

}  // namespace firebench
