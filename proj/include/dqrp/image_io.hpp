#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dqrp {

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // row-major

  double& at(std::size_t s, std::size_t t) { return pixels[s * width + t]; }
  double at(std::size_t s, std::size_t t) const {
    return pixels[s * width + t];
  }
};

// Binary PGM (P5), maxval up to 65535; 16-bit samples are big-endian per the
// netpbm convention.
Image read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Image& img,
               int maxval = 65535);

// Multi-band flat binary (u16 little-endian, band-major) described by a JSON
// sidecar {"width": W, "height": H, "bands": B}.
std::vector<Image> read_raw_with_sidecar(const std::string& raw_path,
                                         const std::string& sidecar_path);

}  // namespace dqrp
