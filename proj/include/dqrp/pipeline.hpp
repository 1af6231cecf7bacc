#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dqrp/codec.hpp"
#include "dqrp/image_io.hpp"
#include "dqrp/prediction.hpp"
#include "dqrp/recon.hpp"

namespace dqrp {

enum class PredictionMode : std::uint8_t { kLinear = 0, kSuccessive = 1 };

// Four-band set; band 0 is the reference available at the decoder, bands
// 1..3 are coded.
struct ImageSet {
  std::vector<Image> bands;

  std::size_t width() const { return bands.at(0).width; }
  std::size_t height() const { return bands.at(0).height; }
};

struct CodecParams {
  std::size_t block = 64;  // block side, n = block * block
  std::size_t m = 4000;
  int bits = 11;
  std::vector<double> delta = {16.0, 16.0, 16.0};  // per coded band
  PredictionMode mode = PredictionMode::kLinear;
  RatePolicy policy = RatePolicy::defaults();
  std::uint64_t op_seed = 1;
  std::uint64_t dither_seed = 2;
  double tau = 0.3;
  ReconConfig recon;
  int threads = 0;  // 0: hardware concurrency
  // Replaces the per-block prediction-error estimate when set; rate plans
  // become a pure function of this value.
  std::optional<double> epsilon_override;

  std::size_t n() const { return block * block; }
};

// One spatial block: the shared statistics record plus the per-band coded
// blocks. The statistics are stored once per spatial block since the
// successive-mode parameters couple the bands.
struct BlockRecord {
  StatsBlob stats;
  std::vector<CompressedBlock> bands;
};

struct EncodedImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t grid_w = 0;  // blocks per row
  std::size_t grid_h = 0;
  CodecParams params;
  std::vector<BlockRecord> blocks;  // row-major block grid

  void save(const std::string& path) const;
  static EncodedImage load(const std::string& path);
  std::vector<std::uint8_t> serialize() const;
};

struct BandMetrics {
  double psnr = 0.0;
  std::size_t payload_bits = 0;
  double bpp = 0.0;
  std::size_t flipped_measurement_bits = 0;
  std::size_t checked_measurement_bits = 0;

  double measurement_ber() const {
    return checked_measurement_bits == 0
               ? 0.0
               : static_cast<double>(flipped_measurement_bits) /
                     static_cast<double>(checked_measurement_bits);
  }
};

struct MetricsReport {
  std::vector<BandMetrics> bands;  // coded bands 1..3
  std::size_t stats_bits = 0;
  std::size_t framing_bits = 0;
  double overhead_bpp = 0.0;  // stats bits / (coded bands * pixels)
  double overall_bpp = 0.0;   // (payload + stats) / (coded bands * pixels)
  bool all_converged = true;
  bool has_truth = false;

  std::string table() const;
};

EncodedImage encode_image(const ImageSet& images, const CodecParams& params,
                          const CodeDatabase& codes);

struct DecodedImage {
  std::vector<Image> bands;  // coded bands 1..3, reconstructed
  MetricsReport report;
};

// Linear mode predicts every band from the reference; successive mode feeds
// each recovered band's quantized measurements into the prediction of the
// next. When ground truth is supplied the report carries measurement BER
// and PSNR per band.
DecodedImage decode_image(const EncodedImage& enc, const Image& reference,
                          const CodeDatabase& codes,
                          const ImageSet* ground_truth = nullptr);

// Replicate-pad to a multiple of the block size.
Image pad_to_blocks(const Image& img, std::size_t block);

}  // namespace dqrp
