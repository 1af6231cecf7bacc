#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dqrp/coding.hpp"
#include "dqrp/ldpc.hpp"
#include "dqrp/measurement.hpp"

namespace dqrp {

// Transmitted per-parameter statistics, 16 bits each: sign plus 15-bit
// mantissa against a shared exponent. Means and second-order statistics live
// in separate groups because their magnitudes differ by orders of magnitude.
struct StatsBlob {
  std::uint8_t mean_count = 0;  // leading entries quantized with mean_exp
  std::int8_t mean_exp = 0;
  std::int8_t cov_exp = 0;
  std::vector<std::uint16_t> words;

  static StatsBlob encode(std::span<const double> means,
                          std::span<const double> covs);
  std::vector<double> decode() const;
  std::size_t param_bits() const { return 16 * words.size(); }
};

// One encoded block: header, plan, per-plane payloads, statistics.
struct CompressedBlock {
  // header
  OperatorKind op_kind = OperatorKind::kSrht;
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  std::uint8_t bits = 0;
  double delta = 1.0;
  double sigma = 1.0;    // operator sigma used in the rate model
  double epsilon = 0.0;  // encoder's prediction-error estimate
  // Constant removed from the source before measurement so that the DC
  // measurement of high-mean blocks stays inside the quantizer range; the
  // same shift applies to the decoder's prediction, so the prediction
  // error and every bitflip statistic are unchanged.
  double mean_shift = 0.0;
  std::uint32_t offset = 0;
  std::uint64_t op_seed = 0;
  std::uint64_t dither_seed = 0;

  BitplanePlan plan;
  // payloads[k-1]: RAW plane bits, syndrome bits, or empty for SKIP
  std::vector<std::vector<std::uint8_t>> payloads;
  StatsBlob stats;

  QuantizerConfig quantizer() const {
    return QuantizerConfig{bits, delta, offset};
  }
  ErrorModel model() const { return ErrorModel{epsilon, sigma, delta}; }

  std::vector<std::uint8_t> serialize() const;
  static CompressedBlock parse(std::span<const std::uint8_t> data,
                               std::size_t* consumed = nullptr);

  // Exact serialized size in bits (header + stats + payloads).
  std::size_t total_bits() const;
  // Information-bit breakdown used by the rate reports: payload bits are the
  // m / m(1-R) plane bits, stats bits the 16-bit parameters; framing is the
  // rest of the container.
  std::size_t payload_bits() const;
  std::size_t stats_bits() const { return stats.param_bits(); }
};

struct DecoderState {
  std::vector<std::vector<std::uint8_t>> planes;  // accepted planes 1..k-1
  std::vector<double> y_hat;                      // predicted measurements
};

struct PlanePrediction {
  std::vector<std::uint8_t> bits;
  std::vector<double> c;  // distances on the likelihood scale, [0, 2^{k-1}]
};

// Predict bitplane k from the predicted measurements and the accepted planes
// 1..k-1: per measurement, the quantization level consistent with the lower
// bits and nearest to y_hat (ties toward the smaller level) supplies the
// bit; c is the reported distance for bit_error_likelihood.
PlanePrediction predict_plane(const DecoderState& state, int k,
                              const QuantizerConfig& cfg);

CompressedBlock encode_block(std::span<const double> x,
                             const MeasurementOperator& op,
                             const DitherVector& dither,
                             const QuantizerConfig& cfg,
                             const ErrorModel& model, const RatePolicy& policy,
                             const CodeDatabase& codes,
                             const StatsBlob& stats = {},
                             double mean_shift = 0.0);

struct BlockDecodeResult {
  std::vector<std::int32_t> q;           // recovered quantized measurements
  std::vector<std::uint8_t> plane_converged;  // per plane, 1 unless BP failed
  bool all_converged = true;
};

BlockDecodeResult decode_block(const CompressedBlock& block,
                               std::span<const double> y_hat,
                               const CodeDatabase& codes, int max_iters = 100);

struct RateAccounting {
  std::size_t total_bits = 0;    // exact serialized bits
  std::size_t payload_bits = 0;  // RAW + syndrome plane bits
  std::size_t stats_bits = 0;    // 16-bit statistics parameters
  std::size_t framing_bits = 0;  // header, plan, blob framing

  double bpp(std::size_t pixels) const {
    return static_cast<double>(payload_bits) / static_cast<double>(pixels);
  }
};

RateAccounting rate_accounting(const CompressedBlock& block);

// Blob framing shared with the container format.
void append_stats_blob(std::vector<std::uint8_t>& out, const StatsBlob& blob);
StatsBlob parse_stats_blob(std::span<const std::uint8_t> data,
                           std::size_t& pos);

}  // namespace dqrp
