#include "dqrp/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "dqrp/rng.hpp"

namespace dqrp {

namespace {

constexpr char kMagic[4] = {'D', 'Q', 'R', 'P'};
constexpr std::uint8_t kFormatVersion = 1;

// 16-bit group quantization: shared power-of-two exponent, sign + 15-bit
// mantissa per value.
std::int8_t group_exponent(std::span<const double> values) {
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0;
  int e = std::ilogb(peak) + 1;
  return static_cast<std::int8_t>(std::clamp(e, -126, 126));
}

std::uint16_t quantize_word(double v, std::int8_t exp) {
  double scaled = std::abs(v) * std::ldexp(1.0, 15 - exp);
  auto mant =
      static_cast<std::uint16_t>(std::min(32767.0, std::floor(scaled + 0.5)));
  return static_cast<std::uint16_t>((v < 0.0 ? 0x8000u : 0u) | mant);
}

double dequantize_word(std::uint16_t w, std::int8_t exp) {
  double mag = static_cast<double>(w & 0x7fff) * std::ldexp(1.0, exp - 15);
  return (w & 0x8000u) ? -mag : mag;
}

void append_u8(std::vector<std::uint8_t>& out, std::uint8_t v) {
  out.push_back(v);
}

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >>
                                             (8 * i)) &
                                            0xff));
}

void append_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  append_le(out, bits);
}

struct Reader {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;

  std::uint8_t u8() {
    need(1);
    return data[pos++];
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
    pos += sizeof(T);
    return static_cast<T>(v);
  }
  double f64() {
    std::uint64_t bits = le<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void need(std::size_t k) const {
    if (pos + k > data.size())
      throw std::runtime_error("compressed block: truncated");
  }
};

// MSB-first bit packing, each plane padded to a whole byte.
void pack_bits(std::vector<std::uint8_t>& out,
               std::span<const std::uint8_t> bits) {
  std::size_t start = out.size();
  out.resize(start + (bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i] & 1) out[start + i / 8] |= 0x80u >> (i % 8);
}

std::vector<std::uint8_t> unpack_bits(Reader& r, std::size_t count) {
  std::size_t bytes = (count + 7) / 8;
  r.need(bytes);
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i)
    bits[i] = (r.data[r.pos + i / 8] >> (7 - i % 8)) & 1;
  r.pos += bytes;
  return bits;
}

std::size_t syndrome_rows(std::size_t m, double rate) {
  return static_cast<std::size_t>(std::lround(m * (1.0 - rate)));
}

int rate_index(const std::vector<double>& rates, double rate) {
  for (std::size_t i = 0; i < rates.size(); ++i)
    if (std::abs(rates[i] - rate) < 1e-9) return static_cast<int>(i);
  return -1;
}

// Rate grid used by the wire format's 6-bit rate index.
std::vector<double> wire_rates() {
  std::vector<double> r;
  for (int i = 1; i <= 19; ++i) r.push_back(0.05 * i);
  return r;
}

}  // namespace

StatsBlob StatsBlob::encode(std::span<const double> means,
                            std::span<const double> covs) {
  StatsBlob blob;
  blob.mean_count = static_cast<std::uint8_t>(means.size());
  blob.mean_exp = group_exponent(means);
  blob.cov_exp = group_exponent(covs);
  for (double v : means) blob.words.push_back(quantize_word(v, blob.mean_exp));
  for (double v : covs) blob.words.push_back(quantize_word(v, blob.cov_exp));
  return blob;
}

std::vector<double> StatsBlob::decode() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < words.size(); ++i)
    out.push_back(dequantize_word(
        words[i], i < mean_count ? mean_exp : cov_exp));
  return out;
}

PlanePrediction predict_plane(const DecoderState& state, int k,
                              const QuantizerConfig& cfg) {
  const std::size_t m = state.y_hat.size();
  PlanePrediction pred;
  pred.bits.resize(m);
  pred.c.resize(m);
  const double step = std::ldexp(1.0, k - 1);          // 2^{k-1}
  const double top = static_cast<double>(cfg.levels()) - 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    double y = state.y_hat[i] + static_cast<double>(cfg.offset);
    std::uint32_t base = 0;
    for (int j = 0; j < k - 1; ++j)
      base |= static_cast<std::uint32_t>(state.planes[j][i] & 1) << j;
    // Nearest level base + l*step, ties toward the smaller level.
    double z = (y - static_cast<double>(base)) / step;
    double l = std::floor(z + 0.5);
    if (l - z == 0.5) l -= 1.0;
    double l_max = std::floor((top - static_cast<double>(base)) / step);
    l = std::clamp(l, 0.0, l_max);
    double level = static_cast<double>(base) + l * step;
    pred.bits[i] =
        static_cast<std::uint8_t>(static_cast<std::uint64_t>(l) & 1);
    pred.c[i] = std::clamp(2.0 * std::abs(y - level), 0.0, step);
  }
  return pred;
}

CompressedBlock encode_block(std::span<const double> x,
                             const MeasurementOperator& op,
                             const DitherVector& dither,
                             const QuantizerConfig& cfg,
                             const ErrorModel& model, const RatePolicy& policy,
                             const CodeDatabase& codes,
                             const StatsBlob& stats, double mean_shift) {
  std::vector<double> shifted(x.begin(), x.end());
  for (double& v : shifted) v -= mean_shift;
  std::vector<double> y = measure(op, shifted, dither, cfg.delta);
  std::vector<std::int32_t> q = quantize(y, cfg);
  BitplaneMatrix planes = to_bitplanes(q, cfg);

  CompressedBlock block;
  block.op_kind = op.kind();
  block.n = static_cast<std::uint32_t>(op.n());
  block.m = static_cast<std::uint32_t>(op.m());
  block.bits = static_cast<std::uint8_t>(cfg.bits);
  block.delta = cfg.delta;
  block.sigma = op.sigma();
  block.epsilon = model.epsilon;
  block.mean_shift = mean_shift;
  block.offset = cfg.offset;
  block.op_seed = op.seed();
  block.dither_seed = dither.seed;
  block.stats = stats;
  block.plan = plan_bitplanes(model, cfg.bits, policy);
  block.payloads.resize(cfg.bits);
  for (int k = 1; k <= cfg.bits; ++k) {
    const PlaneDecision& d = block.plan.planes[k - 1];
    if (d.mode == PlaneMode::kRaw) {
      block.payloads[k - 1] = planes.plane(k);
    } else if (d.mode == PlaneMode::kSyndrome) {
      block.payloads[k - 1] = syndrome(codes.at(d.rate), planes.plane(k));
    }
  }
  return block;
}

BlockDecodeResult decode_block(const CompressedBlock& block,
                               std::span<const double> y_hat,
                               const CodeDatabase& codes, int max_iters) {
  if (y_hat.size() != block.m)
    throw std::invalid_argument("decode_block: prediction length mismatch");
  QuantizerConfig cfg = block.quantizer();
  ErrorModel model = block.model();
  DecoderState state;
  state.y_hat.assign(y_hat.begin(), y_hat.end());

  BlockDecodeResult result;
  result.plane_converged.assign(block.bits, 1);
  for (int k = 1; k <= block.bits; ++k) {
    const PlaneDecision& d = block.plan.planes[k - 1];
    std::vector<std::uint8_t> accepted;
    if (d.mode == PlaneMode::kRaw) {
      accepted = block.payloads[k - 1];
    } else {
      PlanePrediction pred = predict_plane(state, k, cfg);
      if (d.mode == PlaneMode::kSkip) {
        accepted = std::move(pred.bits);
      } else {
        std::vector<double> priors(block.m);
        for (std::size_t i = 0; i < block.m; ++i)
          priors[i] = std::clamp(bit_error_likelihood(k, pred.c[i], model),
                                 1e-6, 0.5);
        DecodeResult bp = decode(codes.at(d.rate), pred.bits,
                                 block.payloads[k - 1], priors, max_iters);
        result.plane_converged[k - 1] = bp.converged;
        result.all_converged &= bp.converged;
        accepted = std::move(bp.bits);
      }
    }
    state.planes.push_back(std::move(accepted));
  }

  BitplaneMatrix planes;
  planes.m = block.m;
  planes.bits = block.bits;
  planes.planes = std::move(state.planes);
  result.q = from_bitplanes(planes, cfg);
  return result;
}

void append_stats_blob(std::vector<std::uint8_t>& out, const StatsBlob& blob) {
  append_u8(out, static_cast<std::uint8_t>(blob.words.size()));
  append_u8(out, blob.mean_count);
  append_u8(out, static_cast<std::uint8_t>(blob.mean_exp));
  append_u8(out, static_cast<std::uint8_t>(blob.cov_exp));
  for (std::uint16_t w : blob.words) append_le(out, w);
}

StatsBlob parse_stats_blob(std::span<const std::uint8_t> data,
                           std::size_t& pos) {
  Reader r{data, pos};
  StatsBlob blob;
  std::uint8_t words = r.u8();
  blob.mean_count = r.u8();
  blob.mean_exp = static_cast<std::int8_t>(r.u8());
  blob.cov_exp = static_cast<std::int8_t>(r.u8());
  blob.words.resize(words);
  for (auto& w : blob.words) w = r.le<std::uint16_t>();
  pos = r.pos;
  return blob;
}

std::vector<std::uint8_t> CompressedBlock::serialize() const {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  append_u8(out, kFormatVersion);
  append_u8(out, kPrngVersion);
  append_u8(out, static_cast<std::uint8_t>(op_kind));
  append_u8(out, bits);
  append_le(out, n);
  append_le(out, m);
  append_le(out, offset);
  append_f64(out, delta);
  append_f64(out, sigma);
  append_f64(out, epsilon);
  append_f64(out, mean_shift);
  append_le(out, op_seed);
  append_le(out, dither_seed);
  const std::vector<double> grid = wire_rates();
  for (int k = 0; k < bits; ++k) {
    const PlaneDecision& d = plan.planes[k];
    int idx = 0;
    if (d.mode == PlaneMode::kSyndrome) {
      idx = rate_index(grid, d.rate);
      if (idx < 0)
        throw std::runtime_error("serialize: rate not on the wire grid");
    }
    append_u8(out, static_cast<std::uint8_t>(
                       (static_cast<int>(d.mode) << 6) | (idx & 0x3f)));
  }
  append_stats_blob(out, stats);
  for (int k = 0; k < bits; ++k)
    if (!payloads[k].empty()) pack_bits(out, payloads[k]);
  return out;
}

CompressedBlock CompressedBlock::parse(std::span<const std::uint8_t> data,
                                       std::size_t* consumed) {
  Reader r{data};
  r.need(4);
  if (std::memcmp(data.data(), kMagic, 4) != 0)
    throw std::runtime_error("compressed block: bad magic");
  r.pos = 4;
  if (r.u8() != kFormatVersion)
    throw std::runtime_error("compressed block: unsupported version");
  if (r.u8() != kPrngVersion)
    throw std::runtime_error("compressed block: PRNG version mismatch");
  CompressedBlock b;
  b.op_kind = static_cast<OperatorKind>(r.u8());
  b.bits = r.u8();
  b.n = r.le<std::uint32_t>();
  b.m = r.le<std::uint32_t>();
  b.offset = r.le<std::uint32_t>();
  b.delta = r.f64();
  b.sigma = r.f64();
  b.epsilon = r.f64();
  b.mean_shift = r.f64();
  b.op_seed = r.le<std::uint64_t>();
  b.dither_seed = r.le<std::uint64_t>();
  const std::vector<double> grid = wire_rates();
  b.plan.planes.resize(b.bits);
  for (int k = 0; k < b.bits; ++k) {
    std::uint8_t v = r.u8();
    PlaneDecision& d = b.plan.planes[k];
    d.mode = static_cast<PlaneMode>(v >> 6);
    if (d.mode == PlaneMode::kSyndrome) d.rate = grid.at(v & 0x3f);
  }
  b.stats = parse_stats_blob(data, r.pos);
  b.payloads.resize(b.bits);
  for (int k = 0; k < b.bits; ++k) {
    const PlaneDecision& d = b.plan.planes[k];
    if (d.mode == PlaneMode::kRaw)
      b.payloads[k] = unpack_bits(r, b.m);
    else if (d.mode == PlaneMode::kSyndrome)
      b.payloads[k] = unpack_bits(r, syndrome_rows(b.m, d.rate));
  }
  if (consumed) *consumed = r.pos;
  return b;
}

std::size_t CompressedBlock::total_bits() const { return serialize().size() * 8; }

std::size_t CompressedBlock::payload_bits() const {
  std::size_t total = 0;
  for (int k = 0; k < bits; ++k) {
    const PlaneDecision& d = plan.planes[k];
    if (d.mode == PlaneMode::kRaw)
      total += m;
    else if (d.mode == PlaneMode::kSyndrome)
      total += syndrome_rows(m, d.rate);
  }
  return total;
}

RateAccounting rate_accounting(const CompressedBlock& block) {
  RateAccounting acc;
  acc.total_bits = block.total_bits();
  acc.payload_bits = block.payload_bits();
  acc.stats_bits = block.stats_bits();
  std::size_t padded_payload = 0;
  for (int k = 0; k < block.bits; ++k)
    if (!block.payloads[k].empty())
      padded_payload += 8 * ((block.payloads[k].size() + 7) / 8);
  acc.framing_bits =
      acc.total_bits - padded_payload - acc.stats_bits;
  return acc;
}

}  // namespace dqrp
