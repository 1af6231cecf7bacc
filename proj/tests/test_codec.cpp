#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dqrp/codec.hpp"
#include "dqrp/rng.hpp"
#include "oracles.hpp"

using namespace dqrp;

namespace {

const CodeDatabase& test_db() {
  static CodeDatabase db =
      CodeDatabase::generate(400, RatePolicy::defaults().rates, 5);
  return db;
}

// x and a prediction at the requested normalized error for the operator.
struct Pair {
  std::vector<double> x, x_hat;
};

Pair make_pair(const MeasurementOperator& op, double normalized, double delta,
               std::uint64_t seed) {
  Rng rng(seed);
  Pair p;
  p.x.resize(op.n());
  for (double& v : p.x) v = 4.0 * rng.gaussian();
  std::vector<double> dir(op.n());
  double norm = 0.0;
  for (double& v : dir) {
    v = rng.gaussian();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  double eps = normalized * delta / op.sigma();
  p.x_hat = p.x;
  for (std::size_t i = 0; i < op.n(); ++i)
    p.x_hat[i] -= eps * dir[i] / norm;
  return p;
}

}  // namespace

TEST_CASE("plane prediction") {
  QuantizerConfig cfg{4, 1.0, 4};
  SUBCASE("k = 1 takes the LSB of the quantized prediction") {
    DecoderState state;
    state.y_hat = {0.2, 0.6, -1.4, 2.49};
    PlanePrediction pred = predict_plane(state, 1, cfg);
    // Levels: round(y + offset) = 4, 5, 3, 6 -> LSBs 0 1 1 0.
    CHECK(pred.bits == std::vector<std::uint8_t>{0, 1, 1, 0});
    for (std::size_t i = 0; i < 4; ++i) CHECK(pred.c[i] <= 1.0);
  }
  SUBCASE("two decoded LSBs pick the nearer of two consistent levels") {
    // Decoded bits (1, 0): universal value 1; candidate levels in offset
    // space are 1 and 5, i.e. q = -3 and q = 1. A prediction closer to
    // q = -3 must select it and predict bit 3 of the lower level.
    DecoderState state;
    state.planes = {{1}, {0}};
    state.y_hat = {-2.6};  // offset space 1.4, nearer level 1 than 5
    PlanePrediction pred = predict_plane(state, 3, cfg);
    CHECK(pred.bits[0] == 0);
    CHECK(pred.c[0] == doctest::Approx(0.8));
    state.y_hat = {-0.4};  // offset space 3.6, nearer level 5 (q = 1)
    pred = predict_plane(state, 3, cfg);
    CHECK(pred.bits[0] == 1);
    CHECK(pred.c[0] == doctest::Approx(2.8));
  }
  SUBCASE("matches the exhaustive enumeration oracle") {
    Rng rng(29);
    for (int trial = 0; trial < 10000; ++trial) {
      int bits = 4 + static_cast<int>(rng.next_below(5));
      int k = 1 + static_cast<int>(rng.next_below(bits));
      QuantizerConfig c{bits, 1.0, 1u << (bits - 1)};
      DecoderState state;
      std::uint32_t lower = static_cast<std::uint32_t>(
          rng.next_below(1u << (k - 1)));
      for (int j = 0; j < k - 1; ++j)
        state.planes.push_back({static_cast<std::uint8_t>((lower >> j) & 1)});
      double y = (rng.unit() - 0.5) * (c.levels() + 8.0);
      state.y_hat = {y};
      PlanePrediction fast = predict_plane(state, k, c);
      // Brute force: try every representable level whose low bits match.
      double best = 1e18;
      std::uint32_t best_level = 0;
      for (std::uint32_t v = 0; v < c.levels(); ++v) {
        if ((v & ((1u << (k - 1)) - 1)) != lower) continue;
        double d = std::fabs(y + c.offset - v);
        if (d < best - 1e-12 ||
            (std::fabs(d - best) <= 1e-12 && v < best_level)) {
          best = d;
          best_level = v;
        }
      }
      CAPTURE(trial);
      CHECK(fast.bits[0] == ((best_level >> (k - 1)) & 1));
      CHECK(fast.c[0] ==
            doctest::Approx(std::min(2.0 * best, std::ldexp(1.0, k - 1))));
    }
  }
}

TEST_CASE("stats blob quantization") {
  std::vector<double> means = {1034.7, -220.1, 18.0};
  std::vector<double> covs = {1.9e6, 3.4e5, -7.7e4};
  StatsBlob blob = StatsBlob::encode(means, covs);
  CHECK(blob.param_bits() == 6 * 16);
  std::vector<double> round = blob.decode();
  for (int i = 0; i < 3; ++i) {
    CHECK(std::fabs(round[i] - means[i]) <= 1034.7 / (1 << 14));
    CHECK(std::fabs(round[3 + i] - covs[i]) <= 1.9e6 / (1 << 14));
  }
  SUBCASE("zero parameters survive exactly") {
    StatsBlob z = StatsBlob::encode(std::vector<double>{0.0, 0.0},
                                    std::vector<double>{0.0});
    for (double v : z.decode()) CHECK(v == 0.0);
  }
}

TEST_CASE("encode plans") {
  auto op = MeasurementOperator::build(OperatorKind::kSrht, 512, 400, 1.0, 7);
  DitherVector w = make_dither(400, 8);
  QuantizerConfig cfg = make_quantizer(11, 1.0);
  RatePolicy policy = RatePolicy::defaults();

  SUBCASE("zero prediction error skips every plane") {
    Pair p = make_pair(op, 0.0, cfg.delta, 100);
    CompressedBlock block = encode_block(
        p.x, op, w, cfg, ErrorModel{0.0, op.sigma(), cfg.delta}, policy,
        test_db());
    for (const auto& d : block.plan.planes) CHECK(d.mode == PlaneMode::kSkip);
    CHECK(block.payload_bits() == 0);
  }
  SUBCASE("huge prediction error sends the LSB plane raw") {
    CompressedBlock block = encode_block(
        std::vector<double>(512, 1.0), op, w, cfg,
        ErrorModel{1e5, op.sigma(), cfg.delta}, policy, test_db());
    CHECK(block.plan.planes[0].mode == PlaneMode::kRaw);
  }
  SUBCASE("transition profile raw -> syndromes -> skips") {
    // Normalized error around 1.9 lands raw planes below syndrome planes,
    // reproducing the expected low-to-high significance profile.
    Pair p = make_pair(op, 1.9, cfg.delta, 101);
    double eps = 1.9 * cfg.delta / op.sigma();
    CompressedBlock block =
        encode_block(p.x, op, w, cfg, ErrorModel{eps, op.sigma(), cfg.delta},
                     policy, test_db());
    std::string profile;
    for (const auto& d : block.plan.planes)
      profile += d.mode == PlaneMode::kRaw
                     ? 'R'
                     : (d.mode == PlaneMode::kSyndrome ? 'S' : '.');
    CHECK(profile.substr(0, 2) == "RR");
    CHECK(profile.find('S') != std::string::npos);
    CHECK(profile.back() == '.');
    // Once skipping starts it never stops.
    std::size_t first_skip = profile.find('.');
    for (std::size_t i = first_skip; i < profile.size(); ++i)
      CHECK(profile[i] == '.');
  }
}

TEST_CASE("wire format") {
  auto op = MeasurementOperator::build(OperatorKind::kSrht, 512, 400, 1.0, 7);
  DitherVector w = make_dither(400, 9);
  QuantizerConfig cfg = make_quantizer(11, 2.0);
  RatePolicy policy = RatePolicy::defaults();
  Pair p = make_pair(op, 0.8, cfg.delta, 200);
  double eps = 0.8 * cfg.delta / op.sigma();
  StatsBlob stats = StatsBlob::encode(std::vector<double>{3.0, 4.0},
                                      std::vector<double>{5.0});
  CompressedBlock block =
      encode_block(p.x, op, w, cfg, ErrorModel{eps, op.sigma(), cfg.delta},
                   policy, test_db(), stats);

  std::vector<std::uint8_t> bytes = block.serialize();
  CHECK(bytes.size() * 8 == block.total_bits());
  CHECK(bytes[0] == 'D');
  CHECK(bytes[1] == 'Q');
  CHECK(bytes[2] == 'R');
  CHECK(bytes[3] == 'P');

  std::size_t used = 0;
  CompressedBlock back = CompressedBlock::parse(bytes, &used);
  CHECK(used == bytes.size());
  CHECK(back.n == block.n);
  CHECK(back.m == block.m);
  CHECK(back.bits == block.bits);
  CHECK(back.delta == block.delta);
  CHECK(back.sigma == block.sigma);
  CHECK(back.epsilon == block.epsilon);
  CHECK(back.offset == block.offset);
  CHECK(back.op_seed == block.op_seed);
  CHECK(back.dither_seed == block.dither_seed);
  CHECK(back.stats.words == block.stats.words);
  CHECK(back.total_bits() == block.total_bits());
  REQUIRE(back.plan.planes.size() == block.plan.planes.size());
  for (std::size_t k = 0; k < back.plan.planes.size(); ++k) {
    CHECK(back.plan.planes[k].mode == block.plan.planes[k].mode);
    CHECK(back.payloads[k] == block.payloads[k]);
  }
  SUBCASE("payload lengths match the plan") {
    for (std::size_t k = 0; k < back.plan.planes.size(); ++k) {
      const auto& d = back.plan.planes[k];
      if (d.mode == PlaneMode::kRaw)
        CHECK(back.payloads[k].size() == back.m);
      else if (d.mode == PlaneMode::kSyndrome)
        CHECK(back.payloads[k].size() ==
              static_cast<std::size_t>(std::lround(back.m * (1.0 - d.rate))));
      else
        CHECK(back.payloads[k].empty());
    }
  }
  SUBCASE("corrupted magic is rejected") {
    bytes[0] = 'X';
    CHECK_THROWS(CompressedBlock::parse(bytes));
  }
}

TEST_CASE("rate accounting") {
  auto op = MeasurementOperator::build(OperatorKind::kSrht, 4096, 4000, 1.0, 3);
  DitherVector w = make_dither(4000, 4);
  QuantizerConfig cfg = make_quantizer(11, 1.0);
  // Force specific plans through hand-built blocks.
  CompressedBlock block;
  block.n = 4096;
  block.m = 4000;
  block.bits = 11;
  block.offset = cfg.offset;
  block.plan.planes.resize(11);
  block.payloads.resize(11);
  SUBCASE("all-skip block carries only header and stats") {
    RateAccounting acc = rate_accounting(block);
    CHECK(acc.payload_bits == 0);
    CHECK(acc.total_bits == acc.framing_bits + acc.stats_bits);
  }
  SUBCASE("a raw plane adds exactly m bits") {
    block.plan.planes[0].mode = PlaneMode::kRaw;
    block.payloads[0].assign(4000, 1);
    CHECK(rate_accounting(block).payload_bits == 4000);
  }
  SUBCASE("a syndrome at rate 0.45 adds exactly m(1-R) bits") {
    block.plan.planes[2].mode = PlaneMode::kSyndrome;
    block.plan.planes[2].rate = 0.45;
    block.payloads[2].assign(2200, 0);
    CHECK(rate_accounting(block).payload_bits == 2200);
  }
}

TEST_CASE("block decode round trips") {
  auto op = MeasurementOperator::build(OperatorKind::kSrht, 512, 400, 1.0, 7);
  QuantizerConfig cfg = make_quantizer(11, 1.0);
  RatePolicy policy = RatePolicy::defaults();

  SUBCASE("all skip: zero error reproduces q exactly") {
    DitherVector w = make_dither(400, 21);
    Pair p = make_pair(op, 0.0, cfg.delta, 300);
    CompressedBlock block = encode_block(
        p.x, op, w, cfg, ErrorModel{0.0, op.sigma(), cfg.delta}, policy,
        test_db());
    auto y_hat = measure(op, p.x, w, cfg.delta);  // perfect prediction
    BlockDecodeResult dec = decode_block(block, y_hat, test_db());
    CHECK(dec.all_converged);
    CHECK(dec.q == quantize(measure(op, p.x, w, cfg.delta), cfg));
  }
  SUBCASE("all raw: recovered regardless of the prediction") {
    DitherVector w = make_dither(400, 22);
    Pair p = make_pair(op, 0.5, cfg.delta, 301);
    CompressedBlock block = encode_block(
        p.x, op, w, cfg, ErrorModel{1e5, op.sigma(), cfg.delta}, policy,
        test_db());
    for (const auto& d : block.plan.planes) CHECK(d.mode == PlaneMode::kRaw);
    std::vector<double> junk(400, 0.0);
    BlockDecodeResult dec = decode_block(block, junk, test_db());
    CHECK(dec.q == quantize(measure(op, p.x, w, cfg.delta), cfg));
  }
  SUBCASE("syndrome path: lossless whenever every plane converges") {
    // Longer blocks keep the finite-length noise well inside the back-off
    // margin at this operating point.
    static const CodeDatabase db2000 =
        CodeDatabase::generate(2000, RatePolicy::defaults().rates, 6);
    auto op2 =
        MeasurementOperator::build(OperatorKind::kSrht, 2048, 2000, 1.0, 17);
    int converged_blocks = 0, exact_blocks = 0;
    for (int trial = 0; trial < 8; ++trial) {
      DitherVector w = make_dither(2000, 5000 + trial);
      Pair p = make_pair(op2, 0.25, cfg.delta, 400 + trial);
      double eps = 0.25 * cfg.delta / op2.sigma();
      CompressedBlock block = encode_block(
          p.x, op2, w, cfg, ErrorModel{eps, op2.sigma(), cfg.delta}, policy,
          db2000);
      CHECK(block.plan.syndrome_planes() >= 1);
      auto y_hat = measure(op2, p.x_hat, w, cfg.delta);
      BlockDecodeResult dec = decode_block(block, y_hat, db2000);
      auto q = quantize(measure(op2, p.x, w, cfg.delta), cfg);
      if (dec.all_converged) {
        ++converged_blocks;
        exact_blocks += dec.q == q;
      }
    }
    CHECK(converged_blocks >= 6);
    CHECK(exact_blocks == converged_blocks);
  }
  SUBCASE("correct lower planes never hurt the next plane's prediction") {
    DitherVector w = make_dither(400, 23);
    Pair p = make_pair(op, 1.0, cfg.delta, 500);
    auto y = measure(op, p.x, w, cfg.delta);
    auto q = quantize(y, cfg);
    BitplaneMatrix truth = to_bitplanes(q, cfg);
    auto y_hat = measure(op, p.x_hat, w, cfg.delta);

    DecoderState good;
    good.y_hat = y_hat;
    good.planes = {truth.plane(1), truth.plane(2)};
    DecoderState bad = good;
    Rng rng(31);
    for (auto& plane : bad.planes)
      for (auto& b : plane)
        if (rng.unit() < 0.25) b ^= 1;

    auto count_flips = [&](const DecoderState& st) {
      PlanePrediction pred = predict_plane(st, 3, cfg);
      std::size_t flips = 0;
      for (std::size_t i = 0; i < 400; ++i)
        flips += pred.bits[i] != truth.plane(3)[i];
      return flips;
    };
    CHECK(count_flips(good) <= count_flips(bad));
  }
}
