// Acceptance suite: one line per criterion, PASS/FAIL with the measured
// numbers. Exit status is the number of failed criteria.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "dqrp/codec.hpp"
#include "dqrp/coding.hpp"
#include "dqrp/ldpc.hpp"
#include "dqrp/measurement.hpp"
#include "dqrp/pipeline.hpp"
#include "dqrp/prediction.hpp"
#include "dqrp/recon.hpp"
#include "dqrp/rng.hpp"
#include "oracles.hpp"

using namespace dqrp;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

const CodeDatabase& db4000() {
  static CodeDatabase db =
      CodeDatabase::generate(4000, RatePolicy::defaults().rates, 1);
  return db;
}

const CodeDatabase& db400() {
  static CodeDatabase db =
      CodeDatabase::generate(400, RatePolicy::defaults().rates, 2);
  return db;
}

std::vector<std::uint8_t> plane_of(std::span<const std::int32_t> q, int k,
                                   std::uint32_t offset) {
  std::vector<std::uint8_t> bits(q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    bits[i] = (static_cast<std::uint32_t>(q[i] + static_cast<std::int64_t>(
                                                     offset)) >>
               (k - 1)) &
              1;
  return bits;
}

// Empirical plane flip rates of the end-to-end predictor for planes
// 1..kmax, one operator kind, one normalized error; lower planes supplied
// from the truth, matching the closed form's conditioning.
std::vector<double> empirical_flip_rates(OperatorKind kind, double normalized,
                                         int kmax, int trials,
                                         std::uint64_t seed_base) {
  const std::size_t n = 256, m = 256;
  const QuantizerConfig cfg{16, 1.0, 1u << 15};
  std::vector<std::atomic<long>> flips(kmax);
  for (auto& f : flips) f = 0;
  std::atomic<int> next{0};
  auto worker = [&] {
    while (true) {
      int t = next.fetch_add(1);
      if (t >= trials) break;
      Rng rng(derive_seed(seed_base, t));
      double sigma = 1.0;
      auto op = MeasurementOperator::build(kind, n, m, sigma,
                                           derive_seed(seed_base, 2 * t + 1));
      double eps = normalized * cfg.delta / op.sigma();
      std::vector<double> x(n), e(n);
      for (double& v : x) v = 20.0 * rng.gaussian();
      double norm = 0.0;
      for (double& v : e) {
        v = rng.gaussian();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      std::vector<double> xh = x;
      for (std::size_t i = 0; i < n; ++i) xh[i] -= eps * e[i] / norm;
      DitherVector w = make_dither(m, derive_seed(seed_base, 3 * t + 2));
      auto y = measure(op, x, w, cfg.delta);
      auto yh = measure(op, xh, w, cfg.delta);
      auto q = quantize(y, cfg);
      DecoderState state;
      state.y_hat = yh;
      for (int k = 1; k <= kmax; ++k) {
        PlanePrediction pred = predict_plane(state, k, cfg);
        auto truth = plane_of(q, k, cfg.offset);
        long bad = 0;
        for (std::size_t i = 0; i < m; ++i) bad += pred.bits[i] != truth[i];
        flips[k - 1] += bad;
        state.planes.push_back(std::move(truth));  // condition on truth
      }
    }
  };
  std::thread t1(worker), t2(worker);
  t1.join();
  t2.join();
  std::vector<double> rates(kmax);
  for (int k = 0; k < kmax; ++k)
    rates[k] = static_cast<double>(flips[k]) /
               (static_cast<double>(trials) * m);
  return rates;
}

void criterion_1_and_2() {
  const std::vector<double> grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  const int trials = 4000;  // x 256 bits > 1e6 per (k, eps) pair
  double worst_gap_gauss = 0.0, worst_excess_srht = -1.0;
  bool pass1 = true, pass2 = true;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    double s = grid[gi];
    auto emp_g = empirical_flip_rates(OperatorKind::kGaussian, s, 5, trials,
                                      1000 + gi);
    auto emp_h =
        empirical_flip_rates(OperatorKind::kSrht, s, 5, trials, 2000 + gi);
    for (int k = 1; k <= 5; ++k) {
      double theory = bitflip_probability(k, ErrorModel{s, 1.0, 1.0});
      double gap = std::fabs(emp_g[k - 1] - theory);
      worst_gap_gauss = std::max(worst_gap_gauss, gap);
      pass1 &= gap <= 0.01;
      double excess = emp_h[k - 1] - theory;
      worst_excess_srht = std::max(worst_excess_srht, excess);
      pass2 &= excess <= 0.01;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max |emp - theory| = %.4f over 25 pairs",
                worst_gap_gauss);
  report(1, "Gaussian flip rates match the closed form within 0.01", pass1,
         buf);
  std::snprintf(buf, sizeof(buf), "max excess over theory = %.4f",
                worst_excess_srht);
  report(2, "SRHT flip rates never exceed the closed form by 0.01", pass2,
         buf);
}

void criterion_3() {
  bool pass = true;
  double worst = 0.0;
  for (double s : {0.5, 1.0}) {
    ErrorModel model{s, 1.0, 1.0};
    const int buckets = 20;
    std::vector<long> count(buckets, 0), flip(buckets, 0);
    std::vector<double> lsum(buckets, 0.0);
    oracle::PredictionChannel ch(s, 37);
    long produced = 0;
    const long cap = 60000000;
    long filled = 0;
    while (filled < buckets && produced < cap) {
      ++produced;
      double off = ch.sample_yhat_offset();
      // Nearest candidate level at spacing 4 (k = 3), doubled-distance c.
      double z = off / 4.0;
      double l = std::floor(z + 0.5);
      if (l - z == 0.5) l -= 1.0;
      bool flipped = static_cast<long long>(std::llround(l)) & 1;
      double c = std::min(2.0 * std::fabs(off - 4.0 * l), 4.0);
      int b = std::min(buckets - 1, static_cast<int>(c / 4.0 * buckets));
      if (count[b] == 10000) continue;
      count[b]++;
      if (count[b] == 10000) ++filled;
      flip[b] += flipped;
      lsum[b] += bit_error_likelihood(3, c, model);
    }
    for (int b = 0; b < buckets; ++b) {
      if (count[b] < 10000) {
        pass = false;
        continue;
      }
      double emp = static_cast<double>(flip[b]) / count[b];
      double gap = std::fabs(emp - lsum[b] / count[b]);
      worst = std::max(worst, gap);
      pass &= gap <= 0.02;
    }
  }
  // Analytic maximum at c = 2^{k-1}.
  bool exact_half =
      bit_error_likelihood(3, 4.0, ErrorModel{0.7, 1.0, 1.0}) == 0.5;
  pass &= exact_half;
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "max per-bucket gap = %.4f, L_3(4) == 0.5 exactly: %s", worst,
                exact_half ? "yes" : "no");
  report(3, "conditional flip rates match the likelihood per c-bucket", pass,
         buf);
}

void criterion_4() {
  const std::size_t n = 4096, m = 4000;
  const QuantizerConfig cfg{11, 1.0, 1u << 10};
  RatePolicy policy = RatePolicy::defaults();
  auto op = MeasurementOperator::build(OperatorKind::kSrht, n, m, 1.0, 77);
  long long bit_errors = 0, bits_total = 0;
  int exact_blocks = 0, blocks_total = 0;
  for (double s : {0.5, 1.0, 2.0}) {
    double eps = s * cfg.delta / op.sigma();
    for (int trial = 0; trial < 50; ++trial) {
      Rng rng(derive_seed(4000 + std::lround(s * 10), trial));
      std::vector<double> x(n), dir(n);
      for (double& v : x) v = 120.0 * rng.gaussian();
      double norm = 0.0;
      for (double& v : dir) {
        v = rng.gaussian();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      std::vector<double> xh = x;
      for (std::size_t i = 0; i < n; ++i) xh[i] -= eps * dir[i] / norm;
      DitherVector w =
          make_dither(m, derive_seed(9000 + std::lround(s * 10), trial));
      CompressedBlock block =
          encode_block(x, op, w, cfg, ErrorModel{eps, op.sigma(), cfg.delta},
                       policy, db4000());
      auto y_hat = measure(op, xh, w, cfg.delta);
      BlockDecodeResult dec = decode_block(block, y_hat, db4000());
      auto q = quantize(measure(op, x, w, cfg.delta), cfg);
      long long bad = 0;
      for (int k = 1; k <= cfg.bits; ++k) {
        auto a = plane_of(q, k, cfg.offset);
        auto b = plane_of(dec.q, k, cfg.offset);
        for (std::size_t i = 0; i < m; ++i) bad += a[i] != b[i];
      }
      bit_errors += bad;
      bits_total += static_cast<long long>(m) * cfg.bits;
      exact_blocks += bad == 0;
      ++blocks_total;
    }
  }
  double ber = static_cast<double>(bit_errors) / bits_total;
  double exact_frac = static_cast<double>(exact_blocks) / blocks_total;
  bool pass = ber <= 2e-3 && exact_frac >= 0.9;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "BER = %.2e, exact blocks %d/%d", ber,
                exact_blocks, blocks_total);
  report(4, "DSC round trip at the default policy", pass, buf);
}

void criterion_5() {
  Rng rng(55);
  const std::size_t m = 4000;
  auto run = [&](double rate, double p, int trials) {
    const LdpcCode& code = db4000().at(rate);
    int ok = 0;
    for (int t = 0; t < trials; ++t) {
      std::vector<std::uint8_t> truth(m), pred(m);
      for (auto& v : truth) v = rng.next_u64() & 1;
      pred = truth;
      for (auto& v : pred)
        if (rng.unit() < p) v ^= 1;
      std::vector<double> priors(m, p);
      DecodeResult res = decode(code, pred, syndrome(code, truth), priors, 100);
      ok += res.converged && res.bits == truth;
    }
    return ok;
  };
  int ok45 = run(0.45, 0.11, 100);
  int ok60 = run(0.60, 0.11, 40);
  bool pass = ok45 >= 99 && ok60 < 20;
  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "rate 0.45: %d/100 ok, rate 0.60: %d/40 ok%s",
                ok45, ok60,
                ok45 < 99 ? "; uniform-prior BP at this block length tops "
                            "out near p=0.095, see README known limitation"
                          : "");
  report(5, "BSC(0.11) decodes at 0.45 and collapses at 0.60", pass, buf);
}

void criterion_6() {
  // Operating point with p_3 ~ 0.11: plan backs off to 0.45; test one step
  // above at 0.50 with the real c-dependent channel.
  double lo = 0.5, hi = 2.5;
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    (bitflip_probability(3, ErrorModel{mid, 1.0, 1.0}) < 0.11 ? lo : hi) = mid;
  }
  const double s = lo;
  ErrorModel model{s, 1.0, 1.0};
  RatePolicy policy = RatePolicy::defaults();
  BitplanePlan plan = plan_bitplanes(model, 3, policy);
  bool backoff_ok = plan.planes[2].mode == PlaneMode::kSyndrome &&
                    std::fabs(plan.planes[2].rate - 0.45) < 1e-9;

  const std::size_t m = 4000;
  const LdpcCode& code = db4000().at(0.50);
  oracle::PredictionChannel ch(s, 66);
  int ok_uniform = 0, ok_perbit = 0, perbit_rescues = 0;
  const double p3 = bitflip_probability(3, model);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> truth(m), pred(m);
    std::vector<double> like(m);
    for (std::size_t i = 0; i < m; ++i) {
      double off = ch.sample_yhat_offset();  // yhat - true level
      // True plane-3 bit is free by symmetry; take 0, so the predicted bit
      // is the parity of the chosen spacing-4 candidate.
      double z = off / 4.0;
      double l = std::floor(z + 0.5);
      if (l - z == 0.5) l -= 1.0;
      truth[i] = 0;
      pred[i] = static_cast<std::uint8_t>(
          static_cast<long long>(std::llround(l)) & 1);
      double c = std::min(2.0 * std::fabs(off - 4.0 * l), 4.0);
      like[i] = std::clamp(bit_error_likelihood(3, c, model), 1e-6, 0.5);
    }
    auto target = syndrome(code, truth);
    std::vector<double> uniform(m, std::clamp(p3, 1e-6, 0.5));
    DecodeResult a = decode(code, pred, target, uniform, 100);
    DecodeResult b = decode(code, pred, target, like, 100);
    bool ua = a.converged && a.bits == truth;
    bool ub = b.converged && b.bits == truth;
    ok_uniform += ua;
    ok_perbit += ub;
    perbit_rescues += (!ua && ub);
  }
  bool pass = backoff_ok && ok_perbit > ok_uniform && perbit_rescues > 0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "p3 = %.4f, uniform %d/200, per-bit %d/200, rescues %d",
                p3, ok_uniform, ok_perbit, perbit_rescues);
  report(6, "per-bit likelihood priors beat uniform priors above back-off",
         pass, buf);
}

void criterion_7() {
  // Overhead-only containers. The linear set uses bands whose statistics
  // are exactly representable in the 16-bit format, so the quantized
  // predictor is exact and every plane is skipped organically; the
  // successive set reaches the all-skip plan through the epsilon override.
  ImageSet set;
  set.bands.resize(4);
  for (auto& b : set.bands) {
    b.width = 64;
    b.height = 64;
    b.pixels.resize(64 * 64);
  }
  const double gains[3] = {1.0, 0.5, 0.25};
  const double offsets[3] = {0.0, 128.0, 192.0};
  for (std::size_t i = 0; i < set.bands[0].pixels.size(); ++i) {
    double v = (i % 64) < 32 ? 256.0 : 768.0;  // dyadic mean and variance
    set.bands[0].pixels[i] = v;
    for (int b = 0; b < 3; ++b)
      set.bands[1 + b].pixels[i] = gains[b] * v + offsets[b];
  }
  CodecParams params;
  params.block = 64;
  params.m = 4000;
  params.bits = 11;
  params.delta = {8.0, 8.0, 8.0};
  params.threads = 2;
  EncodedImage lin = encode_image(set, params, db4000());
  DecodedImage dl = decode_image(lin, set.bands[0], db4000());
  params.mode = PredictionMode::kSuccessive;
  params.epsilon_override = 0.0;
  EncodedImage suc = encode_image(set, params, db4000());
  DecodedImage ds = decode_image(suc, set.bands[0], db4000());
  bool overhead_ok = dl.report.overall_bpp == 96.0 / 12288.0 &&
                     ds.report.overall_bpp == 176.0 / 12288.0 &&
                     dl.report.bands[0].payload_bits == 0 &&
                     ds.report.bands[0].payload_bits == 0;

  // Serialized size equals reported bits for random blocks.
  auto op = MeasurementOperator::build(OperatorKind::kSrht, 512, 400, 1.0, 7);
  RatePolicy policy = RatePolicy::defaults();
  bool bits_ok = true;
  for (int t = 0; t < 100; ++t) {
    Rng trng(derive_seed(701, t));
    int bits = 6 + static_cast<int>(trng.next_below(9));
    QuantizerConfig cfg{bits, 1.0, 1u << (bits - 1)};
    std::vector<double> x(512);
    for (double& v : x) v = 4.0 * trng.gaussian();
    DitherVector w = make_dither(400, derive_seed(702, t));
    double s = 0.05 * std::pow(100.0, trng.unit());  // 0.05 .. 5
    double eps = s * cfg.delta / op.sigma();
    std::vector<double> means(1 + trng.next_below(4)),
        covs(1 + trng.next_below(8));
    for (double& v : means) v = 1000.0 * trng.gaussian();
    for (double& v : covs) v = 1e6 * trng.gaussian();
    CompressedBlock block =
        encode_block(x, op, w, cfg, ErrorModel{eps, op.sigma(), cfg.delta},
                     policy, db400(), StatsBlob::encode(means, covs));
    auto bytes = block.serialize();
    RateAccounting acc = rate_accounting(block);
    bits_ok &= bytes.size() * 8 == acc.total_bits;
    bits_ok &= acc.stats_bits == 16 * (means.size() + covs.size());
    std::size_t expect_payload = 0;
    for (const auto& d : block.plan.planes) {
      if (d.mode == PlaneMode::kRaw)
        expect_payload += block.m;
      else if (d.mode == PlaneMode::kSyndrome)
        expect_payload += static_cast<std::size_t>(
            std::lround(block.m * (1.0 - d.rate)));
    }
    bits_ok &= acc.payload_bits == expect_payload;
    CompressedBlock back = CompressedBlock::parse(bytes);
    bits_ok &= back.serialize() == bytes;
  }
  bool pass = overhead_ok && bits_ok;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "linear %.5f bpp, successive %.5f bpp, 100 random blocks %s",
                dl.report.overall_bpp, ds.report.overall_bpp,
                bits_ok ? "exact" : "mismatch");
  report(7, "rate accounting is exact", pass, buf);
}

void criterion_8() {
  // Monotone objective + finite-difference gradient.
  const std::size_t n = 1024, m = 1000;
  auto op = MeasurementOperator::build(OperatorKind::kSrht, n, m, 1.0, 88);
  DitherVector w = make_dither(m, 89);
  double delta = 2.0;
  Rng rng(90);
  // Zero-mean piecewise-constant block: measure() is used directly here,
  // without the codec's mean-shift handling.
  std::vector<double> x(n);
  for (std::size_t s = 0; s < 32; ++s)
    for (std::size_t t = 0; t < 32; ++t)
      x[s * 32 + t] = (s < 16 ? -100.0 : 100.0) + (t < 16 ? -75.0 : 75.0);
  auto y = measure(op, x, w, delta);
  QuantizerConfig cfg = make_quantizer(12, delta);
  auto q = quantize(y, cfg);
  WtvWeights weights;
  weights.width = weights.height = 32;
  weights.wx.assign(n, 1.0);
  weights.wy.assign(n, 1.0);
  ReconConfig rcfg;
  rcfg.max_iters = 200;
  std::vector<double> init(n, 0.0);
  ReconResult res = reconstruct(q, op, w, delta, weights, rcfg, init);
  bool monotone = true;
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
    monotone &= res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-9;

  std::vector<double> target(m);
  for (std::size_t i = 0; i < m; ++i)
    target[i] = static_cast<double>(q[i]) - w.values[i];
  auto data_term = [&](const std::vector<double>& v) {
    auto av = op.apply(v);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double r = target[i] - av[i] / delta;
      acc += r * r;
    }
    return acc;
  };
  std::vector<double> probe(n);
  for (double& v : probe) v = 30.0 * rng.gaussian();
  auto av = op.apply(probe);
  std::vector<double> r(m);
  for (std::size_t i = 0; i < m; ++i) r[i] = target[i] - av[i] / delta;
  auto grad = op.apply_transpose(r);
  for (double& v : grad) v *= -2.0 / delta;
  bool grad_ok = true;
  for (int probe_i = 0; probe_i < 10; ++probe_i) {
    std::size_t i = rng.next_below(n);
    double fd = oracle::finite_difference(data_term, probe, i, 1e-4);
    grad_ok &= std::fabs(fd - grad[i]) <=
               1e-5 * std::max({1.0, std::fabs(fd), std::fabs(grad[i])});
  }

  // Coded reconstruction vs prediction-only on synthetic correlated bands
  // with detail the prediction cannot see.
  ImageSet set;
  set.bands.resize(4);
  for (auto& b : set.bands) {
    b.width = 64;
    b.height = 64;
    b.pixels.assign(64 * 64, 0.0);
  }
  Rng srng(91);
  for (std::size_t s = 0; s < 64; ++s)
    for (std::size_t t = 0; t < 64; ++t)
      set.bands[0].at(s, t) = (s < 32) == (t < 32) ? 600.0 : 250.0;
  for (int b = 1; b <= 3; ++b) {
    for (std::size_t s = 0; s < 64; ++s)
      for (std::size_t t = 0; t < 64; ++t) {
        double v = 0.8 * set.bands[0].at(s, t) + 40.0 * b;
        // Band-private plateau invisible to the reference.
        if (s >= 16 && s < 48 && t >= 16 + 8 * b && t < 40 + 8 * b) v += 180.0;
        set.bands[b].at(s, t) = v + 2.0 * srng.gaussian();
      }
  }
  CodecParams params;
  params.block = 64;
  params.m = 4000;
  params.bits = 11;
  params.delta = {6.0, 6.0, 6.0};
  params.threads = 2;
  params.recon.max_iters = 300;
  EncodedImage enc = encode_image(set, params, db4000());
  DecodedImage dec = decode_image(enc, set.bands[0], db4000(), &set);
  bool gain_ok = true;
  double min_gain = 1e9;
  for (int b = 0; b < 3; ++b) {
    std::vector<double> dq = enc.blocks[0].stats.decode();
    BandStats st = band_stats(set.bands[0].pixels, set.bands[1 + b].pixels);
    st.mean = dq[b];
    st.cov = dq[3 + b];
    auto xhat = lmmse_predict(set.bands[0].pixels, st);
    double pred_psnr = psnr(set.bands[1 + b].pixels, xhat);
    double gain = dec.report.bands[b].psnr - pred_psnr;
    min_gain = std::min(min_gain, gain);
    gain_ok &= gain >= 2.0;
  }
  bool pass = monotone && grad_ok && gain_ok;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "monotone %s, gradient %s, min coded-vs-prediction gain %.1f dB",
                monotone ? "yes" : "no", grad_ok ? "yes" : "no", min_gain);
  report(8, "reconstruction properties", pass, buf);
}

void criterion_9() {
  // Bitplane prediction vs exhaustive enumeration.
  Rng rng(99);
  bool predict_ok = true;
  for (int trial = 0; trial < 10000; ++trial) {
    int bits = 4 + static_cast<int>(rng.next_below(5));
    int k = 1 + static_cast<int>(rng.next_below(bits));
    QuantizerConfig cfg{bits, 1.0, 1u << (bits - 1)};
    DecoderState state;
    std::uint32_t lower =
        static_cast<std::uint32_t>(rng.next_below(1u << (k - 1)));
    for (int j = 0; j < k - 1; ++j)
      state.planes.push_back({static_cast<std::uint8_t>((lower >> j) & 1)});
    double y = (rng.unit() - 0.5) * (cfg.levels() + 8.0);
    state.y_hat = {y};
    PlanePrediction fast = predict_plane(state, k, cfg);
    double best = 1e18;
    std::uint32_t best_level = 0;
    for (std::uint32_t v = 0; v < cfg.levels(); ++v) {
      if ((v & ((1u << (k - 1)) - 1)) != lower) continue;
      double d = std::fabs(y + cfg.offset - v);
      if (d < best - 1e-12 || (std::fabs(d - best) <= 1e-12 && v < best_level)) {
        best = d;
        best_level = v;
      }
    }
    predict_ok &= fast.bits[0] == ((best_level >> (k - 1)) & 1);
  }
  // Sparse vs dense syndrome at m = 128.
  LdpcCode code = build_code(128, 0.5, 3);
  std::vector<std::vector<std::uint8_t>> dense(
      code.rows(), std::vector<std::uint8_t>(code.m, 0));
  for (std::size_t r2 = 0; r2 < code.rows(); ++r2)
    for (auto v : code.check_vars[r2]) dense[r2][v] = 1;
  bool syndrome_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::uint8_t> bits(128);
    for (auto& b : bits) b = rng.next_u64() & 1;
    syndrome_ok &= syndrome(code, bits) == oracle::dense_syndrome(dense, bits);
  }
  // Bitplane round trip for every depth.
  bool roundtrip_ok = true;
  for (int bits = 1; bits <= 16; ++bits) {
    QuantizerConfig cfg{bits, 1.0, 1u << (bits - 1)};
    std::vector<std::int32_t> q(509);
    for (auto& v : q)
      v = static_cast<std::int32_t>(rng.next_below(1u << bits)) -
          static_cast<std::int32_t>(cfg.offset);
    roundtrip_ok &= from_bitplanes(to_bitplanes(q, cfg), cfg) == q;
  }
  bool pass = predict_ok && syndrome_ok && roundtrip_ok;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "prediction %s, syndrome %s, round trip %s",
                predict_ok ? "ok" : "bad", syndrome_ok ? "ok" : "bad",
                roundtrip_ok ? "ok" : "bad");
  report(9, "oracle equivalences", pass, buf);
}

void criterion_10() {
  bool zero_ok = true;
  for (int k = 1; k <= 8; ++k)
    zero_ok &= std::fabs(bitflip_probability(k, ErrorModel{0.0, 1.0, 1.0},
                                             1e-9)) < 1e-6;
  bool half_ok = true;
  for (int k : {1, 3, 5})
    half_ok &=
        std::fabs(bitflip_probability(k, ErrorModel{1e3, 1.0, 1.0}) - 0.5) <
        1e-9;
  bool monotone_ok = true;
  std::vector<double> grid;
  for (double s = 0.1; s <= 10.0; s *= 1.4) grid.push_back(s);
  for (double s : grid)
    for (int k = 1; k < 8; ++k)
      monotone_ok &= bitflip_probability(k + 1, ErrorModel{s, 1.0, 1.0}) <=
                     bitflip_probability(k, ErrorModel{s, 1.0, 1.0}) + 1e-9;
  for (int k = 1; k <= 8; ++k) {
    double prev = -1.0;
    for (double s : grid) {
      double p = bitflip_probability(k, ErrorModel{s, 1.0, 1.0});
      monotone_ok &= p >= prev - 1e-9;
      prev = p;
    }
  }
  bool pass = zero_ok && half_ok && monotone_ok;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "zero limit %s, half limit %s, monotone %s",
                zero_ok ? "ok" : "bad", half_ok ? "ok" : "bad",
                monotone_ok ? "ok" : "bad");
  report(10, "theory limits and monotonicity", pass, buf);
}

}  // namespace

int main() {
  std::printf("building code databases...\n");
  db4000();
  db400();
  criterion_1_and_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%d criterion failure(s)\n", g_failures);
  return g_failures;
}
