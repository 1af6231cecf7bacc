#include "dqrp/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "dqrp/rng.hpp"

namespace dqrp {

namespace {

constexpr std::size_t kCodedBands = 3;

std::vector<double> extract_block(const Image& img, std::size_t bs,
                                  std::size_t br, std::size_t bc) {
  std::vector<double> out(bs * bs);
  for (std::size_t s = 0; s < bs; ++s)
    for (std::size_t t = 0; t < bs; ++t)
      out[s * bs + t] = img.at(br * bs + s, bc * bs + t);
  return out;
}

void insert_block(Image& img, std::span<const double> blk, std::size_t bs,
                  std::size_t br, std::size_t bc) {
  for (std::size_t s = 0; s < bs; ++s)
    for (std::size_t t = 0; t < bs; ++t)
      img.at(br * bs + s, bc * bs + t) = blk[s * bs + t];
}

std::uint64_t dither_stream(std::size_t block_index, std::size_t band) {
  return block_index * 8 + band;
}

double mean_of(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double l2_norm_diff(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Measurement-space statistics visible to the decoder: transmitted params
// for the coded bands, locally computed entries for the reference.
MeasurementStats decoder_measurement_stats(std::span<const double> params,
                                           std::span<const double> y0) {
  if (params.size() != 11)
    throw std::runtime_error("successive stats blob must carry 11 params");
  MeasurementStats s;
  s.mean.assign(4, 0.0);
  s.cov.assign(4, std::vector<double>(4, 0.0));
  for (double v : y0) s.mean[0] += v;
  s.mean[0] /= static_cast<double>(y0.size());
  double var0 = 0.0;
  for (double v : y0) var0 += (v - s.mean[0]) * (v - s.mean[0]);
  s.cov[0][0] = var0 / static_cast<double>(y0.size());
  s.mean[1] = params[0];
  s.mean[2] = params[1];
  s.mean[3] = params[2];
  s.cov[1][1] = params[3];
  s.cov[2][2] = params[4];
  // cov[3][3] is not transmitted; prediction of band 3 never reads it.
  s.cov[0][1] = s.cov[1][0] = params[5];
  s.cov[0][2] = s.cov[2][0] = params[6];
  s.cov[0][3] = s.cov[3][0] = params[7];
  s.cov[1][2] = s.cov[2][1] = params[8];
  s.cov[1][3] = s.cov[3][1] = params[9];
  s.cov[2][3] = s.cov[3][2] = params[10];
  return s;
}

void run_parallel(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn) {
  unsigned n = threads > 0 ? static_cast<unsigned>(threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, count == 0 ? 1 : static_cast<unsigned>(count));
  if (n <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t)
    pool.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

Image pad_to_blocks(const Image& img, std::size_t block) {
  std::size_t pw = (img.width + block - 1) / block * block;
  std::size_t ph = (img.height + block - 1) / block * block;
  Image out;
  out.width = pw;
  out.height = ph;
  out.pixels.resize(pw * ph);
  for (std::size_t s = 0; s < ph; ++s)
    for (std::size_t t = 0; t < pw; ++t)
      out.at(s, t) = img.at(std::min(s, img.height - 1),
                            std::min(t, img.width - 1));
  return out;
}

EncodedImage encode_image(const ImageSet& images, const CodecParams& params,
                          const CodeDatabase& codes) {
  if (images.bands.size() != 1 + kCodedBands)
    throw std::invalid_argument("encode_image: expected 4 bands");
  for (const auto& b : images.bands)
    if (b.width != images.width() || b.height != images.height())
      throw std::invalid_argument("encode_image: band shape mismatch");
  if (params.delta.size() != kCodedBands)
    throw std::invalid_argument("encode_image: need one delta per coded band");
  if (params.m > params.n())
    throw std::invalid_argument("encode_image: m must not exceed block area");

  std::vector<Image> padded;
  for (const auto& b : images.bands) padded.push_back(pad_to_blocks(b, params.block));

  EncodedImage enc;
  enc.width = images.width();
  enc.height = images.height();
  enc.grid_w = padded[0].width / params.block;
  enc.grid_h = padded[0].height / params.block;
  enc.params = params;
  enc.blocks.resize(enc.grid_w * enc.grid_h);

  MeasurementOperator op = MeasurementOperator::build(
      OperatorKind::kSrht, params.n(), params.m, 1.0, params.op_seed);

  run_parallel(enc.blocks.size(), params.threads, [&](std::size_t bi) {
    std::size_t br = bi / enc.grid_w, bc = bi % enc.grid_w;
    std::vector<double> x0 = extract_block(padded[0], params.block, br, bc);
    std::vector<std::vector<double>> x(kCodedBands);
    for (std::size_t b = 0; b < kCodedBands; ++b)
      x[b] = extract_block(padded[1 + b], params.block, br, bc);

    BlockRecord rec;
    rec.bands.resize(kCodedBands);

    std::vector<DitherVector> dithers(kCodedBands);
    for (std::size_t b = 0; b < kCodedBands; ++b)
      dithers[b] = make_dither(
          params.m, derive_seed(params.dither_seed, dither_stream(bi, b)));

    if (params.mode == PredictionMode::kLinear) {
      std::vector<double> means, covs, vars;
      std::vector<BandStats> stats(kCodedBands);
      for (std::size_t b = 0; b < kCodedBands; ++b) {
        stats[b] = band_stats(x0, x[b]);
        means.push_back(stats[b].mean);
        covs.push_back(stats[b].cov);
      }
      rec.stats = StatsBlob::encode(means, covs);
      std::vector<double> dq = rec.stats.decode();
      for (std::size_t b = 0; b < kCodedBands; ++b) {
        BandStats seen = stats[b];  // reference moments are decoder-exact
        seen.mean = dq[b];
        seen.cov = dq[kCodedBands + b];
        std::vector<double> xhat = lmmse_predict(x0, seen);
        double eps = params.epsilon_override.value_or(l2_norm_diff(x[b], xhat));
        ErrorModel model{eps, op.sigma(), params.delta[b]};
        rec.bands[b] = encode_block(
            x[b], op, dithers[b], make_quantizer(params.bits, params.delta[b]),
            model, params.policy, codes, StatsBlob{}, stats[b].mean);
      }
    } else {
      const double shift0 = mean_of(x0);
      std::vector<double> shifts(kCodedBands);
      std::vector<double> x0c = x0;
      for (double& v : x0c) v -= shift0;
      std::vector<double> y0 = op.apply(x0c);
      std::vector<std::vector<double>> yt(kCodedBands);
      std::vector<std::vector<double>> ytq(kCodedBands);
      for (std::size_t b = 0; b < kCodedBands; ++b) {
        shifts[b] = mean_of(x[b]);
        std::vector<double> xc = x[b];
        for (double& v : xc) v -= shifts[b];
        yt[b] = op.apply(xc);
        for (double& v : yt[b]) v /= params.delta[b];
        std::vector<double> y = yt[b];
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += dithers[b].values[i];
        std::vector<std::int32_t> q =
            quantize(y, make_quantizer(params.bits, params.delta[b]));
        ytq[b].resize(y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
          ytq[b][i] = static_cast<double>(q[i]) - dithers[b].values[i];
      }
      std::vector<std::span<const double>> all = {y0};
      for (auto& v : yt) all.push_back(v);
      MeasurementStats mstats = measurement_stats(all);
      std::vector<double> means = {mstats.mean[1], mstats.mean[2],
                                   mstats.mean[3]};
      std::vector<double> covs = {mstats.cov[1][1], mstats.cov[2][2],
                                  mstats.cov[0][1], mstats.cov[0][2],
                                  mstats.cov[0][3], mstats.cov[1][2],
                                  mstats.cov[1][3], mstats.cov[2][3]};
      rec.stats = StatsBlob::encode(means, covs);
      std::vector<double> dq = rec.stats.decode();
      std::vector<double> params11 = {dq[0], dq[1], dq[2], dq[3], dq[4],
                                      dq[5], dq[6], dq[7], dq[8], dq[9],
                                      dq[10]};
      MeasurementStats seen = decoder_measurement_stats(params11, y0);
      for (std::size_t b = 0; b < kCodedBands; ++b) {
        std::vector<std::span<const double>> regressors = {y0};
        for (std::size_t j = 0; j < b; ++j) regressors.push_back(ytq[j]);
        std::vector<double> yhat =
            successive_predict(regressors, seen, 1 + b, nullptr);
        double eps_y = l2_norm_diff(yhat, yt[b]);
        double eps_x = params.epsilon_override.value_or(
            epsilon_x_from_epsilon_y(eps_y, params.n(), params.m,
                                     params.delta[b]));
        ErrorModel model{eps_x, op.sigma(), params.delta[b]};
        rec.bands[b] = encode_block(
            x[b], op, dithers[b], make_quantizer(params.bits, params.delta[b]),
            model, params.policy, codes, StatsBlob{}, shifts[b]);
      }
    }
    enc.blocks[bi] = std::move(rec);
  });
  return enc;
}

DecodedImage decode_image(const EncodedImage& enc, const Image& reference,
                          const CodeDatabase& codes,
                          const ImageSet* ground_truth) {
  const CodecParams& params = enc.params;
  if (reference.width != enc.width || reference.height != enc.height)
    throw std::invalid_argument("decode_image: reference shape mismatch");
  Image ref = pad_to_blocks(reference, params.block);

  MeasurementOperator op = MeasurementOperator::build(
      OperatorKind::kSrht, params.n(), params.m, 1.0, params.op_seed);

  std::vector<Image> truth_padded;
  if (ground_truth)
    for (std::size_t b = 1; b < ground_truth->bands.size(); ++b)
      truth_padded.push_back(pad_to_blocks(ground_truth->bands[b],
                                           params.block));

  std::vector<Image> out(kCodedBands);
  for (auto& img : out) {
    img.width = ref.width;
    img.height = ref.height;
    img.pixels.assign(ref.width * ref.height, 0.0);
  }

  std::vector<std::vector<std::size_t>> flips(
      enc.blocks.size(), std::vector<std::size_t>(kCodedBands, 0));
  std::atomic<bool> all_converged{true};

  run_parallel(enc.blocks.size(), params.threads, [&](std::size_t bi) {
    std::size_t br = bi / enc.grid_w, bc = bi % enc.grid_w;
    const BlockRecord& rec = enc.blocks[bi];
    std::vector<double> x0 = extract_block(ref, params.block, br, bc);
    WtvWeights weights =
        make_weights(x0, params.block, params.block, params.tau);
    std::vector<double> dqp = rec.stats.decode();

    std::vector<double> y0;
    MeasurementStats mstats;
    if (params.mode == PredictionMode::kSuccessive) {
      std::vector<double> x0c = x0;
      const double shift0 = mean_of(x0);
      for (double& v : x0c) v -= shift0;
      y0 = op.apply(x0c);
      mstats = decoder_measurement_stats(dqp, y0);
    }

    std::vector<std::vector<double>> recovered_ytq;
    for (std::size_t b = 0; b < kCodedBands; ++b) {
      const CompressedBlock& block = rec.bands[b];
      DitherVector dither = make_dither(block.m, block.dither_seed);
      std::vector<double> y_hat;
      std::vector<double> x_init;
      if (params.mode == PredictionMode::kLinear) {
        BandStats seen;
        const BandStats base = band_stats(x0, x0);  // reference moments
        seen.mean_ref = base.mean_ref;
        seen.var_ref = base.var_ref;
        seen.mean = dqp[b];
        seen.cov = dqp[kCodedBands + b];
        x_init = lmmse_predict(x0, seen);
        for (double& v : x_init) v -= block.mean_shift;
        y_hat = measure(op, x_init, dither, block.delta);
      } else {
        std::vector<std::span<const double>> regressors = {y0};
        for (auto& v : recovered_ytq) regressors.push_back(v);
        y_hat = successive_predict(regressors, mstats, 1 + b, nullptr);
        for (std::size_t i = 0; i < y_hat.size(); ++i)
          y_hat[i] += dither.values[i];
        // Least-squares-style start for the solver: for the near-unitary
        // SRHT, A^T scaled by n/m inverts the measurement map.
        std::vector<double> yq(block.m);
        for (std::size_t i = 0; i < block.m; ++i)
          yq[i] = y_hat[i] - dither.values[i];
        x_init = op.apply_transpose(yq);
        double scale = block.delta * static_cast<double>(params.n()) /
                       static_cast<double>(params.m);
        for (double& v : x_init) v *= scale;
      }
      BlockDecodeResult dec = decode_block(block, y_hat, codes);
      if (!dec.all_converged) all_converged = false;

      if (ground_truth) {
        std::vector<double> xt =
            extract_block(truth_padded[b], params.block, br, bc);
        for (double& v : xt) v -= block.mean_shift;
        std::vector<double> yt = measure(op, xt, dither, block.delta);
        std::vector<std::int32_t> qt = quantize(yt, block.quantizer());
        BitplaneMatrix a = to_bitplanes(qt, block.quantizer());
        BitplaneMatrix bpl = to_bitplanes(dec.q, block.quantizer());
        std::size_t bad = 0;
        for (int k = 0; k < block.bits; ++k)
          for (std::size_t i = 0; i < block.m; ++i)
            bad += a.planes[k][i] != bpl.planes[k][i];
        flips[bi][b] = bad;
      }
      if (params.mode == PredictionMode::kSuccessive) {
        std::vector<double> ytq(block.m);
        for (std::size_t i = 0; i < block.m; ++i)
          ytq[i] = static_cast<double>(dec.q[i]) - dither.values[i];
        recovered_ytq.push_back(std::move(ytq));
      }
      ReconConfig rcfg = params.recon;
      ReconResult rres = reconstruct(dec.q, op, dither, block.delta, weights,
                                     rcfg, x_init);
      for (double& v : rres.x) v += block.mean_shift;
      insert_block(out[b], rres.x, params.block, br, bc);
    }
  });

  DecodedImage result;
  result.report.bands.resize(kCodedBands);
  result.report.has_truth = ground_truth != nullptr;
  result.report.all_converged = all_converged;
  const double pixels = static_cast<double>(enc.width * enc.height);
  std::size_t payload_total = 0, stats_total = 0, framing_total = 0;
  for (const auto& rec : enc.blocks) {
    stats_total += rec.stats.param_bits();
    for (std::size_t b = 0; b < kCodedBands; ++b) {
      RateAccounting acc = rate_accounting(rec.bands[b]);
      result.report.bands[b].payload_bits += acc.payload_bits;
      framing_total += acc.framing_bits;
    }
  }
  for (std::size_t b = 0; b < kCodedBands; ++b) {
    BandMetrics& bm = result.report.bands[b];
    payload_total += bm.payload_bits;
    bm.bpp = static_cast<double>(bm.payload_bits) / pixels;
    if (ground_truth) {
      for (std::size_t bi = 0; bi < enc.blocks.size(); ++bi)
        bm.flipped_measurement_bits += flips[bi][b];
      bm.checked_measurement_bits =
          enc.blocks.size() * params.m * static_cast<std::size_t>(params.bits);
    }
  }
  result.report.stats_bits = stats_total;
  result.report.framing_bits = framing_total + 4 * enc.blocks.size() * 8;
  result.report.overhead_bpp =
      static_cast<double>(stats_total) / (kCodedBands * pixels);
  result.report.overall_bpp =
      static_cast<double>(payload_total + stats_total) /
      (kCodedBands * pixels);

  // Crop padding and compute PSNR against the originals.
  result.bands.resize(kCodedBands);
  for (std::size_t b = 0; b < kCodedBands; ++b) {
    Image img;
    img.width = enc.width;
    img.height = enc.height;
    img.pixels.resize(enc.width * enc.height);
    for (std::size_t s = 0; s < enc.height; ++s)
      for (std::size_t t = 0; t < enc.width; ++t)
        img.at(s, t) = out[b].at(s, t);
    if (ground_truth)
      result.report.bands[b].psnr =
          psnr(ground_truth->bands[1 + b].pixels, img.pixels);
    result.bands[b] = std::move(img);
  }
  return result;
}

std::string MetricsReport::table() const {
  std::ostringstream os;
  static const char* kNames[] = {"band1", "band2", "band3"};
  os << "band      PSNR(dB)        BPP         BER\n";
  for (std::size_t b = 0; b < bands.size(); ++b) {
    os << kNames[b] << "  ";
    char buf[96];
    if (has_truth)
      std::snprintf(buf, sizeof(buf), "%10.2f  %9.5f  %10.2e", bands[b].psnr,
                    bands[b].bpp, bands[b].measurement_ber());
    else
      std::snprintf(buf, sizeof(buf), "%10s  %9.5f  %10s", "-", bands[b].bpp,
                    "-");
    os << buf << "\n";
  }
  char tail[160];
  std::snprintf(tail, sizeof(tail),
                "overhead  %0.5f bpp (%zu stats bits)\noverall   %0.5f bpp\n",
                overhead_bpp, stats_bits, overall_bpp);
  os << tail;
  return os.str();
}

std::vector<std::uint8_t> EncodedImage::serialize() const {
  nlohmann::json manifest;
  manifest["format"] = "dqrp-container";
  manifest["version"] = 1;
  manifest["width"] = width;
  manifest["height"] = height;
  manifest["grid_w"] = grid_w;
  manifest["grid_h"] = grid_h;
  manifest["block"] = params.block;
  manifest["m"] = params.m;
  manifest["bits"] = params.bits;
  manifest["delta"] = params.delta;
  manifest["mode"] =
      params.mode == PredictionMode::kLinear ? "linear" : "successive";
  manifest["rates"] = params.policy.rates;
  manifest["backoff"] = params.policy.backoff;
  manifest["cutoff_skip"] = params.policy.cutoff_skip;
  manifest["cutoff_raw"] = params.policy.cutoff_raw;
  manifest["op_seed"] = params.op_seed;
  manifest["dither_seed"] = params.dither_seed;
  manifest["tau"] = params.tau;
  manifest["lambda"] = params.recon.lambda;
  manifest["blocks"] = blocks.size();

  std::string head = manifest.dump();
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.push_back('\n');
  for (const auto& rec : blocks) {
    append_stats_blob(out, rec.stats);
    for (const auto& block : rec.bands) {
      std::vector<std::uint8_t> body = block.serialize();
      out.insert(out.end(), body.begin(), body.end());
    }
  }
  return out;
}

void EncodedImage::save(const std::string& path) const {
  std::vector<std::uint8_t> data = serialize();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(reinterpret_cast<const char*>(data.data()),
           static_cast<std::streamsize>(data.size()));
}

EncodedImage EncodedImage::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(is)),
                                 std::istreambuf_iterator<char>());
  auto nl = std::find(data.begin(), data.end(), '\n');
  if (nl == data.end()) throw std::runtime_error(path + ": missing manifest");
  nlohmann::json manifest =
      nlohmann::json::parse(std::string(data.begin(), nl));
  if (manifest.value("format", "") != "dqrp-container")
    throw std::runtime_error(path + ": not a dqrp container");

  EncodedImage enc;
  enc.width = manifest.at("width").get<std::size_t>();
  enc.height = manifest.at("height").get<std::size_t>();
  enc.grid_w = manifest.at("grid_w").get<std::size_t>();
  enc.grid_h = manifest.at("grid_h").get<std::size_t>();
  enc.params.block = manifest.at("block").get<std::size_t>();
  enc.params.m = manifest.at("m").get<std::size_t>();
  enc.params.bits = manifest.at("bits").get<int>();
  enc.params.delta = manifest.at("delta").get<std::vector<double>>();
  enc.params.mode = manifest.at("mode").get<std::string>() == "linear"
                        ? PredictionMode::kLinear
                        : PredictionMode::kSuccessive;
  enc.params.policy.rates = manifest.at("rates").get<std::vector<double>>();
  enc.params.policy.backoff = manifest.at("backoff").get<double>();
  enc.params.policy.cutoff_skip = manifest.at("cutoff_skip").get<double>();
  enc.params.policy.cutoff_raw = manifest.at("cutoff_raw").get<double>();
  enc.params.op_seed = manifest.at("op_seed").get<std::uint64_t>();
  enc.params.dither_seed = manifest.at("dither_seed").get<std::uint64_t>();
  enc.params.tau = manifest.at("tau").get<double>();
  enc.params.recon.lambda = manifest.at("lambda").get<double>();

  std::size_t count = manifest.at("blocks").get<std::size_t>();
  std::size_t pos = static_cast<std::size_t>(nl - data.begin()) + 1;
  std::span<const std::uint8_t> body(data);
  for (std::size_t i = 0; i < count; ++i) {
    BlockRecord rec;
    rec.stats = parse_stats_blob(body, pos);
    for (std::size_t b = 0; b < kCodedBands; ++b) {
      std::size_t used = 0;
      rec.bands.push_back(
          CompressedBlock::parse(body.subspan(pos), &used));
      pos += used;
    }
    enc.blocks.push_back(std::move(rec));
  }
  return enc;
}

}  // namespace dqrp
