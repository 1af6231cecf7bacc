// Command-line front end: LDPC code database generation, image encode and
// decode, and closed-form / Monte Carlo analysis of the bitflip model.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dqrp/coding.hpp"
#include "dqrp/codec.hpp"
#include "dqrp/image_io.hpp"
#include "dqrp/ldpc.hpp"
#include "dqrp/pipeline.hpp"
#include "dqrp/rng.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitBpFailure = 3;

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i)
    g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) /
                                           std::max(1, points - 1)));
  return g;
}

int cmd_codes_generate(std::size_t m, std::uint64_t seed,
                       const std::string& out) {
  dqrp::RatePolicy policy = dqrp::RatePolicy::defaults();
  std::fprintf(stderr, "building %zu codes at m=%zu...\n",
               policy.rates.size(), m);
  dqrp::CodeDatabase db = dqrp::CodeDatabase::generate(m, policy.rates, seed);
  db.save(out);
  std::fprintf(stderr, "wrote %s\n", out.c_str());
  return 0;
}

dqrp::ImageSet load_bands(const std::vector<std::string>& paths) {
  dqrp::ImageSet set;
  if (paths.size() == 2 && paths[1].size() > 5 &&
      paths[1].substr(paths[1].size() - 5) == ".json") {
    std::vector<dqrp::Image> bands =
        dqrp::read_raw_with_sidecar(paths[0], paths[1]);
    set.bands = std::move(bands);
  } else {
    for (const auto& p : paths) set.bands.push_back(dqrp::read_pgm(p));
  }
  if (set.bands.size() != 4)
    throw std::runtime_error("expected 4 bands (reference + 3 coded)");
  return set;
}

int cmd_encode(const std::vector<std::string>& inputs,
               const std::string& codes_path, const std::string& out,
               dqrp::CodecParams params) {
  dqrp::ImageSet set = load_bands(inputs);
  dqrp::CodeDatabase codes = dqrp::CodeDatabase::load(codes_path);
  if (codes.block_length() != params.m)
    throw std::runtime_error("code database block length != m");
  dqrp::EncodedImage enc = dqrp::encode_image(set, params, codes);
  enc.save(out);
  std::size_t payload = 0, stats = 0;
  for (const auto& rec : enc.blocks) {
    stats += rec.stats.param_bits();
    for (const auto& b : rec.bands) payload += b.payload_bits();
  }
  double pixels = static_cast<double>(enc.width * enc.height);
  std::printf("encoded %zux%zu, %zu blocks\n", enc.width, enc.height,
              enc.blocks.size());
  std::printf("payload %zu bits, stats %zu bits, overall %.5f bpp\n", payload,
              stats,
              static_cast<double>(payload + stats) / (3.0 * pixels));
  return 0;
}

int cmd_decode(const std::string& container, const std::string& reference,
               const std::string& codes_path, const std::string& out_prefix,
               const std::vector<std::string>& original) {
  dqrp::EncodedImage enc = dqrp::EncodedImage::load(container);
  dqrp::Image ref = dqrp::read_pgm(reference);
  dqrp::CodeDatabase codes = dqrp::CodeDatabase::load(codes_path);
  dqrp::ImageSet truth;
  bool has_truth = !original.empty();
  if (has_truth) truth = load_bands(original);
  dqrp::DecodedImage dec =
      dqrp::decode_image(enc, ref, codes, has_truth ? &truth : nullptr);
  for (std::size_t b = 0; b < dec.bands.size(); ++b)
    dqrp::write_pgm(out_prefix + "_band" + std::to_string(b + 1) + ".pgm",
                    dec.bands[b]);
  std::cout << dec.report.table();
  return dec.report.all_converged ? 0 : kExitBpFailure;
}

int cmd_analyze(const std::string& kind, const std::string& out, int kmax,
                double eps_lo, double eps_hi, int points,
                std::vector<double> cutoffs, int bits, long trials,
                std::uint64_t seed) {
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write " + out);
  dqrp::RatePolicy policy = dqrp::RatePolicy::defaults();
  if (kind == "pk_curves") {
    // Theoretical flip probabilities and coded-plane counts, one row per
    // (plane, normalized error) pair.
    os << "k,eps_sigma_over_delta,p_k,planes_to_code\n";
    for (double e : log_grid(eps_lo, eps_hi, points)) {
      dqrp::ErrorModel model{e, 1.0, 1.0};
      dqrp::BitplanePlan plan = dqrp::plan_bitplanes(model, bits, policy);
      for (int k = 1; k <= kmax; ++k)
        os << k << "," << e << "," << dqrp::bitflip_probability(k, model)
           << "," << plan.coded_planes() << "\n";
    }
  } else if (kind == "lk_curves") {
    os << "k,eps_sigma_over_delta,c,L_k\n";
    for (double e : log_grid(eps_lo, eps_hi, points)) {
      dqrp::ErrorModel model{e, 1.0, 1.0};
      for (int k = 1; k <= kmax; ++k) {
        double half = std::ldexp(1.0, k - 1);
        for (int i = 0; i <= 64; ++i) {
          double c = half * i / 64.0;
          os << k << "," << e << "," << c << ","
             << dqrp::bit_error_likelihood(k, c, model) << "\n";
        }
      }
    }
  } else if (kind == "planes_to_code") {
    os << "eps_sigma_over_delta,cutoff,planes_to_code\n";
    for (double cutoff : cutoffs) {
      dqrp::RatePolicy p = policy;
      p.cutoff_skip = cutoff;
      for (double e : log_grid(eps_lo, eps_hi, points)) {
        dqrp::ErrorModel model{e, 1.0, 1.0};
        os << e << "," << cutoff << ","
           << dqrp::plan_bitplanes(model, bits, p).coded_planes() << "\n";
      }
    }
  } else if (kind == "montecarlo") {
    // Empirical flip rate of the bitplane predictor under the Gaussian
    // error model, paired with the closed form.
    os << "k,eps_sigma_over_delta,p_theory,p_empirical,trials\n";
    dqrp::Rng rng(seed);
    for (double e : log_grid(eps_lo, eps_hi, points)) {
      dqrp::ErrorModel model{e, 1.0, 1.0};
      for (int k = 1; k <= kmax; ++k) {
        double step = std::ldexp(1.0, k - 1);
        long flips = 0;
        for (long t = 0; t < trials; ++t) {
          double u = rng.unit() - 0.5;
          double d = e * rng.gaussian();
          double yhat_rel = u - d;  // position relative to the true level
          double z = yhat_rel / step;
          double l = std::floor(z + 0.5);
          if (l - z == 0.5) l -= 1.0;
          flips += static_cast<long>(std::llabs(static_cast<long long>(l))) & 1;
        }
        os << k << "," << e << "," << dqrp::bitflip_probability(k, model)
           << "," << static_cast<double>(flips) / trials << "," << trials
           << "\n";
      }
    }
  } else {
    std::fprintf(stderr, "unknown analyze kind: %s\n", kind.c_str());
    return kExitValidation;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed coding of quantized random projections"};
  app.require_subcommand(1);

  // codes generate
  auto* codes = app.add_subcommand("codes", "code database maintenance");
  auto* gen = codes->add_subcommand("generate", "build the LDPC database");
  std::size_t gen_m = 4000;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "codes.dqrc";
  gen->add_option("--measurements,-m", gen_m, "block length");
  gen->add_option("--seed", gen_seed, "construction seed");
  gen->add_option("--out,-o", gen_out, "output path");

  // shared codec flags
  dqrp::CodecParams params;
  params.delta = {};
  std::vector<std::string> enc_inputs;
  std::string enc_codes = "codes.dqrc", enc_out = "out.dqrp";
  double cutoff = params.policy.cutoff_skip, backoff = params.policy.backoff;
  double lambda = params.recon.lambda;
  std::string mode = "linear";

  auto* enc = app.add_subcommand("encode", "encode a 4-band image");
  enc->add_option("--input,-i", enc_inputs,
                  "band PGMs (ref first) or raw + json sidecar")
      ->required();
  enc->add_option("--codes", enc_codes, "code database");
  enc->add_option("--out,-o", enc_out, "container path");
  enc->add_option("--blocks", params.block, "block side length");
  enc->add_option("--measurements,-m", params.m, "measurements per block");
  enc->add_option("--bits,-B", params.bits, "quantizer depth");
  enc->add_option("--delta", params.delta, "per-band delta (repeatable)");
  enc->add_option("--mode", mode, "linear|successive");
  enc->add_option("--cutoff", cutoff, "skip cutoff probability");
  enc->add_option("--backoff", backoff, "rate back-off step");
  enc->add_option("--seed-op", params.op_seed, "operator seed");
  enc->add_option("--seed-dither", params.dither_seed, "dither seed");
  enc->add_option("--tau", params.tau, "WTV edge threshold");
  enc->add_option("--lambda", lambda, "regularization weight");
  double eps_override = -1.0;
  enc->add_option("--epsilon-override", eps_override,
                  "use this prediction-error estimate for every block");

  auto* dec = app.add_subcommand("decode", "decode a container");
  std::string dec_container, dec_ref, dec_codes = "codes.dqrc",
                             dec_out = "decoded";
  std::vector<std::string> dec_orig;
  dec->add_option("--input,-i", dec_container, "container path")->required();
  dec->add_option("--reference", dec_ref, "reference band PGM")->required();
  dec->add_option("--codes", dec_codes, "code database");
  dec->add_option("--out,-o", dec_out, "output prefix");
  dec->add_option("--original", dec_orig,
                  "original bands for BER/PSNR reporting");

  auto* ana = app.add_subcommand("analyze", "theory curves and Monte Carlo");
  std::string ana_kind = "pk_curves", ana_out = "analysis.csv";
  int ana_kmax = 6, ana_points = 25, ana_bits = 11;
  double ana_lo = 0.1, ana_hi = 10.0;
  long ana_trials = 100000;
  std::uint64_t ana_seed = 7;
  std::vector<double> ana_cutoffs = {1e-2, 1e-3, 1e-4};
  ana->add_option("--kind", ana_kind,
                  "pk_curves|lk_curves|planes_to_code|montecarlo");
  ana->add_option("--out,-o", ana_out, "CSV path");
  ana->add_option("--kmax", ana_kmax, "highest bitplane");
  ana->add_option("--eps-lo", ana_lo, "grid low end of eps*sigma/delta");
  ana->add_option("--eps-hi", ana_hi, "grid high end");
  ana->add_option("--points", ana_points, "grid points");
  ana->add_option("--cutoff", ana_cutoffs, "cutoffs for planes_to_code");
  ana->add_option("--bits,-B", ana_bits, "quantizer depth");
  ana->add_option("--trials", ana_trials, "Monte Carlo trials per point");
  ana->add_option("--seed", ana_seed, "Monte Carlo seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_codes_generate(gen_m, gen_seed, gen_out);
    if (enc->parsed()) {
      if (params.delta.empty()) params.delta = {16.0};
      while (params.delta.size() < 3) params.delta.push_back(params.delta.back());
      params.policy.cutoff_skip = cutoff;
      params.policy.backoff = backoff;
      if (eps_override >= 0.0) params.epsilon_override = eps_override;
      params.recon.lambda = lambda;
      params.mode = mode == "successive" ? dqrp::PredictionMode::kSuccessive
                                         : dqrp::PredictionMode::kLinear;
      return cmd_encode(enc_inputs, enc_codes, enc_out, params);
    }
    if (dec->parsed())
      return cmd_decode(dec_container, dec_ref, dec_codes, dec_out, dec_orig);
    if (ana->parsed())
      return cmd_analyze(ana_kind, ana_out, ana_kmax, ana_lo, ana_hi,
                         ana_points, ana_cutoffs, ana_bits, ana_trials,
                         ana_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return kExitValidation;
}
