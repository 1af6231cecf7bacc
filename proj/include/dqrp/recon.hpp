#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dqrp/measurement.hpp"

namespace dqrp {

// Per-pixel regularizer weights over a width x height block, derived from
// the reference band's gradient: low_weight where the reference has an edge
// (gradient norm above tau on the [0,1]-normalized block), 1 elsewhere.
struct WtvWeights {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> wx;  // weight on the vertical (row) difference
  std::vector<double> wy;  // weight on the horizontal (column) difference
};

// Gradient-norm field of the reference block, replicate padding at the
// boundary: phi = sqrt((X[s][t]-X[s-1][t])^2 + (X[s][t]-X[s][t-1])^2).
std::vector<double> reference_gradient(std::span<const double> x0,
                                       std::size_t width, std::size_t height);

WtvWeights make_weights(std::span<const double> x0, std::size_t width,
                        std::size_t height, double tau = 0.3,
                        double low_weight = 0.2);

// Weighted isotropic total variation; all-ones weights give the standard TV.
double wtv_value(std::span<const double> x, const WtvWeights& w);

struct ReconConfig {
  double lambda = 0.1;
  int max_iters = 500;
  double tol = 1e-6;    // relative objective change
  int prox_iters = 20;  // inner dual iterations of the WTV prox
};

struct ReconResult {
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  // Accepted-iterate objective trace; nonincreasing by construction.
  std::vector<double> objective_trace;
};

// Solves  min_x || q - (1/delta) A x - w ||^2 + lambda * WTV(x)  with a
// monotone FISTA; x_init (usually the prediction) is the starting point.
// Objective NaN triggers a step halving and restart, a hard error after
// three restarts.
ReconResult reconstruct(std::span<const std::int32_t> q,
                        const MeasurementOperator& op, const DitherVector& w,
                        double delta, const WtvWeights& weights,
                        const ReconConfig& cfg,
                        std::span<const double> x_init);

// 10 log10(max(x)^2 / MSE); +infinity when the inputs coincide.
double psnr(std::span<const double> x, std::span<const double> x_tilde);

}  // namespace dqrp
