#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dqrp {

// Sample statistics of one band against the reference band, divide-by-n
// convention.
struct BandStats {
  double mean_ref = 0.0;
  double var_ref = 0.0;
  double mean = 0.0;  // band i
  double var = 0.0;
  double cov = 0.0;  // covariance with the reference
};

BandStats band_stats(std::span<const double> x0, std::span<const double> xi);

// x_hat_i = (cov / var_ref) (x0 - mean_ref) + mean_i. A zero-variance
// reference degenerates to the constant predictor mean_i.
std::vector<double> lmmse_predict(std::span<const double> x0,
                                  const BandStats& stats);

// Closed-form prediction error: eps^2 = n (var_i - cov^2 / var_ref).
double lmmse_epsilon(const BandStats& stats, std::size_t n);

// Measurement-space second-order statistics of the pre-dither measurements
// of all bands; band 0 is the reference. cov[i][j] is symmetric with the
// variances on the diagonal.
struct MeasurementStats {
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;

  std::size_t bands() const { return mean.size(); }
};

MeasurementStats measurement_stats(
    const std::vector<std::span<const double>>& y_tilde);

// Multi-variable LMMSE prediction of band k's pre-dither measurements from
// the reference (regressors[0], unquantized) and the recovered quantized,
// dither-removed measurements of bands 1..k-1. Quantized regressors carry
// the +1/12 dither correction on their variance; cross-covariances are used
// unchanged. A singular covariance is ridge-regularized by 1e-9 of its
// trace. If mse_out is non-null it receives the model MSE
// var_k - c^T C^{-1} c.
std::vector<double> successive_predict(
    const std::vector<std::span<const double>>& regressors,
    const MeasurementStats& stats, std::size_t band_k,
    double* mse_out = nullptr);

// eps_y for the rate model: sqrt(m * MSE_k); the dithered and pre-dither
// error norms coincide because the dither cancels in the difference.
double successive_epsilon_y(double mse, std::size_t m);

}  // namespace dqrp
