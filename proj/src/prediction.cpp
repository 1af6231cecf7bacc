#include "dqrp/prediction.hpp"

#include <cmath>
#include <stdexcept>

namespace dqrp {

BandStats band_stats(std::span<const double> x0, std::span<const double> xi) {
  if (x0.size() != xi.size() || x0.empty())
    throw std::invalid_argument("band_stats: length mismatch");
  const double n = static_cast<double>(x0.size());
  BandStats s;
  for (std::size_t j = 0; j < x0.size(); ++j) {
    s.mean_ref += x0[j];
    s.mean += xi[j];
  }
  s.mean_ref /= n;
  s.mean /= n;
  for (std::size_t j = 0; j < x0.size(); ++j) {
    double d0 = x0[j] - s.mean_ref;
    double di = xi[j] - s.mean;
    s.var_ref += d0 * d0;
    s.var += di * di;
    s.cov += d0 * di;
  }
  s.var_ref /= n;
  s.var /= n;
  s.cov /= n;
  return s;
}

std::vector<double> lmmse_predict(std::span<const double> x0,
                                  const BandStats& stats) {
  std::vector<double> xhat(x0.size(), stats.mean);
  if (stats.var_ref <= 0.0) return xhat;
  double gain = stats.cov / stats.var_ref;
  for (std::size_t j = 0; j < x0.size(); ++j)
    xhat[j] = gain * (x0[j] - stats.mean_ref) + stats.mean;
  return xhat;
}

double lmmse_epsilon(const BandStats& stats, std::size_t n) {
  double residual = stats.var;
  if (stats.var_ref > 0.0) residual -= stats.cov * stats.cov / stats.var_ref;
  residual = std::max(residual, 0.0);
  return std::sqrt(static_cast<double>(n) * residual);
}

MeasurementStats measurement_stats(
    const std::vector<std::span<const double>>& y_tilde) {
  const std::size_t nb = y_tilde.size();
  if (nb == 0) throw std::invalid_argument("measurement_stats: no bands");
  const std::size_t m = y_tilde[0].size();
  MeasurementStats s;
  s.mean.assign(nb, 0.0);
  s.cov.assign(nb, std::vector<double>(nb, 0.0));
  for (std::size_t i = 0; i < nb; ++i) {
    if (y_tilde[i].size() != m)
      throw std::invalid_argument("measurement_stats: length mismatch");
    for (double v : y_tilde[i]) s.mean[i] += v;
    s.mean[i] /= static_cast<double>(m);
  }
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = i; j < nb; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < m; ++t)
        acc += (y_tilde[i][t] - s.mean[i]) * (y_tilde[j][t] - s.mean[j]);
      s.cov[i][j] = s.cov[j][i] = acc / static_cast<double>(m);
    }
  return s;
}

namespace {

// Solves C a = b for small symmetric C by Gaussian elimination with partial
// pivoting; ridge-regularizes with 1e-9 of the trace when near singular.
std::vector<double> solve_spd(std::vector<std::vector<double>> c,
                              std::vector<double> b) {
  const std::size_t n = b.size();
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += c[i][i];
  double ridge = 1e-9 * (trace > 0.0 ? trace : 1.0);
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<std::vector<double>> a = c;
    std::vector<double> rhs = b;
    if (attempt == 1)
      for (std::size_t i = 0; i < n; ++i) a[i][i] += ridge;
    bool ok = true;
    for (std::size_t col = 0; col < n && ok; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < n; ++r)
        if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
      if (std::abs(a[piv][col]) < 1e-12 * (trace + 1e-300)) {
        ok = false;
        break;
      }
      std::swap(a[piv], a[col]);
      std::swap(rhs[piv], rhs[col]);
      for (std::size_t r = col + 1; r < n; ++r) {
        double f = a[r][col] / a[col][col];
        for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
        rhs[r] -= f * rhs[col];
      }
    }
    if (!ok) continue;
    std::vector<double> out(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
      double acc = rhs[r];
      for (std::size_t k = r + 1; k < n; ++k) acc -= a[r][k] * out[k];
      out[r] = acc / a[r][r];
    }
    bool finite = true;
    for (double v : out) finite &= std::isfinite(v);
    if (finite) return out;
  }
  return std::vector<double>(n, 0.0);  // fall back to the mean predictor
}

}  // namespace

std::vector<double> successive_predict(
    const std::vector<std::span<const double>>& regressors,
    const MeasurementStats& stats, std::size_t band_k, double* mse_out) {
  const std::size_t nr = regressors.size();
  if (nr == 0 || band_k >= stats.bands() || nr > band_k)
    throw std::invalid_argument("successive_predict: bad band layout");
  const std::size_t m = regressors[0].size();

  std::vector<std::vector<double>> c(nr, std::vector<double>(nr));
  std::vector<double> cross(nr);
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nr; ++j) c[i][j] = stats.cov[i][j];
    if (i > 0) c[i][i] += 1.0 / 12.0;  // quantized regressor
    cross[i] = stats.cov[band_k][i];
  }
  std::vector<double> gain = solve_spd(c, cross);

  std::vector<double> yhat(m, stats.mean[band_k]);
  for (std::size_t i = 0; i < nr; ++i) {
    if (regressors[i].size() != m)
      throw std::invalid_argument("successive_predict: length mismatch");
    double g = gain[i];
    if (g == 0.0) continue;
    double mu = stats.mean[i];
    for (std::size_t t = 0; t < m; ++t)
      yhat[t] += g * (regressors[i][t] - mu);
  }
  if (mse_out) {
    double explained = 0.0;
    for (std::size_t i = 0; i < nr; ++i) explained += gain[i] * cross[i];
    *mse_out = std::max(stats.cov[band_k][band_k] - explained, 0.0);
  }
  return yhat;
}

double successive_epsilon_y(double mse, std::size_t m) {
  return std::sqrt(static_cast<double>(m) * std::max(mse, 0.0));
}

}  // namespace dqrp
