#include "dqrp/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dqrp {

namespace {

// K x = (sqrt(wx) * d_row x, sqrt(wy) * d_col x), replicate padding.
void apply_k(std::span<const double> x, const WtvWeights& w,
             std::span<double> u, std::span<double> v) {
  const std::size_t W = w.width, H = w.height;
  for (std::size_t s = 0; s < H; ++s)
    for (std::size_t t = 0; t < W; ++t) {
      std::size_t i = s * W + t;
      u[i] = s > 0 ? std::sqrt(w.wx[i]) * (x[i] - x[i - W]) : 0.0;
      v[i] = t > 0 ? std::sqrt(w.wy[i]) * (x[i] - x[i - 1]) : 0.0;
    }
}

void apply_k_transpose(std::span<const double> u, std::span<const double> v,
                       const WtvWeights& w, std::span<double> out) {
  const std::size_t W = w.width, H = w.height;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t s = 0; s < H; ++s)
    for (std::size_t t = 0; t < W; ++t) {
      std::size_t i = s * W + t;
      if (s > 0) {
        double a = std::sqrt(w.wx[i]) * u[i];
        out[i] += a;
        out[i - W] -= a;
      }
      if (t > 0) {
        double a = std::sqrt(w.wy[i]) * v[i];
        out[i] += a;
        out[i - 1] -= a;
      }
    }
}

// prox_{tau * WTV}(z) by projected gradient ascent on the dual, warm-started
// across calls.
void wtv_prox(std::span<const double> z, const WtvWeights& w, double tau,
              int iters, std::vector<double>& pu, std::vector<double>& pv,
              std::span<double> out) {
  const std::size_t n = z.size();
  std::vector<double> ku(n), kv(n);
  const double step = 0.125;  // 1 / ||K||^2, ||K||^2 <= 8 for weights <= 1
  for (int it = 0; it < iters; ++it) {
    // out = z - K^T p
    apply_k_transpose(pu, pv, w, out);
    for (std::size_t i = 0; i < n; ++i) out[i] = z[i] - out[i];
    apply_k(out, w, ku, kv);
    for (std::size_t i = 0; i < n; ++i) {
      double nu = pu[i] + step * ku[i];
      double nv = pv[i] + step * kv[i];
      double norm = std::sqrt(nu * nu + nv * nv);
      if (norm > tau) {
        nu *= tau / norm;
        nv *= tau / norm;
      }
      pu[i] = nu;
      pv[i] = nv;
    }
  }
  apply_k_transpose(pu, pv, w, out);
  for (std::size_t i = 0; i < n; ++i) out[i] = z[i] - out[i];
}

}  // namespace

std::vector<double> reference_gradient(std::span<const double> x0,
                                       std::size_t width, std::size_t height) {
  if (x0.size() != width * height)
    throw std::invalid_argument("reference_gradient: shape mismatch");
  std::vector<double> phi(x0.size());
  for (std::size_t s = 0; s < height; ++s)
    for (std::size_t t = 0; t < width; ++t) {
      std::size_t i = s * width + t;
      double dr = s > 0 ? x0[i] - x0[i - width] : 0.0;
      double dc = t > 0 ? x0[i] - x0[i - 1] : 0.0;
      phi[i] = std::sqrt(dr * dr + dc * dc);
    }
  return phi;
}

WtvWeights make_weights(std::span<const double> x0, std::size_t width,
                        std::size_t height, double tau, double low_weight) {
  // Threshold on the [0,1]-normalized reference block.
  double lo = x0[0], hi = x0[0];
  for (double v : x0) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> norm(x0.size(), 0.0);
  if (hi > lo)
    for (std::size_t i = 0; i < x0.size(); ++i)
      norm[i] = (x0[i] - lo) / (hi - lo);
  std::vector<double> phi = reference_gradient(norm, width, height);
  WtvWeights w;
  w.width = width;
  w.height = height;
  w.wx.resize(x0.size());
  w.wy.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i)
    w.wx[i] = w.wy[i] = phi[i] > tau ? low_weight : 1.0;
  return w;
}

double wtv_value(std::span<const double> x, const WtvWeights& w) {
  if (x.size() != w.width * w.height)
    throw std::invalid_argument("wtv_value: shape mismatch");
  const std::size_t W = w.width, H = w.height;
  double total = 0.0;
  for (std::size_t s = 0; s < H; ++s)
    for (std::size_t t = 0; t < W; ++t) {
      std::size_t i = s * W + t;
      double dr = s > 0 ? x[i] - x[i - W] : 0.0;
      double dc = t > 0 ? x[i] - x[i - 1] : 0.0;
      total += std::sqrt(w.wx[i] * dr * dr + w.wy[i] * dc * dc);
    }
  return total;
}

ReconResult reconstruct(std::span<const std::int32_t> q,
                        const MeasurementOperator& op, const DitherVector& w,
                        double delta, const WtvWeights& weights,
                        const ReconConfig& cfg,
                        std::span<const double> x_init) {
  const std::size_t n = op.n(), m = op.m();
  if (q.size() != m || x_init.size() != n)
    throw std::invalid_argument("reconstruct: size mismatch");
  std::vector<double> target(m);
  for (std::size_t i = 0; i < m; ++i)
    target[i] = static_cast<double>(q[i]) - w.values[i];

  auto objective = [&](std::span<const double> x, double* data_term) {
    std::vector<double> ax = op.apply(x);
    double d = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double r = target[i] - ax[i] / delta;
      d += r * r;
    }
    if (data_term) *data_term = d;
    return d + cfg.lambda * wtv_value(x, weights);
  };
  auto gradient = [&](std::span<const double> x) {
    std::vector<double> ax = op.apply(x);
    std::vector<double> r(m);
    for (std::size_t i = 0; i < m; ++i) r[i] = target[i] - ax[i] / delta;
    std::vector<double> g = op.apply_transpose(r);
    for (double& v : g) v *= -2.0 / delta;
    return g;
  };

  double opnorm = op.operator_norm();
  double lipschitz = 2.0 * opnorm * opnorm / (delta * delta);
  double step = 1.0 / lipschitz;

  for (int restart = 0; restart < 3; ++restart) {
    std::vector<double> x(x_init.begin(), x_init.end());
    std::vector<double> xprev = x, y = x, z(n);
    std::vector<double> pu(n, 0.0), pv(n, 0.0);
    double fx = objective(x, nullptr);
    double tk = 1.0;
    ReconResult res;
    res.objective_trace.push_back(fx);
    bool diverged = false;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
      std::vector<double> g = gradient(y);
      for (std::size_t i = 0; i < n; ++i) z[i] = y[i] - step * g[i];
      std::vector<double> candidate(n);
      wtv_prox(z, weights, cfg.lambda * step, cfg.prox_iters, pu, pv,
               candidate);
      double fc = objective(candidate, nullptr);
      if (!std::isfinite(fc)) {
        diverged = true;
        break;
      }
      // Monotone acceptance: fall back to the previous iterate if the
      // proximal point increased the objective.
      std::vector<double> xnew = fc <= fx ? candidate : x;
      double fnew = std::min(fc, fx);
      double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      for (std::size_t i = 0; i < n; ++i)
        y[i] = xnew[i] + (tk / tnext) * (candidate[i] - xnew[i]) +
               ((tk - 1.0) / tnext) * (xnew[i] - x[i]);
      xprev = std::move(x);
      x = std::move(xnew);
      tk = tnext;
      res.objective_trace.push_back(fnew);
      res.iterations = iter;
      double rel = std::abs(fx - fnew) / std::max(1.0, std::abs(fnew));
      fx = fnew;
      if (rel < cfg.tol) break;
    }
    if (!diverged) {
      res.x = std::move(x);
      res.objective = fx;
      return res;
    }
    step *= 0.5;
  }
  throw std::runtime_error("reconstruct: diverged after 3 step restarts");
}

double psnr(std::span<const double> x, std::span<const double> x_tilde) {
  if (x.size() != x_tilde.size() || x.empty())
    throw std::invalid_argument("psnr: size mismatch");
  double peak = x[0], mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    peak = std::max(peak, x[i]);
    double d = x[i] - x_tilde[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace dqrp
