#include "dqrp/coding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dqrp {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  double px = kPi * x;
  return std::sin(px) / px;
}

// Standard normal CDF.
double phi(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// pdf of N(0, s^2)
double normal_pdf(double u, double s) {
  double z = u / s;
  return std::exp(-0.5 * z * z) / (s * 2.5066282746310005);
}

// Integral of (a + b*u) * N(0, s^2)(u) du over [x1, x2].
double gauss_linear_mass(double s, double x1, double x2, double a, double b) {
  double m0 = phi(x2 / s) - phi(x1 / s);
  double m1 = s * s * (normal_pdf(x1, s) - normal_pdf(x2, s));
  return a * m0 + b * m1;
}

// Mass of N(0, s^2) under the periodized trapezoid obtained by smoothing the
// width-2^{k-1} consistent regions (period 2^k) with the unit-width
// quantization cell. This is the spatial-domain form of Pr(no flip): flat
// at 1 for |u| <= 2^{k-2} - 1/2 around each period center, linear ramps of
// width 1 on both sides.
double correct_mass_spatial(int k, double s) {
  double period = std::ldexp(1.0, k);        // 2^k
  double flat = std::ldexp(1.0, k - 2) - 0.5;  // may be 0 (k = 1)
  double ramp_hi = flat + 1.0;
  // Enough periods to cover +-8 sigma.
  long lmax = static_cast<long>(std::ceil((8.0 * s + ramp_hi) / period)) + 1;
  double total = 0.0;
  for (long l = -lmax; l <= lmax; ++l) {
    double c = l * period;
    if (flat > 0.0)
      total += phi((c + flat) / s) - phi((c - flat) / s);
    // Right ramp: weight 1 - (u - (c + flat)) on [c + flat, c + ramp_hi].
    total += gauss_linear_mass(s, c + flat, c + ramp_hi, 1.0 + (c + flat),
                               -1.0);
    // Left ramp mirrors it.
    total += gauss_linear_mass(s, c - ramp_hi, c - flat, 1.0 - (c - flat),
                               1.0);
  }
  return total;
}

// Mass of N(0, s^2) over unit cells centered at +-c + l*2^k.
double cell_mass_spatial(int k, double c, double s) {
  double period = std::ldexp(1.0, k);
  long lmax = static_cast<long>(std::ceil((8.0 * s + c + 1.0) / period)) + 1;
  double total = 0.0;
  for (long l = -lmax; l <= lmax; ++l) {
    double center = c + l * period;
    total += phi((center + 0.5) / s) - phi((center - 0.5) / s);
  }
  return total;
}

// Below this per-term decay rate the frequency series needs too many terms
// and the spatial route takes over.
constexpr double kSeriesCutoff = 0.35;

}  // namespace

double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("binary_entropy: p must be in [0, 1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double compression_ratio(double rate) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("compression_ratio: rate must be in [0, 1)");
  return 1.0 / (1.0 - rate);
}

double bitflip_probability(int k, const ErrorModel& model, double tol) {
  if (k < 1) throw std::invalid_argument("bitflip_probability: k >= 1");
  if (tol <= 0.0) throw std::invalid_argument("bitflip_probability: tol > 0");
  double s = model.normalized();
  if (s < 0.0) throw std::invalid_argument("bitflip_probability: eps >= 0");
  if (s == 0.0) return 0.0;
  double r = s / std::ldexp(1.0, k - 1);  // envelope rate eps*sigma/(2^{k-1} delta)
  double p;
  if (r >= kSeriesCutoff) {
    double inv2k = std::ldexp(1.0, -k);
    double sum = 0.0;
    for (long l = 1;; ++l) {
      double g = kPi * r * l;
      double env = std::exp(-0.5 * g * g);
      if (l >= 64 && env < tol * std::abs(sum)) break;
      if (env == 0.0) break;
      sum += env * sinc(l * inv2k) * sinc(0.5 * l);
    }
    p = 0.5 - sum;
  } else {
    p = 1.0 - correct_mass_spatial(k, s);
  }
  return std::clamp(p, 0.0, 0.5);
}

double a1(int k, double c, const ErrorModel& model, double tol) {
  if (k < 1) throw std::invalid_argument("a1: k >= 1");
  double half_period = std::ldexp(1.0, k - 1);
  if (c < 0.0 || c > half_period)
    throw std::invalid_argument("a1: c must be in [0, 2^{k-1}]");
  double s = model.normalized();
  if (s == 0.0) return c <= 0.5 ? 1.0 : 0.0;
  double r = s / half_period;
  double value;
  if (r >= kSeriesCutoff) {
    double inv2k = std::ldexp(1.0, -k);
    double omega = kPi * c / half_period;
    double sum = 0.0;
    for (long l = 1;; ++l) {
      double g = kPi * r * l;
      double env = std::exp(-0.5 * g * g);
      if (l >= 64 && env < tol * (1.0 + std::abs(sum))) break;
      if (env == 0.0) break;
      sum += env * std::cos(omega * l) * sinc(l * inv2k);
    }
    value = inv2k * (1.0 + 2.0 * sum);
  } else {
    value = cell_mass_spatial(k, c, s);
  }
  return std::clamp(value, 0.0, 1.0);
}

double bit_error_likelihood(int k, double c, const ErrorModel& model,
                            double tol) {
  double half_period = std::ldexp(1.0, k - 1);
  if (c < 0.0 || c > half_period)
    throw std::invalid_argument("bit_error_likelihood: c out of range");
  double d = 0.5 * c;  // geometric distance to the chosen cell center
  double consistent = a1(k, d, model, tol);
  double inconsistent = a1(k, half_period - d, model, tol);
  double denom = consistent + inconsistent;
  if (denom <= 0.0) {
    // Degenerate eps -> 0 case: all mass at the chosen cell unless the
    // distances tie.
    return (half_period - d) - d < 1e-12 ? 0.5 : 0.0;
  }
  return std::clamp(inconsistent / denom, 0.0, 0.5);
}

double epsilon_x_from_epsilon_y(double eps_y, std::size_t n, std::size_t m,
                                double delta) {
  return delta * std::sqrt(static_cast<double>(n) / static_cast<double>(m)) *
         eps_y;
}

int BitplanePlan::syndrome_planes() const {
  int c = 0;
  for (const auto& p : planes) c += p.mode == PlaneMode::kSyndrome;
  return c;
}

int BitplanePlan::raw_planes() const {
  int c = 0;
  for (const auto& p : planes) c += p.mode == PlaneMode::kRaw;
  return c;
}

int BitplanePlan::coded_planes() const {
  return syndrome_planes() + raw_planes();
}

RatePolicy RatePolicy::defaults() {
  RatePolicy p;
  for (int i = 1; i <= 19; ++i) p.rates.push_back(0.05 * i);
  return p;
}

BitplanePlan plan_bitplanes(const ErrorModel& model, int bits,
                            const RatePolicy& policy) {
  if (bits < 1) throw std::invalid_argument("plan_bitplanes: bits >= 1");
  BitplanePlan plan;
  plan.planes.resize(bits);
  bool skipping = false;
  for (int k = 1; k <= bits; ++k) {
    PlaneDecision& d = plan.planes[k - 1];
    d.flip_probability = bitflip_probability(k, model);
    if (skipping || d.flip_probability < policy.cutoff_skip) {
      d.mode = PlaneMode::kSkip;
      skipping = true;
      continue;
    }
    double capacity = 1.0 - binary_entropy(d.flip_probability);
    // Largest available rate <= capacity, then one step lower.
    int idx = -1;
    for (std::size_t i = 0; i < policy.rates.size(); ++i)
      if (policy.rates[i] <= capacity) idx = static_cast<int>(i);
    int backed = idx - 1;
    if (backed < 0 || policy.rates[backed] < policy.cutoff_raw - 1e-12) {
      d.mode = PlaneMode::kRaw;
    } else {
      d.mode = PlaneMode::kSyndrome;
      d.rate = policy.rates[backed];
    }
  }
  return plan;
}

}  // namespace dqrp
