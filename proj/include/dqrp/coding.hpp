#pragma once

#include <cstdint>
#include <vector>

namespace dqrp {

// Prediction-error model for one block: epsilon is the l2 error of the
// decoder's source prediction, sigma the operator's (effective) per-entry
// standard deviation, delta the quantizer scaling. The bitflip formulas
// depend on the inputs only through the normalized error epsilon*sigma/delta.
struct ErrorModel {
  double epsilon = 0.0;
  double sigma = 1.0;
  double delta = 1.0;

  double normalized() const { return epsilon * sigma / delta; }
};

// H_B(p) = -p log2 p - (1-p) log2 (1-p); H_B(0) = H_B(1) = 0.
double binary_entropy(double p);

// rho = 1 / (1 - R) for code rate R in [0, 1).
double compression_ratio(double rate);

// Probability that the decoder's prediction of bitplane k is wrong, given
// perfectly known planes 1..k-1:
//
//   p_k = 1/2 - sum_{l>=1} exp(-((pi sigma eps l) / (2^{k-1} delta))^2 / 2)
//                * sinc(l / 2^k) * sinc(l / 2)
//
// For normalized errors where the Gaussian envelope decays too slowly for
// the series to be practical, the same quantity is evaluated in the spatial
// domain as the Gaussian mass left outside the periodized consistent
// regions (both routes agree to ~1e-12 on the overlap; see tests). Result is
// clamped to [0, 1/2].
double bitflip_probability(int k, const ErrorModel& model, double tol = 1e-10);

// Probability mass of D ~ N(0, (sigma eps / delta)^2) over the unit-width
// quantization cells centered at distance c, repeating with period 2^k:
//
//   A1(k, c) = 2^{-k} (1 + 2 sum_{l>=1} exp(-((pi sigma eps l) /
//              (2^{k-1} delta))^2 / 2) * cos(pi c l / 2^{k-1})
//              * sinc(l / 2^k))
//
// c in [0, 2^{k-1}]. The companion mass over the offset cells is
// A2(k, c) = A1(k, 2^{k-1} - c).
double a1(int k, double c, const ErrorModel& model, double tol = 1e-10);

// Conditional likelihood that the predicted bit k is in error given the
// decoder-observed distance c, L_k = A2 / (A1 + A2). The distance argument
// uses the decoder's reported scale, on which the point equidistant from the
// nearest consistent and inconsistent cells sits at c = 2^{k-1} (twice the
// geometric distance to the chosen cell center), so L_k rises monotonically
// from L_k(0) to L_k(2^{k-1}) = 1/2 exactly.
double bit_error_likelihood(int k, double c, const ErrorModel& model,
                            double tol = 1e-10);

// Near-isometry transfer of the measurement-domain prediction error to the
// source domain: eps_x = delta * sqrt(n/m) * eps_y.
double epsilon_x_from_epsilon_y(double eps_y, std::size_t n, std::size_t m,
                                double delta);

enum class PlaneMode : std::uint8_t { kSkip = 0, kRaw = 1, kSyndrome = 2 };

struct PlaneDecision {
  PlaneMode mode = PlaneMode::kSkip;
  double rate = 0.0;             // code rate when mode == kSyndrome
  double flip_probability = 0.0; // predicted p_k
};

struct BitplanePlan {
  std::vector<PlaneDecision> planes;  // index k-1

  int syndrome_planes() const;
  int raw_planes() const;
  // Planes that must be transmitted at all (RAW or SYNDROME).
  int coded_planes() const;
};

struct RatePolicy {
  std::vector<double> rates;   // available code rates, strictly increasing
  double backoff = 0.05;       // one database step
  double cutoff_skip = 1e-5;   // p_k below this: plane is predictable, SKIP
  double cutoff_raw = 0.05;    // minimum usable code rate

  static RatePolicy defaults();
};

// Per-plane transmission decision. For each k: SKIP when p_k < cutoff_skip;
// otherwise take the largest available rate not exceeding the BSC capacity
// 1 - H_B(p_k), back off by one database step, and emit SYNDROME at that
// rate, or RAW when no backed-off rate >= cutoff_raw survives. Once a plane
// is skipped all higher planes are skipped.
BitplanePlan plan_bitplanes(const ErrorModel& model, int bits,
                            const RatePolicy& policy);

}  // namespace dqrp
