#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace dqrp {

enum class OperatorKind : std::uint8_t { kSrht = 0, kGaussian = 1 };

// In-place unnormalized Walsh-Hadamard transform, length must be a power of
// two. Natural (Hadamard) ordering: H_{2n} = [[H, H], [H, -H]].
void fwht(std::span<double> data);

// Scaled random projection y = A x. Two kinds:
//   kSrht:     A = (1/sqrt(n)) * subsample(WHT(permute(x))). Rows have unit
//              l2 norm, A A^T = I, and the effective per-entry sigma for the
//              bitflip formulas is 1/sqrt(n).
//   kGaussian: dense i.i.d. N(0, sigma^2) entries.
// Immutable after construction; identical seed gives a bit-identical
// operator.
class MeasurementOperator {
 public:
  static MeasurementOperator build(OperatorKind kind, std::size_t n,
                                   std::size_t m, double sigma,
                                   std::uint64_t seed);

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply_transpose(std::span<const double> v) const;

  // Largest singular value: exactly 1 for SRHT (orthonormal rows); power
  // iteration estimate for the Gaussian kind.
  double operator_norm() const;

  OperatorKind kind() const { return kind_; }
  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  // Effective sigma to use in the theory formulas.
  double sigma() const { return sigma_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint32_t>& permutation() const { return perm_; }
  const std::vector<std::uint32_t>& row_subset() const { return rows_; }
  const std::vector<double>& dense_matrix() const { return dense_; }

 private:
  MeasurementOperator() = default;

  OperatorKind kind_ = OperatorKind::kSrht;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  double sigma_ = 1.0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint32_t> perm_;  // SRHT input permutation
  std::vector<std::uint32_t> rows_;  // SRHT retained rows, ascending
  std::vector<double> dense_;        // Gaussian kind, row-major m x n
};

struct DitherVector {
  std::vector<double> values;  // each in [-1, 0)
  std::uint64_t seed = 0;
};

DitherVector make_dither(std::size_t m, std::uint64_t seed);

// y = (1/delta) A x + w
std::vector<double> measure(const MeasurementOperator& op,
                            std::span<const double> x, const DitherVector& w,
                            double delta);

struct QuantizerConfig {
  int bits = 11;               // B
  double delta = 1.0;          // scaling parameter
  std::uint32_t offset = 0;    // offset-binary shift, usually 2^(B-1)

  std::uint32_t levels() const { return 1u << bits; }
};

inline QuantizerConfig make_quantizer(int bits, double delta) {
  return QuantizerConfig{bits, delta, 1u << (bits - 1)};
}

struct SaturationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// q_i = floor(y_i + 1/2); throws SaturationError if q_i + offset leaves
// [0, 2^B). The codec assumes B is large enough that this never fires.
std::vector<std::int32_t> quantize(std::span<const double> y,
                                   const QuantizerConfig& cfg);

// Quantized measurements as B binary planes. Plane k=1 is the LSB plane and
// k=B the MSB plane of the offset-binary values q + offset.
struct BitplaneMatrix {
  std::size_t m = 0;
  int bits = 0;
  std::vector<std::vector<std::uint8_t>> planes;  // planes[k-1], values 0/1

  const std::vector<std::uint8_t>& plane(int k) const { return planes[k - 1]; }
};

BitplaneMatrix to_bitplanes(std::span<const std::int32_t> q,
                            const QuantizerConfig& cfg);
std::vector<std::int32_t> from_bitplanes(const BitplaneMatrix& planes,
                                         const QuantizerConfig& cfg);

}  // namespace dqrp
