#include "dqrp/measurement.hpp"

#include <cmath>

#include "dqrp/rng.hpp"

namespace dqrp {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

void fwht(std::span<double> data) {
  std::size_t n = data.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        double s = data[j];
        double t = data[j + h];
        data[j] = s + t;
        data[j + h] = s - t;
      }
    }
  }
}

MeasurementOperator MeasurementOperator::build(OperatorKind kind,
                                               std::size_t n, std::size_t m,
                                               double sigma,
                                               std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("operator: n, m >= 1");
  MeasurementOperator op;
  op.kind_ = kind;
  op.n_ = n;
  op.m_ = m;
  op.seed_ = seed;
  Rng rng(seed);
  if (kind == OperatorKind::kSrht) {
    if (!is_power_of_two(n))
      throw std::invalid_argument("SRHT requires n to be a power of two");
    if (m > n) throw std::invalid_argument("SRHT requires m <= n");
    op.perm_ = rng.permutation(n);
    op.rows_ = rng.subset(n, m);
    op.sigma_ = 1.0 / std::sqrt(static_cast<double>(n));
  } else {
    op.sigma_ = sigma;
    op.dense_.resize(m * n);
    for (double& a : op.dense_) a = sigma * rng.gaussian();
  }
  return op;
}

std::vector<double> MeasurementOperator::apply(
    std::span<const double> x) const {
  if (x.size() != n_) throw std::invalid_argument("apply: length mismatch");
  std::vector<double> y(m_, 0.0);
  if (kind_ == OperatorKind::kSrht) {
    std::vector<double> t(n_);
    for (std::size_t i = 0; i < n_; ++i) t[i] = x[perm_[i]];
    fwht(t);
    double scale = 1.0 / std::sqrt(static_cast<double>(n_));
    for (std::size_t i = 0; i < m_; ++i) y[i] = scale * t[rows_[i]];
  } else {
    for (std::size_t i = 0; i < m_; ++i) {
      const double* row = dense_.data() + i * n_;
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) acc += row[j] * x[j];
      y[i] = acc;
    }
  }
  return y;
}

std::vector<double> MeasurementOperator::apply_transpose(
    std::span<const double> v) const {
  if (v.size() != m_)
    throw std::invalid_argument("apply_transpose: length mismatch");
  std::vector<double> out(n_, 0.0);
  if (kind_ == OperatorKind::kSrht) {
    std::vector<double> t(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) t[rows_[i]] = v[i];
    fwht(t);  // H is symmetric
    double scale = 1.0 / std::sqrt(static_cast<double>(n_));
    for (std::size_t i = 0; i < n_; ++i) out[perm_[i]] = scale * t[i];
  } else {
    for (std::size_t i = 0; i < m_; ++i) {
      const double* row = dense_.data() + i * n_;
      for (std::size_t j = 0; j < n_; ++j) out[j] += row[j] * v[i];
    }
  }
  return out;
}

double MeasurementOperator::operator_norm() const {
  if (kind_ == OperatorKind::kSrht) return 1.0;
  // Power iteration on A^T A with a fixed start vector.
  std::vector<double> v(n_, 1.0 / std::sqrt(static_cast<double>(n_)));
  double norm = 0.0;
  for (int it = 0; it < 50; ++it) {
    std::vector<double> u = apply(v);
    std::vector<double> w = apply_transpose(u);
    double nw = 0.0;
    for (double a : w) nw += a * a;
    nw = std::sqrt(nw);
    if (nw == 0.0) return 0.0;
    for (std::size_t i = 0; i < n_; ++i) v[i] = w[i] / nw;
    norm = std::sqrt(nw);
  }
  return norm;
}

DitherVector make_dither(std::size_t m, std::uint64_t seed) {
  DitherVector w;
  w.seed = seed;
  w.values.resize(m);
  Rng rng(seed);
  for (double& v : w.values) v = rng.unit() - 1.0;  // [-1, 0)
  return w;
}

std::vector<double> measure(const MeasurementOperator& op,
                            std::span<const double> x, const DitherVector& w,
                            double delta) {
  if (delta <= 0.0) throw std::invalid_argument("measure: delta must be > 0");
  if (w.values.size() != op.m())
    throw std::invalid_argument("measure: dither length mismatch");
  std::vector<double> y = op.apply(x);
  double inv = 1.0 / delta;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = inv * y[i] + w.values[i];
  return y;
}

std::vector<std::int32_t> quantize(std::span<const double> y,
                                   const QuantizerConfig& cfg) {
  std::vector<std::int32_t> q(y.size());
  const std::int64_t lo = -static_cast<std::int64_t>(cfg.offset);
  const std::int64_t hi = static_cast<std::int64_t>(cfg.levels()) - cfg.offset;
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::int64_t v = static_cast<std::int64_t>(std::floor(y[i] + 0.5));
    if (v < lo || v >= hi)
      throw SaturationError("quantizer saturated: value " + std::to_string(v) +
                            " outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + ")");
    q[i] = static_cast<std::int32_t>(v);
  }
  return q;
}

BitplaneMatrix to_bitplanes(std::span<const std::int32_t> q,
                            const QuantizerConfig& cfg) {
  BitplaneMatrix bp;
  bp.m = q.size();
  bp.bits = cfg.bits;
  bp.planes.assign(cfg.bits, std::vector<std::uint8_t>(q.size(), 0));
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::int64_t v = static_cast<std::int64_t>(q[i]) + cfg.offset;
    if (v < 0 || v >= static_cast<std::int64_t>(cfg.levels()))
      throw SaturationError("to_bitplanes: q + offset out of range");
    for (int k = 0; k < cfg.bits; ++k)
      bp.planes[k][i] = static_cast<std::uint8_t>((v >> k) & 1);
  }
  return bp;
}

std::vector<std::int32_t> from_bitplanes(const BitplaneMatrix& bp,
                                         const QuantizerConfig& cfg) {
  if (bp.bits != cfg.bits)
    throw std::invalid_argument("from_bitplanes: bit depth mismatch");
  std::vector<std::int32_t> q(bp.m);
  for (std::size_t i = 0; i < bp.m; ++i) {
    std::uint32_t v = 0;
    for (int k = 0; k < bp.bits; ++k)
      v |= static_cast<std::uint32_t>(bp.planes[k][i] & 1) << k;
    q[i] = static_cast<std::int32_t>(v) -
           static_cast<std::int32_t>(cfg.offset);
  }
  return q;
}

}  // namespace dqrp
