#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dqrp {

// Sparse parity-check code of block length m and rate R, stored as adjacency
// lists (rows = m(1-R) checks). Construction is progressive edge growth over
// a tuned irregular variable-degree profile; deterministic in (m, rate,
// seed).
struct LdpcCode {
  std::size_t m = 0;
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::uint32_t>> check_vars;  // per check row
  std::vector<std::vector<std::uint32_t>> var_checks;  // derived transpose

  std::size_t rows() const { return check_vars.size(); }
  std::size_t edges() const;
  void rebuild_var_adjacency();
};

// Variable-node edge-degree profile used for a given rate: list of
// (degree, fraction of edges). Tuned offline with tools/ldpc_tune.
struct DegreeTerm {
  int degree;
  double edge_fraction;
};
std::vector<DegreeTerm> variable_degree_profile(double rate);

LdpcCode build_code(std::size_t m, double rate, std::uint64_t seed);

// Same construction with an explicit degree profile; used by the tuning
// tool to evaluate candidate mixtures on realized graphs.
LdpcCode build_code_with_profile(std::size_t m, double rate,
                                 std::uint64_t seed,
                                 const std::vector<DegreeTerm>& profile);

// s = H q over GF(2).
std::vector<std::uint8_t> syndrome(const LdpcCode& code,
                                   std::span<const std::uint8_t> bits);

struct DecodeResult {
  std::vector<std::uint8_t> bits;
  bool converged = false;
  int iterations = 0;
};

// Belief propagation on the error pattern e with H e = target_syndrome xor
// H predicted. priors[i] is the probability that predicted bit i is wrong,
// in (0, 1/2]. On convergence the returned bits satisfy the target syndrome
// exactly; otherwise converged=false and the hard decision with the fewest
// unsatisfied checks seen is returned.
DecodeResult decode(const LdpcCode& code,
                    std::span<const std::uint8_t> predicted,
                    std::span<const std::uint8_t> target_syndrome,
                    std::span<const double> priors, int max_iters = 100);

// Rate-indexed set of codes sharing one block length, serializable to a
// versioned binary file so encoder and decoder load identical codes.
class CodeDatabase {
 public:
  CodeDatabase() = default;
  static CodeDatabase generate(std::size_t m, const std::vector<double>& rates,
                               std::uint64_t seed);

  bool contains(double rate) const;
  const LdpcCode& at(double rate) const;
  std::size_t block_length() const { return m_; }
  std::uint64_t seed() const { return seed_; }
  std::vector<double> rates() const;

  void save(const std::string& path) const;
  static CodeDatabase load(const std::string& path);

 private:
  static long key(double rate) { return std::lround(rate * 10000.0); }
  std::size_t m_ = 0;
  std::uint64_t seed_ = 0;
  std::map<long, LdpcCode> codes_;
};

}  // namespace dqrp
