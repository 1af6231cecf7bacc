#include "dqrp/ldpc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dqrp/rng.hpp"

namespace dqrp {

namespace {

constexpr double kLlrClamp = 20.0;

// Variable-node edge-degree mixtures per database rate, tuned with
// tools/ldpc_tune (Monte Carlo density evolution over the BSC with the
// decoder's message clamping). Thresholds sit at 91-98% of the BSC capacity
// for every rate, which the one-step rate back-off comfortably covers.
struct ProfileEntry {
  int rate_percent;
  std::vector<DegreeTerm> terms;
};

const std::vector<ProfileEntry>& profile_table() {
  static const std::vector<ProfileEntry> table = {
      {5, {{2, 0.360}, {3, 0.290}, {8, 0.140}, {30, 0.210}}},
      {10, {{2, 0.375}, {3, 0.260}, {8, 0.215}, {30, 0.150}}},
      {15, {{2, 0.270}, {3, 0.260}, {8, 0.140}, {30, 0.330}}},
      {20, {{2, 0.270}, {3, 0.260}, {8, 0.200}, {30, 0.270}}},
      {25, {{2, 0.270}, {3, 0.245}, {8, 0.260}, {30, 0.225}}},
      {30, {{2, 0.210}, {3, 0.275}, {8, 0.215}, {30, 0.300}}},
      {35, {{2, 0.210}, {3, 0.245}, {8, 0.260}, {30, 0.285}}},
      {40, {{2, 0.180}, {3, 0.260}, {8, 0.260}, {30, 0.300}}},
      {45, {{2, 0.180}, {3, 0.260}, {8, 0.160}, {40, 0.400}}},
      {50, {{2, 0.150}, {3, 0.245}, {8, 0.275}, {30, 0.330}}},
      {55, {{2, 0.120}, {3, 0.260}, {8, 0.245}, {30, 0.375}}},
      {60, {{2, 0.090}, {3, 0.275}, {8, 0.230}, {30, 0.405}}},
      {65, {{2, 0.090}, {3, 0.260}, {8, 0.275}, {30, 0.375}}},
      {70, {{2, 0.060}, {3, 0.275}, {8, 0.230}, {30, 0.435}}},
      {75, {{2, 0.030}, {3, 0.290}, {8, 0.260}, {30, 0.420}}},
      {80, {{2, 0.045}, {3, 0.260}, {8, 0.260}, {30, 0.435}}},
      {85, {{2, 0.030}, {3, 0.245}, {8, 0.230}, {30, 0.495}}},
      {90, {{2, 0.000}, {3, 0.260}, {8, 0.200}, {30, 0.540}}},
      {95, {{2, 0.000}, {3, 0.200}, {8, 0.260}, {30, 0.540}}},
  };
  return table;
}

}  // namespace

std::vector<DegreeTerm> variable_degree_profile(double rate) {
  const auto& table = profile_table();
  int pct = static_cast<int>(std::lround(rate * 100.0));
  const ProfileEntry* best = &table.front();
  for (const auto& e : table)
    if (std::abs(e.rate_percent - pct) <
        std::abs(best->rate_percent - pct))
      best = &e;
  std::vector<DegreeTerm> terms;
  for (const auto& t : best->terms)
    if (t.edge_fraction > 0.0) terms.push_back(t);
  return terms;
}

std::size_t LdpcCode::edges() const {
  std::size_t e = 0;
  for (const auto& row : check_vars) e += row.size();
  return e;
}

void LdpcCode::rebuild_var_adjacency() {
  var_checks.assign(m, {});
  for (std::size_t c = 0; c < check_vars.size(); ++c)
    for (std::uint32_t v : check_vars[c])
      var_checks[v].push_back(static_cast<std::uint32_t>(c));
}

LdpcCode build_code(std::size_t m, double rate, std::uint64_t seed) {
  return build_code_with_profile(m, rate, seed, variable_degree_profile(rate));
}

LdpcCode build_code_with_profile(std::size_t m, double rate,
                                 std::uint64_t seed,
                                 const std::vector<DegreeTerm>& profile_in) {
  if (m < 100) throw std::invalid_argument("build_code: m >= 100");
  if (rate <= 0.0 || rate >= 1.0)
    throw std::invalid_argument("build_code: rate in (0, 1)");
  const std::size_t rows =
      static_cast<std::size_t>(std::lround(m * (1.0 - rate)));
  if (rows < 2) throw std::invalid_argument("build_code: too few check rows");

  // Clamp profile degrees to the available check count (short high-rate
  // codes in small databases), merging terms that land on the same degree.
  std::vector<DegreeTerm> profile;
  for (const auto& t : profile_in) {
    int d = std::min<int>(t.degree, static_cast<int>(rows));
    bool merged = false;
    for (auto& u : profile)
      if (u.degree == d) {
        u.edge_fraction += t.edge_fraction;
        merged = true;
      }
    if (!merged) profile.push_back({d, t.edge_fraction});
  }
  double norm = 0.0;
  for (const auto& t : profile) norm += t.edge_fraction / t.degree;
  std::vector<std::pair<int, double>> node_frac;
  for (const auto& t : profile)
    node_frac.push_back({t.degree, t.edge_fraction / t.degree / norm});
  // Largest-remainder rounding of node counts to exactly m.
  std::vector<std::size_t> counts(node_frac.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < node_frac.size(); ++i) {
    double exact = node_frac[i].second * static_cast<double>(m);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    rem.push_back({exact - std::floor(exact), i});
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < m; ++i, ++assigned)
    counts[rem[i % rem.size()].second]++;

  std::vector<int> degree_of(m);
  {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      for (std::size_t j = 0; j < counts[i]; ++j)
        degree_of[pos++] = node_frac[i].first;
  }
  for (int d : degree_of)
    if (static_cast<std::size_t>(d) > rows)
      throw std::invalid_argument(
          "build_code: degree profile infeasible for this m and rate");

  // Progressive edge growth. Variables are processed in ascending degree
  // order; each edge goes to the check most distant from the variable in the
  // current graph (unreached checks first), lowest current degree breaking
  // ties, then a seeded pick among remaining ties.
  Rng rng(seed);
  LdpcCode code;
  code.m = m;
  code.rate = rate;
  code.seed = seed;
  code.check_vars.assign(rows, {});
  std::vector<std::vector<std::uint32_t>> var_adj(m);
  std::vector<std::uint32_t> check_deg(rows, 0);

  std::vector<std::uint32_t> check_stamp(rows, 0), var_stamp(m, 0);
  std::uint32_t stamp = 0;
  std::vector<std::uint32_t> frontier, next_frontier, reached_checks;

  std::vector<std::uint32_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return degree_of[a] < degree_of[b];
                   });

  std::vector<std::uint32_t> candidates;
  for (std::uint32_t v : order) {
    for (int e = 0; e < degree_of[v]; ++e) {
      candidates.clear();
      if (var_adj[v].empty()) {
        // First edge: any check, prefer low degree.
        std::uint32_t best = UINT32_MAX;
        for (std::size_t c = 0; c < rows; ++c) {
          if (check_deg[c] < best) {
            best = check_deg[c];
            candidates.clear();
          }
          if (check_deg[c] == best)
            candidates.push_back(static_cast<std::uint32_t>(c));
        }
      } else {
        // BFS from v alternating variable/check layers.
        ++stamp;
        var_stamp[v] = stamp;
        frontier.assign(1, v);
        reached_checks.clear();
        std::size_t n_reached = 0;
        std::vector<std::uint32_t> last_new_checks;
        while (!frontier.empty()) {
          std::vector<std::uint32_t> new_checks;
          for (std::uint32_t fv : frontier)
            for (std::uint32_t c : var_adj[fv])
              if (check_stamp[c] != stamp) {
                check_stamp[c] = stamp;
                new_checks.push_back(c);
              }
          if (new_checks.empty()) break;
          n_reached += new_checks.size();
          last_new_checks = new_checks;
          next_frontier.clear();
          for (std::uint32_t c : new_checks)
            for (std::uint32_t nv : code.check_vars[c])
              if (var_stamp[nv] != stamp) {
                var_stamp[nv] = stamp;
                next_frontier.push_back(nv);
              }
          frontier.swap(next_frontier);
        }
        if (n_reached < rows) {
          for (std::size_t c = 0; c < rows; ++c)
            if (check_stamp[c] != stamp)
              candidates.push_back(static_cast<std::uint32_t>(c));
        } else {
          candidates = last_new_checks;
        }
        // Keep only minimum-degree candidates.
        std::uint32_t best = UINT32_MAX;
        for (std::uint32_t c : candidates) best = std::min(best, check_deg[c]);
        std::erase_if(candidates,
                      [&](std::uint32_t c) { return check_deg[c] != best; });
      }
      std::uint32_t pick =
          candidates[rng.next_below(candidates.size())];
      code.check_vars[pick].push_back(v);
      var_adj[v].push_back(pick);
      check_deg[pick]++;
    }
  }
  for (auto& row : code.check_vars) std::sort(row.begin(), row.end());
  code.rebuild_var_adjacency();
  return code;
}

std::vector<std::uint8_t> syndrome(const LdpcCode& code,
                                   std::span<const std::uint8_t> bits) {
  if (bits.size() != code.m)
    throw std::invalid_argument("syndrome: length mismatch");
  std::vector<std::uint8_t> s(code.rows(), 0);
  for (std::size_t c = 0; c < code.rows(); ++c) {
    std::uint8_t acc = 0;
    for (std::uint32_t v : code.check_vars[c]) acc ^= bits[v] & 1;
    s[c] = acc;
  }
  return s;
}

DecodeResult decode(const LdpcCode& code,
                    std::span<const std::uint8_t> predicted,
                    std::span<const std::uint8_t> target_syndrome,
                    std::span<const double> priors, int max_iters) {
  const std::size_t m = code.m;
  const std::size_t rows = code.rows();
  if (predicted.size() != m || priors.size() != m ||
      target_syndrome.size() != rows)
    throw std::invalid_argument("decode: size mismatch");

  // Residual syndrome the error pattern must produce.
  std::vector<std::uint8_t> residual = syndrome(code, predicted);
  for (std::size_t c = 0; c < rows; ++c) residual[c] ^= target_syndrome[c] & 1;

  std::vector<double> lambda(m);
  for (std::size_t i = 0; i < m; ++i) {
    double p = std::clamp(priors[i], 1e-12, 0.5);
    lambda[i] = std::min(std::log((1.0 - p) / p), kLlrClamp);
  }

  // Edge storage, check-major.
  std::vector<std::size_t> row_start(rows + 1, 0);
  for (std::size_t c = 0; c < rows; ++c)
    row_start[c + 1] = row_start[c] + code.check_vars[c].size();
  const std::size_t n_edges = row_start[rows];
  std::vector<std::uint32_t> edge_var(n_edges);
  std::vector<std::vector<std::uint32_t>> var_edges(m);
  for (std::size_t c = 0; c < rows; ++c) {
    std::size_t base = row_start[c];
    for (std::size_t j = 0; j < code.check_vars[c].size(); ++j) {
      edge_var[base + j] = code.check_vars[c][j];
      var_edges[code.check_vars[c][j]].push_back(
          static_cast<std::uint32_t>(base + j));
    }
  }

  std::vector<double> v2c(n_edges), c2v(n_edges, 0.0);
  for (std::size_t e = 0; e < n_edges; ++e) v2c[e] = lambda[edge_var[e]];

  std::vector<std::uint8_t> e_hat(m, 0), best_e(m, 0);
  std::size_t best_unsat = SIZE_MAX;

  auto unsatisfied = [&](const std::vector<std::uint8_t>& err) {
    std::size_t bad = 0;
    for (std::size_t c = 0; c < rows; ++c) {
      std::uint8_t acc = residual[c];
      for (std::size_t e = row_start[c]; e < row_start[c + 1]; ++e)
        acc ^= err[edge_var[e]];
      bad += acc;
    }
    return bad;
  };

  // Iteration 0: the all-zero error pattern (priors favor no flips).
  std::size_t unsat = unsatisfied(e_hat);
  if (unsat == 0) {
    DecodeResult res;
    res.bits.assign(predicted.begin(), predicted.end());
    res.converged = true;
    res.iterations = 0;
    return res;
  }
  best_unsat = unsat;
  best_e = e_hat;

  std::vector<double> tan_half(n_edges), prefix;
  for (int iter = 1; iter <= max_iters; ++iter) {
    // Check node update via prefix/suffix products.
    for (std::size_t e = 0; e < n_edges; ++e)
      tan_half[e] = std::tanh(0.5 * v2c[e]);
    for (std::size_t c = 0; c < rows; ++c) {
      std::size_t lo = row_start[c], hi = row_start[c + 1];
      std::size_t deg = hi - lo;
      prefix.assign(deg + 1, 1.0);
      for (std::size_t j = 0; j < deg; ++j)
        prefix[j + 1] = prefix[j] * tan_half[lo + j];
      double suffix = 1.0;
      double sign = residual[c] ? -1.0 : 1.0;
      for (std::size_t j = deg; j-- > 0;) {
        double excl = prefix[j] * suffix;
        suffix *= tan_half[lo + j];
        excl = std::clamp(sign * excl, -0.99999999999999, 0.99999999999999);
        c2v[lo + j] = std::clamp(2.0 * std::atanh(excl), -kLlrClamp,
                                 kLlrClamp);
      }
    }
    // Variable node update and hard decision.
    for (std::size_t i = 0; i < m; ++i) {
      double total = lambda[i];
      for (std::uint32_t e : var_edges[i]) total += c2v[e];
      e_hat[i] = total < 0.0;
      for (std::uint32_t e : var_edges[i])
        v2c[e] = std::clamp(total - c2v[e], -kLlrClamp, kLlrClamp);
    }
    unsat = unsatisfied(e_hat);
    if (unsat < best_unsat) {
      best_unsat = unsat;
      best_e = e_hat;
    }
    if (unsat == 0) {
      DecodeResult res;
      res.bits.resize(m);
      for (std::size_t i = 0; i < m; ++i)
        res.bits[i] = (predicted[i] ^ e_hat[i]) & 1;
      res.converged = true;
      res.iterations = iter;
      return res;
    }
  }
  DecodeResult res;
  res.bits.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    res.bits[i] = (predicted[i] ^ best_e[i]) & 1;
  res.converged = false;
  res.iterations = max_iters;
  return res;
}

CodeDatabase CodeDatabase::generate(std::size_t m,
                                    const std::vector<double>& rates,
                                    std::uint64_t seed) {
  CodeDatabase db;
  db.m_ = m;
  db.seed_ = seed;
  for (double r : rates)
    db.codes_.emplace(key(r), build_code(m, r, derive_seed(seed, key(r))));
  return db;
}

bool CodeDatabase::contains(double rate) const {
  return codes_.count(key(rate)) != 0;
}

const LdpcCode& CodeDatabase::at(double rate) const {
  auto it = codes_.find(key(rate));
  if (it == codes_.end())
    throw std::out_of_range("code database has no rate " +
                            std::to_string(rate));
  return it->second;
}

std::vector<double> CodeDatabase::rates() const {
  std::vector<double> r;
  for (const auto& [k, c] : codes_) r.push_back(c.rate);
  return r;
}

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void CodeDatabase::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write("DQRC", 4);
  put<std::uint8_t>(os, 1);  // format version
  put<std::uint8_t>(os, kPrngVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(m_));
  put<std::uint64_t>(os, seed_);
  put<std::uint16_t>(os, static_cast<std::uint16_t>(codes_.size()));
  for (const auto& [k, code] : codes_) {
    put<double>(os, code.rate);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(code.rows()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(code.edges()));
    for (const auto& row : code.check_vars) {
      put<std::uint16_t>(os, static_cast<std::uint16_t>(row.size()));
      for (std::uint32_t v : row) put<std::uint32_t>(os, v);
    }
  }
}

CodeDatabase CodeDatabase::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "DQRC", 4) != 0)
    throw std::runtime_error(path + ": not a code database");
  auto version = get<std::uint8_t>(is);
  if (version != 1)
    throw std::runtime_error(path + ": unsupported database version");
  auto prng = get<std::uint8_t>(is);
  if (prng != kPrngVersion)
    throw std::runtime_error(path + ": PRNG version mismatch");
  CodeDatabase db;
  db.m_ = get<std::uint32_t>(is);
  db.seed_ = get<std::uint64_t>(is);
  auto count = get<std::uint16_t>(is);
  for (int i = 0; i < count; ++i) {
    LdpcCode code;
    code.m = db.m_;
    code.rate = get<double>(is);
    code.seed = db.seed_;
    auto rows = get<std::uint32_t>(is);
    auto edges = get<std::uint32_t>(is);
    (void)edges;
    code.check_vars.resize(rows);
    for (auto& row : code.check_vars) {
      auto deg = get<std::uint16_t>(is);
      row.resize(deg);
      for (auto& v : row) v = get<std::uint32_t>(is);
    }
    if (!is) throw std::runtime_error(path + ": truncated database");
    code.rebuild_var_adjacency();
    db.codes_.emplace(key(code.rate), std::move(code));
  }
  return db;
}

}  // namespace dqrp
