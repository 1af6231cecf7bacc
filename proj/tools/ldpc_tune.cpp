// Offline tuner for the variable-degree profiles baked into build_code().
//
// Monte Carlo density evolution over a BSC, mirroring the sum-product
// decoder in src/ldpc.cpp (same +-20 LLR clamping). For each database rate
// it hill-climbs an edge-degree mixture over {2, 3, 8, D} and prints the
// resulting thresholds plus a table snippet for src/ldpc.cpp.
//
//   ldpc_tune search [rate...]        tune profiles (all rates by default)
//   ldpc_tune threshold R l2 l3 l8 D  threshold of one mixture
//   ldpc_tune validate R p trials [m] [iters]   BLER of the built code

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "dqrp/coding.hpp"
#include "dqrp/ldpc.hpp"
#include "dqrp/rng.hpp"

namespace {

struct FastRng {
  std::uint64_t s;
  explicit FastRng(std::uint64_t seed) : s(seed ^ 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double unit() { return (next() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return next() % n; }
};

constexpr double kClamp = 20.0;

struct Profile {
  std::vector<dqrp::DegreeTerm> terms;

  double inv_mean() const {  // sum lambda_d / d  (= m / E)
    double a = 0.0;
    for (auto& t : terms) a += t.edge_fraction / t.degree;
    return a;
  }
};

// Concentrated check-side distribution matching the rate.
void check_side(const Profile& p, double rate, int& dlo, double& rho_lo) {
  double t = (1.0 - rate) * p.inv_mean();  // sum rho_j / j
  dlo = static_cast<int>(std::floor(1.0 / t));
  if (dlo < 2) dlo = 2;
  double x = (t - 1.0 / (dlo + 1)) * dlo * (dlo + 1);
  rho_lo = std::clamp(x, 0.0, 1.0);
}

// True if P_e drops below 1e-5 within the iteration budget.
bool de_converges(const Profile& prof, double rate, double p, std::size_t pop,
                  int max_iters, FastRng& rng) {
  int dlo;
  double rho_lo;
  check_side(prof, rate, dlo, rho_lo);
  const double llr0 = std::log((1.0 - p) / p);

  std::vector<double> var_msg(pop), chk_msg(pop), th(pop);
  std::vector<double> cum;  // cumulative edge fractions for sampling dv
  double acc = 0.0;
  for (auto& t : prof.terms) cum.push_back(acc += t.edge_fraction);

  auto sample_dv = [&]() {
    double u = rng.unit();
    for (std::size_t i = 0; i < cum.size(); ++i)
      if (u <= cum[i]) return prof.terms[i].degree;
    return prof.terms.back().degree;
  };

  for (std::size_t i = 0; i < pop; ++i)
    var_msg[i] = rng.unit() < p ? -llr0 : llr0;

  double pe_hist = 1.0;
  for (int iter = 1; iter <= max_iters; ++iter) {
    for (std::size_t i = 0; i < pop; ++i) th[i] = std::tanh(0.5 * var_msg[i]);
    for (std::size_t i = 0; i < pop; ++i) {
      int dc = rng.unit() < rho_lo ? dlo : dlo + 1;
      double prod = 1.0;
      for (int j = 0; j < dc - 1; ++j) prod *= th[rng.below(pop)];
      prod = std::clamp(prod, -0.99999999999999, 0.99999999999999);
      chk_msg[i] = std::clamp(2.0 * std::atanh(prod), -kClamp, kClamp);
    }
    std::size_t bad = 0;
    for (std::size_t i = 0; i < pop; ++i) {
      int dv = sample_dv();
      double ch = rng.unit() < p ? -llr0 : llr0;
      double total = ch;
      for (int j = 0; j < dv - 1; ++j) total += chk_msg[rng.below(pop)];
      var_msg[i] = std::clamp(total, -kClamp, kClamp);
      bad += var_msg[i] < 0.0;
    }
    double pe = static_cast<double>(bad) / pop;
    if (pe < 1e-5) return true;
    if (iter % 100 == 0) {
      if (pe > 0.98 * pe_hist) return false;  // stagnated
      pe_hist = pe;
    }
  }
  return false;
}

double de_threshold(const Profile& prof, double rate, std::size_t pop,
                    int max_iters, std::uint64_t seed) {
  // Capacity-achieving p for this rate.
  double lo = 0.001, hi = 0.5;
  while (hi - lo > 1e-6) {
    double mid = 0.5 * (lo + hi);
    if (1.0 - dqrp::binary_entropy(mid) > rate)
      lo = mid;
    else
      hi = mid;
  }
  double pcap = lo;
  lo = 0.2 * pcap;
  hi = pcap;
  FastRng rng(seed);
  for (int round = 0; round < 9; ++round) {
    double mid = 0.5 * (lo + hi);
    if (de_converges(prof, rate, mid, pop, max_iters, rng))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

bool feasible(const Profile& prof, double rate) {
  double sum = 0.0;
  for (auto& t : prof.terms) {
    if (t.edge_fraction < -1e-12) return false;
    sum += t.edge_fraction;
  }
  if (std::abs(sum - 1.0) > 1e-9) return false;
  // Degree-2 variable nodes must stay well below the check count or PEG
  // cannot keep their subgraph cycle-free.
  double a = prof.inv_mean();
  double frac2 = 0.0;
  for (auto& t : prof.terms)
    if (t.degree == 2) frac2 = t.edge_fraction / 2.0 / a;
  return frac2 <= 0.85 * (1.0 - rate);
}

Profile make_profile(double l2, double l3, double l8, int dmax) {
  double lD = 1.0 - l2 - l3 - l8;
  return Profile{{{2, l2}, {3, l3}, {8, l8}, {dmax, lD}}};
}

void search_rate(double rate, std::uint64_t seed) {
  const int dmax = 30;
  const std::size_t pop = 32768;
  const int iters = 600;
  double v[3] = {0.15, 0.20, 0.20};  // l2, l3, l8
  {
    Profile p0 = make_profile(v[0], v[1], v[2], dmax);
    while (!feasible(p0, rate) && v[0] > 0.0) {
      v[0] = std::max(0.0, v[0] - 0.03);
      p0 = make_profile(v[0], v[1], v[2], dmax);
    }
  }
  double best = de_threshold(make_profile(v[0], v[1], v[2], dmax), rate, pop,
                             iters, seed);
  for (double step : {0.06, 0.03, 0.015}) {
    bool improved = true;
    int sweeps = 0;
    while (improved && sweeps < 3) {
      improved = false;
      ++sweeps;
      for (int c = 0; c < 3; ++c) {
        for (double dir : {+1.0, -1.0}) {
          double trial[3] = {v[0], v[1], v[2]};
          trial[c] = std::clamp(trial[c] + dir * step, 0.0, 0.75);
          Profile prof = make_profile(trial[0], trial[1], trial[2], dmax);
          if (!feasible(prof, rate)) continue;
          double th = de_threshold(prof, rate, pop, iters, seed + 17);
          if (th > best + 1e-4) {
            best = th;
            v[0] = trial[0];
            v[1] = trial[1];
            v[2] = trial[2];
            improved = true;
          }
        }
      }
    }
  }
  // Confirm with a larger population.
  Profile fin = make_profile(v[0], v[1], v[2], dmax);
  double confirm = de_threshold(fin, rate, 131072, 900, seed + 99);
  double pcap_lo = 0.001, pcap_hi = 0.5;
  while (pcap_hi - pcap_lo > 1e-7) {
    double mid = 0.5 * (pcap_lo + pcap_hi);
    (1.0 - dqrp::binary_entropy(mid) > rate ? pcap_lo : pcap_hi) = mid;
  }
  double lD = 1.0 - v[0] - v[1] - v[2];
  std::printf(
      "rate %.2f  l2 %.3f l3 %.3f l8 %.3f l%d %.3f  p* %.4f  pcap %.4f  "
      "ratio %.3f\n",
      rate, v[0], v[1], v[2], dmax, lD, confirm, pcap_hi,
      confirm / pcap_hi);
  std::printf("    {%d, {{2, %.3f}, {3, %.3f}, {8, %.3f}, {%d, %.3f}}},\n",
              static_cast<int>(std::lround(rate * 100)), v[0], v[1], v[2],
              dmax, lD);
  std::fflush(stdout);
}

int run_bler(const dqrp::LdpcCode& code, double p, int trials, int iters,
             bool verbose = false) {
  FastRng rng(12345);
  const std::size_t m = code.m;
  int fails = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::uint8_t> truth(m), pred(m);
    for (std::size_t i = 0; i < m; ++i) truth[i] = rng.next() & 1;
    std::vector<std::uint8_t> s = dqrp::syndrome(code, truth);
    pred = truth;
    for (std::size_t i = 0; i < m; ++i)
      if (rng.unit() < p) pred[i] ^= 1;
    std::vector<double> priors(m, p);
    auto res = dqrp::decode(code, pred, s, priors, iters);
    bool bad = !res.converged || res.bits != truth;
    fails += bad;
    if (bad && verbose) {
      auto s2 = dqrp::syndrome(code, res.bits);
      int unsat = 0;
      for (std::size_t i = 0; i < s2.size(); ++i) unsat += s2[i] != s[i];
      int wrong = 0;
      for (std::size_t i = 0; i < m; ++i) wrong += res.bits[i] != truth[i];
      std::printf("  fail trial %d: converged %d, unsat %d, wrong bits %d\n",
                  t, res.converged, unsat, wrong);
    }
  }
  return fails;
}

int run_validate(double rate, double p, int trials, std::size_t m,
                 int iters) {
  dqrp::LdpcCode code = dqrp::build_code(m, rate, 1);
  FastRng rng(12345);
  int fails = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::uint8_t> truth(m), pred(m);
    for (std::size_t i = 0; i < m; ++i) truth[i] = rng.next() & 1;
    std::vector<std::uint8_t> s = dqrp::syndrome(code, truth);
    pred = truth;
    for (std::size_t i = 0; i < m; ++i)
      if (rng.unit() < p) pred[i] ^= 1;
    std::vector<double> priors(m, p);
    auto res = dqrp::decode(code, pred, s, priors, iters);
    fails += !res.converged || res.bits != truth;
  }
  std::printf("rate %.2f p %.4f m %zu iters %d: BLER %d/%d\n", rate, p, m,
              iters, fails, trials);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: ldpc_tune search|threshold|validate ...\n");
    return 2;
  }
  std::string cmd = argv[1];
  if (cmd == "search") {
    std::vector<double> rates;
    for (int i = 2; i < argc; ++i) rates.push_back(std::atof(argv[i]));
    if (rates.empty())
      for (int i = 1; i <= 19; ++i) rates.push_back(0.05 * i);
    for (double r : rates) search_rate(r, 1000 + std::lround(r * 100));
    return 0;
  }
  if (cmd == "threshold" && argc >= 7) {
    double rate = std::atof(argv[2]);
    Profile prof = make_profile(std::atof(argv[3]), std::atof(argv[4]),
                                std::atof(argv[5]), std::atoi(argv[6]));
    double th = de_threshold(prof, rate, 131072, 900, 7);
    std::printf("threshold %.5f\n", th);
    return 0;
  }
  if (cmd == "validate" && argc >= 5) {
    double rate = std::atof(argv[2]);
    double p = std::atof(argv[3]);
    int trials = std::atoi(argv[4]);
    std::size_t m = argc > 5 ? std::strtoul(argv[5], nullptr, 10) : 4000;
    int iters = argc > 6 ? std::atoi(argv[6]) : 100;
    return run_validate(rate, p, trials, m, iters);
  }
  if (cmd == "bler" && argc >= 9) {
    // bler rate p trials iters l2 l3 l8 D [seed]
    double rate = std::atof(argv[2]);
    double p = std::atof(argv[3]);
    int trials = std::atoi(argv[4]);
    int iters = std::atoi(argv[5]);
    Profile prof = make_profile(std::atof(argv[6]), std::atof(argv[7]),
                                std::atof(argv[8]), std::atoi(argv[9]));
    std::uint64_t seed = argc > 10 ? std::strtoull(argv[10], nullptr, 10) : 1;
    dqrp::LdpcCode code =
        dqrp::build_code_with_profile(4000, rate, seed, prof.terms);
    int fails = run_bler(code, p, trials, iters, true);
    std::printf("rate %.2f p %.4f profile(%s %s %s %s): BLER %d/%d\n", rate,
                p, argv[6], argv[7], argv[8], argv[9], fails, trials);
    return 0;
  }
  std::fprintf(stderr, "bad arguments\n");
  return 2;
}
