#include "lifelong/coin.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lifelong/dirichlet.hpp"
#include "lifelong/incomplete_beta.hpp"

namespace lifelong {

void CoinPriorSpec::validate() const {
  if (!(n1 >= 0.0) || !(n2 >= 0.0) || !(n1 + n2 > 0.0)) {
    throw std::invalid_argument("CoinPriorSpec: pseudo-counts must be nonnegative, not both 0");
  }
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw std::invalid_argument("CoinPriorSpec: epsilon must lie in (0, 0.5)");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("CoinPriorSpec: delta must lie in (0, 1)");
  }
}

long CoinPriorSpec::flips(long B) const {
  if (counting == CoinCounting::kSampleIndex) return B > 0 ? B - 1 : 0;
  return B;
}

double coverage_probability(const CoinPriorSpec& spec, long B) {
  spec.validate();
  if (B < 0) throw std::invalid_argument("coverage_probability: B must be >= 0");
  const long n = spec.flips(B);
  const double lo = 0.5 - spec.epsilon;
  const double hi = 0.5 + spec.epsilon;
  const double log_norm = std::lgamma(static_cast<double>(n) + 1.0) + n * std::log(0.5);
  double total = 0.0;
  for (long h = 0; h <= n; ++h) {
    const double log_pmf = log_norm - std::lgamma(static_cast<double>(h) + 1.0) -
                           std::lgamma(static_cast<double>(n - h) + 1.0);
    const double a = static_cast<double>(h) + spec.n1;
    const double b = static_cast<double>(n - h) + spec.n2;
    total += std::exp(log_pmf) * beta_interval_mass(a, b, lo, hi);
  }
  return std::clamp(total, 0.0, 1.0);
}

long min_sample_complexity(const CoinPriorSpec& spec, long cap, int window) {
  spec.validate();
  if (window < 1) throw std::invalid_argument("min_sample_complexity: window must be >= 1");
  const double target = 1.0 - spec.delta;
  long run_start = -1;
  for (long B = 0; B <= cap + window; ++B) {
    if (coverage_probability(spec, B) >= target) {
      if (run_start < 0) run_start = B;
      if (B - run_start + 1 >= window) return run_start;
    } else {
      run_start = -1;
    }
    if (run_start < 0 && B >= cap) break;
  }
  throw SampleComplexityLimitError("min_sample_complexity: no B found below the search cap");
}

std::vector<ComplexityRow> complexity_profile(int total, double epsilon, double delta,
                                              CoinCounting counting) {
  if (total < 1) throw std::invalid_argument("complexity_profile: total must be >= 1");
  std::vector<ComplexityRow> rows;
  rows.reserve(total + 1);
  for (int n1 = 0; n1 <= total; ++n1) {
    const CoinPriorSpec spec{static_cast<double>(n1), static_cast<double>(total - n1), epsilon,
                             delta, counting};
    rows.push_back({n1, total - n1, min_sample_complexity(spec)});
  }
  return rows;
}

std::string complexity_csv(const std::vector<ComplexityRow>& rows) {
  std::ostringstream out;
  out << "n1,n2,B\n";
  for (const auto& r : rows) out << r.n1 << ',' << r.n2 << ',' << r.B << '\n';
  return out.str();
}

double coverage_monte_carlo(const CoinPriorSpec& spec, long B, long replicates, Rng& rng) {
  spec.validate();
  if (replicates < 1) throw std::invalid_argument("coverage_monte_carlo: replicates >= 1");
  const long n = spec.flips(B);
  std::binomial_distribution<long> heads(n, 0.5);
  long hits = 0;
  for (long i = 0; i < replicates; ++i) {
    const long h = heads(rng);
    const double a = static_cast<double>(h) + spec.n1;
    const double b = static_cast<double>(n - h) + spec.n2;
    double rho;
    if (a == 0.0) {
      rho = 0.0;
    } else if (b == 0.0) {
      rho = 1.0;
    } else {
      std::gamma_distribution<double> ga(a, 1.0);
      std::gamma_distribution<double> gb(b, 1.0);
      const double x = ga(rng);
      const double y = gb(rng);
      rho = x / (x + y);
    }
    if (rho >= 0.5 - spec.epsilon && rho <= 0.5 + spec.epsilon) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(replicates);
}

double dirichlet_coverage_monte_carlo(std::span<const double> prior, std::span<const double> truth,
                                      long flips, double epsilon, long draws, Rng& rng) {
  if (prior.size() != truth.size() || prior.empty()) {
    throw std::invalid_argument("dirichlet_coverage_monte_carlo: dimension mismatch");
  }
  if (draws < 1 || flips < 0) {
    throw std::invalid_argument("dirichlet_coverage_monte_carlo: bad draw or flip count");
  }
  std::discrete_distribution<int> outcome(truth.begin(), truth.end());
  std::vector<double> alpha(prior.size());
  long hits = 0;
  for (long d = 0; d < draws; ++d) {
    std::copy(prior.begin(), prior.end(), alpha.begin());
    for (long f = 0; f < flips; ++f) alpha[outcome(rng)] += 1.0;
    const auto p = sample_dirichlet(alpha, rng);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(p[i] - truth[i]));
    if (worst <= epsilon) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace lifelong
