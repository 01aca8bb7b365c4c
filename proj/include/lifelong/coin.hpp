#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lifelong/random.hpp"

namespace lifelong {

/// How the sample complexity B relates to the number of coin flips that the
/// posterior is conditioned on.
enum class CoinCounting {
  /// B indexes the posterior draw: the B-th sample is taken after B - 1
  /// flips. This is the convention the published coin table follows.
  kSampleIndex,
  /// The posterior is conditioned on exactly B flips.
  kObservedFlips,
};

/// Beta(n1, n2) prior over the heads probability of a fair coin, accuracy
/// radius epsilon and failure probability delta.
struct CoinPriorSpec {
  double n1 = 5.0;
  double n2 = 5.0;
  double epsilon = 0.1;
  double delta = 0.3;
  CoinCounting counting = CoinCounting::kSampleIndex;

  void validate() const;
  long flips(long B) const;
};

/// Sum over H ~ Bin(flips, 1/2) of the Beta(H + n1, flips - H + n2) mass of
/// [1/2 - epsilon, 1/2 + epsilon]. A zero Beta parameter is a point mass at
/// the corresponding endpoint of [0, 1].
double coverage_probability(const CoinPriorSpec& spec, long B);

struct SampleComplexityLimitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Smallest B whose coverage reaches 1 - delta and stays there for `window`
/// consecutive values. Throws SampleComplexityLimitError past `cap`.
long min_sample_complexity(const CoinPriorSpec& spec, long cap = 1'000'000, int window = 5);

struct ComplexityRow {
  int n1 = 0;
  int n2 = 0;
  long B = 0;
  bool operator==(const ComplexityRow&) const = default;
};

/// Rows for n1 = 0..total with n2 = total - n1.
std::vector<ComplexityRow> complexity_profile(int total, double epsilon, double delta,
                                              CoinCounting counting = CoinCounting::kSampleIndex);

/// "n1,n2,B" header plus one line per row, '\n' line endings.
std::string complexity_csv(const std::vector<ComplexityRow>& rows);

/// Simulation estimate of coverage_probability: flip the coin, draw one
/// posterior sample, count hits.
double coverage_monte_carlo(const CoinPriorSpec& spec, long B, long replicates, Rng& rng);

/// k-outcome generalisation by simulation: N ~ Mult(truth, flips),
/// P ~ Dir(prior + N), hit when max_i |P_i - truth_i| <= epsilon.
double dirichlet_coverage_monte_carlo(std::span<const double> prior, std::span<const double> truth,
                                      long flips, double epsilon, long draws, Rng& rng);

}  // namespace lifelong
