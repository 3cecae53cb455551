#pragma once

// Significant-digit screening of vote counts. First and second digit
// reference laws, observed histograms, a chi-square goodness-of-fit test
// with a BIC-approximated Bayes factor, and a simulated reference
// distribution for counts bounded above by machine capacity, where the
// classical first-digit law does not apply.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "forensics/parallel.hpp"

namespace forensics::digits {

enum class DistKind { theoretical, observed, simulated };

// Digit distribution at position 1 (support 1..9) or 2 (support 0..9).
// weights[i] is the mass of digit (position == 1 ? i + 1 : i).
struct DigitDistribution {
  int position = 1;
  DistKind kind = DistKind::theoretical;
  std::vector<double> weights;
  std::vector<int64_t> counts;  // raw tabulation for observed/simulated kinds
  int64_t sample_size = 0;      // observed/simulated: values tabulated
  int64_t dropped = 0;          // values with too few digits, excluded
};

inline int support_size(int position) { return position == 1 ? 9 : 10; }

// log10(1 + 1/d) for position 1; sum over leading digits for position 2.
DigitDistribution reference_digit_law(int position);

// Significant digit of a positive integer at the given position, or -1 if
// the value has fewer digits than the position requires.
int significant_digit(int64_t value, int position);

// Tabulates the digit at `position` over the values. Values without enough
// significant digits are dropped and counted. Throws if nothing remains.
DigitDistribution digit_histogram(std::span<const int64_t> values, int position);

struct DigitTestResult {
  double chi_square = 0.0;
  int df = 0;
  double p_value = 1.0;
  double log_bayes_factor = 0.0;  // positive favors the reference law
  int64_t sample_size = 0;
  bool low_information = false;   // some expected cell count below 5
};

// Chi-square test of observed digit counts against an expected distribution,
// plus the BIC-approximated log Bayes factor of reference law vs saturated
// multinomial. Distributions must share position and the expected side must
// have strictly positive mass everywhere.
DigitTestResult digit_test(const DigitDistribution& observed,
                           const DigitDistribution& expected);

// The log Bayes factor alone.
double bayes_factor_digit_test(const DigitDistribution& observed,
                               const DigitDistribution& expected);

enum class BoundedModel { uniform_0_cap, binomial };

std::string to_string(BoundedModel m);

// Monte-Carlo second-digit distribution for counts from a bounded generative
// model: UNIFORM on 0..cap, or BINOMIAL(cap, p). Deterministic in seed;
// sharded into fixed substreams so serial and parallel runs agree exactly.
DigitDistribution bounded_reference_pmf(int64_t cap, BoundedModel model, double binom_p,
                                        int64_t reps, uint64_t seed,
                                        Exec exec = Exec::parallel);

}  // namespace forensics::digits
