#pragma once

#include <span>

namespace pips {

// n / sum(1/v). Returns 0 when any value is 0. Throws EmptyInput on an empty
// span and DomainError for values outside [0, 1].
double harmonic_mean(std::span<const double> values);

// n / sum(1/(v + offset)). Leaderboard convention for hard reasoning suites:
// every accuracy is lifted by one percentage point (offset 0.01) so a single
// zero-accuracy task does not collapse the aggregate.
double smoothed_harmonic_mean(std::span<const double> values, double offset = 0.01);

}  // namespace pips
