#include "pips/core/stats.hpp"

#include <cmath>

#include "pips/core/errors.hpp"

namespace pips {
namespace {

void check_fractions(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("harmonic mean of an empty list");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("accuracy outside [0, 1]");
  }
}

}  // namespace

double harmonic_mean(std::span<const double> values) {
  check_fractions(values);
  double inverse_sum = 0.0;
  for (double v : values) {
    if (v == 0.0) return 0.0;
    inverse_sum += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inverse_sum;
}

double smoothed_harmonic_mean(std::span<const double> values, double offset) {
  check_fractions(values);
  if (!(offset > 0.0) || !std::isfinite(offset)) throw DomainError("offset must be positive");
  double inverse_sum = 0.0;
  for (double v : values) inverse_sum += 1.0 / (v + offset);
  return static_cast<double>(values.size()) / inverse_sum;
}

}  // namespace pips
