#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace bwprio {

constexpr double kZ95TwoSided = 1.959963984540054;
constexpr double kZ95OneSided = 1.6448536269514722;

// Sample mean with a normal-approximation interval.
struct Estimate {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;

  double std_error() const { return n > 1 ? stddev / std::sqrt(static_cast<double>(n)) : 0.0; }
  double half_width(double z = kZ95TwoSided) const { return z * std_error(); }
  double ci_low() const { return mean - half_width(); }
  double ci_high() const { return mean + half_width(); }
};

// Welford accumulator.
class RunningStats {
 public:
  void add(double v) {
    ++n_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (v - mean_);
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

  Estimate estimate() const { return {mean_, std::sqrt(variance()), n_}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline Estimate estimate_of(std::span<const double> values) {
  RunningStats s;
  for (double v : values) s.add(v);
  return s.estimate();
}

}  // namespace bwprio
