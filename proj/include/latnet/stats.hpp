#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace latnet::stats {

/// Standard normal CDF.
double normal_cdf(double z);

/// Upper tail 1 - Phi(z), accurate far into the tail.
double normal_sf(double z);

double normal_pdf(double z);

/// Inverse of the standard normal CDF. Throws ConfigError unless 0 < p < 1.
///
/// A rational initial guess is refined by Newton steps on Phi, so that
/// |Phi(z) - p| stays at rounding level even for p around 1e-15.
double normal_quantile(double p);

/// k-th order statistic with k = ceil(q * B) clamped to [1, B].
double empirical_quantile(std::span<const double> samples, double q);

double mean(std::span<const double> xs);
double median(std::span<const double> xs);
/// Interquartile range using linear interpolation between order statistics.
double iqr(std::span<const double> xs);
double stddev(std::span<const double> xs);

/// Counter-based random stream.
///
/// A stream is identified by a 64-bit key derived from a root seed and a
/// path of labels. Output i is a pure function of (key, i), so streams can
/// be forked in any order and consumed on any thread without changing the
/// numbers they produce.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0);

  /// Independent substream for a numeric path element.
  RngStream child(std::uint64_t label) const;
  /// Independent substream for a named path element.
  RngStream child(std::string_view label) const;

  std::uint64_t next();
  result_type operator()() { return next(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal draw (Box-Muller on two uniforms).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }

 private:
  RngStream(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle of an index vector driven by `rng`.
template <typename T>
void shuffle(std::vector<T>& xs, RngStream& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(xs[i - 1], xs[j]);
  }
}

}  // namespace latnet::stats
