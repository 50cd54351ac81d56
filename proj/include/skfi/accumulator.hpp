#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace skfi {

/// Exact floating-point sum (Shewchuk partials). value() is the correctly
/// rounded sum, so the result is independent of insertion and merge order.
class ExactSum {
 public:
  void add(double x);
  void merge(const ExactSum& other);
  double value() const;

 private:
  std::vector<double> partials_;
};

/// Count, sum and sum of squares per named observable.
class MomentAccumulator {
 public:
  struct Moments {
    std::int64_t count = 0;
    ExactSum sum;
    ExactSum sum_sq;
  };

  void add(const std::string& name, double x);
  /// Associative and commutative; merge(a, b) equals accumulating both streams.
  void merge(const MomentAccumulator& other);

  bool has(const std::string& name) const { return stats_.count(name) != 0; }
  std::vector<std::string> names() const;
  std::int64_t count(const std::string& name) const;
  double mean(const std::string& name) const;
  /// Unbiased sample variance, clamped at 0; 0 for fewer than two samples.
  double variance(const std::string& name) const;
  /// sqrt(variance / count).
  double stderr_of_mean(const std::string& name) const;

 private:
  const Moments& get(const std::string& name) const;
  std::map<std::string, Moments> stats_;
};

/// Standard error of the mean of a series by non-overlapping batch means;
/// `batches` is clamped to the series length.
double batch_means_stderr(const std::vector<double>& series, int batches = 20);

}  // namespace skfi
