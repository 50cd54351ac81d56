#include "skfi/accumulator.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "skfi/errors.hpp"

namespace skfi {

void ExactSum::add(double x) {
  if (!std::isfinite(x)) throw EvaluationError("ExactSum: non-finite input");
  std::size_t i = 0;
  for (double y : partials_) {
    if (std::abs(x) < std::abs(y)) std::swap(x, y);
    const double hi = x + y;
    const double lo = y - (hi - x);
    if (lo != 0.0) partials_[i++] = lo;
    x = hi;
  }
  partials_.resize(i);
  partials_.push_back(x);
}

void ExactSum::merge(const ExactSum& other) {
  for (double p : other.partials_) add(p);
}

double ExactSum::value() const {
  // Correct rounding of the partials, as in CPython's math.fsum.
  if (partials_.empty()) return 0.0;
  auto n = static_cast<long>(partials_.size()) - 1;
  double hi = partials_[static_cast<std::size_t>(n)];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials_[static_cast<std::size_t>(--n)];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials_[static_cast<std::size_t>(n - 1)] < 0.0) ||
                (lo > 0.0 && partials_[static_cast<std::size_t>(n - 1)] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

void MomentAccumulator::add(const std::string& name, double x) {
  Moments& m = stats_[name];
  m.sum.add(x);
  m.sum_sq.add(x * x);
  ++m.count;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  for (const auto& [name, o] : other.stats_) {
    Moments& m = stats_[name];
    m.count += o.count;
    m.sum.merge(o.sum);
    m.sum_sq.merge(o.sum_sq);
  }
}

std::vector<std::string> MomentAccumulator::names() const {
  std::vector<std::string> out;
  for (const auto& kv : stats_) out.push_back(kv.first);
  return out;
}

const MomentAccumulator::Moments& MomentAccumulator::get(const std::string& name) const {
  const auto it = stats_.find(name);
  if (it == stats_.end()) throw DomainError("MomentAccumulator: unknown observable '" + name + "'");
  return it->second;
}

std::int64_t MomentAccumulator::count(const std::string& name) const { return get(name).count; }

double MomentAccumulator::mean(const std::string& name) const {
  const Moments& m = get(name);
  return m.count == 0 ? 0.0 : m.sum.value() / static_cast<double>(m.count);
}

double MomentAccumulator::variance(const std::string& name) const {
  const Moments& m = get(name);
  if (m.count < 2) return 0.0;
  const double n = static_cast<double>(m.count);
  const double s = m.sum.value();
  const double v = (m.sum_sq.value() - s * (s / n)) / (n - 1.0);
  return v > 0.0 ? v : 0.0;
}

double MomentAccumulator::stderr_of_mean(const std::string& name) const {
  const std::int64_t c = count(name);
  return c == 0 ? 0.0 : std::sqrt(variance(name) / static_cast<double>(c));
}

double batch_means_stderr(const std::vector<double>& series, int batches) {
  const auto n = static_cast<long>(series.size());
  if (n < 2) return 0.0;
  const long b = std::max<long>(2, std::min<long>(batches, n));
  const long len = n / b;
  MomentAccumulator acc;
  for (long k = 0; k < b; ++k) {
    ExactSum s;
    for (long i = k * len; i < (k + 1) * len; ++i) s.add(series[static_cast<std::size_t>(i)]);
    acc.add("batch", s.value() / static_cast<double>(len));
  }
  return acc.stderr_of_mean("batch");
}

}  // namespace skfi
