#include "cse/sampler.hpp"

#include <cmath>
#include <unordered_set>

namespace cse {

NegativeSampler::NegativeSampler(size_t range, Kind kind)
    : range_(range), kind_(kind), log_range_(std::log(static_cast<double>(range) + 1.0)) {
  if (range == 0) throw Error("sampler range must be positive");
}

double NegativeSampler::probability(uint32_t label) const {
  if (label >= range_) throw Error("label out of sampler range");
  if (kind_ == Kind::Uniform) return 1.0 / static_cast<double>(range_);
  double r = static_cast<double>(label);
  return (std::log(r + 2.0) - std::log(r + 1.0)) / log_range_;
}

uint32_t NegativeSampler::draw(std::mt19937_64& rng) const {
  if (kind_ == Kind::Uniform)
    return static_cast<uint32_t>(draw_below(rng, range_));
  // inverse transform of the log-uniform cdf
  double u = draw_unit(rng);
  double v = std::floor(std::exp(u * log_range_)) - 1.0;
  auto label = static_cast<uint32_t>(v);
  if (label >= range_) label = static_cast<uint32_t>(range_ - 1);
  return label;
}

SampledCandidates NegativeSampler::sample(size_t count, std::mt19937_64& rng,
                                          const std::vector<uint32_t>& avoid) const {
  std::unordered_set<uint32_t> avoid_set(avoid.begin(), avoid.end());
  size_t avoidable = 0;
  for (uint32_t a : avoid_set)
    if (a < range_) ++avoidable;
  if (count > range_ - avoidable)
    throw Error("cannot sample " + std::to_string(count) + " unique labels from " +
                std::to_string(range_ - avoidable));

  SampledCandidates out;
  out.samples.reserve(count);
  std::unordered_set<uint32_t> seen;
  while (out.samples.size() < count) {
    uint32_t label = draw(rng);
    ++out.tries;
    if (avoid_set.count(label) || !seen.insert(label).second) continue;
    out.samples.push_back(label);
  }
  return out;
}

double NegativeSampler::expected_count(uint32_t label, uint64_t tries) const {
  double q = probability(label);
  return -std::expm1(static_cast<double>(tries) * std::log1p(-q));
}

}  // namespace cse
