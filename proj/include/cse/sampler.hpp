#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cse/common.hpp"

namespace cse {

struct SampledCandidates {
  std::vector<uint32_t> samples;   // unique, none from the avoid set
  uint64_t tries = 0;              // total draws, duplicates included
};

// Candidate sampler for sampled softmax. Log-uniform assumes labels are
// ordered by descending frequency (label id == frequency rank), which the
// term lexicon guarantees.
class NegativeSampler {
 public:
  enum class Kind { LogUniform, Uniform };

  NegativeSampler(size_t range, Kind kind = Kind::LogUniform);

  // P(label) under the proposal distribution.
  double probability(uint32_t label) const;

  // Unique draws by rejection; `avoid` entries are rejected but still
  // counted in tries, matching how duplicates are counted.
  SampledCandidates sample(size_t count, std::mt19937_64& rng,
                           const std::vector<uint32_t>& avoid = {}) const;

  // Expected number of times `label` appears in `tries` draws with
  // replacement: 1 - (1 - q)^tries, in log1p/expm1 form.
  double expected_count(uint32_t label, uint64_t tries) const;

  size_t range() const { return range_; }
  Kind kind() const { return kind_; }

 private:
  size_t range_;
  Kind kind_;
  double log_range_;   // log(range + 1)

  uint32_t draw(std::mt19937_64& rng) const;
};

}  // namespace cse
