#pragma once

#include <cstdint>
#include <vector>

#include "cse/embeddings/dual_embedding.hpp"

namespace cse {

struct CbowConfig {
  size_t dim = 100;
  size_t window = 5;        // radius, shrunk uniformly per position
  size_t negatives = 5;
  size_t epochs = 5;
  double subsample = 1e-4;  // <= 0 disables occurrence dropping
  double lr = 0.05;         // linear decay to lr * 1e-4
  size_t min_count = 5;     // rarer tokens train the <OOV> row instead
  uint64_t seed = 1;

  void validate() const;
};

// CBOW with negative sampling over a unigram^0.75 proposal. Single-threaded
// by design: fixed seed gives a bit-identical table.
// epoch_losses, when given, receives the per-epoch average logistic loss.
DualEmbedding train_cbow(const std::vector<std::vector<std::string>>& sentences,
                         const CbowConfig& cfg,
                         std::vector<double>* epoch_losses = nullptr);

}  // namespace cse
