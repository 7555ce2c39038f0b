#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "cse/common.hpp"
#include "cse/tensor.hpp"

namespace cse {

// Shared negative set for one batch, with the expected-count corrections the
// training logits subtract.
struct NegativeSet {
  std::vector<uint32_t> labels;          // unique, shared across the batch
  std::vector<double> expected;          // expected count per negative
};

// Sampled-softmax cross entropy over per-sample candidate columns
// (true labels first, then the shared negatives minus accidental hits).
// Returns the batch-mean loss; writes dL/dx rows and accumulates dW/db.
template <typename T>
struct SampledSoftmaxResult {
  T loss = 0;
  TensorT<T> dx;   // same shape as x
};

template <typename T>
SampledSoftmaxResult<T> sampled_softmax_loss(
    const TensorT<T>& x,                                  // [B, dim]
    const std::vector<std::vector<uint32_t>>& true_labels,   // per sample
    const std::vector<std::vector<double>>& true_expected,   // aligned
    const NegativeSet& negatives,
    const TensorT<T>& W,                                  // [L, dim]
    const TensorT<T>& b,                                  // [L]
    TensorT<T>* dW = nullptr, TensorT<T>* db = nullptr) {
  const size_t batch = x.rows();
  const size_t dim = x.cols();
  if (true_labels.size() != batch || true_expected.size() != batch)
    throw ShapeError("sampled softmax: batch size mismatch");
  if (W.cols() != dim || b.size() != W.rows())
    throw ShapeError("sampled softmax: head shape mismatch");
  if (negatives.labels.size() != negatives.expected.size())
    throw ShapeError("sampled softmax: negative set mismatch");
  if (batch == 0) throw Error("sampled softmax: empty batch");

  for (size_t i = 0; i < batch; ++i) {
    if (true_labels[i].empty())
      throw Error("sampled softmax: sample with no true labels");
    if (true_labels[i].size() != true_expected[i].size())
      throw ShapeError("sampled softmax: expected counts misaligned");
    for (uint32_t t : true_labels[i])
      if (t >= W.rows()) throw Error("sampled softmax: label out of range");
  }
  for (uint32_t label : negatives.labels)
    if (label >= W.rows()) throw Error("sampled softmax: negative out of range");

  SampledSoftmaxResult<T> res;
  res.dx = TensorT<T>({batch, dim});

  // per-sample candidate columns and probabilities, computed independently
  std::vector<std::vector<uint32_t>> cols(batch);
  std::vector<std::vector<T>> probs(batch);
  std::vector<double> losses(batch, 0.0);

#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (long long bi = 0; bi < static_cast<long long>(batch); ++bi) {
    size_t i = static_cast<size_t>(bi);
    const auto& trues = true_labels[i];

    std::unordered_set<uint32_t> true_set(trues.begin(), trues.end());
    auto& c = cols[i];
    c.reserve(trues.size() + negatives.labels.size());
    std::vector<double> expect;
    expect.reserve(trues.size() + negatives.labels.size());
    for (size_t t = 0; t < trues.size(); ++t) {
      c.push_back(trues[t]);
      expect.push_back(true_expected[i][t]);
    }
    for (size_t s = 0; s < negatives.labels.size(); ++s) {
      uint32_t label = negatives.labels[s];
      if (true_set.count(label)) continue;   // accidental hit removed
      c.push_back(label);
      expect.push_back(negatives.expected[s]);
    }

    std::vector<T> logits(c.size());
    auto xi = x.row(i);
    for (size_t j = 0; j < c.size(); ++j) {
      T z = dot(W.row(c[j]), xi) + b[c[j]];
      logits[j] = z - static_cast<T>(std::log(expect[j]));
    }
    probs[i] = softmax(std::span<const T>(logits));

    double li = 0.0;
    for (size_t t = 0; t < trues.size(); ++t)
      li -= std::log(static_cast<double>(probs[i][t]));
    losses[i] = li / static_cast<double>(trues.size());

    // dlogit_j = p_j - [j is true]/|T|, scaled by 1/batch
    auto dxi = res.dx.row(i);
    const T inv_batch = T(1) / static_cast<T>(batch);
    const T inv_true = T(1) / static_cast<T>(trues.size());
    for (size_t j = 0; j < c.size(); ++j) {
      T d = probs[i][j];
      if (j < trues.size()) d -= inv_true;
      d *= inv_batch;
      axpy(d, W.row(c[j]), dxi);
    }
  }

  double total = 0.0;
  for (double l : losses) total += l;
  res.loss = static_cast<T>(total / static_cast<double>(batch));

  // head gradients accumulate serially in sample order for determinism
  if (dW || db) {
    const T inv_batch = T(1) / static_cast<T>(batch);
    for (size_t i = 0; i < batch; ++i) {
      const auto& c = cols[i];
      const size_t ntrue = true_labels[i].size();
      const T inv_true = T(1) / static_cast<T>(ntrue);
      auto xi = x.row(i);
      for (size_t j = 0; j < c.size(); ++j) {
        T d = probs[i][j];
        if (j < ntrue) d -= inv_true;
        d *= inv_batch;
        if (dW) axpy(d, xi, dW->row(c[j]));
        if (db) (*db)[c[j]] += d;
      }
    }
  }
  return res;
}

// Dense softmax probabilities over every label: p = softmax(W x + b).
template <typename T>
std::vector<T> full_softmax(const TensorT<T>& W, const TensorT<T>& b,
                            std::span<const T> x) {
  if (W.cols() != x.size() || b.size() != W.rows())
    throw ShapeError("full softmax: shape mismatch");
  std::vector<T> logits(W.rows());
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (long long r = 0; r < static_cast<long long>(W.rows()); ++r)
    logits[r] = dot(W.row(static_cast<size_t>(r)), x) + b[static_cast<size_t>(r)];
  return softmax(std::span<const T>(logits));
}

// Dense cross entropy with mean over the true set; the oracle the sampled
// loss is tested against when the candidate set covers every label.
template <typename T>
T full_softmax_loss(const TensorT<T>& W, const TensorT<T>& b,
                    std::span<const T> x, const std::vector<uint32_t>& trues) {
  auto p = full_softmax(W, b, x);
  double l = 0.0;
  for (uint32_t t : trues) l -= std::log(static_cast<double>(p[t]));
  return static_cast<T>(l / static_cast<double>(trues.size()));
}

}  // namespace cse
