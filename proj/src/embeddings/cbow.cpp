#include "cse/embeddings/cbow.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cse/common.hpp"
#include "cse/param_store.hpp"

namespace cse {

void CbowConfig::validate() const {
  if (dim == 0 || window == 0 || epochs == 0 || min_count == 0)
    throw Error("cbow config counts must be positive");
  if (lr <= 0.0) throw Error("cbow learning rate must be positive");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// cumulative unigram^0.75 over ids with nonzero count
struct UnigramTable {
  std::vector<uint32_t> ids;
  std::vector<double> cdf;

  void build(const std::vector<size_t>& counts) {
    double total = 0.0;
    for (size_t id = 0; id < counts.size(); ++id) {
      if (counts[id] == 0) continue;
      total += std::pow(static_cast<double>(counts[id]), 0.75);
    }
    double acc = 0.0;
    for (size_t id = 0; id < counts.size(); ++id) {
      if (counts[id] == 0) continue;
      acc += std::pow(static_cast<double>(counts[id]), 0.75) / total;
      ids.push_back(static_cast<uint32_t>(id));
      cdf.push_back(acc);
    }
    if (!cdf.empty()) cdf.back() = 1.0;
  }

  uint32_t draw(std::mt19937_64& rng) const {
    double u = draw_unit(rng);
    size_t lo = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (lo >= ids.size()) lo = ids.size() - 1;
    return ids[lo];
  }
};

}  // namespace

DualEmbedding train_cbow(const std::vector<std::vector<std::string>>& sentences,
                         const CbowConfig& cfg,
                         std::vector<double>* epoch_losses) {
  cfg.validate();
  if (sentences.empty()) throw EmptyCorpusError("cbow: no sentences");

  std::unordered_map<std::string, size_t> raw_counts;
  size_t total_tokens = 0;
  for (const auto& s : sentences)
    for (const auto& t : s) {
      ++raw_counts[t];
      ++total_tokens;
    }
  if (total_tokens == 0) throw EmptyCorpusError("cbow: no tokens");

  std::vector<std::pair<std::string, size_t>> count_list(raw_counts.begin(),
                                                         raw_counts.end());
  Vocabulary vocab = Vocabulary::from_counts(count_list, cfg.min_count);

  // id-level counts; rare tokens collapse onto the OOV row and train it
  std::vector<size_t> counts(vocab.size(), 0);
  for (const auto& [w, c] : raw_counts) counts[vocab.lookup(w)] += c;

  std::vector<std::vector<uint32_t>> stream;
  stream.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<uint32_t> ids;
    ids.reserve(s.size());
    for (const auto& t : s) ids.push_back(vocab.lookup(t));
    stream.push_back(std::move(ids));
  }

  DualEmbedding emb;
  emb.vocab = std::move(vocab);
  emb.in_table = Tensor({emb.vocab.size(), cfg.dim});
  emb.out_table = Tensor({emb.vocab.size(), cfg.dim});
  auto rng = rng_for(cfg.seed, "cbow");
  init_uniform(emb.in_table, rng, 0.5 / static_cast<double>(cfg.dim));
  // OUT starts at zero, the usual negative-sampling init

  UnigramTable unigram;
  unigram.build(counts);
  bool can_negative = unigram.ids.size() > 1;

  const double min_lr = cfg.lr * 1e-4;
  const size_t total_sentences = cfg.epochs * stream.size();
  size_t done_sentences = 0;

  std::vector<float> h(cfg.dim), err(cfg.dim);
  if (epoch_losses) epoch_losses->clear();

  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    size_t loss_terms = 0;

    for (const auto& sent : stream) {
      double progress = static_cast<double>(done_sentences) /
                        static_cast<double>(total_sentences);
      double alpha = std::max(cfg.lr * (1.0 - progress), min_lr);
      ++done_sentences;

      // occurrence-level subsampling of frequent tokens
      std::vector<uint32_t> kept;
      kept.reserve(sent.size());
      for (uint32_t id : sent) {
        if (cfg.subsample > 0.0) {
          double f = static_cast<double>(counts[id]) /
                     static_cast<double>(total_tokens);
          if (f > cfg.subsample) {
            double keep = std::sqrt(cfg.subsample / f);
            if (draw_unit(rng) >= keep) continue;
          }
        }
        kept.push_back(id);
      }
      if (kept.size() < 2) continue;

      for (size_t center = 0; center < kept.size(); ++center) {
        size_t radius = 1 + draw_below(rng, cfg.window);
        size_t lo = center >= radius ? center - radius : 0;
        size_t hi = std::min(kept.size() - 1, center + radius);

        std::fill(h.begin(), h.end(), 0.0f);
        size_t n_ctx = 0;
        for (size_t j = lo; j <= hi; ++j) {
          if (j == center) continue;
          auto row = emb.in_table.row(kept[j]);
          for (size_t k = 0; k < cfg.dim; ++k) h[k] += row[k];
          ++n_ctx;
        }
        if (n_ctx == 0) continue;
        for (size_t k = 0; k < cfg.dim; ++k)
          h[k] /= static_cast<float>(n_ctx);

        std::fill(err.begin(), err.end(), 0.0f);
        double pos_loss = 0.0, neg_loss = 0.0;

        uint32_t target = kept[center];
        {
          auto out_row = emb.out_table.row(target);
          double z = 0.0;
          for (size_t k = 0; k < cfg.dim; ++k)
            z += static_cast<double>(h[k]) * out_row[k];
          double p = sigmoid(z);
          pos_loss = -std::log(std::max(p, 1e-12));
          auto g = static_cast<float>(alpha * (1.0 - p));
          for (size_t k = 0; k < cfg.dim; ++k) {
            err[k] += g * out_row[k];
            out_row[k] += g * h[k];
          }
        }

        if (can_negative) {
          for (size_t neg = 0; neg < cfg.negatives; ++neg) {
            uint32_t sample = target;
            for (int tries = 0; tries < 100 && sample == target; ++tries)
              sample = unigram.draw(rng);
            if (sample == target) continue;
            auto out_row = emb.out_table.row(sample);
            double z = 0.0;
            for (size_t k = 0; k < cfg.dim; ++k)
              z += static_cast<double>(h[k]) * out_row[k];
            double p = sigmoid(z);
            neg_loss += -std::log(std::max(1.0 - p, 1e-12));
            auto g = static_cast<float>(alpha * (0.0 - p));
            for (size_t k = 0; k < cfg.dim; ++k) {
              err[k] += g * out_row[k];
              out_row[k] += g * h[k];
            }
          }
        }

        // distribute the accumulated input-side gradient over the window
        auto scale = 1.0f / static_cast<float>(n_ctx);
        for (size_t j = lo; j <= hi; ++j) {
          if (j == center) continue;
          auto row = emb.in_table.row(kept[j]);
          for (size_t k = 0; k < cfg.dim; ++k) row[k] += err[k] * scale;
        }

        loss_sum += pos_loss + neg_loss;
        ++loss_terms;
      }
    }

    if (epoch_losses)
      epoch_losses->push_back(loss_terms ? loss_sum / static_cast<double>(loss_terms)
                                         : 0.0);
  }

  emb.validate();
  return emb;
}

}  // namespace cse
