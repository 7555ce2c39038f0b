#pragma once

#include <span>
#include <string>
#include <vector>

#include "cse/corpus/vocab.hpp"
#include "cse/tensor.hpp"

namespace cse {

enum class Side { In, Out };

inline double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  double num = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na < 1e-24 || nb < 1e-24) return 0.0;
  return num / (std::sqrt(na) * std::sqrt(nb));
}

// Paired IN/OUT tables from CBOW. IN-IN cosine measures likeness, IN-OUT
// measures co-occurrence compatibility.
struct DualEmbedding {
  Vocabulary vocab;
  Tensor in_table;    // [|V|, d]
  Tensor out_table;   // [|V|, d]

  size_t dim() const { return in_table.cols(); }

  std::span<const float> in(uint32_t id) const { return in_table.row(id); }
  std::span<const float> out(uint32_t id) const { return out_table.row(id); }
  std::span<const float> vec(Side s, uint32_t id) const {
    return s == Side::In ? in(id) : out(id);
  }

  // mean of constituent word vectors; unknown words use the OOV row
  std::vector<float> term_vector(const std::string& term, Side side) const;

  // exact top-k by cosine, ties by word id; query must have nonzero norm
  std::vector<std::pair<std::string, double>> nearest(std::span<const float> query,
                                                      Side side, size_t k) const;

  void validate() const;   // shapes agree, all values finite

  void save(const std::string& in_path, const std::string& out_path,
            const std::vector<std::string>& trailing_comments = {}) const;
  static DualEmbedding load(const std::string& in_path,
                            const std::string& out_path);
};

}  // namespace cse
