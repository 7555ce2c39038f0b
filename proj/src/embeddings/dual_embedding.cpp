#include "cse/embeddings/dual_embedding.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cse/common.hpp"

namespace cse {

std::vector<float> DualEmbedding::term_vector(const std::string& term,
                                              Side side) const {
  if (term.empty()) throw Error("term_vector: empty term");
  std::vector<float> acc(dim(), 0.0f);
  size_t words = 0;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    auto row = vec(side, vocab.lookup(word));
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += row[i];
    ++words;
    word.clear();
  };
  for (char c : term) {
    if (c == '_')
      flush();
    else
      word.push_back(c);
  }
  flush();
  if (words == 0) throw Error("term_vector: term has no words: " + term);
  for (float& v : acc) v /= static_cast<float>(words);
  return acc;
}

std::vector<std::pair<std::string, double>> DualEmbedding::nearest(
    std::span<const float> query, Side side, size_t k) const {
  if (query.size() != dim()) throw ShapeError("nearest: query dimension");
  double norm = 0.0;
  for (float v : query) norm += static_cast<double>(v) * v;
  if (norm < 1e-24) throw Error("nearest: zero-norm query");
  if (k > vocab.size()) throw Error("nearest: k exceeds vocabulary");

  std::vector<std::pair<double, uint32_t>> scored(vocab.size());
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (long long i = 0; i < static_cast<long long>(vocab.size()); ++i) {
    auto id = static_cast<uint32_t>(i);
    scored[i] = {cosine(query, vec(side, id)), id};
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::pair<std::string, double>> out;
  out.reserve(k);
  for (size_t i = 0; i < k; ++i)
    out.emplace_back(vocab.word(scored[i].second), scored[i].first);
  return out;
}

void DualEmbedding::validate() const {
  if (in_table.rows() != vocab.size() || out_table.rows() != vocab.size())
    throw ShapeError("embedding table rows must match the vocabulary");
  if (in_table.cols() != out_table.cols())
    throw ShapeError("IN/OUT dimensions differ");
  if (!in_table.all_finite() || !out_table.all_finite())
    throw Error("embedding tables contain non-finite values");
}

namespace {

void write_table(const std::string& path, const Vocabulary& vocab,
                 const Tensor& table,
                 const std::vector<std::string>& trailing_comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write embeddings: " + path);
  out << vocab.size() << ' ' << table.cols() << '\n';
  char buf[64];
  for (size_t r = 0; r < vocab.size(); ++r) {
    out << vocab.word(static_cast<uint32_t>(r));
    auto row = table.row(r);
    for (float v : row) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
      out << ' ' << buf;
    }
    out << '\n';
  }
  for (const auto& c : trailing_comments) out << "# " << c << '\n';
}

std::pair<std::vector<std::string>, Tensor> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embeddings: " + path);
  std::string header;
  if (!std::getline(in, header)) throw FormatError("empty embedding file");
  std::istringstream hs(header);
  size_t n = 0, d = 0;
  if (!(hs >> n >> d) || n < 2 || d == 0)
    throw FormatError("bad embedding header: " + header);

  std::vector<std::string> words;
  words.reserve(n);
  Tensor table({n, d});
  std::string line;
  for (size_t r = 0; r < n; ++r) {
    if (!std::getline(in, line)) throw FormatError("truncated embedding file");
    std::istringstream ls(line);
    std::string w;
    if (!(ls >> w)) throw FormatError("bad embedding row " + std::to_string(r));
    words.push_back(w);
    for (size_t c = 0; c < d; ++c) {
      float v;
      if (!(ls >> v))
        throw FormatError("embedding row " + w + ": expected " +
                          std::to_string(d) + " values");
      table.at(r, c) = v;
    }
    float extra;
    if (ls >> extra)
      throw FormatError("embedding row " + w + ": too many values");
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    throw FormatError("unexpected content after embedding rows: " + line);
  }
  return {std::move(words), std::move(table)};
}

}  // namespace

void DualEmbedding::save(const std::string& in_path, const std::string& out_path,
                         const std::vector<std::string>& trailing_comments) const {
  validate();
  write_table(in_path, vocab, in_table, trailing_comments);
  write_table(out_path, vocab, out_table, trailing_comments);
}

DualEmbedding DualEmbedding::load(const std::string& in_path,
                                  const std::string& out_path) {
  auto [in_words, in_table] = read_table(in_path);
  auto [out_words, out_table] = read_table(out_path);
  if (in_words != out_words)
    throw FormatError("IN/OUT files disagree on the vocabulary");
  DualEmbedding emb;
  emb.vocab = Vocabulary::from_words(in_words);
  emb.in_table = std::move(in_table);
  emb.out_table = std::move(out_table);
  emb.validate();
  return emb;
}

}  // namespace cse
