#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cse/corpus/corpus.hpp"

namespace cse {

inline constexpr uint32_t kPadId = 0;
inline constexpr uint32_t kOovId = 1;

// Token-to-id map. Ids 0/1 are reserved for <PAD>/<OOV>; real words get ids
// by descending frequency, ties broken by word order, so the mapping is a
// pure function of the counts.
class Vocabulary {
 public:
  Vocabulary();

  static Vocabulary from_counts(
      const std::vector<std::pair<std::string, size_t>>& counts, size_t min_freq);

  // Rebuild from an explicit id->word list (embedding files store one);
  // entries 0/1 must be the reserved words.
  static Vocabulary from_words(const std::vector<std::string>& words);

  uint32_t lookup(const std::string& word) const;          // OOV when unknown
  std::optional<uint32_t> find(const std::string& word) const;
  const std::string& word(uint32_t id) const;
  size_t size() const { return words_.size(); }
  size_t min_freq() const { return min_freq_; }
  const std::vector<std::string>& words() const { return words_; }

  std::vector<uint32_t> encode(const std::vector<std::string>& tokens) const;

  uint64_t content_hash() const;

  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, uint32_t> index_;
  size_t min_freq_ = 0;

  void push(const std::string& w);
  friend Vocabulary build_vocab(const std::vector<AnnotatedSentence>&, size_t);
};

// Context-token vocabulary over a corpus (PLACEHOLDER included like any token).
Vocabulary build_vocab(const std::vector<AnnotatedSentence>& records,
                       size_t min_freq = 5);

// Label space for prediction. Label ids are the frequency-descending rank of
// each term (ties by term string), which is what the log-uniform negative
// sampler assumes.
class TermLexicon {
 public:
  static TermLexicon from_corpus(const std::vector<AnnotatedSentence>& records);

  std::optional<uint32_t> find(const std::string& term) const;
  const std::string& term(uint32_t label) const;
  size_t term_sentence_count(uint32_t label) const { return freq_[label]; }
  size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }

  uint64_t content_hash() const;

  void save(std::ostream& out) const;
  static TermLexicon load(std::istream& in);

 private:
  std::vector<std::string> terms_;   // label -> term
  std::vector<size_t> freq_;         // label -> #sentences
  std::unordered_map<std::string, uint32_t> index_;
};

// Vocabulary over the words inside lexicon terms (multi-word terms split on
// '_'), used to embed seed words. Every term word with at least one
// occurrence is kept.
Vocabulary build_seed_vocab(const TermLexicon& lexicon);

}  // namespace cse
