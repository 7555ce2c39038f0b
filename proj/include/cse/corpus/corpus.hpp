#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cse/corpus/hearst.hpp"

namespace cse {

struct RawSentence {
  std::string id;
  std::vector<std::string> tokens;  // lowercased, lemmatized
};

// One mined training record: a context with exactly one PLACEHOLDER token and
// the co-hyponym set that used to sit there.
struct AnnotatedSentence {
  std::string id;
  std::vector<std::string> context;          // contains PLACEHOLDER exactly once
  std::vector<std::string> terms;            // first-occurrence order, unique,
                                             // multi-word joined with '_'
  std::optional<Span> hypernym_span;         // span within context, if kept

  size_t placeholder_index() const;
  void validate() const;                     // throws FormatError on violation
};

std::vector<RawSentence> read_raw_sentences(const std::string& path);

// Replace the hyponym-list region with PLACEHOLDER; extract the term set.
// Throws MalformedMatchError when the match does not fit the sentence.
AnnotatedSentence decompose(const RawSentence& sentence, const PatternMatch& match);

// Run the pattern matcher over every sentence and decompose each match into
// its own record (ids get a #k suffix when a sentence yields several).
// Returns records paired with their pattern precision, ready for filtering.
std::vector<std::pair<AnnotatedSentence, double>> mine_corpus(
    const std::vector<RawSentence>& sentences, const PrecisionTable& precisions);

struct FilterConfig {
  double min_precision = 0.5;
  size_t min_terms = 3;
  size_t min_term_sentences = 10;
};

// Quality filter, iterated to a fixed point so the result is idempotent:
// drop low-precision matches, drop rare terms, drop sentences left with too
// few terms, repeat until stable. Input order is preserved.
std::vector<AnnotatedSentence> filter_corpus(
    const std::vector<std::pair<AnnotatedSentence, double>>& records,
    const FilterConfig& cfg = {});

// Deterministic shuffle split; |test| = ceil(fraction * N) clamped to
// [1, N-1]. Both sides keep the input's relative order.
std::pair<std::vector<AnnotatedSentence>, std::vector<AnnotatedSentence>> split_corpus(
    const std::vector<AnnotatedSentence>& records, double test_fraction,
    uint64_t seed);

// Remove the hypernym phrase and its introducing connective from the context.
// Returns the new record and whether anything was removed.
std::pair<AnnotatedSentence, bool> strip_hypernym(const AnnotatedSentence& record);

// Rebuild a plain sentence from a record: PLACEHOLDER replaced by the terms,
// comma-separated, multi-word terms split back into words.
std::vector<std::string> reinsert_terms(const AnnotatedSentence& record);

void write_corpus(const std::string& path,
                  const std::vector<AnnotatedSentence>& records,
                  const std::vector<std::string>& comments = {});
std::vector<AnnotatedSentence> read_corpus(const std::string& path);

}  // namespace cse
