#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace cse {

// Half-open token range [begin, end).
struct Span {
  size_t begin = 0;
  size_t end = 0;

  size_t size() const { return end - begin; }
  bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
  bool operator==(const Span& o) const { return begin == o.begin && end == o.end; }
};

struct PatternMatch {
  std::string pattern_id;        // such_as, such_x_as, including, especially,
                                 // and_other, or_other
  Span hypernym;
  std::vector<Span> hyponyms;    // ascending token order, pairwise disjoint
  double precision = 0.0;

  // smallest range covering hypernym and all hyponyms
  Span extent() const;
};

using PrecisionTable = std::map<std::string, double>;

PrecisionTable read_precision_table(const std::string& path);
void write_precision_table(const std::string& path, const PrecisionTable& table);

// All non-overlapping pattern matches in one tokenized sentence, in token
// order. Overlap ties go to the match with more hyponyms, then leftmost
// extent, then pattern id.
std::vector<PatternMatch> match_hearst(const std::vector<std::string>& tokens,
                                       const PrecisionTable& precisions);

}  // namespace cse
