#include "cse/corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cse/common.hpp"
#include "cse/corpus/lemmatize.hpp"

namespace cse {

size_t AnnotatedSentence::placeholder_index() const {
  for (size_t i = 0; i < context.size(); ++i)
    if (context[i] == kPlaceholder) return i;
  throw FormatError("record " + id + ": no placeholder");
}

void AnnotatedSentence::validate() const {
  size_t count = 0;
  for (const auto& t : context)
    if (t == kPlaceholder) ++count;
  if (count != 1)
    throw FormatError("record " + id + ": expected exactly one placeholder, got " +
                      std::to_string(count));
  std::unordered_set<std::string> seen;
  for (const auto& t : terms) {
    if (t.empty()) throw FormatError("record " + id + ": empty term");
    if (!seen.insert(t).second)
      throw FormatError("record " + id + ": duplicate term " + t);
  }
  if (hypernym_span) {
    if (hypernym_span->begin >= hypernym_span->end ||
        hypernym_span->end > context.size())
      throw FormatError("record " + id + ": hypernym span out of range");
  }
}

std::vector<RawSentence> read_raw_sentences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open raw corpus: " + path);
  std::vector<RawSentence> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> toks;
    std::string tok;
    while (ss >> tok) toks.push_back(tok);
    if (toks.empty()) continue;
    RawSentence s;
    s.id = "s" + std::to_string(lineno);
    s.tokens = normalize_tokens(toks);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

bool is_separator_token(const std::string& t) {
  return t == "," || t == "and" || t == "or";
}

std::string join(const std::vector<std::string>& toks, size_t b, size_t e,
                 char sep) {
  std::string out;
  for (size_t i = b; i < e; ++i) {
    if (i > b) out.push_back(sep);
    out += toks[i];
  }
  return out;
}

}  // namespace

AnnotatedSentence decompose(const RawSentence& sentence, const PatternMatch& match) {
  const auto& toks = sentence.tokens;
  const auto& hypos = match.hyponyms;
  if (hypos.empty()) throw MalformedMatchError("match has no hyponyms");
  for (size_t i = 0; i < hypos.size(); ++i) {
    if (hypos[i].begin >= hypos[i].end || hypos[i].end > toks.size())
      throw MalformedMatchError("hyponym span out of range");
    if (i > 0 && hypos[i].begin < hypos[i - 1].end)
      throw MalformedMatchError("hyponym spans out of order");
  }
  if (match.hypernym.begin >= match.hypernym.end ||
      match.hypernym.end > toks.size())
    throw MalformedMatchError("hypernym span out of range");
  Span region{hypos.front().begin, hypos.back().end};
  if (match.hypernym.overlaps(region))
    throw MalformedMatchError("hypernym overlaps hyponym list");
  // gaps between consecutive hyponyms must be list glue only
  for (size_t i = 1; i < hypos.size(); ++i)
    for (size_t j = hypos[i - 1].end; j < hypos[i].begin; ++j)
      if (!is_separator_token(toks[j]))
        throw MalformedMatchError("non-separator token inside hyponym list: " +
                                  toks[j]);

  AnnotatedSentence rec;
  rec.id = sentence.id;
  rec.context.reserve(toks.size() - region.size() + 1);
  for (size_t i = 0; i < region.begin; ++i) rec.context.push_back(toks[i]);
  rec.context.push_back(std::string(kPlaceholder));
  for (size_t i = region.end; i < toks.size(); ++i) rec.context.push_back(toks[i]);

  if (match.hypernym.end <= region.begin) {
    rec.hypernym_span = match.hypernym;
  } else {
    size_t removed = region.size() - 1;
    rec.hypernym_span = Span{match.hypernym.begin - removed,
                             match.hypernym.end - removed};
  }

  std::unordered_set<std::string> seen;
  std::unordered_set<std::string> context_words(rec.context.begin(),
                                                rec.context.end());
  for (const auto& h : hypos) {
    std::string term = join(toks, h.begin, h.end, '_');
    if (term == kPlaceholder) continue;
    if (context_words.count(term)) continue;  // keep terms out of the context
    if (seen.insert(term).second) rec.terms.push_back(std::move(term));
  }
  rec.validate();
  return rec;
}

std::vector<std::pair<AnnotatedSentence, double>> mine_corpus(
    const std::vector<RawSentence>& sentences, const PrecisionTable& precisions) {
  std::vector<std::pair<AnnotatedSentence, double>> out;
  for (const auto& sent : sentences) {
    auto matches = match_hearst(sent.tokens, precisions);
    for (size_t k = 0; k < matches.size(); ++k) {
      AnnotatedSentence rec = decompose(sent, matches[k]);
      if (matches.size() > 1) rec.id += "#" + std::to_string(k);
      out.emplace_back(std::move(rec), matches[k].precision);
    }
  }
  return out;
}

std::vector<AnnotatedSentence> filter_corpus(
    const std::vector<std::pair<AnnotatedSentence, double>>& records,
    const FilterConfig& cfg) {
  struct Item {
    const AnnotatedSentence* rec;
    std::vector<std::string> terms;
  };
  std::vector<Item> items;
  for (const auto& [rec, precision] : records) {
    if (precision < cfg.min_precision) continue;
    if (rec.terms.size() < cfg.min_terms) continue;
    items.push_back({&rec, rec.terms});
  }

  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, size_t> sentence_count;
    for (const auto& it : items) {
      for (const auto& t : it.terms) ++sentence_count[t];
    }
    std::vector<Item> next;
    next.reserve(items.size());
    for (auto& it : items) {
      std::vector<std::string> kept;
      kept.reserve(it.terms.size());
      for (auto& t : it.terms) {
        if (sentence_count[t] >= cfg.min_term_sentences)
          kept.push_back(std::move(t));
        else
          changed = true;
      }
      if (kept.size() >= cfg.min_terms) {
        next.push_back({it.rec, std::move(kept)});
      } else {
        changed = true;
      }
    }
    items = std::move(next);
  }

  std::vector<AnnotatedSentence> out;
  out.reserve(items.size());
  for (auto& it : items) {
    AnnotatedSentence rec = *it.rec;
    rec.terms = std::move(it.terms);
    out.push_back(std::move(rec));
  }
  return out;
}

std::pair<std::vector<AnnotatedSentence>, std::vector<AnnotatedSentence>> split_corpus(
    const std::vector<AnnotatedSentence>& records, double test_fraction,
    uint64_t seed) {
  const size_t n = records.size();
  if (n == 0) throw EmptyCorpusError("cannot split an empty corpus");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error("test fraction must lie in (0, 1)");
  size_t test_n = static_cast<size_t>(std::ceil(test_fraction * static_cast<double>(n)));
  if (test_n < 1) test_n = 1;
  if (test_n > n - 1) test_n = n - 1;

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  auto rng = rng_for(seed, "corpus_split");
  shuffle_indices(order, rng);
  std::vector<char> in_test(n, 0);
  for (size_t i = 0; i < test_n; ++i) in_test[order[i]] = 1;

  std::vector<AnnotatedSentence> train, test;
  train.reserve(n - test_n);
  test.reserve(test_n);
  for (size_t i = 0; i < n; ++i)
    (in_test[i] ? test : train).push_back(records[i]);
  return {std::move(train), std::move(test)};
}

std::pair<AnnotatedSentence, bool> strip_hypernym(const AnnotatedSentence& record) {
  if (!record.hypernym_span) return {record, false};
  const auto& ctx = record.context;
  const size_t n = ctx.size();
  Span h = *record.hypernym_span;
  size_t b = h.begin, e = h.end;

  if (b >= 2 && (ctx[b - 2] == "and" || ctx[b - 2] == "or") && ctx[b - 1] == "other") {
    b -= 2;  // "... and other H"
  } else if (b >= 1 && ctx[b - 1] == "such" && e < n && ctx[e] == "as") {
    b -= 1;  // "such H as ..."
    e += 1;
  } else if (e + 1 < n && ctx[e] == "such" && ctx[e + 1] == "as") {
    e += 2;  // "H such as ..."
  } else if (e < n && (ctx[e] == "including" || ctx[e] == "especially")) {
    e += 1;  // "H including ..." / "H especially ..."
  }

  AnnotatedSentence out;
  out.id = record.id;
  out.terms = record.terms;
  out.context.reserve(n - (e - b));
  for (size_t i = 0; i < n; ++i) {
    if (i >= b && i < e) {
      if (ctx[i] == kPlaceholder)
        throw FormatError("record " + record.id +
                          ": hypernym removal would delete the placeholder");
      continue;
    }
    out.context.push_back(ctx[i]);
  }
  out.hypernym_span = std::nullopt;
  out.validate();
  return {std::move(out), true};
}

std::vector<std::string> reinsert_terms(const AnnotatedSentence& record) {
  std::vector<std::string> out;
  out.reserve(record.context.size() + record.terms.size() * 2);
  for (const auto& tok : record.context) {
    if (tok != kPlaceholder) {
      out.push_back(tok);
      continue;
    }
    for (size_t t = 0; t < record.terms.size(); ++t) {
      if (t > 0) out.push_back(",");
      std::string word;
      for (char c : record.terms[t]) {
        if (c == '_') {
          if (!word.empty()) out.push_back(std::move(word));
          word.clear();
        } else {
          word.push_back(c);
        }
      }
      if (!word.empty()) out.push_back(std::move(word));
    }
  }
  return out;
}

void write_corpus(const std::string& path,
                  const std::vector<AnnotatedSentence>& records,
                  const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write corpus: " + path);
  for (const auto& c : comments) out << "# " << c << '\n';
  for (const auto& rec : records) {
    rec.validate();
    out << rec.id << '\t';
    for (size_t i = 0; i < rec.context.size(); ++i) {
      if (i) out << ' ';
      out << rec.context[i];
    }
    out << '\t';
    for (size_t i = 0; i < rec.terms.size(); ++i) {
      if (i) out << '|';
      out << rec.terms[i];
    }
    out << '\t';
    if (rec.hypernym_span)
      out << rec.hypernym_span->begin << ':' << rec.hypernym_span->end;
    else
      out << '-';
    out << '\n';
  }
}

std::vector<AnnotatedSentence> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open corpus: " + path);
  std::vector<AnnotatedSentence> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 4)
      throw FormatError("corpus line " + std::to_string(lineno) +
                        ": expected 4 tab-separated fields, got " +
                        std::to_string(fields.size()));

    AnnotatedSentence rec;
    rec.id = fields[0];
    {
      std::istringstream ss(fields[1]);
      std::string tok;
      while (ss >> tok) rec.context.push_back(tok);
    }
    if (!fields[2].empty()) {
      size_t b = 0;
      while (true) {
        size_t bar = fields[2].find('|', b);
        if (bar == std::string::npos) {
          rec.terms.push_back(fields[2].substr(b));
          break;
        }
        rec.terms.push_back(fields[2].substr(b, bar - b));
        b = bar + 1;
      }
    }
    if (fields[3] != "-") {
      size_t colon = fields[3].find(':');
      if (colon == std::string::npos)
        throw FormatError("corpus line " + std::to_string(lineno) +
                          ": bad span field " + fields[3]);
      try {
        rec.hypernym_span = Span{std::stoull(fields[3].substr(0, colon)),
                                 std::stoull(fields[3].substr(colon + 1))};
      } catch (const std::exception&) {
        throw FormatError("corpus line " + std::to_string(lineno) +
                          ": bad span field " + fields[3]);
      }
    }
    try {
      rec.validate();
    } catch (const FormatError& err) {
      throw FormatError("corpus line " + std::to_string(lineno) + ": " +
                        err.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace cse
