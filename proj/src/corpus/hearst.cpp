#include "cse/corpus/hearst.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cse/common.hpp"

namespace cse {

Span PatternMatch::extent() const {
  Span e = hypernym;
  for (const auto& h : hyponyms) {
    e.begin = std::min(e.begin, h.begin);
    e.end = std::max(e.end, h.end);
  }
  return e;
}

namespace {

constexpr size_t kMaxChunkWords = 4;

bool is_list_separator(const std::string& t) {
  return t == "," || t == "and" || t == "or";
}

// Words that terminate a noun chunk. Keeps chunks to bare NPs instead of
// swallowing whole clauses ("is high in vitamin" -> "vitamin").
bool is_chunk_boundary(const std::string& t) {
  static const std::unordered_set<std::string> words = {
      "a",       "an",     "the",     "this",   "that",    "these",  "those",
      "of",      "in",     "on",      "at",     "by",      "for",    "with",
      "from",    "to",     "into",    "onto",   "over",    "under",  "about",
      "is",      "are",    "was",     "were",   "be",      "been",   "being",
      "has",     "have",   "had",     "do",     "does",    "did",    "can",
      "could",   "will",   "would",   "may",    "might",   "must",   "shall",
      "should",  "not",    "no",      "as",     "such",    "other",  "than",
      "like",    "but",    "if",      "when",   "while",   "where",  "which",
      "who",     "whose",  "whom",    "it",     "its",     "their",  "his",
      "her",     "our",    "your",    "my",     "they",    "we",     "i",
      "he",      "she",    "you",     "there",  "here",    "also",   "both",
      "each",    "every",  "some",    "any",    "all",     "many",   "most",
      "more",    "very",   "including", "especially",
  };
  if (words.count(t)) return true;
  // punctuation-only tokens
  for (char c : t) {
    bool word_char = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                     c == '-' || c == '\'' || c == '_' ||
                     static_cast<unsigned char>(c) >= 0x80;
    if (!word_char) return true;
  }
  return t.empty();
}

bool chunkable(const std::string& t) {
  return !is_list_separator(t) && !is_chunk_boundary(t);
}

// longest chunk ending just before pos, at most kMaxChunkWords tokens
Span chunk_left(const std::vector<std::string>& toks, size_t pos) {
  size_t b = pos;
  while (b > 0 && pos - (b - 1) <= kMaxChunkWords && chunkable(toks[b - 1])) --b;
  return {b, pos};
}

Span chunk_right(const std::vector<std::string>& toks, size_t pos) {
  size_t e = pos;
  while (e < toks.size() && (e - pos) < kMaxChunkWords && chunkable(toks[e])) ++e;
  return {pos, e};
}

// comma/conjunction separated chunks starting at pos, moving right
std::vector<Span> parse_list_right(const std::vector<std::string>& toks, size_t pos) {
  std::vector<Span> out;
  size_t cur = pos;
  while (true) {
    Span c = chunk_right(toks, cur);
    if (c.size() == 0) break;
    out.push_back(c);
    size_t next = c.end;
    if (next >= toks.size() || !is_list_separator(toks[next])) break;
    ++next;
    // ", and" / ", or"
    if (next < toks.size() && toks[next - 1] == "," &&
        (toks[next] == "and" || toks[next] == "or"))
      ++next;
    cur = next;
  }
  return out;
}

// comma/conjunction separated chunks whose last chunk ends at pos, moving left
std::vector<Span> parse_list_left(const std::vector<std::string>& toks, size_t pos) {
  std::vector<Span> out;
  size_t cur = pos;
  while (true) {
    Span c = chunk_left(toks, cur);
    if (c.size() == 0) break;
    out.push_back(c);
    if (c.begin == 0) break;
    size_t prev = c.begin - 1;
    if (!is_list_separator(toks[prev])) break;
    // "and ," never occurs; ", and" from the right side means skip two
    if (prev > 0 && (toks[prev] == "and" || toks[prev] == "or") &&
        toks[prev - 1] == ",")
      --prev;
    cur = prev;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// hypernym chunk left of a trigger word, allowing one comma before it
Span hypernym_left(const std::vector<std::string>& toks, size_t trigger) {
  size_t pos = trigger;
  if (pos > 0 && toks[pos - 1] == ",") --pos;
  return chunk_left(toks, pos);
}

double precision_for(const PrecisionTable& table, const std::string& id) {
  auto it = table.find(id);
  return it == table.end() ? 0.0 : it->second;
}

void add_match(std::vector<PatternMatch>& out, const std::string& id, Span hyper,
               std::vector<Span> hypos, const PrecisionTable& table) {
  if (hyper.size() == 0 || hypos.empty()) return;
  for (const auto& h : hypos)
    if (h.overlaps(hyper)) return;
  PatternMatch m;
  m.pattern_id = id;
  m.hypernym = hyper;
  m.hyponyms = std::move(hypos);
  m.precision = precision_for(table, id);
  out.push_back(std::move(m));
}

}  // namespace

std::vector<PatternMatch> match_hearst(const std::vector<std::string>& tokens,
                                       const PrecisionTable& precisions) {
  std::vector<PatternMatch> cands;
  const size_t n = tokens.size();

  for (size_t i = 0; i < n; ++i) {
    const std::string& t = tokens[i];

    if (t == "such" && i + 1 < n) {
      if (tokens[i + 1] == "as") {
        // H such as T1, T2 ...
        Span hyper = hypernym_left(tokens, i);
        add_match(cands, "such_as", hyper, parse_list_right(tokens, i + 2),
                  precisions);
      } else {
        // such H as T1, T2 ...
        size_t j = i + 1;
        while (j < n && j - (i + 1) < kMaxChunkWords && chunkable(tokens[j])) ++j;
        if (j > i + 1 && j < n && tokens[j] == "as") {
          Span hyper{i + 1, j};
          add_match(cands, "such_x_as", hyper, parse_list_right(tokens, j + 1),
                    precisions);
        }
      }
    }

    if ((t == "including" || t == "especially") && i > 0 && i + 1 < n) {
      Span hyper = hypernym_left(tokens, i);
      add_match(cands, t == "including" ? "including" : "especially", hyper,
                parse_list_right(tokens, i + 1), precisions);
    }

    if ((t == "and" || t == "or") && i + 2 < n && tokens[i + 1] == "other" && i > 0) {
      // T1, T2 and other H
      Span hyper = chunk_right(tokens, i + 2);
      add_match(cands, t == "and" ? "and_other" : "or_other", hyper,
                parse_list_left(tokens, i), precisions);
    }
  }

  // more hyponyms first, then leftmost extent, then pattern id
  std::vector<size_t> order(cands.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (cands[a].hyponyms.size() != cands[b].hyponyms.size())
      return cands[a].hyponyms.size() > cands[b].hyponyms.size();
    if (cands[a].extent().begin != cands[b].extent().begin)
      return cands[a].extent().begin < cands[b].extent().begin;
    return cands[a].pattern_id < cands[b].pattern_id;
  });

  std::vector<PatternMatch> kept;
  for (size_t idx : order) {
    Span e = cands[idx].extent();
    bool clash = false;
    for (const auto& k : kept)
      if (e.overlaps(k.extent())) { clash = true; break; }
    if (!clash) kept.push_back(cands[idx]);
  }
  std::sort(kept.begin(), kept.end(), [](const PatternMatch& a, const PatternMatch& b) {
    return a.extent().begin < b.extent().begin;
  });
  return kept;
}

PrecisionTable read_precision_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open precision table: " + path);
  PrecisionTable table;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("precision table line " + std::to_string(lineno) +
                        ": expected pattern<TAB>value");
    std::string id = line.substr(0, tab);
    try {
      table[id] = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw FormatError("precision table line " + std::to_string(lineno) +
                        ": bad value");
    }
  }
  return table;
}

void write_precision_table(const std::string& path, const PrecisionTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write precision table: " + path);
  for (const auto& [id, p] : table) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", p);
    out << id << '\t' << buf << '\n';
  }
}

}  // namespace cse
