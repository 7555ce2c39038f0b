#include "cse/corpus/vocab.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "cse/common.hpp"

namespace cse {

Vocabulary::Vocabulary() {
  push("<PAD>");
  push("<OOV>");
}

void Vocabulary::push(const std::string& w) {
  index_.emplace(w, static_cast<uint32_t>(words_.size()));
  words_.push_back(w);
}

Vocabulary Vocabulary::from_counts(
    const std::vector<std::pair<std::string, size_t>>& counts, size_t min_freq) {
  std::vector<std::pair<std::string, size_t>> kept;
  for (const auto& [w, c] : counts)
    if (c >= min_freq && w != "<PAD>" && w != "<OOV>") kept.emplace_back(w, c);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  v.min_freq_ = min_freq;
  for (const auto& [w, c] : kept) v.push(w);
  return v;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  if (words.size() < 2 || words[0] != "<PAD>" || words[1] != "<OOV>")
    throw FormatError("word list must start with <PAD> and <OOV>");
  Vocabulary v;
  for (size_t i = 2; i < words.size(); ++i) {
    if (v.index_.count(words[i]))
      throw FormatError("duplicate word in list: " + words[i]);
    v.push(words[i]);
  }
  return v;
}

uint32_t Vocabulary::lookup(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kOovId : it->second;
}

std::optional<uint32_t> Vocabulary::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::word(uint32_t id) const {
  if (id >= words_.size()) throw Error("vocabulary id out of range");
  return words_[id];
}

std::vector<uint32_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<uint32_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lookup(t));
  return out;
}

uint64_t Vocabulary::content_hash() const {
  uint64_t h = fnv1a64("vocab");
  for (const auto& w : words_) {
    h = splitmix64(h ^ fnv1a64(w));
  }
  h = splitmix64(h ^ min_freq_);
  return h;
}

void Vocabulary::save(std::ostream& out) const {
  out << words_.size() << ' ' << min_freq_ << '\n';
  for (size_t i = 2; i < words_.size(); ++i) out << words_[i] << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  size_t n = 0, min_freq = 0;
  if (!(in >> n >> min_freq)) throw FormatError("bad vocabulary header");
  in.ignore();
  Vocabulary v;
  v.min_freq_ = min_freq;
  std::string line;
  for (size_t i = 2; i < n; ++i) {
    if (!std::getline(in, line)) throw FormatError("truncated vocabulary");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw FormatError("empty vocabulary entry");
    v.push(line);
  }
  return v;
}

Vocabulary build_vocab(const std::vector<AnnotatedSentence>& records,
                       size_t min_freq) {
  std::unordered_map<std::string, size_t> counts;
  for (const auto& rec : records)
    for (const auto& tok : rec.context) ++counts[tok];
  std::vector<std::pair<std::string, size_t>> list(counts.begin(), counts.end());
  return Vocabulary::from_counts(list, min_freq);
}

TermLexicon TermLexicon::from_corpus(const std::vector<AnnotatedSentence>& records) {
  std::unordered_map<std::string, size_t> counts;
  for (const auto& rec : records)
    for (const auto& t : rec.terms) ++counts[t];
  std::vector<std::pair<std::string, size_t>> list(counts.begin(), counts.end());
  std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  TermLexicon lex;
  lex.terms_.reserve(list.size());
  lex.freq_.reserve(list.size());
  for (const auto& [t, c] : list) {
    lex.index_.emplace(t, static_cast<uint32_t>(lex.terms_.size()));
    lex.terms_.push_back(t);
    lex.freq_.push_back(c);
  }
  return lex;
}

std::optional<uint32_t> TermLexicon::find(const std::string& term) const {
  auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& TermLexicon::term(uint32_t label) const {
  if (label >= terms_.size()) throw Error("label out of range");
  return terms_[label];
}

uint64_t TermLexicon::content_hash() const {
  uint64_t h = fnv1a64("lexicon");
  for (size_t i = 0; i < terms_.size(); ++i) {
    h = splitmix64(h ^ fnv1a64(terms_[i]));
    h = splitmix64(h ^ freq_[i]);
  }
  return h;
}

void TermLexicon::save(std::ostream& out) const {
  out << terms_.size() << '\n';
  for (size_t i = 0; i < terms_.size(); ++i)
    out << terms_[i] << ' ' << freq_[i] << '\n';
}

TermLexicon TermLexicon::load(std::istream& in) {
  size_t n = 0;
  if (!(in >> n)) throw FormatError("bad lexicon header");
  TermLexicon lex;
  lex.terms_.reserve(n);
  lex.freq_.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    std::string t;
    size_t c = 0;
    if (!(in >> t >> c)) throw FormatError("truncated lexicon");
    lex.index_.emplace(t, static_cast<uint32_t>(lex.terms_.size()));
    lex.terms_.push_back(std::move(t));
    lex.freq_.push_back(c);
  }
  in.ignore();
  return lex;
}

Vocabulary build_seed_vocab(const TermLexicon& lexicon) {
  std::unordered_map<std::string, size_t> counts;
  for (size_t label = 0; label < lexicon.size(); ++label) {
    const std::string& term = lexicon.term(static_cast<uint32_t>(label));
    std::string word;
    for (char c : term) {
      if (c == '_') {
        if (!word.empty()) ++counts[word];
        word.clear();
      } else {
        word.push_back(c);
      }
    }
    if (!word.empty()) ++counts[word];
  }
  std::vector<std::pair<std::string, size_t>> list(counts.begin(), counts.end());
  return Vocabulary::from_counts(list, 1);
}

}  // namespace cse
