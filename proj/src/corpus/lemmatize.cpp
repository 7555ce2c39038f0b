#include "cse/corpus/lemmatize.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

namespace cse {

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

namespace {

const std::unordered_map<std::string, std::string>& exceptions() {
  static const std::unordered_map<std::string, std::string> table = {
      {"children", "child"}, {"men", "man"},       {"women", "woman"},
      {"feet", "foot"},      {"teeth", "tooth"},   {"geese", "goose"},
      {"mice", "mouse"},     {"oxen", "ox"},       {"people", "person"},
      {"leaves", "leaf"},    {"lives", "life"},    {"knives", "knife"},
      {"wolves", "wolf"},    {"shelves", "shelf"}, {"loaves", "loaf"},
      {"calves", "calf"},    {"halves", "half"},   {"buses", "bus"},
      {"viruses", "virus"},  {"gases", "gas"},     {"lenses", "lens"},
      {"movies", "movie"},   {"made", "make"},     {"making", "make"},
      {"taken", "take"},     {"taking", "take"},   {"given", "give"},
      {"giving", "give"},    {"using", "use"},     {"used", "use"},
      {"written", "write"},  {"writing", "write"},
  };
  return table;
}

// Words the suffix rules must never touch: function words, pattern triggers,
// and common forms where stripping would corrupt the token.
const std::unordered_set<std::string>& protected_words() {
  static const std::unordered_set<std::string> table = {
      "is",       "as",      "its",     "this",    "thus",    "was",
      "has",
      "his",      "hers",    "ours",    "yours",   "theirs",   "does",
      "goes",     "series",  "species", "news",    "less",     "plus",
      "versus",   "always",  "perhaps", "towards", "besides",  "sometimes",
      "unless",   "across",  "whereas", "during",  "including","especially",
      "such",     "other",   "and",     "or",      "of",       "in",
      "anything", "nothing", "something","everything", "thing", "being",
      "string",   "strings", "analysis","basis",   "crisis",   "diabetes",
      "physics",  "mathematics", "economics", "statistics",
  };
  return table;
}

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool has_vowel(const std::string& s) {
  for (char c : s)
    if (is_vowel(c)) return true;
  return false;
}

bool ends_with(const std::string& s, const char* suf) {
  size_t n = std::char_traits<char>::length(suf);
  return s.size() >= n && s.compare(s.size() - n, n, suf) == 0;
}

bool all_word_chars(const std::string& s) {
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || c == '-' || c == '\'';
    if (!ok) return false;
  }
  return !s.empty();
}

// Consonant doubled by suffixation (running -> run). 'l' and 's' kept
// doubled since tell/telling, miss/missing keep theirs.
bool undoublable(char c) {
  switch (c) {
    case 'b': case 'd': case 'g': case 'm':
    case 'n': case 'p': case 'r': case 't':
      return true;
    default:
      return false;
  }
}

// Stems that most likely lost a trailing 'e' to the suffix (danc-, argu-).
bool wants_e(const std::string& stem) {
  char last = stem.back();
  return last == 'c' || last == 'v' || last == 'u' || last == 'z';
}

std::string strip_verb_suffix(const std::string& w, size_t suffix_len) {
  std::string stem = w.substr(0, w.size() - suffix_len);
  if (stem.size() < 3 || !has_vowel(stem)) return w;
  if (stem.size() >= 2 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
      undoublable(stem.back())) {
    stem.pop_back();
    return stem;
  }
  if (wants_e(stem)) stem.push_back('e');
  return stem;
}

std::string apply_rules(const std::string& w) {
  if (w.size() <= 3) return w;

  // -ies -> -y (berries -> berry); 4-letter words fall through to the -s rule
  if (ends_with(w, "ies") && w.size() > 4)
    return w.substr(0, w.size() - 3) + "y";

  if (ends_with(w, "sses")) return w.substr(0, w.size() - 2);
  if ((ends_with(w, "shes") || ends_with(w, "ches") || ends_with(w, "xes") ||
       ends_with(w, "zes")) &&
      w.size() > 4)
    return w.substr(0, w.size() - 2);
  if (ends_with(w, "oes") && w.size() >= 6) return w.substr(0, w.size() - 2);

  if (ends_with(w, "ied") && w.size() > 4)
    return w.substr(0, w.size() - 3) + "y";

  if (ends_with(w, "ing") && w.size() >= 6) {
    std::string out = strip_verb_suffix(w, 3);
    if (out != w) return out;
  }
  if (ends_with(w, "ed") && !ends_with(w, "eed") && w.size() >= 5) {
    std::string out = strip_verb_suffix(w, 2);
    if (out != w) return out;
  }

  // plain plural: not -ss / -us / -is
  if (w.back() == 's' && !ends_with(w, "ss") && !ends_with(w, "us") &&
      !ends_with(w, "is") && w.size() >= 4)
    return w.substr(0, w.size() - 1);

  return w;
}

}  // namespace

std::string lemmatize(const std::string& word) {
  auto it = exceptions().find(word);
  if (it != exceptions().end()) return it->second;
  if (protected_words().count(word)) return word;
  if (!all_word_chars(word)) return word;
  return apply_rules(word);
}

std::vector<std::string> normalize_tokens(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lemmatize(to_lower(t)));
  return out;
}

}  // namespace cse
