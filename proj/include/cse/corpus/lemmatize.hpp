#pragma once

#include <string>
#include <vector>

namespace cse {

// Deterministic suffix-rule English lemmatizer: plural nouns, -ing/-ed verbs,
// plus an exceptions table for irregulars. Idempotent: lemma(lemma(w)) == lemma(w).
std::string lemmatize(const std::string& word);

// Lowercase + lemmatize every token.
std::vector<std::string> normalize_tokens(const std::vector<std::string>& tokens);

std::string to_lower(const std::string& s);

}  // namespace cse
