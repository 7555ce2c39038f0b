#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cse/tensor.hpp"

namespace cse {

// Self-contained model file: manifest (run metadata), the serialized
// vocabularies and term lexicon, and every parameter tensor. A trailing
// CRC32 covers the whole stream.
struct Checkpoint {
  std::map<std::string, std::string> manifest;
  std::string vocab_text;        // context vocabulary, Vocabulary::save format
  std::string seed_vocab_text;   // seed-word vocabulary
  std::string lexicon_text;      // TermLexicon::save format
  std::vector<std::pair<std::string, Tensor>> params;   // save order
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Verifies magic, version and checksum; throws FormatError otherwise.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cse
