#include "cse/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "cse/common.hpp"

namespace cse {

namespace {

constexpr char kMagic[4] = {'C', 'A', 'S', 'E'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw FormatError("checkpoint truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

// manifest text: sorted key=value lines, then the embedded blocks
std::string manifest_text(const Checkpoint& ckpt) {
  std::string text;
  for (const auto& [k, v] : ckpt.manifest) {
    if (k.find_first_of("=\n") != std::string::npos ||
        v.find('\n') != std::string::npos)
      throw FormatError("manifest keys/values must be single-line, key without '='");
    text += k;
    text += '=';
    text += v;
    text += '\n';
  }
  text += "[vocab]\n" + ckpt.vocab_text;
  text += "[seed_vocab]\n" + ckpt.seed_vocab_text;
  text += "[lexicon]\n" + ckpt.lexicon_text;
  return text;
}

void parse_manifest(const std::string& text, Checkpoint& ckpt) {
  size_t pos = 0;
  std::string* block = nullptr;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line == "[vocab]") {
      block = &ckpt.vocab_text;
    } else if (line == "[seed_vocab]") {
      block = &ckpt.seed_vocab_text;
    } else if (line == "[lexicon]") {
      block = &ckpt.lexicon_text;
    } else if (block) {
      *block += line;
      *block += '\n';
    } else {
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw FormatError("bad manifest line: " + line);
      ckpt.manifest[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);

  std::string manifest = manifest_text(ckpt);
  put_u32(buf, static_cast<uint32_t>(manifest.size()));
  buf += manifest;

  put_u32(buf, static_cast<uint32_t>(ckpt.params.size()));
  for (const auto& [name, tensor] : ckpt.params) {
    put_u32(buf, static_cast<uint32_t>(name.size()));
    buf += name;
    const auto& shape = tensor.shape();
    put_u32(buf, static_cast<uint32_t>(shape.size()));
    for (size_t d : shape) put_u64(buf, d);
    static_assert(sizeof(float) == 4);
    for (size_t i = 0; i < tensor.size(); ++i) {
      float f = tensor[i];
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(buf, bits);
    }
  }

  uint32_t crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()),
            static_cast<uInt>(buf.size())));
  put_u32(buf, crc);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("short write to checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());

  if (buf.size() < 16) throw FormatError("checkpoint too small");
  uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i)
    stored_crc |= static_cast<uint32_t>(
                      static_cast<unsigned char>(buf[buf.size() - 4 + i]))
                  << (8 * i);
  uint32_t crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()),
            static_cast<uInt>(buf.size() - 4)));
  if (crc != stored_crc) throw FormatError("checkpoint checksum mismatch");

  Reader r{buf};
  if (r.bytes(4) != std::string(kMagic, 4))
    throw FormatError("not a checkpoint file");
  uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  uint32_t manifest_len = r.u32();
  parse_manifest(r.bytes(manifest_len), ckpt);

  uint32_t nparams = r.u32();
  ckpt.params.reserve(nparams);
  for (uint32_t p = 0; p < nparams; ++p) {
    uint32_t name_len = r.u32();
    std::string name = r.bytes(name_len);
    uint32_t rank = r.u32();
    if (rank > 8) throw FormatError("implausible tensor rank");
    std::vector<size_t> shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = r.u64();
    Tensor t(shape);
    for (size_t i = 0; i < t.size(); ++i) {
      uint32_t bits = r.u32();
      float f;
      std::memcpy(&f, &bits, 4);
      t[i] = f;
    }
    ckpt.params.emplace_back(std::move(name), std::move(t));
  }
  if (r.pos != buf.size() - 4)
    throw FormatError("checkpoint has trailing bytes");
  return ckpt;
}

}  // namespace cse
