#include "bpekit/model.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "bpekit/errors.hpp"
#include "json.hpp"

namespace bpekit {

using json = nlohmann::json;

namespace {

constexpr int kModelFormatVersion = 1;
constexpr std::string_view kBaseAlphabet = "bytes-256";

}  // namespace

std::vector<SpecialToken> reserve_specials(
    const std::vector<std::string>& specials, std::size_t merge_count) {
  std::vector<SpecialToken> table;
  table.reserve(specials.size());
  std::unordered_set<std::string_view> seen;
  auto next_id = static_cast<TokenId>(kByteTokenCount + merge_count);
  for (const auto& text : specials) {
    if (text.size() < 2) {
      throw Error(ErrorCode::kConfigInvalid,
                  "special token '" + text +
                      "' must be at least two bytes long");
    }
    if (!seen.insert(text).second) {
      throw Error(ErrorCode::kDuplicateSpecial, "'" + text + "'");
    }
    table.push_back({text, next_id++});
  }
  return table;
}

TokenizerModel::TokenizerModel(std::vector<Merge> merges,
                               std::vector<std::string> specials,
                               ModelMetadata metadata)
    : merges_(std::move(merges)), metadata_(std::move(metadata)) {
  try {
    specials_ = reserve_specials(specials, merges_.size());
  } catch (const Error& e) {
    throw Error(ErrorCode::kModelInvalid, e.what());
  }

  id_to_bytes_.reserve(kByteTokenCount + merges_.size() + specials_.size());
  for (std::size_t b = 0; b < kByteTokenCount; ++b) {
    id_to_bytes_.emplace_back(1, static_cast<char>(b));
    bytes_to_id_.emplace(id_to_bytes_.back(), static_cast<TokenId>(b));
  }

  pair_ranks_.reserve(merges_.size());
  for (std::size_t rank = 0; rank < merges_.size(); ++rank) {
    const Merge& m = merges_[rank];
    if (m.rank != rank) {
      throw Error(ErrorCode::kModelInvalid,
                  "merge ranks must be 0..m-1 in order; found " +
                      std::to_string(m.rank) + " at position " +
                      std::to_string(rank));
    }
    const auto left = bytes_to_id_.find(m.left);
    const auto right = bytes_to_id_.find(m.right);
    if (left == bytes_to_id_.end() || right == bytes_to_id_.end()) {
      throw Error(ErrorCode::kModelInvalid,
                  "merge " + std::to_string(rank) +
                      " uses a token that is not yet available");
    }
    std::string merged = m.left + m.right;
    const auto id = static_cast<TokenId>(kByteTokenCount + rank);
    if (!bytes_to_id_.emplace(merged, id).second) {
      throw Error(ErrorCode::kModelInvalid,
                  "merge " + std::to_string(rank) +
                      " produces an existing token");
    }
    pair_ranks_.emplace(pair_key(left->second, right->second),
                        static_cast<std::uint32_t>(rank));
    id_to_bytes_.push_back(std::move(merged));
  }

  for (const auto& special : specials_) {
    if (bytes_to_id_.contains(special.text)) {
      throw Error(ErrorCode::kModelInvalid,
                  "special '" + special.text + "' collides with a merged token");
    }
    special_to_id_.emplace(special.text, special.id);
    id_to_bytes_.push_back(special.text);
  }
}

std::string_view TokenizerModel::token_bytes(TokenId id) const {
  if (id >= id_to_bytes_.size()) {
    throw Error(ErrorCode::kIdOutOfRange,
                "id " + std::to_string(id) + " >= vocab size " +
                    std::to_string(id_to_bytes_.size()));
  }
  return id_to_bytes_[id];
}

bool TokenizerModel::is_special(TokenId id) const noexcept {
  return id >= kByteTokenCount + merges_.size() && id < id_to_bytes_.size();
}

std::optional<TokenId> TokenizerModel::find_token(std::string_view bytes) const {
  const auto it = bytes_to_id_.find(std::string(bytes));
  if (it == bytes_to_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<TokenId> TokenizerModel::find_special(std::string_view text) const {
  const auto it = special_to_id_.find(std::string(text));
  if (it == special_to_id_.end()) return std::nullopt;
  return it->second;
}

std::string TokenizerModel::to_json() const {
  json merges = json::array();
  for (const auto& m : merges_) {
    merges.push_back(json::array({to_hex(m.left), to_hex(m.right)}));
  }
  json specials = json::array();
  for (const auto& s : specials_) specials.push_back(s.text);

  json doc = json::object();
  doc["version"] = kModelFormatVersion;
  doc["unicode_version"] = metadata_.unicode_version;
  doc["base"] = kBaseAlphabet;
  doc["merges"] = std::move(merges);
  doc["specials"] = std::move(specials);
  doc["config_digest"] = metadata_.config_digest;
  doc["target_vocab"] = metadata_.target_vocab;
  return doc.dump() + "\n";
}

TokenizerModel TokenizerModel::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kModelInvalid, std::string("malformed JSON: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::kModelInvalid, "unsupported model version");
    }
    if (doc.at("base").get<std::string>() != kBaseAlphabet) {
      throw Error(ErrorCode::kModelInvalid, "unsupported base alphabet");
    }
    std::vector<Merge> merges;
    for (const auto& entry : doc.at("merges")) {
      if (!entry.is_array() || entry.size() != 2) {
        throw Error(ErrorCode::kModelInvalid, "merge entries must be pairs");
      }
      merges.push_back({from_hex(entry[0].get<std::string>()),
                        from_hex(entry[1].get<std::string>()), merges.size()});
    }
    auto specials = doc.at("specials").get<std::vector<std::string>>();
    ModelMetadata meta;
    meta.unicode_version = doc.at("unicode_version").get<std::string>();
    meta.config_digest = doc.value("config_digest", std::string());
    meta.target_vocab = doc.value("target_vocab", std::uint64_t{0});
    return TokenizerModel(std::move(merges), std::move(specials), std::move(meta));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kModelInvalid, e.what());
  }
}

void TokenizerModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << to_json();
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

TokenizerModel TokenizerModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string to_hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (const char c : bytes) {
    const auto b = static_cast<unsigned char>(c);
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::string from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw Error(ErrorCode::kModelInvalid, "odd-length hex string");
  }
  const auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw Error(ErrorCode::kModelInvalid, "invalid hex digit");
    }
    out.push_back(static_cast<char>((hi << 4) | lo));
  }
  return out;
}

}  // namespace bpekit
