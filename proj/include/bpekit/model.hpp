#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bpekit {

using TokenId = std::uint32_t;

inline constexpr std::size_t kByteTokenCount = 256;

// One learned pair replacement. The merged token's id is 256 + rank.
struct Merge {
  std::string left;
  std::string right;
  std::size_t rank = 0;

  bool operator==(const Merge&) const = default;
};

struct SpecialToken {
  std::string text;
  TokenId id = 0;

  bool operator==(const SpecialToken&) const = default;
};

// Assigns ids to `specials` in order, directly above the merged tokens.
// Throws DuplicateSpecial for repeated entries and ConfigInvalid for empty or
// single-byte strings (those would collide with the byte alphabet).
std::vector<SpecialToken> reserve_specials(
    const std::vector<std::string>& specials, std::size_t merge_count);

struct ModelMetadata {
  std::string unicode_version;
  std::uint64_t target_vocab = 0;
  std::string config_digest;

  bool operator==(const ModelMetadata&) const = default;
};

// Immutable trained tokenizer. Id layout: bytes [0, 256), merged tokens
// [256, 256 + merges), specials on top.
class TokenizerModel {
 public:
  // Validates that every merge operand is an already-available token, that
  // merged tokens are unique and that no merged token equals a special.
  // Throws ModelInvalid otherwise.
  TokenizerModel(std::vector<Merge> merges, std::vector<std::string> specials,
                 ModelMetadata metadata);

  std::size_t vocab_size() const noexcept { return id_to_bytes_.size(); }
  std::size_t merge_count() const noexcept { return merges_.size(); }
  std::span<const Merge> merges() const noexcept { return merges_; }
  std::span<const SpecialToken> specials() const noexcept { return specials_; }
  const ModelMetadata& metadata() const noexcept { return metadata_; }

  // Throws IdOutOfRange.
  std::string_view token_bytes(TokenId id) const;
  bool is_special(TokenId id) const noexcept;

  // Non-special token with exactly these bytes.
  std::optional<TokenId> find_token(std::string_view bytes) const;
  std::optional<TokenId> find_special(std::string_view text) const;

  // Rank of the merge (left, right), if one exists.
  std::optional<std::uint32_t> merge_rank(TokenId left,
                                          TokenId right) const noexcept {
    const auto it = pair_ranks_.find(pair_key(left, right));
    if (it == pair_ranks_.end()) return std::nullopt;
    return it->second;
  }

  // Canonical JSON; identical models serialize to identical bytes.
  std::string to_json() const;
  static TokenizerModel from_json(std::string_view json);

  void save(const std::filesystem::path& path) const;
  static TokenizerModel load(const std::filesystem::path& path);

  bool operator==(const TokenizerModel& other) const {
    return merges_ == other.merges_ && specials_ == other.specials_ &&
           metadata_ == other.metadata_;
  }

  static constexpr std::uint64_t pair_key(TokenId left, TokenId right) {
    return (static_cast<std::uint64_t>(left) << 32) | right;
  }

 private:
  std::vector<Merge> merges_;
  std::vector<SpecialToken> specials_;
  ModelMetadata metadata_;

  std::vector<std::string> id_to_bytes_;
  std::unordered_map<std::string, TokenId> bytes_to_id_;
  std::unordered_map<std::string, TokenId> special_to_id_;
  std::unordered_map<std::uint64_t, std::uint32_t> pair_ranks_;
};

std::string to_hex(std::string_view bytes);
// Throws ModelInvalid on odd length or non-hex characters.
std::string from_hex(std::string_view hex);

}  // namespace bpekit
