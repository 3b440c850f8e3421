#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bpekit/model.hpp"

namespace bpekit {

// Weighted counts are fixed-point integers so that incremental updates and a
// full recount always agree exactly. Document weight 1.0 == kWeightScale.
using WeightedCount = std::int64_t;
inline constexpr WeightedCount kWeightScale = 1024;

// Chat template inventory; the default special-token table.
std::vector<std::string> default_specials();

struct TrainerConfig {
  std::size_t target_vocab = 196'608;
  std::vector<std::string> specials = default_specials();
  // In documents (weight 1.0 each); scaled by kWeightScale internally.
  std::int64_t min_pair_frequency = 2;
  std::uint64_t seed = 0;
  // Pre-tokens longer than this are left out of the word counts.
  std::size_t max_pretoken_bytes = 128;
  // When set, `specials` must contain the full chat template inventory.
  bool template_enabled = true;
  // Worker threads for word counting; 0 = hardware concurrency.
  unsigned jobs = 0;
};

// Throws ConfigInvalid / DuplicateSpecial.
void validate(const TrainerConfig& config);
// Hex FNV-1a digest of the output-affecting config fields.
std::string config_digest(const TrainerConfig& config);

struct WeightedDocument {
  std::string text;
  double weight = 1.0;
  // Source index within a mixture; informational.
  std::size_t source = 0;
};

using TokenPair = std::pair<std::string, std::string>;
using PairCounts = std::map<TokenPair, WeightedCount>;

// A pre-token split into its current token byte-strings.
struct WordEntry {
  std::vector<std::string> tokens;
  WeightedCount count = 0;
};

// Every adjacent token pair inside every word, weighted by the word's count.
PairCounts count_pairs(std::span<const WordEntry> words);

// Highest count wins; ties go to the lexicographically smallest (left, right)
// byte-strings. Pairs rejected by `eligible` are ignored. Returns nullopt when
// nothing reaches `min_count`.
std::optional<TokenPair> select_merge(
    const PairCounts& counts, WeightedCount min_count,
    const std::function<bool(const TokenPair&)>& eligible = {});

// Pre-tokenizes every document and sums weights per distinct pre-token.
// Result is sorted by bytes.
std::vector<std::pair<std::string, WeightedCount>> count_words(
    std::span<const WeightedDocument> corpus, const TrainerConfig& config);

// Learns up to target_vocab - 256 - |specials| merges. A pair is skipped when
// its concatenation already exists as a token or equals a special.
// Throws CorpusEmpty, ConfigInvalid.
TokenizerModel train(std::span<const WeightedDocument> corpus,
                     const TrainerConfig& config);
TokenizerModel train(const std::vector<std::string>& corpus,
                     const TrainerConfig& config);

// Runs the merge loop on already counted words.
std::vector<Merge> learn_merges(
    std::span<const std::pair<std::string, WeightedCount>> word_counts,
    std::size_t max_merges, WeightedCount min_count,
    const std::vector<std::string>& specials);

}  // namespace bpekit
