#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bpekit/model.hpp"

namespace bpekit {

struct EncodeOptions {
  // Map exact special-token strings to their ids. Leave off for untrusted
  // user text; turn on for template-rendered text.
  bool parse_specials = false;
};

// Pre-tokenizes `text` and applies merges inside each pre-token in ascending
// rank order, leftmost occurrence first. Total over arbitrary bytes.
std::vector<TokenId> encode(std::string_view text, const TokenizerModel& model,
                            EncodeOptions options = {});

// Concatenated token bytes; specials render as their literal strings.
// Throws IdOutOfRange.
std::string decode(std::span<const TokenId> ids, const TokenizerModel& model);

// Merge fixpoint for a single pre-token, as ids.
std::vector<TokenId> apply_merge_ids(std::string_view pretoken,
                                     const TokenizerModel& model);

// Same as apply_merge_ids, returned as token byte-strings.
std::vector<std::string> apply_merges(std::string_view pretoken,
                                      const TokenizerModel& model);

}  // namespace bpekit
