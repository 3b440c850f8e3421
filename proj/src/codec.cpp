#include "bpekit/codec.hpp"

#include <algorithm>
#include <queue>

#include "bpekit/pretokenizer.hpp"

namespace bpekit {
namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Symbols form a doubly linked list over the original byte positions.
// Candidate merges sit in a min-heap keyed by (rank, position of the left
// symbol); entries are re-validated on pop.
void merge_into(std::string_view pretoken, const TokenizerModel& model,
                std::vector<TokenId>& out) {
  const std::size_t n = pretoken.size();
  if (n == 0) return;
  if (n == 1) {
    out.push_back(static_cast<unsigned char>(pretoken[0]));
    return;
  }

  std::vector<TokenId> id(n);
  std::vector<std::size_t> prev(n), next(n);
  for (std::size_t i = 0; i < n; ++i) {
    id[i] = static_cast<unsigned char>(pretoken[i]);
    prev[i] = i == 0 ? kNone : i - 1;
    next[i] = i + 1 < n ? i + 1 : kNone;
  }

  struct Candidate {
    std::uint32_t rank;
    std::size_t left;
    std::size_t right;
    TokenId left_id;
    TokenId right_id;
    bool operator>(const Candidate& o) const {
      return rank != o.rank ? rank > o.rank : left > o.left;
    }
  };
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
  const auto push = [&](std::size_t left) {
    if (left == kNone) return;
    const std::size_t right = next[left];
    if (right == kNone) return;
    if (const auto rank = model.merge_rank(id[left], id[right])) {
      heap.push({*rank, left, right, id[left], id[right]});
    }
  };
  for (std::size_t i = 0; i + 1 < n; ++i) push(i);

  std::vector<bool> alive(n, true);
  while (!heap.empty()) {
    const Candidate c = heap.top();
    heap.pop();
    if (!alive[c.left] || !alive[c.right] || next[c.left] != c.right ||
        id[c.left] != c.left_id || id[c.right] != c.right_id) {
      continue;
    }
    id[c.left] = static_cast<TokenId>(kByteTokenCount + c.rank);
    alive[c.right] = false;
    next[c.left] = next[c.right];
    if (next[c.left] != kNone) prev[next[c.left]] = c.left;
    push(prev[c.left]);
    push(c.left);
  }

  for (std::size_t i = 0; i != kNone; i = next[i]) out.push_back(id[i]);
}

void encode_plain(std::string_view text, const TokenizerModel& model,
                  std::vector<TokenId>& out) {
  for_each_pretoken(text, [&](const PreToken& t) {
    merge_into(t.bytes, model, out);
  });
}

}  // namespace

std::vector<TokenId> encode(std::string_view text, const TokenizerModel& model,
                            EncodeOptions options) {
  std::vector<TokenId> out;
  out.reserve(text.size() / 2 + 1);
  if (!options.parse_specials || model.specials().empty()) {
    encode_plain(text, model, out);
    return out;
  }

  // Earliest special occurrence wins; among specials starting at the same
  // byte the longest one wins. Match positions are cached per special.
  const auto specials = model.specials();
  std::vector<std::size_t> next_at;
  for (const auto& special : specials) next_at.push_back(text.find(special.text));
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t best_at = std::string_view::npos;
    const SpecialToken* best = nullptr;
    for (std::size_t i = 0; i < specials.size(); ++i) {
      if (next_at[i] != std::string_view::npos && next_at[i] < pos) {
        next_at[i] = text.find(specials[i].text, pos);
      }
      const std::size_t at = next_at[i];
      if (at == std::string_view::npos) continue;
      if (at < best_at || (at == best_at && specials[i].text.size() > best->text.size())) {
        best_at = at;
        best = &specials[i];
      }
    }
    if (!best) {
      encode_plain(text.substr(pos), model, out);
      break;
    }
    encode_plain(text.substr(pos, best_at - pos), model, out);
    out.push_back(best->id);
    pos = best_at + best->text.size();
  }
  return out;
}

std::string decode(std::span<const TokenId> ids, const TokenizerModel& model) {
  std::string out;
  for (const TokenId id : ids) out.append(model.token_bytes(id));
  return out;
}

std::vector<TokenId> apply_merge_ids(std::string_view pretoken,
                                     const TokenizerModel& model) {
  std::vector<TokenId> out;
  merge_into(pretoken, model, out);
  return out;
}

std::vector<std::string> apply_merges(std::string_view pretoken,
                                      const TokenizerModel& model) {
  std::vector<std::string> out;
  for (const TokenId id : apply_merge_ids(pretoken, model)) {
    out.emplace_back(model.token_bytes(id));
  }
  return out;
}

}  // namespace bpekit
