#include "bpekit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "bpekit/chat_template.hpp"
#include "bpekit/errors.hpp"
#include "bpekit/pretokenizer.hpp"
#include "bpekit/unicode.hpp"
#include "json.hpp"

namespace bpekit {

std::vector<std::string> default_specials() {
  return {kTemplateSpecials.begin(), kTemplateSpecials.end()};
}

void validate(const TrainerConfig& config) {
  if (config.target_vocab < kByteTokenCount + config.specials.size()) {
    throw Error(ErrorCode::kConfigInvalid,
                "target_vocab " + std::to_string(config.target_vocab) +
                    " is below 256 + " + std::to_string(config.specials.size()) +
                    " specials");
  }
  if (config.min_pair_frequency < 1) {
    throw Error(ErrorCode::kConfigInvalid, "min_pair_frequency must be >= 1");
  }
  if (config.max_pretoken_bytes < 1) {
    throw Error(ErrorCode::kConfigInvalid, "max_pretoken_bytes must be >= 1");
  }
  reserve_specials(config.specials, 0);
  if (config.template_enabled) {
    for (const auto special : kTemplateSpecials) {
      if (std::find(config.specials.begin(), config.specials.end(), special) ==
          config.specials.end()) {
        throw Error(ErrorCode::kConfigInvalid,
                    "chat template requires special " + std::string(special));
      }
    }
  }
}

std::string config_digest(const TrainerConfig& config) {
  nlohmann::json doc = {
      {"target_vocab", config.target_vocab},
      {"specials", config.specials},
      {"min_pair_frequency", config.min_pair_frequency},
      {"seed", config.seed},
      {"max_pretoken_bytes", config.max_pretoken_bytes},
  };
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : doc.dump()) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

PairCounts count_pairs(std::span<const WordEntry> words) {
  PairCounts counts;
  for (const auto& word : words) {
    for (std::size_t i = 0; i + 1 < word.tokens.size(); ++i) {
      counts[{word.tokens[i], word.tokens[i + 1]}] += word.count;
    }
  }
  return counts;
}

std::optional<TokenPair> select_merge(
    const PairCounts& counts, WeightedCount min_count,
    const std::function<bool(const TokenPair&)>& eligible) {
  const TokenPair* best = nullptr;
  WeightedCount best_count = 0;
  // std::map iterates in (left, right) order, so the first maximum found is
  // the lexicographically smallest one.
  for (const auto& [pair, count] : counts) {
    if (count < min_count || (best && count <= best_count)) continue;
    if (eligible && !eligible(pair)) continue;
    best = &pair;
    best_count = count;
  }
  if (!best) return std::nullopt;
  return *best;
}

namespace {

WeightedCount to_units(double weight) {
  if (!std::isfinite(weight) || weight <= 0.0) {
    throw Error(ErrorCode::kConfigInvalid,
                "document weight must be finite and positive");
  }
  const auto units = std::llround(weight * static_cast<double>(kWeightScale));
  return std::max<WeightedCount>(units, 1);
}

using WordMap = std::unordered_map<std::string, WeightedCount>;

void count_range(std::span<const WeightedDocument> docs, std::size_t cap,
                 WordMap& out) {
  for (const auto& doc : docs) {
    const WeightedCount units = to_units(doc.weight);
    for_each_pretoken(doc.text, [&](const PreToken& t) {
      if (t.bytes.size() <= cap) out[std::string(t.bytes)] += units;
    });
  }
}

// Incremental BPE merge loop. Pair counts live in a hash map; a lazy max-heap
// orders candidates; each pair remembers which words contain it so a merge
// only revisits those words.
class MergeLearner {
 private:
  struct Word {
    std::vector<TokenId> symbols;
    WeightedCount count = 0;
  };

  struct Entry {
    WeightedCount count;
    TokenId left;
    TokenId right;
  };

  struct LowerPriority {
    const std::vector<std::string>* vocab;
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.count != b.count) return a.count < b.count;
      const int left = (*vocab)[a.left].compare((*vocab)[b.left]);
      if (left != 0) return left > 0;
      return (*vocab)[a.right].compare((*vocab)[b.right]) > 0;
    }
  };

  LowerPriority lower_priority() const { return {&vocab_}; }

  static Entry entry(std::uint64_t key, WeightedCount count) {
    return {count, static_cast<TokenId>(key >> 32),
            static_cast<TokenId>(key & 0xFFFFFFFFu)};
  }

  std::optional<Entry> pop_best() {
    const auto cmp = lower_priority();
    while (!heap_.empty()) {
      std::pop_heap(heap_.begin(), heap_.end(), cmp);
      const Entry top = heap_.back();
      heap_.pop_back();
      const auto key = TokenizerModel::pair_key(top.left, top.right);
      const auto it = counts_.find(key);
      if (it == counts_.end() || it->second != top.count) continue;
      if (banned_.contains(key)) continue;
      if (taken_.contains(vocab_[top.left] + vocab_[top.right])) {
        banned_.insert(key);
        continue;
      }
      return top;
    }
    return std::nullopt;
  }

  void apply(const Entry& best, std::uint32_t merge_serial) {
    const auto new_id = static_cast<TokenId>(vocab_.size());
    vocab_.push_back(vocab_[best.left] + vocab_[best.right]);
    taken_.insert(vocab_.back());

    const auto key = TokenizerModel::pair_key(best.left, best.right);
    std::vector<std::uint32_t> affected;
    if (auto it = where_.find(key); it != where_.end()) {
      affected = std::move(it->second);
      where_.erase(it);
    }

    std::vector<std::uint64_t> touched;
    std::vector<TokenId> merged;
    for (const std::uint32_t w : affected) {
      if (stamp_[w] == merge_serial) continue;
      stamp_[w] = merge_serial;
      auto& sym = words_[w].symbols;

      merged.clear();
      bool changed = false;
      for (std::size_t i = 0; i < sym.size();) {
        if (i + 1 < sym.size() && sym[i] == best.left && sym[i + 1] == best.right) {
          merged.push_back(new_id);
          i += 2;
          changed = true;
        } else {
          merged.push_back(sym[i]);
          ++i;
        }
      }
      if (!changed) continue;

      const WeightedCount c = words_[w].count;
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
        const auto k = TokenizerModel::pair_key(sym[i], sym[i + 1]);
        counts_[k] -= c;
        touched.push_back(k);
      }
      for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
        const auto k = TokenizerModel::pair_key(merged[i], merged[i + 1]);
        counts_[k] += c;
        touched.push_back(k);
        if (merged[i] == new_id || merged[i + 1] == new_id) {
          auto& where = where_[k];
          if (where.empty() || where.back() != w) where.push_back(w);
        }
      }
      sym.swap(merged);
    }

    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    const auto cmp = lower_priority();
    for (const auto k : touched) {
      const auto it = counts_.find(k);
      if (it == counts_.end()) continue;
      if (it->second == 0) {
        counts_.erase(it);
        where_.erase(k);
        continue;
      }
      heap_.push_back(entry(k, it->second));
      std::push_heap(heap_.begin(), heap_.end(), cmp);
    }
  }

 public:
  MergeLearner(std::span<const std::pair<std::string, WeightedCount>> word_counts,
               const std::vector<std::string>& specials) {
    vocab_.reserve(kByteTokenCount + 1024);
    for (std::size_t b = 0; b < kByteTokenCount; ++b) {
      vocab_.emplace_back(1, static_cast<char>(b));
      taken_.insert(vocab_.back());
    }
    for (const auto& s : specials) taken_.insert(s);

    words_.reserve(word_counts.size());
    for (const auto& [bytes, count] : word_counts) {
      Word w;
      w.count = count;
      w.symbols.reserve(bytes.size());
      for (const char c : bytes) {
        w.symbols.push_back(static_cast<unsigned char>(c));
      }
      words_.push_back(std::move(w));
    }
    stamp_.assign(words_.size(), 0);

    for (std::uint32_t w = 0; w < words_.size(); ++w) {
      const auto& sym = words_[w].symbols;
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
        const auto key = TokenizerModel::pair_key(sym[i], sym[i + 1]);
        counts_[key] += words_[w].count;
        auto& where = where_[key];
        if (where.empty() || where.back() != w) where.push_back(w);
      }
    }
    heap_.reserve(counts_.size());
    for (const auto& [key, count] : counts_) heap_.push_back(entry(key, count));
    std::make_heap(heap_.begin(), heap_.end(), lower_priority());
  }

  std::vector<Merge> run(std::size_t max_merges, WeightedCount min_count) {
    std::vector<Merge> merges;
    while (merges.size() < max_merges) {
      const auto best = pop_best();
      if (!best || best->count < min_count) break;
      merges.push_back({vocab_[best->left], vocab_[best->right], merges.size()});
      apply(*best, static_cast<std::uint32_t>(merges.size()));
    }
    return merges;
  }

 private:
  std::vector<std::string> vocab_;
  std::unordered_set<std::string> taken_;
  std::vector<Word> words_;
  std::vector<std::uint32_t> stamp_;
  std::unordered_map<std::uint64_t, WeightedCount> counts_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where_;
  std::unordered_set<std::uint64_t> banned_;
  std::vector<Entry> heap_;
};

}  // namespace

std::vector<std::pair<std::string, WeightedCount>> count_words(
    std::span<const WeightedDocument> corpus, const TrainerConfig& config) {
  unsigned jobs = config.jobs ? config.jobs : std::thread::hardware_concurrency();
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(
                                                   std::max<std::size_t>(corpus.size(), 1))));

  std::vector<WordMap> partial(jobs);
  if (jobs == 1) {
    count_range(corpus, config.max_pretoken_bytes, partial[0]);
  } else {
    // Contiguous shards; integer sums make the reduction order irrelevant.
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    const std::size_t chunk = (corpus.size() + jobs - 1) / jobs;
    for (unsigned j = 0; j < jobs; ++j) {
      const std::size_t begin = std::min(corpus.size(), j * chunk);
      const std::size_t end = std::min(corpus.size(), begin + chunk);
      workers.emplace_back([&, j, begin, end] {
        try {
          count_range(corpus.subspan(begin, end - begin),
                      config.max_pretoken_bytes, partial[j]);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (unsigned j = 1; j < jobs; ++j) {
      for (auto& [word, count] : partial[j]) partial[0][word] += count;
      partial[j].clear();
    }
  }

  std::vector<std::pair<std::string, WeightedCount>> out(
      std::make_move_iterator(partial[0].begin()),
      std::make_move_iterator(partial[0].end()));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Merge> learn_merges(
    std::span<const std::pair<std::string, WeightedCount>> word_counts,
    std::size_t max_merges, WeightedCount min_count,
    const std::vector<std::string>& specials) {
  if (max_merges == 0) return {};
  MergeLearner learner(word_counts, specials);
  return learner.run(max_merges, min_count);
}

TokenizerModel train(std::span<const WeightedDocument> corpus,
                     const TrainerConfig& config) {
  validate(config);
  if (corpus.empty()) {
    throw Error(ErrorCode::kCorpusEmpty, "corpus has no documents");
  }
  const auto words = count_words(corpus, config);
  const std::size_t max_merges =
      config.target_vocab - kByteTokenCount - config.specials.size();
  auto merges = learn_merges(words, max_merges,
                             config.min_pair_frequency * kWeightScale,
                             config.specials);

  ModelMetadata meta;
  meta.unicode_version = std::string(unicode::table_version());
  meta.target_vocab = config.target_vocab;
  meta.config_digest = config_digest(config);
  return TokenizerModel(std::move(merges), config.specials, std::move(meta));
}

TokenizerModel train(const std::vector<std::string>& corpus,
                     const TrainerConfig& config) {
  std::vector<WeightedDocument> docs;
  docs.reserve(corpus.size());
  for (const auto& text : corpus) docs.push_back({text, 1.0, 0});
  return train(docs, config);
}

}  // namespace bpekit
