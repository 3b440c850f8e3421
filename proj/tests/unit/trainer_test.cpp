#include "doctest.h"

#include "bpekit/codec.hpp"
#include "bpekit/errors.hpp"
#include "bpekit/trainer.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace bpekit;

namespace {

TrainerConfig plain_config(std::size_t merges, std::int64_t min_freq = 2) {
  TrainerConfig config;
  config.specials = {};
  config.template_enabled = false;
  config.target_vocab = 256 + merges;
  config.min_pair_frequency = min_freq;
  config.jobs = 1;
  return config;
}

std::vector<testing::StringPair> pairs_of(const TokenizerModel& m) {
  std::vector<testing::StringPair> out;
  for (const auto& merge : m.merges()) out.emplace_back(merge.left, merge.right);
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_CASE("count_pairs") {
  const auto words = [](std::vector<std::pair<std::string, WeightedCount>> in) {
    std::vector<WordEntry> out;
    for (auto& [w, c] : in) out.push_back({testing::bytes_of(w), c});
    return out;
  };
  CHECK(count_pairs(words({{"ab", 3}})) == PairCounts{{{"a", "b"}, 3}});
  CHECK(count_pairs(words({{"aa", 2}, {"ab", 1}})) ==
        PairCounts{{{"a", "a"}, 2}, {{"a", "b"}, 1}});
  CHECK(count_pairs(words({{"a", 5}})).empty());
  // Pairs never span words.
  CHECK(count_pairs(words({{"a", 1}, {"b", 1}})).empty());
  // Multi-byte tokens.
  std::vector<WordEntry> merged = {{{"aa", "b", "aa"}, 2}};
  CHECK(count_pairs(merged) == PairCounts{{{"aa", "b"}, 2}, {{"b", "aa"}, 2}});
}

TEST_CASE("select_merge") {
  CHECK(select_merge({{{"a", "a"}, 4}, {{"a", "b"}, 2}}, 1) == TokenPair{"a", "a"});
  CHECK(select_merge({{{"a", "b"}, 3}, {{"a", "a"}, 3}}, 1) == TokenPair{"a", "a"});
  CHECK_FALSE(select_merge({}, 1));
  CHECK_FALSE(select_merge({{{"a", "b"}, 1}}, 2));
  // Ties compare left first, then right, as raw bytes.
  CHECK(select_merge({{{"b", "a"}, 3}, {{"ab", "z"}, 3}}, 1) == TokenPair{"ab", "z"});
  CHECK(select_merge({{{"\xff", "a"}, 3}, {{"z", "z"}, 3}}, 1) == TokenPair{"z", "z"});
  // Ineligible pairs are skipped.
  const auto skip_aa = [](const TokenPair& p) { return p != TokenPair{"a", "a"}; };
  CHECK(select_merge({{{"a", "a"}, 4}, {{"a", "b"}, 2}}, 1, skip_aa) == TokenPair{"a", "b"});
}

TEST_CASE("train: first merge is the strict maximum") {
  auto config = plain_config(2);
  config.specials = {"<|think|>"};
  config.target_vocab = 256 + 2 + 1;
  const auto m = train(std::vector<std::string>{"aaabdaaabc"}, config);
  REQUIRE(m.merge_count() >= 1);
  CHECK(m.merges()[0] == Merge{"a", "a", 0});
}

TEST_CASE("train: no repeated pair yields no merges") {
  const auto m = train(std::vector<std::string>{"abcdef"}, plain_config(10));
  CHECK(m.merge_count() == 0);
  CHECK(m.vocab_size() == 256);
}

TEST_CASE("train: stops at the merge budget") {
  const auto m = train(std::vector<std::string>{"abababab cdcdcdcd efefef"}, plain_config(3, 1));
  CHECK(m.merge_count() == 3);
}

TEST_CASE("train: vocab target recorded") {
  TrainerConfig config;
  config.jobs = 1;
  CHECK(config.target_vocab == 196'608);
  const auto m = train(std::vector<std::string>{"hello hello world"}, config);
  CHECK(m.metadata().target_vocab == 196'608);
  CHECK(m.metadata().unicode_version == "13.0.0");
  CHECK(m.metadata().config_digest == config_digest(config));
  CHECK(m.vocab_size() <= 196'608);
  CHECK(m.specials().size() == 12);
  CHECK(m.specials().back().id == m.vocab_size() - 1);
}

TEST_CASE("train: errors") {
  CHECK(code_of([] { train(std::vector<std::string>{}, plain_config(4)); }) ==
        ErrorCode::kCorpusEmpty);
  auto low = plain_config(0);
  low.specials = {"<|a|>"};
  CHECK(code_of([&] { train(std::vector<std::string>{"x"}, low); }) ==
        ErrorCode::kConfigInvalid);
  auto zero_freq = plain_config(4, 0);
  CHECK(code_of([&] { validate(zero_freq); }) == ErrorCode::kConfigInvalid);
  auto dup = plain_config(10);
  dup.specials = {"<|a|>", "<|a|>"};
  CHECK(code_of([&] { validate(dup); }) == ErrorCode::kDuplicateSpecial);
}

TEST_CASE("empty specials depend on the template switch") {
  TrainerConfig with_template;
  with_template.specials = {};
  CHECK(code_of([&] { validate(with_template); }) == ErrorCode::kConfigInvalid);
  TrainerConfig without = with_template;
  without.template_enabled = false;
  CHECK_NOTHROW(validate(without));
}

TEST_CASE("merges never produce a special or an existing token") {
  // "<>" would be the top pair but is reserved.
  auto config = plain_config(5, 1);
  config.specials = {"<>"};
  config.target_vocab = 256 + 1 + 5;
  const auto m = train(std::vector<std::string>{"<> <> <> <> ab ab"}, config);
  for (const auto& merge : m.merges()) CHECK(merge.left + merge.right != "<>");
}

TEST_CASE("document weights scale counts") {
  std::vector<WeightedDocument> docs = {{"ab ab", 1.0, 0}, {"cd", 3.0, 1}};
  const auto words = count_words(docs, plain_config(1));
  REQUIRE(words.size() == 3);
  CHECK(words[0] == std::pair<std::string, WeightedCount>{" ab", kWeightScale});
  CHECK(words[1] == std::pair<std::string, WeightedCount>{"ab", kWeightScale});
  CHECK(words[2] == std::pair<std::string, WeightedCount>{"cd", 3 * kWeightScale});
  // "cd" (weight 3) outranks "ab" (twice at weight 1).
  const auto m = train(docs, plain_config(1, 1));
  CHECK(m.merges()[0] == Merge{"c", "d", 0});
}

TEST_CASE("long pre-tokens are excluded from counts") {
  auto config = plain_config(4, 1);
  config.max_pretoken_bytes = 4;
  const auto words = count_words(std::vector<WeightedDocument>{{"abcdefgh ab", 1.0, 0}}, config);
  REQUIRE(words.size() == 1);
  CHECK(words[0].first == " ab");
}

TEST_CASE("parallel counting equals sequential counting") {
  testing::Rng rng(3);
  std::vector<WeightedDocument> docs;
  for (int i = 0; i < 200; ++i) docs.push_back({testing::random_mixed(rng), 1.0 + (i % 3), 0});
  auto one = plain_config(300);
  auto four = one;
  four.jobs = 4;
  CHECK(count_words(docs, one) == count_words(docs, four));
  CHECK(train(docs, one) == train(docs, four));
}

TEST_CASE("oracle equivalence on random corpora") {
  testing::Rng rng(2024);
  for (int round = 0; round < 40; ++round) {
    std::vector<WeightedDocument> docs;
    std::vector<std::pair<std::string, std::int64_t>> oracle_docs;
    std::size_t bytes = 0;
    while (bytes < 600) {
      std::string text = round % 2 ? testing::random_mixed(rng) : testing::english_document(rng);
      if (text.size() > 200) text.resize(200);
      const double weight = 0.5 * static_cast<double>(1 + rng() % 4);
      bytes += text.size();
      oracle_docs.push_back({text, std::llround(weight * kWeightScale)});
      docs.push_back({std::move(text), weight, 0});
    }
    const std::size_t merges = 1 + rng() % 50;
    const std::int64_t min_freq = 1 + static_cast<std::int64_t>(rng() % 2);
    const auto model = train(docs, plain_config(merges, min_freq));
    const auto expected =
        testing::naive_train(oracle_docs, merges, min_freq * kWeightScale, {}, 128);
    CHECK(pairs_of(model) == expected);
  }
}

TEST_CASE("prefix stability and determinism") {
  testing::Rng rng(8);
  std::vector<std::string> docs;
  for (int i = 0; i < 300; ++i) docs.push_back(testing::korean_document(rng));
  const auto small = train(docs, plain_config(100));
  const auto large = train(docs, plain_config(250));
  REQUIRE(small.merge_count() == 100);
  REQUIRE(large.merge_count() >= 100);
  for (std::size_t i = 0; i < small.merge_count(); ++i) {
    CHECK(small.merges()[i] == large.merges()[i]);
  }
  CHECK(train(docs, plain_config(250)).to_json() == large.to_json());
}

TEST_CASE("every merge is well formed by replay") {
  testing::Rng rng(9);
  std::vector<std::string> docs;
  for (int i = 0; i < 100; ++i) docs.push_back(testing::random_code(rng));
  const auto m = train(docs, plain_config(200));
  std::set<std::string> available;
  for (int b = 0; b < 256; ++b) available.insert(std::string(1, static_cast<char>(b)));
  for (const auto& merge : m.merges()) {
    CHECK(available.contains(merge.left));
    CHECK(available.contains(merge.right));
    CHECK(available.insert(merge.left + merge.right).second);
  }
}

TEST_CASE("token count does not grow with more merges") {
  testing::Rng rng(10);
  std::vector<std::string> docs;
  for (int i = 0; i < 200; ++i) docs.push_back(testing::english_document(rng));
  const auto m1 = train(docs, plain_config(50));
  const auto m2 = train(docs, plain_config(400));
  std::size_t t1 = 0;
  std::size_t t2 = 0;
  for (const auto& d : docs) {
    t1 += encode(d, m1).size();
    t2 += encode(d, m2).size();
  }
  CHECK(t2 <= t1);
}
