// Acceptance gate: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bpekit/benchmark.hpp"
#include "bpekit/chat_template.hpp"
#include "bpekit/cli.hpp"
#include "bpekit/codec.hpp"
#include "bpekit/corpus.hpp"
#include "bpekit/errors.hpp"
#include "bpekit/trainer.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#ifndef BPEKIT_DATA_DIR
#error "BPEKIT_DATA_DIR must point at the data directory"
#endif

namespace {

using namespace bpekit;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bpekit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

// Model shared by the codec and template criteria: the reference mixture
// plus generated edge-case text, vocab 4096.
const TokenizerModel& shared_model() {
  static const TokenizerModel model = [] {
    testing::Rng rng(1001);
    std::vector<WeightedDocument> docs;
    const testing::Family families[] = {testing::Family::kEnglish, testing::Family::kKorean,
                               testing::Family::kCode,    testing::Family::kMath,
                               testing::Family::kMultilingual, testing::Family::kDomain};
    std::size_t bytes = 0;
    for (std::size_t i = 0; bytes < 2'000'000; ++i) {
      std::string text = i % 4 == 3 ? testing::random_mixed(rng)
                                     : testing::document_of(families[i % 6], rng);
      bytes += text.size();
      docs.push_back({std::move(text), 1.0, 0});
    }
    TrainerConfig config;
    config.target_vocab = 4096;
    return train(docs, config);
  }();
  return model;
}

// The 10,000-string generator of the round-trip and digit criteria.
std::vector<std::string> generated_strings() {
  testing::Rng rng(20'240'101);
  std::vector<std::string> out;
  out.reserve(10'000);
  for (int i = 0; i < 10'000; ++i) {
    switch (i % 3) {
      case 0: out.push_back(testing::random_bytes(rng, 256)); break;
      case 1: out.push_back(testing::random_unicode(rng, 128)); break;
      default: out.push_back(testing::random_code(rng)); break;
    }
  }
  return out;
}

Outcome round_trip() {
  const auto& model = shared_model();
  const auto start = Clock::now();
  const auto strings = generated_strings();
  std::size_t ok = 0;
  for (const auto& s : strings) ok += decode(encode(s, model), model) == s;
  const double t = seconds_since(start);
  return {ok == strings.size() && t < 10.0,
          fmt("%zu/%zu strings round-trip, %.2f s (limit 10 s)", ok, strings.size(), t)};
}

Outcome digit_isolation() {
  const auto& model = shared_model();
  std::size_t tokens = 0;
  std::size_t offenders = 0;
  for (const auto& s : generated_strings()) {
    for (const auto id : encode(s, model)) {
      ++tokens;
      offenders += testing::count_digit_codepoints(model.token_bytes(id)) >= 2;
    }
  }
  const auto ids = encode("1234567890", model);
  bool single_digits = ids.size() == 10;
  for (std::size_t i = 0; single_digits && i < ids.size(); ++i) {
    single_digits = model.token_bytes(ids[i]) == std::string(1, "1234567890"[i]);
  }
  return {offenders == 0 && single_digits,
          fmt("%zu of %zu tokens hold >= 2 digits; \"1234567890\" -> %zu tokens", offenders,
              tokens, ids.size())};
}

Outcome trainer_oracle() {
  const auto start = Clock::now();
  testing::Rng rng(77);
  std::size_t matches = 0;
  std::size_t total_merges = 0;
  for (int c = 0; c < 50; ++c) {
    std::vector<WeightedDocument> docs;
    std::vector<std::pair<std::string, std::int64_t>> oracle_docs;
    std::size_t bytes = 0;
    while (true) {
      std::string text;
      switch (rng() % 4) {
        case 0: text = testing::english_document(rng); break;
        case 1: text = testing::korean_document(rng); break;
        case 2: text = testing::random_code(rng); break;
        default: text = testing::random_mixed(rng); break;
      }
      text.resize(std::min<std::size_t>(text.size(), 1024 - bytes));
      if (text.empty()) break;
      bytes += text.size();
      const double weight = 0.5 * static_cast<double>(1 + rng() % 4);
      oracle_docs.push_back({text, std::llround(weight * kWeightScale)});
      docs.push_back({std::move(text), weight, 0});
      if (bytes >= 1024) break;
    }
    TrainerConfig config;
    config.min_pair_frequency = 1 + c % 2;
    config.target_vocab = 256 + config.specials.size() + 50;
    const auto model = train(docs, config);
    const auto expected = testing::naive_train(
        oracle_docs, 50, config.min_pair_frequency * kWeightScale, config.specials,
        config.max_pretoken_bytes);
    std::vector<testing::StringPair> got;
    for (const auto& m : model.merges()) got.emplace_back(m.left, m.right);
    matches += got == expected;
    total_merges += got.size();
  }
  const double t = seconds_since(start);
  return {matches == 50 && t < 30.0,
          fmt("%zu/50 corpora match the full-recount oracle (%zu merges), %.2f s (limit 30 s)",
              matches, total_merges, t)};
}

Outcome determinism() {
  const auto dir = testing::scratch_dir("acceptance_determinism");
  testing::write_reference_mixture(dir, 10'000'000, 42);
  double worst = 0;
  std::vector<std::string> files;
  for (int run = 0; run < 2; ++run) {
    const auto out = dir / ("model" + std::to_string(run) + ".json");
    const auto start = Clock::now();
    const int code = run_cli({"train", "--mixture", (dir / "mixture.json").string(), "--vocab",
                              "8192", "--out", out.string()});
    worst = std::max(worst, seconds_since(start));
    if (code != 0) return {false, fmt("train run %d exited %d", run, code)};
    files.push_back(slurp(out));
  }
  const auto model = TokenizerModel::from_json(files[0]);
  fs::remove_all(dir);
  return {files[0] == files[1] && worst < 120.0,
          fmt("10 MB mixture, vocab 8192 (%zu merges): files %s, slowest run %.1f s (limit 120 s)",
              model.merge_count(), files[0] == files[1] ? "byte-identical" : "DIFFER", worst)};
}

Outcome korean_direction() {
  const auto start = Clock::now();
  const auto dir = testing::scratch_dir("acceptance_direction");
  constexpr std::uint64_t kBudget = 4'000'000;

  const auto mixed_spec = testing::write_reference_mixture(dir / "mixed", kBudget, 5);
  const auto mixed = sample_mixture(mixed_spec);

  testing::write_jsonl(dir / "english.jsonl", testing::Family::kEnglish, kBudget + 100'000, 6);
  MixtureSpec english_spec;
  english_spec.sources.push_back({"english", {dir / "english.jsonl"}, 1.0, "en", "web", {}});
  english_spec.total_bytes = kBudget;
  const auto english = sample_mixture(english_spec);

  TrainerConfig config;
  config.target_vocab = 4096;
  const auto model_a = train(mixed.documents, config);
  const auto model_b = train(english.documents, config);

  testing::write_jsonl(dir / "heldout_ko.jsonl", testing::Family::kKorean, 500'000, 999);
  SliceCorpus heldout;
  heldout.slice.language = "ko";
  heldout.documents = load_documents({dir / "heldout_ko.jsonl"}).documents;
  const std::vector<SliceCorpus> corpora = {heldout};
  const std::vector<NamedModel> models = {{"a-mixture", model_a}, {"b-english", model_b}};
  const auto report = run_benchmark(corpora, models);
  const double a = report.rows.at(0).bytes_per_token().value();
  const double b = report.rows.at(1).bytes_per_token().value();
  const double t = seconds_since(start);
  fs::remove_all(dir);
  const double gain = relative_gain(a, b);
  return {gain >= 0.20 && t < 300.0,
          fmt("held-out Korean bytes/token: mixture %.3f vs English-only %.3f (%s, need >= +20%%), "
              "%.1f s (limit 300 s)",
              a, b, format_percent(gain).c_str(), t)};
}

Outcome gain_arithmetic() {
  const auto baselines = load_baselines(fs::path(BPEKIT_DATA_DIR) / "baselines.json");
  struct Case {
    const char* baseline;
    const char* slice;
    long expected_pct;
  };
  const Case cases[] = {
      {"gpt-oss", "language=ko,reasoning=false", 36},
      {"deepseek-v3", "language=ko,reasoning=false", 47},
      {"kormo", "language=ko,reasoning=false", 5},
      {"gpt-oss", "language=ko,reasoning=true", 34},
  };
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    const double a = baselines.at("solar-open").bytes_per_token.at(c.slice);
    const double b = baselines.at(c.baseline).bytes_per_token.at(c.slice);
    const double g = relative_gain(a, b);
    const long pct = rounded_percent(g);
    pass = pass && std::labs(pct - c.expected_pct) <= 1;
    if (!detail.empty()) detail += "; ";
    detail += fmt("(%.2f, %.2f) -> %s, rounds to %+ld%% (expected %+ld%%)", a, b,
                  format_percent(g).c_str(), pct, c.expected_pct);
  }
  return {pass, detail};
}

Outcome metric_exactness() {
  std::vector<Merge> merges = {
      {"a", "b"},           {"ab", "c"},          {"\xED", "\x95"}, {"\xED\x95", "\x9C"},
      {"\xEA", "\xB5"},     {"\xEA\xB5", "\xAD"}, {" ", "a"},       {" a", "b"},
  };
  for (std::size_t i = 0; i < merges.size(); ++i) merges[i].rank = i;
  const TokenizerModel model(merges, {}, {"13.0.0", 0, ""});

  // Bytes and tokens counted by hand against the merge table above.
  struct Fixture {
    std::string text;
    std::uint64_t bytes;
    std::uint64_t tokens;
  };
  const std::vector<Fixture> fixtures = {
      {"abc", 3, 1},          {"ab", 2, 1},          {"a", 1, 1},
      {"abcabc", 6, 2},       {"한국", 6, 2},        {"한", 3, 1},
      {"한국어", 9, 5},       {"1234", 4, 4},        {" ab", 3, 2},
      {" a", 2, 1},           {"x abc", 5, 3},       {"a1b2", 4, 4},
      {"abab", 4, 2},         {"\xFF\xFE", 2, 2},    {"한 국", 7, 3},
      {"   abc", 6, 4},       {"abc!", 4, 2},        {"ab\nab", 5, 3},
      {"\xF0\x9F\x98\x80", 4, 4}, {"국국국", 9, 3},
  };
  std::size_t exact = 0;
  for (const auto& f : fixtures) {
    const auto bpt = bytes_per_token(f.text, model);
    const bool ok = bpt.bytes == f.bytes && bpt.tokens == f.tokens &&
                    bpt.bytes * f.tokens == f.bytes * bpt.tokens &&
                    std::llround(bpt.value() * static_cast<double>(bpt.tokens)) ==
                        static_cast<long long>(bpt.bytes);
    if (!ok) {
      std::cerr << "fixture " << f.text << ": got " << bpt.bytes << "/" << bpt.tokens
                << ", expected " << f.bytes << "/" << f.tokens << '\n';
    }
    exact += ok;
  }

  // 18 bytes in 6 tokens (3.0) and 2 bytes in 2 tokens (1.0).
  SliceCorpus slice;
  slice.documents = {{"abcabcabcabcabcabc", false}, {"12", false}};
  const std::vector<SliceCorpus> corpora = {slice};
  const std::vector<NamedModel> models = {{"toy", model}};
  const auto row = run_benchmark(corpora, models).rows.at(0);
  const double aggregate = row.bytes_per_token().value();
  const double mean_of_ratios = (3.0 + 1.0) / 2.0;
  const bool aggregate_ok = row.bytes == 20 && row.tokens == 8 && aggregate == 2.5 &&
                            std::abs(aggregate / mean_of_ratios - 1.0) > 0.10;
  return {exact == fixtures.size() && aggregate_ok,
          fmt("%zu/%zu fixtures exact; aggregate %.3f (20/8) vs mean-of-ratios %.3f", exact,
              fixtures.size(), aggregate, mean_of_ratios)};
}

// Specials in `text`, scanned left to right, earliest and then longest match.
std::vector<std::string> scan_specials(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t best = std::string_view::npos;
    std::string_view match;
    for (const auto s : kTemplateSpecials) {
      const auto at = text.find(s, pos);
      if (at < best || (at == best && at != std::string_view::npos && s.size() > match.size())) {
        best = at;
        match = s;
      }
    }
    if (best == std::string_view::npos) return out;
    out.emplace_back(match);
    pos = best + match.size();
  }
}

std::vector<Segment> without_think(const Message& m) {
  std::vector<Segment> out;
  for (const auto& s : m.segments) {
    if (!std::holds_alternative<ThinkSegment>(s)) out.push_back(s);
  }
  return out;
}

Outcome chat_template() {
  const auto& model = shared_model();
  testing::Rng rng(8);
  std::size_t round_trips = 0, strips = 0, atomic = 0, thinks = 0, calls = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto conv = testing::random_conversation(rng, 6, 3);
    const std::string text = render(conv);
    round_trips += parse(text) == conv;

    const auto stripped = strip_reasoning(conv, 0);
    bool strip_ok = stripped.messages.size() == conv.messages.size();
    for (std::size_t m = 0; strip_ok && m < conv.messages.size(); ++m) {
      const auto& before = conv.messages[m];
      const auto& after = stripped.messages[m];
      for (const auto& s : before.segments) {
        thinks += std::holds_alternative<ThinkSegment>(s);
        calls += std::holds_alternative<ToolCallSegment>(s);
      }
      strip_ok = after.role == before.role && after.segments == without_think(before);
    }
    strips += strip_ok;

    const auto ids = encode(text, model, {true});
    std::vector<std::string> specials;
    for (const auto id : ids) {
      if (model.is_special(id)) specials.emplace_back(model.token_bytes(id));
    }
    atomic += specials == scan_specials(text) && decode(ids, model) == text;
  }
  return {round_trips == 1000 && strips == 1000 && atomic == 1000,
          fmt("parse(render(c))==c %zu/1000; strip(.,0) exact %zu/1000; specials atomic "
              "%zu/1000 (%zu think segments, %zu tool calls)",
              round_trips, strips, atomic, thinks, calls)};
}

Outcome shard_partition() {
  testing::Rng rng(9);
  std::size_t partition_ok = 0, balance_checked = 0, balance_ok = 0;
  double worst = 0;
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 1 + rng() % 64;
    const std::size_t ws = 1 + rng() % 16;
    // Sizes within a 10x spread of a random base.
    const std::uint64_t base = 1 + rng() % 1'000'000;
    std::vector<ShardFile> files;
    for (std::size_t i = 0; i < n; ++i) {
      files.push_back({"shard-" + std::to_string(i) + ".jsonl", base + rng() % (9 * base + 1)});
    }
    std::multiset<std::string> seen;
    std::vector<std::uint64_t> load(ws, 0);
    for (std::size_t r = 0; r < ws; ++r) {
      for (const auto& f : shard_files(files, r, ws)) {
        seen.insert(f.path.string());
        load[r] += f.bytes;
      }
    }
    bool ok = seen.size() == n;
    for (const auto& f : files) ok = ok && seen.count(f.path.string()) == 1;
    partition_ok += ok;
    if (n >= 2 * ws) {
      ++balance_checked;
      const auto [lo, hi] = std::minmax_element(load.begin(), load.end());
      const double ratio = static_cast<double>(*hi) / static_cast<double>(*lo);
      worst = std::max(worst, ratio);
      balance_ok += ratio <= 2.0;
    }
  }
  return {partition_ok == 200 && balance_ok == balance_checked,
          fmt("%zu/200 disjoint and covering; %zu/%zu balanced cases <= 2.0 (worst %.3f)",
              partition_ok, balance_ok, balance_checked, worst)};
}

Outcome prefix_stability() {
  testing::Rng rng(10);
  std::vector<std::string> docs;
  std::size_t bytes = 0;
  while (bytes < 1'500'000) {
    docs.push_back(testing::document_of(static_cast<testing::Family>(docs.size() % 6), rng));
    bytes += docs.back().size();
  }
  TrainerConfig config;
  config.target_vocab = 256 + config.specials.size() + 1000;
  const auto small = train(docs, config);
  config.target_vocab = 256 + config.specials.size() + 2000;
  const auto large = train(docs, config);
  std::size_t same = 0;
  for (std::size_t i = 0; i < small.merge_count() && i < large.merge_count(); ++i) {
    same += small.merges()[i] == large.merges()[i];
  }
  return {small.merge_count() == 1000 && large.merge_count() == 2000 && same == 1000,
          fmt("%zu/1000 leading merges identical (runs learned %zu and %zu merges)", same,
              small.merge_count(), large.merge_count())};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {"round-trip", round_trip},
      {"digit isolation", digit_isolation},
      {"trainer oracle", trainer_oracle},
      {"determinism", determinism},
      {"Korean compression direction", korean_direction},
      {"relative-gain arithmetic", gain_arithmetic},
      {"metric exactness", metric_exactness},
      {"chat template", chat_template},
      {"shard partition", shard_partition},
      {"prefix stability", prefix_stability},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].name
              << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
