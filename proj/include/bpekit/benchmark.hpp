#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bpekit/corpus.hpp"
#include "bpekit/model.hpp"

namespace bpekit {

// Exact bytes-per-token ratio, kept as the integer pair.
struct BytesPerToken {
  std::uint64_t bytes = 0;
  std::uint64_t tokens = 0;

  double value() const {
    return static_cast<double>(bytes) / static_cast<double>(tokens);
  }
  bool operator==(const BytesPerToken&) const = default;
};

// UTF-8 byte count of `text` over its token count. Throws EmptyEncoding when
// the text encodes to no tokens.
BytesPerToken bytes_per_token(std::string_view text, const TokenizerModel& model,
                              bool parse_specials = false);

struct Slice {
  std::optional<std::string> domain;
  std::optional<std::string> language;
  std::optional<bool> reasoning;

  // "domain=…,language=…,reasoning=true|false", unset fields omitted.
  std::string key() const;
  bool operator==(const Slice&) const = default;
};

// Parses "key=value" tags (domain, language, reasoning). Throws ConfigInvalid.
void apply_slice_tag(Slice& slice, std::string_view tag);

struct BenchmarkRow {
  std::string tokenizer;
  Slice slice;
  std::uint64_t documents = 0;
  std::uint64_t bytes = 0;
  std::uint64_t tokens = 0;

  BytesPerToken bytes_per_token() const { return {bytes, tokens}; }
  bool operator==(const BenchmarkRow&) const = default;
};

// Externally reported values: slice key -> bytes per token, plus vocab size.
struct BaselineEntry {
  std::map<std::string, double> bytes_per_token;
  std::optional<std::uint64_t> vocab_size;
  bool operator==(const BaselineEntry&) const = default;
};

using Baselines = std::map<std::string, BaselineEntry>;

// Baselines JSON: {tokenizer: {slice_key: bpt, …, "vocab_size": n}}.
// Throws IoError / SchemaError.
Baselines baselines_from_json(std::string_view json);
Baselines load_baselines(const std::filesystem::path& path);

struct GainRow {
  std::string tokenizer;
  std::string baseline;
  Slice slice;
  double relative_gain = 0;
  bool operator==(const GainRow&) const = default;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  Baselines baselines;
  std::vector<GainRow> gains;
  bool operator==(const BenchmarkReport&) const = default;
};

// a / b - 1. Throws DivideByZero unless b > 0.
double relative_gain(double a, double b);

// Signed percentage with one decimal, half away from zero: 0.3594 -> "+35.9%".
std::string format_percent(double gain);
// Nearest whole percent, half away from zero: 0.3594 -> 36.
long rounded_percent(double gain);

struct SliceCorpus {
  Slice slice;
  std::vector<Document> documents;
};

struct NamedModel {
  std::string name;
  std::reference_wrapper<const TokenizerModel> model;
};

inline constexpr std::size_t kDefaultSampleCap = 10'000;

// For every (model, slice): Σbytes / Σtokens over the first `sample_cap`
// documents. Each row is compared against every baseline reporting the same
// slice key. Rows are ordered by (tokenizer, slice key). Throws EmptyCorpus.
BenchmarkReport run_benchmark(std::span<const SliceCorpus> corpora,
                              std::span<const NamedModel> models,
                              std::size_t sample_cap = kDefaultSampleCap,
                              const Baselines& baselines = {}, unsigned jobs = 1);

enum class ReportFormat { kJson, kCsv };

// CSV: tokenizer,domain,language,reasoning,documents,bytes,tokens,bytes_per_token
std::string emit_report(const BenchmarkReport& report, ReportFormat format);
void write_report(const BenchmarkReport& report, ReportFormat format,
                  const std::filesystem::path& path);
// Inverse of the JSON form. Throws SchemaError.
BenchmarkReport report_from_json(std::string_view json);

}  // namespace bpekit
