#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bpekit/errors.hpp"
#include "bpekit/trainer.hpp"

namespace bpekit {

struct Document {
  std::string text;
  // Set for text rendered from a conversation; the codec should then map
  // template specials atomically.
  bool parse_specials = false;
};

struct LoadStats {
  std::size_t documents = 0;
  std::size_t malformed_count = 0;
  std::uint64_t bytes = 0;
};

// Streams documents from `paths` in sorted path order. A .jsonl file yields
// one document per non-blank line: either {"text": "..."} or
// {"conversation": {...}} (assistant output, see assistant_output_text).
// Lines that are not such objects are skipped and counted as malformed. Any
// other file is one document. Throws IoError for unreadable files.
LoadStats for_each_document(std::vector<std::filesystem::path> paths,
                            const std::function<void(Document&&)>& visit);

struct LoadResult {
  std::vector<Document> documents;
  LoadStats stats;
};

LoadResult load_documents(std::vector<std::filesystem::path> paths);

struct CorpusSource {
  std::string name;
  std::vector<std::filesystem::path> paths;
  double weight = 1.0;
  std::optional<std::string> language;
  std::optional<std::string> domain;
  std::optional<bool> reasoning;
};

struct MixtureSpec {
  std::vector<CorpusSource> sources;
  std::uint64_t total_bytes = 0;
  std::uint64_t seed = 0;
};

// Throws ConfigInvalid.
void validate(const MixtureSpec& spec);

// Weights scaled to sum to 1.
std::vector<double> normalized_weights(const MixtureSpec& spec);

// Mixture spec JSON:
//   {"sources":[{"name":…,"paths":[…],"weight":…,
//                "language":…,"domain":…,"reasoning":…}],
//    "total_bytes":…, "seed":…}
// Relative paths resolve against `base_dir`. Throws SchemaError.
MixtureSpec mixture_from_json(std::string_view json,
                              const std::filesystem::path& base_dir = {});
MixtureSpec load_mixture(const std::filesystem::path& path);

// The reference composition (English .40, Korean .22, Code .12, Math .10,
// Multilingual .08, Domain-specific .04) with empty path lists.
std::vector<CorpusSource> reference_composition();

struct SourceStats {
  std::string name;
  double requested_weight = 0;
  double normalized_weight = 0;
  std::uint64_t achieved_bytes = 0;
  // Share of weighted bytes (bytes × document weight).
  double achieved_share = 0;
  std::size_t documents = 0;
  std::size_t malformed_count = 0;
  double document_weight = 1.0;
  bool exhausted = false;
};

struct MixtureStats {
  std::vector<SourceStats> sources;
  double raw_weight_sum = 0;
  std::uint64_t total_bytes = 0;
  std::uint64_t budget = 0;
};

std::string stats_to_json(const MixtureStats& stats);

enum class ExhaustionPolicy {
  // Throw SourceExhaustedError when a source runs out before the budget.
  kFail,
  // Keep going with the remaining sources, then raise the exhausted source's
  // document weight so its weighted byte share matches its target.
  kReweight,
};

struct MixtureResult {
  std::vector<WeightedDocument> documents;
  MixtureStats stats;
};

class SourceExhaustedError : public Error {
 public:
  SourceExhaustedError(const std::string& source, MixtureStats stats)
      : Error(ErrorCode::kSourceExhausted,
              "source '" + source + "' ran out; achieved " + stats_to_json(stats)),
        stats_(std::move(stats)) {}

  const MixtureStats& stats() const noexcept { return stats_; }

 private:
  MixtureStats stats_;
};

// Weighted round-robin over per-source byte accumulators: the next document
// comes from the source furthest below its normalized share (ties resolved
// by a seed-derived source order). Stops before the document that would
// exceed total_bytes. Deterministic for a fixed spec.
MixtureResult sample_mixture(const MixtureSpec& spec,
                             ExhaustionPolicy policy = ExhaustionPolicy::kFail);

// Same, with each source's documents supplied directly (indexed like
// spec.sources; paths are ignored).
MixtureResult sample_mixture(const MixtureSpec& spec,
                             const std::vector<std::vector<Document>>& source_docs,
                             ExhaustionPolicy policy = ExhaustionPolicy::kFail);

struct ShardFile {
  std::filesystem::path path;
  std::uint64_t bytes = 0;
  bool operator==(const ShardFile&) const = default;
};

// Greedy largest-first assignment onto the lightest worker (ties: lower path,
// lower worker index). Each worker's list is sorted by path. Throws
// InvalidRank when world_size == 0.
std::vector<std::vector<ShardFile>> plan_shards(std::vector<ShardFile> files,
                                                std::size_t world_size);

// Files for one worker. Throws InvalidRank unless worker_index < world_size.
std::vector<ShardFile> shard_files(std::vector<ShardFile> files,
                                   std::size_t worker_index, std::size_t world_size);
// Sizes are read from the filesystem; throws IoError.
std::vector<ShardFile> shard_files(const std::vector<std::filesystem::path>& paths,
                                   std::size_t worker_index, std::size_t world_size);

std::vector<ShardFile> stat_files(const std::vector<std::filesystem::path>& paths);

}  // namespace bpekit
