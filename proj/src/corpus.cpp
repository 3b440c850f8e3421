#include "bpekit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "bpekit/chat_template.hpp"
#include "json.hpp"

namespace bpekit {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failed: " + path.string());
  return buf.str();
}

// Blank lines are ignored, not counted as malformed.
bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::optional<Document> document_from_line(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::exception&) {
    return std::nullopt;
  }
  if (!doc.is_object()) return std::nullopt;
  if (const auto it = doc.find("text"); it != doc.end() && it->is_string()) {
    return Document{it->get<std::string>(), false};
  }
  if (const auto it = doc.find("conversation"); it != doc.end() && it->is_object()) {
    try {
      return Document{assistant_output_text(conversation_from_json(it->dump())), true};
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

LoadStats for_each_document(std::vector<fs::path> paths,
                            const std::function<void(Document&&)>& visit) {
  std::sort(paths.begin(), paths.end());
  LoadStats stats;
  for (const auto& path : paths) {
    const std::string content = read_file(path);
    const auto emit = [&](Document&& d) {
      ++stats.documents;
      stats.bytes += d.text.size();
      visit(std::move(d));
    };
    if (path.extension() != ".jsonl") {
      emit(Document{content, false});
      continue;
    }
    std::size_t start = 0;
    while (start < content.size()) {
      std::size_t end = content.find('\n', start);
      if (end == std::string::npos) end = content.size();
      const std::string_view line(content.data() + start, end - start);
      start = end + 1;
      if (is_blank(line)) continue;
      if (auto d = document_from_line(line)) {
        emit(std::move(*d));
      } else {
        ++stats.malformed_count;
      }
    }
  }
  return stats;
}

LoadResult load_documents(std::vector<fs::path> paths) {
  LoadResult result;
  result.stats = for_each_document(std::move(paths), [&](Document&& d) {
    result.documents.push_back(std::move(d));
  });
  return result;
}

void validate(const MixtureSpec& spec) {
  if (spec.sources.empty()) {
    throw Error(ErrorCode::kConfigInvalid, "mixture has no sources");
  }
  if (spec.total_bytes == 0) {
    throw Error(ErrorCode::kConfigInvalid, "total_bytes must be > 0");
  }
  std::set<std::string> names;
  for (const auto& s : spec.sources) {
    if (!(s.weight > 0.0 && s.weight <= 1.0)) {
      throw Error(ErrorCode::kConfigInvalid,
                  "source '" + s.name + "' weight must lie in (0, 1]");
    }
    if (!names.insert(s.name).second) {
      throw Error(ErrorCode::kConfigInvalid, "duplicate source name '" + s.name + "'");
    }
  }
}

std::vector<double> normalized_weights(const MixtureSpec& spec) {
  double sum = 0;
  for (const auto& s : spec.sources) sum += s.weight;
  std::vector<double> out;
  out.reserve(spec.sources.size());
  for (const auto& s : spec.sources) out.push_back(s.weight / sum);
  return out;
}

MixtureSpec mixture_from_json(std::string_view text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("malformed mixture JSON: ") + e.what());
  }
  MixtureSpec spec;
  try {
    spec.total_bytes = doc.at("total_bytes").get<std::uint64_t>();
    spec.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& s : doc.at("sources")) {
      CorpusSource src;
      src.name = s.at("name").get<std::string>();
      src.weight = s.at("weight").get<double>();
      for (const auto& p : s.at("paths")) {
        fs::path path = p.get<std::string>();
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        if (fs::is_directory(path)) {
          for (const auto& entry : fs::recursive_directory_iterator(path)) {
            if (entry.is_regular_file()) src.paths.push_back(entry.path());
          }
        } else {
          src.paths.push_back(path);
        }
      }
      std::sort(src.paths.begin(), src.paths.end());
      if (s.contains("language") && !s["language"].is_null()) {
        src.language = s["language"].get<std::string>();
      }
      if (s.contains("domain") && !s["domain"].is_null()) {
        src.domain = s["domain"].get<std::string>();
      }
      if (s.contains("reasoning") && !s["reasoning"].is_null()) {
        src.reasoning = s["reasoning"].get<bool>();
      }
      if (src.paths.empty()) {
        throw Error(ErrorCode::kSchemaError, "source '" + src.name + "' has no paths");
      }
      spec.sources.push_back(std::move(src));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaError, e.what());
  }
  validate(spec);
  return spec;
}

MixtureSpec load_mixture(const fs::path& path) {
  return mixture_from_json(read_file(path), path.parent_path());
}

std::vector<CorpusSource> reference_composition() {
  const auto source = [](std::string name, double weight, std::string language,
                         std::string domain) {
    CorpusSource s;
    s.name = std::move(name);
    s.weight = weight;
    s.language = std::move(language);
    s.domain = std::move(domain);
    return s;
  };
  return {
      source("english", 0.40, "en", "web"),
      source("korean", 0.22, "ko", "web"),
      source("code", 0.12, "code", "code"),
      source("math", 0.10, "en", "math"),
      source("multilingual", 0.08, "multi", "web"),
      source("domain_specific", 0.04, "en", "domain"),
  };
}

std::string stats_to_json(const MixtureStats& stats) {
  json sources = json::array();
  for (const auto& s : stats.sources) {
    sources.push_back({{"name", s.name},
                       {"requested_weight", s.requested_weight},
                       {"normalized_weight", s.normalized_weight},
                       {"achieved_bytes", s.achieved_bytes},
                       {"achieved_share", s.achieved_share},
                       {"documents", s.documents},
                       {"malformed_count", s.malformed_count},
                       {"document_weight", s.document_weight},
                       {"exhausted", s.exhausted}});
  }
  return json{{"sources", std::move(sources)},
              {"raw_weight_sum", stats.raw_weight_sum},
              {"total_bytes", stats.total_bytes},
              {"budget", stats.budget}}
      .dump();
}

namespace {

void finish_shares(MixtureStats& stats) {
  double weighted_total = 0;
  for (const auto& s : stats.sources) {
    weighted_total += static_cast<double>(s.achieved_bytes) * s.document_weight;
  }
  for (auto& s : stats.sources) {
    s.achieved_share =
        weighted_total > 0
            ? static_cast<double>(s.achieved_bytes) * s.document_weight / weighted_total
            : 0.0;
  }
}

}  // namespace

MixtureResult sample_mixture(const MixtureSpec& spec,
                             const std::vector<std::vector<Document>>& source_docs,
                             ExhaustionPolicy policy) {
  validate(spec);
  if (source_docs.size() != spec.sources.size()) {
    throw Error(ErrorCode::kConfigInvalid, "one document list per source required");
  }
  const std::size_t n = spec.sources.size();
  const auto weights = normalized_weights(spec);

  std::vector<std::size_t> priority(n);
  {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(spec.seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t rank = 0; rank < n; ++rank) priority[order[rank]] = rank;
  }

  MixtureResult result;
  MixtureStats& stats = result.stats;
  stats.budget = spec.total_bytes;
  stats.sources.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    stats.sources[i].name = spec.sources[i].name;
    stats.sources[i].requested_weight = spec.sources[i].weight;
    stats.sources[i].normalized_weight = weights[i];
    stats.raw_weight_sum += spec.sources[i].weight;
  }

  std::vector<std::size_t> cursor(n, 0);
  while (stats.total_bytes < spec.total_bytes) {
    // Furthest below target: minimal achieved_bytes / weight.
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (stats.sources[i].exhausted) continue;
      if (pick == n) {
        pick = i;
        continue;
      }
      const double lhs = static_cast<double>(stats.sources[i].achieved_bytes) * weights[pick];
      const double rhs = static_cast<double>(stats.sources[pick].achieved_bytes) * weights[i];
      if (lhs < rhs || (lhs == rhs && priority[i] < priority[pick])) pick = i;
    }
    if (pick == n) break;

    auto& src = stats.sources[pick];
    const auto& docs = source_docs[pick];
    if (cursor[pick] == docs.size()) {
      src.exhausted = true;
      if (policy == ExhaustionPolicy::kFail) {
        finish_shares(stats);
        throw SourceExhaustedError(src.name, stats);
      }
      continue;
    }
    const Document& doc = docs[cursor[pick]];
    if (stats.total_bytes + doc.text.size() > spec.total_bytes) break;
    ++cursor[pick];
    result.documents.push_back({doc.text, 1.0, pick});
    src.achieved_bytes += doc.text.size();
    ++src.documents;
    stats.total_bytes += doc.text.size();
  }

  if (policy == ExhaustionPolicy::kReweight) {
    double rest_bytes = 0;
    double rest_weight = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (stats.sources[i].exhausted) continue;
      rest_bytes += static_cast<double>(stats.sources[i].achieved_bytes);
      rest_weight += weights[i];
    }
    if (rest_bytes > 0 && rest_weight > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        auto& s = stats.sources[i];
        if (!s.exhausted || s.achieved_bytes == 0) continue;
        const double target = weights[i] * rest_bytes / rest_weight;
        s.document_weight = target / static_cast<double>(s.achieved_bytes);
      }
      for (auto& d : result.documents) {
        d.weight = stats.sources[d.source].document_weight;
      }
    }
  }
  finish_shares(stats);
  return result;
}

MixtureResult sample_mixture(const MixtureSpec& spec, ExhaustionPolicy policy) {
  validate(spec);
  std::vector<std::vector<Document>> docs;
  std::vector<std::size_t> malformed;
  docs.reserve(spec.sources.size());
  for (const auto& source : spec.sources) {
    auto loaded = load_documents(source.paths);
    docs.push_back(std::move(loaded.documents));
    malformed.push_back(loaded.stats.malformed_count);
  }
  const auto apply_malformed = [&](MixtureStats& stats) {
    for (std::size_t i = 0; i < malformed.size(); ++i) {
      stats.sources[i].malformed_count = malformed[i];
    }
  };
  try {
    auto result = sample_mixture(spec, docs, policy);
    apply_malformed(result.stats);
    return result;
  } catch (const SourceExhaustedError& e) {
    auto stats = e.stats();
    apply_malformed(stats);
    const auto it = std::find_if(stats.sources.begin(), stats.sources.end(),
                                 [](const SourceStats& s) { return s.exhausted; });
    throw SourceExhaustedError(it != stats.sources.end() ? it->name : "?", stats);
  }
}

std::vector<std::vector<ShardFile>> plan_shards(std::vector<ShardFile> files,
                                                std::size_t world_size) {
  if (world_size == 0) throw Error(ErrorCode::kInvalidRank, "world_size must be >= 1");
  std::sort(files.begin(), files.end(), [](const ShardFile& a, const ShardFile& b) {
    return a.bytes != b.bytes ? a.bytes > b.bytes : a.path < b.path;
  });
  std::vector<std::vector<ShardFile>> plan(world_size);
  std::vector<std::uint64_t> load(world_size, 0);
  for (auto& f : files) {
    const auto lightest = static_cast<std::size_t>(
        std::min_element(load.begin(), load.end()) - load.begin());
    load[lightest] += f.bytes;
    plan[lightest].push_back(std::move(f));
  }
  for (auto& worker : plan) {
    std::sort(worker.begin(), worker.end(),
              [](const ShardFile& a, const ShardFile& b) { return a.path < b.path; });
  }
  return plan;
}

std::vector<ShardFile> shard_files(std::vector<ShardFile> files,
                                   std::size_t worker_index, std::size_t world_size) {
  if (world_size == 0 || worker_index >= world_size) {
    throw Error(ErrorCode::kInvalidRank,
                "rank " + std::to_string(worker_index) + " not in [0, " +
                    std::to_string(world_size) + ")");
  }
  return std::move(plan_shards(std::move(files), world_size)[worker_index]);
}

std::vector<ShardFile> stat_files(const std::vector<fs::path>& paths) {
  std::vector<ShardFile> files;
  files.reserve(paths.size());
  for (const auto& p : paths) {
    std::error_code ec;
    const auto size = fs::file_size(p, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot stat " + p.string() + ": " + ec.message());
    files.push_back({p, size});
  }
  return files;
}

std::vector<ShardFile> shard_files(const std::vector<fs::path>& paths,
                                   std::size_t worker_index, std::size_t world_size) {
  if (world_size == 0 || worker_index >= world_size) {
    throw Error(ErrorCode::kInvalidRank,
                "rank " + std::to_string(worker_index) + " not in [0, " +
                    std::to_string(world_size) + ")");
  }
  return shard_files(stat_files(paths), worker_index, world_size);
}

}  // namespace bpekit
