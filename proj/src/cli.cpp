#include "bpekit/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "bpekit/benchmark.hpp"
#include "bpekit/chat_template.hpp"
#include "bpekit/codec.hpp"
#include "bpekit/corpus.hpp"
#include "bpekit/errors.hpp"
#include "bpekit/trainer.hpp"
#include "json.hpp"

namespace bpekit::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {}
  void info(const std::string& msg) const { err_ << "[info] " << msg << '\n'; }
  void warn(const std::string& msg) const { err_ << "[warn] " << msg << '\n'; }
  void error(const std::string& msg) const { err_ << "[error] " << msg << '\n'; }

 private:
  std::ostream& err_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

// --text wins over --file; exactly one is required.
std::string text_or_file(const std::string& text, bool has_text, const std::string& file) {
  if (has_text) return text;
  if (!file.empty()) return read_file(file);
  throw CLI::ValidationError("one of --text or --file is required");
}

std::vector<fs::path> expand_paths(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file()) out.push_back(e.path());
      }
    } else {
      out.emplace_back(in);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

unsigned resolve_jobs(unsigned jobs) {
  return jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
}

struct TrainArgs {
  std::string mixture;
  std::size_t vocab = 196'608;
  std::string specials_file;
  std::int64_t min_pair_freq = 2;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_train(const TrainArgs& a, unsigned jobs, const Log& log) {
  MixtureSpec spec = load_mixture(a.mixture);
  if (a.seed) spec.seed = *a.seed;

  TrainerConfig config;
  config.target_vocab = a.vocab;
  config.min_pair_frequency = a.min_pair_freq;
  config.seed = spec.seed;
  config.jobs = jobs;
  if (!a.specials_file.empty()) {
    try {
      config.specials = json::parse(read_file(a.specials_file)).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchemaError,
                  "specials file must be a JSON array of strings: " + std::string(e.what()));
    }
  }
  validate(config);

  const auto mixture = sample_mixture(spec);
  log.info("sampled " + std::to_string(mixture.documents.size()) + " documents, " +
           std::to_string(mixture.stats.total_bytes) + " bytes");
  const std::string stats_path = a.out + ".mixture-stats.json";
  write_file(stats_path, stats_to_json(mixture.stats) + "\n");
  log.info("mixture stats written to " + stats_path);

  const TokenizerModel model = train(mixture.documents, config);
  model.save(a.out);
  log.info("model with " + std::to_string(model.merge_count()) + " merges, vocab " +
           std::to_string(model.vocab_size()) + " written to " + a.out);
  return 0;
}

struct CodecArgs {
  std::string model;
  std::string text;
  std::string file;
  bool parse_specials = false;
  std::string out;
};

int run_encode(const CodecArgs& a, bool has_text, std::ostream& out) {
  const std::string input = text_or_file(a.text, has_text, a.file);
  const auto model = TokenizerModel::load(a.model);
  const auto ids = encode(input, model, {a.parse_specials});
  out << json(ids).dump() << '\n';
  return 0;
}

int run_decode(const CodecArgs& a, bool has_text, std::ostream& out) {
  const std::string input = text_or_file(a.text, has_text, a.file);
  const auto model = TokenizerModel::load(a.model);
  std::vector<TokenId> ids;
  try {
    ids = json::parse(input).get<std::vector<TokenId>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaError, "expected a JSON array of token ids: " +
                                             std::string(e.what()));
  }
  const std::string bytes = decode(ids, model);
  if (a.out.empty()) {
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  } else {
    write_file(a.out, bytes);
  }
  return 0;
}

struct BenchArgs {
  std::vector<std::string> models;
  std::vector<std::string> corpora;
  std::vector<std::string> slices;
  std::string mixture;
  std::string baselines;
  std::string format = "json";
  std::size_t sample_cap = kDefaultSampleCap;
  std::string out;
};

int run_bench(const BenchArgs& a, unsigned jobs, std::ostream& out, const Log& log) {
  std::vector<SliceCorpus> corpora;
  if (!a.mixture.empty()) {
    for (const auto& src : load_mixture(a.mixture).sources) {
      SliceCorpus c;
      c.slice = {src.domain, src.language, src.reasoning};
      auto loaded = load_documents(src.paths);
      if (loaded.stats.malformed_count) {
        log.warn(src.name + ": skipped " + std::to_string(loaded.stats.malformed_count) +
                 " malformed lines");
      }
      c.documents = std::move(loaded.documents);
      corpora.push_back(std::move(c));
    }
  }
  if (!a.corpora.empty()) {
    SliceCorpus c;
    for (const auto& tag : a.slices) apply_slice_tag(c.slice, tag);
    auto loaded = load_documents(expand_paths(a.corpora));
    if (loaded.stats.malformed_count) {
      log.warn("skipped " + std::to_string(loaded.stats.malformed_count) + " malformed lines");
    }
    c.documents = std::move(loaded.documents);
    corpora.push_back(std::move(c));
  }
  if (corpora.empty()) throw CLI::ValidationError("bench needs --corpus or --mixture");

  std::vector<TokenizerModel> loaded_models;
  loaded_models.reserve(a.models.size());
  for (const auto& path : a.models) loaded_models.push_back(TokenizerModel::load(path));
  std::vector<NamedModel> models;
  for (std::size_t i = 0; i < a.models.size(); ++i) {
    models.push_back({fs::path(a.models[i]).stem().string(), loaded_models[i]});
  }

  Baselines baselines;
  if (!a.baselines.empty()) baselines = load_baselines(a.baselines);

  const auto report = run_benchmark(corpora, models, a.sample_cap, baselines, jobs);
  for (const auto& g : report.gains) {
    log.info(g.tokenizer + " vs " + g.baseline + " [" + g.slice.key() +
             "]: " + format_percent(g.relative_gain));
  }
  const auto format = a.format == "csv" ? ReportFormat::kCsv : ReportFormat::kJson;
  if (a.out.empty()) {
    out << emit_report(report, format);
  } else {
    write_report(report, format, a.out);
    log.info("report written to " + a.out);
  }
  return 0;
}

struct ChatArgs {
  std::string text;
  std::string file;
  std::optional<std::size_t> keep_last_think;
  bool generation_prompt = false;
  std::string out;
};

int run_chat_render(const ChatArgs& a, bool has_text, std::ostream& out) {
  Conversation conv = conversation_from_json(text_or_file(a.text, has_text, a.file));
  if (a.keep_last_think) conv = strip_reasoning(conv, *a.keep_last_think);
  const std::string rendered = render(conv, a.generation_prompt);
  if (a.out.empty()) {
    out << rendered;
  } else {
    write_file(a.out, rendered);
  }
  return 0;
}

struct ShardArgs {
  std::vector<std::string> corpora;
  std::size_t world_size = 1;
  std::optional<std::size_t> rank;
};

json worker_json(std::size_t rank, const std::vector<ShardFile>& files) {
  json paths = json::array();
  std::uint64_t bytes = 0;
  for (const auto& f : files) {
    paths.push_back(f.path.string());
    bytes += f.bytes;
  }
  return {{"rank", rank}, {"files", std::move(paths)}, {"bytes", bytes}};
}

int run_shard_plan(const ShardArgs& a, std::ostream& out) {
  const auto files = stat_files(expand_paths(a.corpora));
  if (a.rank) {
    out << worker_json(*a.rank, shard_files(files, *a.rank, a.world_size)).dump(2) << '\n';
    return 0;
  }
  const auto plan = plan_shards(files, a.world_size);
  json workers = json::array();
  for (std::size_t r = 0; r < plan.size(); ++r) workers.push_back(worker_json(r, plan[r]));
  out << json{{"world_size", a.world_size}, {"workers", std::move(workers)}}.dump(2) << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const Log log(err);
  CLI::App app{"Byte-level BPE tokenizer toolkit", "bpekit"};
  app.require_subcommand(1);
  unsigned jobs = 0;
  app.add_option("--jobs", jobs, "Worker threads (default: available parallelism)");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a tokenizer on a corpus mixture");
  train_cmd->add_option("--mixture", train_args.mixture, "Mixture spec JSON")->required();
  train_cmd->add_option("--vocab", train_args.vocab, "Target vocabulary size")
      ->capture_default_str();
  train_cmd->add_option("--specials-file", train_args.specials_file,
                        "JSON array of special tokens (default: chat template set)");
  train_cmd->add_option("--min-pair-freq", train_args.min_pair_freq,
                        "Minimum pair frequency for a merge")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed, "Sampling seed (overrides the mixture's)");
  train_cmd->add_option("--out", train_args.out, "Output model file")->required();
  train_cmd->add_option("--jobs", jobs, "Worker threads");

  CodecArgs enc_args;
  auto* encode_cmd = app.add_subcommand("encode", "Encode text to a JSON array of ids");
  encode_cmd->add_option("--model", enc_args.model, "Model file")->required();
  auto* enc_text = encode_cmd->add_option("--text", enc_args.text, "Input text");
  encode_cmd->add_option("--file", enc_args.file, "Input file (raw bytes)");
  encode_cmd->add_flag("--parse-specials", enc_args.parse_specials,
                       "Map special-token strings to their ids");

  CodecArgs dec_args;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a JSON array of ids to bytes");
  decode_cmd->add_option("--model", dec_args.model, "Model file")->required();
  auto* dec_text = decode_cmd->add_option("--text", dec_args.text, "JSON array of ids");
  decode_cmd->add_option("--file", dec_args.file, "File holding a JSON array of ids");
  decode_cmd->add_option("--out", dec_args.out, "Write bytes here instead of stdout");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Measure bytes per token");
  bench_cmd->add_option("--model", bench_args.models, "Model file (repeatable)")->required();
  bench_cmd->add_option("--corpus", bench_args.corpora,
                        "Corpus file or directory (repeatable); forms one slice");
  bench_cmd->add_option("--slice", bench_args.slices,
                        "Slice tag key=value for --corpus (repeatable)");
  bench_cmd->add_option("--mixture", bench_args.mixture, "Mixture spec; one slice per source");
  bench_cmd->add_option("--baselines", bench_args.baselines, "Baselines JSON");
  bench_cmd->add_option("--format", bench_args.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  bench_cmd->add_option("--sample-cap", bench_args.sample_cap, "Documents per slice")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_args.out, "Write the report here instead of stdout");
  bench_cmd->add_option("--jobs", jobs, "Worker threads");

  ChatArgs chat_args;
  auto* chat_cmd = app.add_subcommand("chat-render", "Render a conversation JSON file");
  auto* chat_text = chat_cmd->add_option("--text", chat_args.text, "Conversation JSON");
  chat_cmd->add_option("--file", chat_args.file, "Conversation JSON file");
  chat_cmd->add_option("--keep-last-think", chat_args.keep_last_think,
                       "Keep think segments only in the last N assistant turns");
  chat_cmd->add_flag("--generation-prompt", chat_args.generation_prompt,
                     "Append the assistant header");
  chat_cmd->add_option("--out", chat_args.out, "Write here instead of stdout");

  ShardArgs shard_args;
  auto* shard_cmd = app.add_subcommand("shard-plan", "Assign corpus files to workers");
  shard_cmd->add_option("--corpus", shard_args.corpora, "Corpus file or directory (repeatable)")
      ->required();
  shard_cmd->add_option("--world-size", shard_args.world_size, "Number of workers")
      ->required();
  shard_cmd->add_option("--rank", shard_args.rank, "Only print this worker's files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const unsigned workers = resolve_jobs(jobs);
    if (*train_cmd) return run_train(train_args, workers, log);
    if (*encode_cmd) return run_encode(enc_args, enc_text->count() > 0, out);
    if (*decode_cmd) return run_decode(dec_args, dec_text->count() > 0, out);
    if (*bench_cmd) return run_bench(bench_args, workers, out, log);
    if (*chat_cmd) return run_chat_render(chat_args, chat_text->count() > 0, out);
    if (*shard_cmd) return run_shard_plan(shard_args, out);
  } catch (const CLI::ValidationError& e) {
    log.error(e.what());
    err << app.help();
    return 2;
  } catch (const Error& e) {
    log.error(e.what());
    return 1;
  }
  return 2;
}

}  // namespace bpekit::cli
